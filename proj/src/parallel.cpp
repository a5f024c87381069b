#include "ked/parallel.hpp"

#include <omp.h>

namespace ked::parallel {

int max_threads() { return omp_get_max_threads(); }

}  // namespace ked::parallel

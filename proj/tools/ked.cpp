#include <iostream>
#include <string>
#include <vector>

#include "ked/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return ked::cli::run(args, std::cout, std::cerr);
}

#include "ked/spec_json.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "ked/error.hpp"

namespace ked {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw InvalidArgument(where + ": expected a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : j.items()) {
    if (!ok.count(item.key())) throw InvalidArgument(where + ": unknown key '" + item.key() + "'");
  }
}

const json& field(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) throw InvalidArgument(where + ": missing key '" + std::string(key) + "'");
  return j.at(key);
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw InvalidArgument(where + ": expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw InvalidArgument(where + ": expected an integer");
  return j.get<int>();
}

std::string text(const json& j, const std::string& where) {
  if (!j.is_string()) throw InvalidArgument(where + ": expected a string");
  return j.get<std::string>();
}

Vector vector_of(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw InvalidArgument(where + ": expected a non-empty array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], where);
  return v;
}

Matrix matrix_of(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw InvalidArgument(where + ": expected a non-empty array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) throw InvalidArgument(where + ": rows must be non-empty arrays");
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw InvalidArgument(where + ": ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number(j[r][c], where);
    }
  }
  return m;
}

std::vector<int> ints_of(const json& j, const std::string& where) {
  if (!j.is_array()) throw InvalidArgument(where + ": expected an array of integers");
  std::vector<int> out;
  for (const auto& v : j) out.push_back(integer(v, where));
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument(where + ": '" + s + "' is not a finite number");
  }
}

}  // namespace

MeasurePtr parse_measure(const json& j, const std::filesystem::path& base_dir) {
  const std::string where = "measure";
  const std::string family = text(field(j, where, "family"), where + ".family");
  const std::string at = "measure(" + family + ")";
  if (family == "uniform_box") {
    check_keys(j, at, {"family", "lower", "upper"});
    return Measure::uniform_box(vector_of(field(j, at, "lower"), at + ".lower"),
                                vector_of(field(j, at, "upper"), at + ".upper"));
  }
  if (family == "gaussian") {
    check_keys(j, at, {"family", "mean", "cov", "variances"});
    const Vector mean = vector_of(field(j, at, "mean"), at + ".mean");
    if (j.contains("cov") == j.contains("variances")) throw InvalidArgument(at + ": give exactly one of 'cov' and 'variances'");
    if (j.contains("cov")) return Measure::gaussian(mean, matrix_of(j.at("cov"), at + ".cov"));
    return Measure::gaussian_diag(mean, vector_of(j.at("variances"), at + ".variances"));
  }
  if (family == "sphere_uniform") {
    check_keys(j, at, {"family", "dim"});
    return Measure::sphere_uniform(integer(field(j, at, "dim"), at + ".dim"));
  }
  if (family == "mixture") {
    check_keys(j, at, {"family", "components", "weights"});
    const json& comps = field(j, at, "components");
    if (!comps.is_array()) throw InvalidArgument(at + ".components: expected an array");
    std::vector<MeasurePtr> parts;
    for (const auto& c : comps) parts.push_back(parse_measure(c, base_dir));
    const Vector w = vector_of(field(j, at, "weights"), at + ".weights");
    return Measure::mixture(std::move(parts), std::vector<double>(w.data(), w.data() + w.size()));
  }
  if (family == "pushforward") {
    check_keys(j, at, {"family", "base", "map"});
    return Measure::pushforward(parse_measure(field(j, at, "base"), base_dir),
                                Transform::named(text(field(j, at, "map"), at + ".map")));
  }
  if (family == "empirical") {
    check_keys(j, at, {"family", "points", "weights", "file"});
    DataTable t;
    if (j.contains("file")) {
      if (j.contains("points")) throw InvalidArgument(at + ": give either 'points' or 'file'");
      t = load_data(resolve(base_dir, text(j.at("file"), at + ".file")));
    } else {
      t.points = matrix_of(field(j, at, "points"), at + ".points").transpose();
    }
    if (j.contains("weights")) t.weights = vector_of(j.at("weights"), at + ".weights");
    if (t.weights) return Measure::empirical(t.points, *t.weights);
    return Measure::empirical(t.points);
  }
  if (family == "unnormalized") {
    check_keys(j, at, {"family", "name", "dim"});
    const int dim = j.contains("dim") ? integer(j.at("dim"), at + ".dim") : 1;
    return Measure::unnormalized_named(text(field(j, at, "name"), at + ".name"), dim);
  }
  if (family == "product") {
    check_keys(j, at, {"family", "factors"});
    const json& fs = field(j, at, "factors");
    if (!fs.is_array()) throw InvalidArgument(at + ".factors: expected an array");
    std::vector<MeasurePtr> parts;
    for (const auto& f : fs) parts.push_back(parse_measure(f, base_dir));
    return Measure::product(std::move(parts));
  }
  throw InvalidArgument("measure: unknown family '" + family + "'");
}

KernelPtr parse_kernel(const json& j, const MeasurePtr& target) {
  const std::string where = "kernel";
  const std::string family = text(field(j, where, "family"), where + ".family");
  const std::string at = "kernel(" + family + ")";
  if (family == "gaussian") {
    check_keys(j, at, {"family", "lengthscales", "lambda"});
    if (j.contains("lengthscales") == j.contains("lambda")) {
      throw InvalidArgument(at + ": give exactly one of 'lengthscales' and 'lambda'");
    }
    if (j.contains("lambda")) return Kernel::gaussian_full(matrix_of(j.at("lambda"), at + ".lambda"));
    return Kernel::gaussian(vector_of(j.at("lengthscales"), at + ".lengthscales"));
  }
  if (family == "matern") {
    check_keys(j, at, {"family", "nu", "lengthscale"});
    return Kernel::matern_nu(number(field(j, at, "nu"), at + ".nu"), number(field(j, at, "lengthscale"), at + ".lengthscale"));
  }
  if (family == "wendland") {
    check_keys(j, at, {"family", "order", "lengthscale"});
    return Kernel::wendland(integer(field(j, at, "order"), at + ".order"),
                            number(field(j, at, "lengthscale"), at + ".lengthscale"));
  }
  if (family == "fbm") {
    check_keys(j, at, {"family", "hurst", "domain"});
    const Vector dom = vector_of(field(j, at, "domain"), at + ".domain");
    if (dom.size() != 2) throw InvalidArgument(at + ".domain: expected [lower, upper]");
    return Kernel::fbm(number(field(j, at, "hurst"), at + ".hurst"), dom[0], dom[1]);
  }
  if (family == "power_series") {
    check_keys(j, at, {"family", "terms"});
    const json& ts = field(j, at, "terms");
    if (!ts.is_array()) throw InvalidArgument(at + ".terms: expected an array");
    std::vector<PowerSeriesTerm> terms;
    for (const auto& t : ts) {
      check_keys(t, at + ".terms[]", {"alpha", "coefficient"});
      terms.push_back(PowerSeriesTerm{ints_of(field(t, at, "alpha"), at + ".terms[].alpha"),
                                      number(field(t, at, "coefficient"), at + ".terms[].coefficient")});
    }
    return Kernel::power_series(std::move(terms));
  }
  if (family == "sphere_sobolev32") {
    check_keys(j, at, {"family"});
    return Kernel::sphere_sobolev32();
  }
  if (family == "sphere_smooth") {
    check_keys(j, at, {"family"});
    return Kernel::sphere_smooth();
  }
  if (family == "periodic_sobolev") {
    check_keys(j, at, {"family", "r"});
    return Kernel::periodic_sobolev(integer(field(j, at, "r"), at + ".r"));
  }
  if (family == "stein") {
    check_keys(j, at, {"family", "base", "offset"});
    require(target != nullptr, at + ": needs a target measure for the score");
    const double offset = j.contains("offset") ? number(j.at("offset"), at + ".offset") : 0.0;
    MeasurePtr m = target;
    ScoreFn score = [m](const VectorRef& x) { return m->score(x); };
    return Kernel::stein(parse_kernel(field(j, at, "base"), target), std::move(score), offset);
  }
  if (family == "sum") {
    check_keys(j, at, {"family", "terms", "weights"});
    const json& ts = field(j, at, "terms");
    if (!ts.is_array()) throw InvalidArgument(at + ".terms: expected an array");
    std::vector<KernelPtr> terms;
    for (const auto& t : ts) terms.push_back(parse_kernel(t, target));
    const Vector w = j.contains("weights") ? vector_of(j.at("weights"), at + ".weights")
                                           : Vector::Ones(static_cast<Eigen::Index>(terms.size()));
    return Kernel::sum(std::move(terms), std::vector<double>(w.data(), w.data() + w.size()));
  }
  if (family == "product") {
    check_keys(j, at, {"family", "factors"});
    const json& fs = field(j, at, "factors");
    if (!fs.is_array()) throw InvalidArgument(at + ".factors: expected an array");
    std::vector<ProductFactor> factors;
    for (const auto& f : fs) {
      check_keys(f, at + ".factors[]", {"kernel", "coords"});
      factors.push_back(ProductFactor{parse_kernel(field(f, at, "kernel"), target),
                                      ints_of(field(f, at, "coords"), at + ".factors[].coords")});
    }
    return Kernel::product(std::move(factors));
  }
  if (family == "matrix_valued") {
    check_keys(j, at, {"family", "base", "B"});
    return Kernel::matrix_valued(parse_kernel(field(j, at, "base"), target), matrix_of(field(j, at, "B"), at + ".B"));
  }
  if (family == "composed") {
    check_keys(j, at, {"family", "base", "map"});
    return Kernel::composed(parse_kernel(field(j, at, "base"), target),
                            Transform::named(text(field(j, at, "map"), at + ".map")));
  }
  throw InvalidArgument("kernel: unknown family '" + family + "'");
}

namespace {

std::uint64_t unsigned_integer(const json& j, const std::string& where) {
  const bool ok = j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0);
  if (!ok) throw InvalidArgument(where + ": expected a non-negative integer");
  return j.get<std::uint64_t>();
}

}  // namespace

SpecDocument parse_spec(const json& doc, const std::filesystem::path& base_dir) {
  check_keys(doc, "spec", {"schema_version", "kernel", "measure", "oracle", "data"});
  const int version = integer(field(doc, "spec", "schema_version"), "spec.schema_version");
  if (version != kSchemaVersion) {
    throw InvalidArgument("spec: unsupported schema_version " + std::to_string(version) + " (expected " +
                          std::to_string(kSchemaVersion) + ")");
  }
  SpecDocument out;
  out.base_dir = base_dir;
  out.measure = parse_measure(field(doc, "spec", "measure"), base_dir);
  out.kernel = parse_kernel(field(doc, "spec", "kernel"), out.measure);
  if (doc.contains("oracle")) {
    const json& o = doc.at("oracle");
    check_keys(o, "spec.oracle", {"budget", "seed"});
    if (o.contains("budget")) {
      out.budget = unsigned_integer(o.at("budget"), "spec.oracle.budget");
    }
    if (o.contains("seed")) {
      out.seed = unsigned_integer(o.at("seed"), "spec.oracle.seed");
    }
  }
  if (doc.contains("data")) out.data = resolve(base_dir, text(doc.at("data"), "spec.data"));
  return out;
}

SpecDocument load_spec(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw InvalidArgument("spec '" + path.string() + "': malformed JSON (" + e.what() + ")");
  }
  return parse_spec(doc, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

DataTable parse_csv(const std::string& content) {
  std::stringstream ss(content);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(ss, line)) {
    if (!trim(line).empty()) {
      header = split(trim(line));
      break;
    }
  }
  if (header.empty()) throw InvalidArgument("data: empty CSV");
  int dim = 0;
  int y_col = -1;
  int w_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& h = header[c];
    if (h == "y") {
      if (y_col >= 0) throw InvalidArgument("data: duplicate column 'y'");
      y_col = static_cast<int>(c);
    } else if (h == "w") {
      if (w_col >= 0) throw InvalidArgument("data: duplicate column 'w'");
      w_col = static_cast<int>(c);
    } else if (h == "x" + std::to_string(dim + 1) && y_col < 0 && w_col < 0) {
      ++dim;
    } else {
      throw InvalidArgument("data: unexpected column '" + h + "' (expected x1..xd, then optional y and w)");
    }
  }
  if (dim == 0) throw InvalidArgument("data: no coordinate columns x1..xd");
  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(ss, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line));
    if (cells.size() != header.size()) {
      throw InvalidArgument("data: line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                            " columns, expected " + std::to_string(header.size()));
    }
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_double(c, "data line " + std::to_string(line_no)));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidArgument("data: no rows");
  DataTable t;
  const auto n = static_cast<Eigen::Index>(rows.size());
  t.points.resize(dim, n);
  if (y_col >= 0) t.values = Vector(n);
  if (w_col >= 0) t.weights = Vector(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (int k = 0; k < dim; ++k) t.points(k, i) = r[static_cast<std::size_t>(k)];
    if (y_col >= 0) (*t.values)[i] = r[static_cast<std::size_t>(y_col)];
    if (w_col >= 0) (*t.weights)[i] = r[static_cast<std::size_t>(w_col)];
  }
  return t;
}

DataTable parse_data_json(const json& j) {
  check_keys(j, "data", {"points", "values", "weights"});
  DataTable t;
  t.points = matrix_of(field(j, "data", "points"), "data.points").transpose();
  if (j.contains("values")) t.values = vector_of(j.at("values"), "data.values");
  if (j.contains("weights")) t.weights = vector_of(j.at("weights"), "data.weights");
  const Eigen::Index n = t.points.cols();
  if (t.values && t.values->size() != n) throw InvalidArgument("data: one value per point");
  if (t.weights && t.weights->size() != n) throw InvalidArgument("data: one weight per point");
  return t;
}

DataTable load_data(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  if (path.extension() == ".json") {
    try {
      return parse_data_json(json::parse(content));
    } catch (const json::parse_error& e) {
      throw InvalidArgument("data '" + path.string() + "': malformed JSON (" + e.what() + ")");
    }
  }
  return parse_csv(content);
}

}  // namespace ked

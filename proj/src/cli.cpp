#include "ked/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ked/dictionary.hpp"
#include "ked/error.hpp"
#include "ked/oracle.hpp"
#include "ked/quadrature.hpp"
#include "ked/spec_json.hpp"

namespace ked::cli {

namespace {

using Json = nlohmann::ordered_json;

class VerifyFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string spec;
  std::optional<std::size_t> budget;
  std::optional<std::uint64_t> seed;
};

Vector parse_point(const std::string& csv, const std::string& flag) {
  std::vector<double> v;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      const double d = std::stod(cell, &used);
      if (used != cell.size() || !std::isfinite(d)) throw std::invalid_argument(cell);
      v.push_back(d);
    } catch (const std::exception&) {
      throw InvalidArgument(flag + ": '" + cell + "' is not a finite number");
    }
  }
  if (v.empty()) throw InvalidArgument(flag + ": empty point");
  return Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void check_dim(const Vector& x, const Measure& m, const std::string& flag) {
  if (x.size() != m.dim()) {
    throw InvalidArgument(flag + ": point has dimension " + std::to_string(x.size()) + ", measure has dimension " +
                          std::to_string(m.dim()));
  }
}

std::uint64_t env_seed() {
  const char* s = std::getenv("KED_DEFAULT_SEED");
  if (s == nullptr || *s == '\0') return 0;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used != std::string(s).size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("KED_DEFAULT_SEED: '" + std::string(s) + "' is not a non-negative integer");
  }
}

OracleOptions oracle_options(const Common& c, const SpecDocument& doc) {
  OracleOptions o;
  o.budget = c.budget ? *c.budget : doc.budget.value_or(0);
  o.seed = c.seed ? *c.seed : (doc.seed ? *doc.seed : env_seed());
  if (o.budget != 0) require(o.budget >= 10, "budget must be 0 (default) or at least 10");
  return o;
}

Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json to_json(const Matrix& m) {
  Json a = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(to_json(Vector(m.row(r).transpose())));
  return a;
}

Json cmd_eval(const Common& c, const std::string& what, const std::optional<std::string>& xs,
              const std::optional<std::string>& ys) {
  const SpecDocument doc = load_spec(c.spec);
  const OracleOptions fb = oracle_options(c, doc);
  const Kernel& k = *doc.kernel;
  const Measure& m = *doc.measure;
  Json out;
  const bool matrix = k.family() == KernelFamily::matrix_valued;

  if (what == "kernel") {
    if (!xs || !ys) throw InvalidArgument("eval --what kernel needs --x and --y");
    const Vector x = parse_point(*xs, "--x");
    const Vector y = parse_point(*ys, "--y");
    check_dim(x, m, "--x");
    check_dim(y, m, "--y");
    if (matrix) {
      out["value"] = to_json(k.eval_matrix(x, y));
    } else {
      out["value"] = k(x, y);
    }
    out["provenance"] = to_string(Provenance::closed_form);
    out["pair"] = pair_id(k, m);
    return out;
  }

  if (what == "kp") {
    if (!xs) throw InvalidArgument("eval --what kp needs --x");
    if (ys) throw InvalidArgument("eval --what kp takes no --y");
    const Vector x = parse_point(*xs, "--x");
    check_dim(x, m, "--x");
    if (matrix) {
      const MatrixEmbedding e = embed_matrix(k, m, fb);
      out["value"] = to_json(e.kp_at(x));
      out["provenance"] = to_string(e.scalar().kp_provenance());
      out["pair"] = e.scalar().pair_id();
    } else {
      const Embedding e = embed(k, m, fb);
      out["value"] = e.kp_at(x);
      out["provenance"] = to_string(e.kp_provenance());
      out["pair"] = e.pair_id();
    }
    return out;
  }

  if (xs || ys) throw InvalidArgument("eval --what kpp takes no --x or --y");
  if (matrix) {
    const MatrixEmbedding e = embed_matrix(k, m, fb);
    out["value"] = to_json(e.kpp());
    out["provenance"] = to_string(e.scalar().kpp_provenance());
    out["pair"] = e.scalar().pair_id();
  } else {
    const Embedding e = embed(k, m, fb);
    out["value"] = e.kpp();
    out["provenance"] = to_string(e.kpp_provenance());
    out["pair"] = e.pair_id();
  }
  return out;
}

struct Expectation {
  std::vector<std::pair<Vector, double>> kp;
  std::optional<double> kpp;
};

Expectation load_expectation(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument("expect '" + path + "': malformed JSON (" + e.what() + ")");
  }
  if (!j.is_object()) throw InvalidArgument("expect: expected a JSON object");
  Expectation ex;
  for (const auto& item : j.items()) {
    if (item.key() == "kp") {
      if (!item.value().is_array()) throw InvalidArgument("expect.kp: expected an array");
      for (const auto& e : item.value()) {
        if (!e.is_object() || !e.contains("x") || !e.contains("value")) {
          throw InvalidArgument("expect.kp[]: expected {\"x\": [...], \"value\": v}");
        }
        for (const auto& kv : e.items()) {
          if (kv.key() != "x" && kv.key() != "value") throw InvalidArgument("expect.kp[]: unknown key '" + kv.key() + "'");
        }
        const std::vector<double> x = e.at("x").get<std::vector<double>>();
        ex.kp.emplace_back(Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size())),
                           e.at("value").get<double>());
      }
    } else if (item.key() == "kpp") {
      ex.kpp = item.value().get<double>();
    } else {
      throw InvalidArgument("expect: unknown key '" + item.key() + "'");
    }
  }
  return ex;
}

Json cmd_verify(const Common& c, double tol, int points, const std::optional<std::string>& expect_path) {
  require(tol >= 0.0 && std::isfinite(tol), "--tol must be a non-negative number");
  require(points >= 0, "--points must be non-negative");
  const SpecDocument doc = load_spec(c.spec);
  const OracleOptions opts = oracle_options(c, doc);
  const Kernel& k = *doc.kernel;
  const Measure& m = *doc.measure;
  if (k.family() == KernelFamily::matrix_valued) {
    throw UnsupportedPair("verify: matrix-valued kernels are verified through their scalar base");
  }
  const Embedding e = embed(k, m, opts);
  const bool kp_closed = e.kp_provenance() == Provenance::closed_form;
  const bool kpp_closed = e.kpp_provenance() == Provenance::closed_form;
  if (!kp_closed && !kpp_closed) {
    throw UnsupportedPair("verify: " + e.pair_id() + " has no closed form to verify");
  }

  std::optional<Expectation> expect;
  std::optional<OracleMethod> method;
  if (expect_path) {
    expect = load_expectation(*expect_path);
  } else {
    method = oracle_method(m);
    if (!m.sampleable() && method != OracleMethod::exact_sum) {
      throw UnsupportedPair("verify: measure " + m.name() + " cannot be sampled by the oracle");
    }
  }

  Json checks = Json::array();
  bool passed = true;
  auto add = [&](const std::string& what, const Json& x, double closed, double oracle, double se) {
    const bool ok = std::abs(closed - oracle) <= std::max(tol, 3.0 * se);
    passed = passed && ok;
    Json ch;
    ch["what"] = what;
    ch["x"] = x;
    ch["closed"] = closed;
    ch["oracle"] = oracle;
    ch["stderr"] = se;
    ch["pass"] = ok;
    checks.push_back(std::move(ch));
  };

  if (expect) {
    for (const auto& [x, value] : expect->kp) {
      check_dim(x, m, "expect.kp[].x");
      if (kp_closed) add("kp", to_json(x), e.kp_at(x), value, 0.0);
    }
    if (expect->kpp && kpp_closed) add("kpp", nullptr, e.kpp(), *expect->kpp, 0.0);
  } else {
    if (kp_closed && points > 0) {
      const PointSet xs = m.sample(static_cast<std::size_t>(points), derive_seed(opts.seed, 0x7e57));
      for (Eigen::Index i = 0; i < xs.cols(); ++i) {
        const Vector x = xs.col(i);
        OracleOptions o = opts;
        o.seed = derive_seed(opts.seed, static_cast<std::uint64_t>(i) + 1);
        const OracleEstimate est = estimate_kp(k, m, x, o);
        add("kp", to_json(x), e.kp_at(x), est.value, est.std_error);
      }
    }
    if (kpp_closed) {
      const OracleEstimate est = estimate_kpp(k, m, opts);
      add("kpp", nullptr, e.kpp(), est.value, est.std_error);
    }
  }

  Json out;
  out["pair"] = e.pair_id();
  out["passed"] = passed;
  out["tolerance"] = tol;
  out["oracle"] = method ? to_string(*method) : std::string("expectation_file");
  out["budget"] = opts.budget;
  out["seed"] = opts.seed;
  out["checks"] = std::move(checks);
  if (!passed) throw VerifyFailed(out.dump(2));
  return out;
}

Json cmd_bq(const Common& c, const std::optional<std::string>& data_path, double jitter) {
  require(jitter >= 0.0 && std::isfinite(jitter), "--jitter must be a non-negative number");
  const SpecDocument doc = load_spec(c.spec);
  const OracleOptions fb = oracle_options(c, doc);
  std::filesystem::path path;
  if (data_path) {
    path = *data_path;
  } else if (doc.data) {
    path = *doc.data;
  } else {
    throw InvalidArgument("bq needs --data or a \"data\" entry in the spec");
  }
  const DataTable t = load_data(path);
  if (!t.values) throw InvalidArgument("bq: data file has no 'y' column/values");
  if (t.points.rows() != doc.measure->dim()) {
    throw InvalidArgument("bq: data points have dimension " + std::to_string(t.points.rows()) +
                          ", measure has dimension " + std::to_string(doc.measure->dim()));
  }
  const Embedding e = embed(*doc.kernel, *doc.measure, fb);
  const QuadratureProblem p = QuadratureProblem::build(doc.kernel, e, t.points, t.values, jitter);
  const BQPosterior post = bq_posterior(p);
  Json out;
  out["mean"] = post.mean;
  out["variance"] = post.variance;
  out["weights"] = to_json(post.weights);
  out["jitter_applied"] = post.jitter_applied;
  return out;
}

Json cmd_mmd(const Common& c, const std::string& samples_path) {
  const SpecDocument doc = load_spec(c.spec);
  const OracleOptions fb = oracle_options(c, doc);
  const DataTable t = load_data(samples_path);
  if (t.points.rows() != doc.measure->dim()) {
    throw InvalidArgument("mmd: samples have dimension " + std::to_string(t.points.rows()) +
                          ", measure has dimension " + std::to_string(doc.measure->dim()));
  }
  const Eigen::Index n = t.points.cols();
  const Vector w = t.weights ? *t.weights : Vector::Constant(n, 1.0 / static_cast<double>(n));
  const Embedding e = embed(*doc.kernel, *doc.measure, fb);
  Json out;
  out["mmd2"] = mmd2(*doc.kernel, e, t.points, w);
  return out;
}

int report_error(std::ostream& out, std::ostream& err, int code, const std::string& kind, const std::string& msg) {
  Json j;
  j["error"] = {{"kind", kind}, {"message", msg}};
  out << j.dump(2) << '\n';
  err << "ked: " << kind << ": " << msg << '\n';
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kernel mean embeddings: evaluation, verification, Bayesian quadrature and MMD", "ked"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&common](CLI::App* sub) {
    sub->add_option("--spec", common.spec, "Spec JSON file")->required();
    sub->add_option("--budget", common.budget, "Oracle budget (nodes per axis or samples)");
    sub->add_option("--seed", common.seed, "Oracle seed");
  };

  std::string what;
  std::optional<std::string> xs;
  std::optional<std::string> ys;
  auto* eval = app.add_subcommand("eval", "Evaluate K_P, K_PP or the kernel");
  add_common(eval);
  eval->add_option("--what", what, "Quantity to evaluate")->required()->check(CLI::IsMember({"kp", "kpp", "kernel"}));
  eval->add_option("--x", xs, "Comma-separated point");
  eval->add_option("--y", ys, "Comma-separated point");

  double tol = 1e-6;
  int points = 20;
  std::optional<std::string> expect;
  auto* verify = app.add_subcommand("verify", "Check closed forms against the numerical oracle");
  add_common(verify);
  verify->add_option("--tol", tol, "Absolute tolerance");
  verify->add_option("--points", points, "Number of random K_P evaluation points");
  verify->add_option("--expect", expect, "Stored expectation file used in place of the oracle");

  std::optional<std::string> data;
  double jitter = 0.0;
  auto* bq = app.add_subcommand("bq", "Bayesian quadrature posterior");
  add_common(bq);
  bq->add_option("--data", data, "CSV or JSON data file with points and values");
  bq->add_option("--jitter", jitter, "Diagonal jitter added to the Gram matrix");

  std::string samples;
  auto* mmd = app.add_subcommand("mmd", "Squared MMD between the spec measure and a sample");
  add_common(mmd);
  mmd->add_option("--samples", samples, "CSV or JSON samples file")->required();

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    return report_error(out, err, kInvalid, "invalid_argument", e.what());
  }

  try {
    Json result;
    if (eval->parsed()) result = cmd_eval(common, what, xs, ys);
    if (verify->parsed()) result = cmd_verify(common, tol, points, expect);
    if (bq->parsed()) result = cmd_bq(common, data, jitter);
    if (mmd->parsed()) result = cmd_mmd(common, samples);
    out << result.dump(2) << '\n';
    return kOk;
  } catch (const VerifyFailed& e) {
    out << e.what() << '\n';
    err << "ked: verification failed\n";
    return kVerifyFailed;
  } catch (const UnsupportedPair& e) {
    return report_error(out, err, kUnsupported, "unsupported_pair", e.what());
  } catch (const InvalidArgument& e) {
    return report_error(out, err, kInvalid, "invalid_argument", e.what());
  } catch (const nlohmann::json::exception& e) {
    return report_error(out, err, kInvalid, "invalid_argument", e.what());
  } catch (const NumericalError& e) {
    return report_error(out, err, kNumerical, "numerical_error", e.what());
  } catch (const std::exception& e) {
    return report_error(out, err, kNumerical, "internal_error", e.what());
  }
}

}  // namespace ked::cli

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ked/cli.hpp"
#include "support.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
  json parsed() const { return json::parse(out); }
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "ked");
  std::ostringstream out;
  std::ostringstream err;
  const int code = ked::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

struct Workspace {
  fs::path dir = fs::temp_directory_path() / "ked_cli_test";
  Workspace() { fs::create_directories(dir); }
  ~Workspace() { fs::remove_all(dir); }
  std::string write(const std::string& name, const std::string& content) const {
    std::ofstream(dir / name) << content;
    return (dir / name).string();
  }
};

const char* kGaussGauss =
    R"({"schema_version": 1, "kernel": {"family": "gaussian", "lengthscales": [1]},
        "measure": {"family": "gaussian", "mean": [0], "variances": [1]}})";

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("eval") {
    Workspace w;
    const auto gg = w.write("gg.json", kGaussGauss);
    const Result kpp = run({"eval", "--spec", gg, "--what", "kpp"});
    CHECK(kpp.code == 0);
    CHECK(kpp.parsed()["value"].get<double>() == 1.0 / std::sqrt(3.0));
    CHECK(kpp.parsed()["provenance"] == "closed_form");
    CHECK(kpp.parsed()["pair"] == "gaussian/gaussian");
    CHECK(kpp.out.find("0.5773502691896258") != std::string::npos);
    const Result kp = run({"eval", "--spec", gg, "--what", "kp", "--x", "0"});
    CHECK(kp.parsed()["value"].get<double>() == std::sqrt(0.5));
    const Result k = run({"eval", "--spec", gg, "--what", "kernel", "--x", "0", "--y", "1"});
    CHECK(k.parsed()["value"].get<double>() == std::exp(-0.5));
    const auto sphere = w.write("s.json", R"({"schema_version": 1, "kernel": {"family": "sphere_sobolev32"},
        "measure": {"family": "sphere_uniform", "dim": 2}})");
    CHECK(run({"eval", "--spec", sphere, "--what", "kpp"}).out.find("0.6666666666666666") != std::string::npos);
  }

  TEST_CASE("eval errors") {
    Workspace w;
    const auto gg = w.write("gg.json", kGaussGauss);
    CHECK(run({"eval", "--spec", gg, "--what", "kp"}).code == 3);
    CHECK(run({"eval", "--spec", gg, "--what", "kp", "--x", "0,1"}).code == 3);
    CHECK(run({"eval", "--spec", gg, "--what", "kp", "--x", "zero"}).code == 3);
    CHECK(run({"eval", "--spec", gg, "--what", "volume"}).code == 3);
    CHECK(run({"eval", "--spec", (w.dir / "nope.json").string(), "--what", "kpp"}).code == 3);
    CHECK(run({"frobnicate"}).code == 3);
    CHECK(run({}).code == 3);
    const Result r = run({"eval", "--spec", w.write("u.json", R"({"schema_version": 1,
        "kernel": {"family": "gaussian", "lengthscales": [1]},
        "measure": {"family": "unnormalized", "name": "quartic"}})"),
                          "--what", "kpp"});
    CHECK(r.code == 2);
    CHECK(r.parsed()["error"]["kind"] == "unsupported_pair");
    CHECK_FALSE(r.err.empty());
    const Result bad = run({"eval", "--spec", w.write("bad.json", R"({"schema_version": 1,
        "kernel": {"family": "gaussian", "lengthscales": [1], "colour": "red"},
        "measure": {"family": "gaussian", "mean": [0], "variances": [1]}})"),
                            "--what", "kpp"});
    CHECK(bad.code == 3);
    CHECK(bad.parsed()["error"]["message"].get<std::string>().find("'colour'") != std::string::npos);
  }

  TEST_CASE("help exits cleanly") {
    const Result r = run({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("verify") != std::string::npos);
  }

  TEST_CASE("verify") {
    Workspace w;
    const auto gu = w.write("gu.json", R"({"schema_version": 1, "kernel": {"family": "gaussian", "lengthscales": [1]},
        "measure": {"family": "uniform_box", "lower": [0], "upper": [1]}})");
    const Result r = run({"verify", "--spec", gu});
    CHECK(r.code == 0);
    const json j = r.parsed();
    CHECK(j["checks"].size() == 21);
    for (const auto& c : j["checks"]) CHECK(c["pass"].get<bool>());
    CHECK(j["passed"].get<bool>());
    CHECK(run({"verify", "--spec", gu}).out == r.out);
    CHECK(run({"verify", "--spec", gu, "--points", "3"}).parsed()["checks"].size() == 4);

    const auto ps = w.write("ps.json", R"({"schema_version": 1, "kernel": {"family": "periodic_sobolev", "r": 2},
        "measure": {"family": "uniform_box", "lower": [0], "upper": [1]}})");
    const Result p = run({"verify", "--spec", ps});
    CHECK(p.code == 0);
    for (const auto& c : p.parsed()["checks"]) CHECK(std::abs(c["oracle"].get<double>() - 1.0) <= 1e-10);
  }

  TEST_CASE("verify negative control and unsupported pairs") {
    Workspace w;
    const auto gu = w.write("gu.json", R"({"schema_version": 1, "kernel": {"family": "gaussian", "lengthscales": [0.4]},
        "measure": {"family": "uniform_box", "lower": [0], "upper": [1]}})");
    const auto expect = w.write("expect.json", R"({"kp": [{"x": [0.25], "value": 0.7828892683129504}], "kpp": 0.7639556549409146})");
    const Result r = run({"verify", "--spec", gu, "--expect", expect});
    CHECK(r.code == 1);
    CHECK_FALSE(r.parsed()["passed"].get<bool>());
    const auto good = w.write("good.json", R"({"schema_version": 1, "kernel": {"family": "gaussian", "lengthscales": [0.5]},
        "measure": {"family": "uniform_box", "lower": [0], "upper": [1]}})");
    CHECK(run({"verify", "--spec", good, "--expect", expect}).code == 0);
    const auto fallback = w.write("w4.json", R"({"schema_version": 1, "kernel": {"family": "wendland", "order": 4, "lengthscale": 0.5},
        "measure": {"family": "uniform_box", "lower": [0], "upper": [1]}})");
    CHECK(run({"verify", "--spec", fallback}).code == 2);
    const auto stein = w.write("st.json", R"({"schema_version": 1,
        "kernel": {"family": "stein", "base": {"family": "gaussian", "lengthscales": [1]}},
        "measure": {"family": "unnormalized", "name": "double_well"}})");
    CHECK(run({"verify", "--spec", stein}).code == 2);
  }

  TEST_CASE("bq") {
    Workspace w;
    const auto gg = w.write("gg.json", kGaussGauss);
    const auto one = w.write("one.csv", "x1,y\n0,1\n");
    const Result r = run({"bq", "--spec", gg, "--data", one});
    CHECK(r.code == 0);
    const json j = r.parsed();
    CHECK(j["mean"].get<double>() == std::sqrt(0.5));
    CHECK(std::abs(j["variance"].get<double>() - (1.0 / std::sqrt(3.0) - 0.5)) <= 1e-15);
    CHECK(j["weights"].size() == 1);
    CHECK(j["jitter_applied"].get<double>() == 0.0);
    const auto dup = w.write("dup.csv", "x1,y\n0,1\n0,2\n");
    CHECK(run({"bq", "--spec", gg, "--data", dup}).code == 3);
    CHECK(run({"bq", "--spec", gg, "--data", w.write("novals.csv", "x1\n0\n")}).code == 3);
    CHECK(run({"bq", "--spec", gg}).code == 3);
  }

  TEST_CASE("bq reads the data path from the spec") {
    Workspace w;
    w.write("nodes.json", R"({"points": [[0.0]], "values": [1.0]})");
    const auto spec = w.write("spec.json", R"({"schema_version": 1, "kernel": {"family": "gaussian", "lengthscales": [1]},
        "measure": {"family": "gaussian", "mean": [0], "variances": [1]}, "data": "nodes.json"})");
    CHECK(run({"bq", "--spec", spec}).parsed()["mean"].get<double>() == std::sqrt(0.5));
  }

  TEST_CASE("mmd") {
    Workspace w;
    const auto gg = w.write("gg.json", kGaussGauss);
    const Result r = run({"mmd", "--spec", gg, "--samples", w.write("q.csv", "x1\n0.3\n")});
    CHECK(r.code == 0);
    const double want = 1.0 / std::sqrt(3.0) - 2.0 * std::sqrt(0.5) * std::exp(-0.09 / 4.0) + 1.0;
    CHECK(std::abs(r.parsed()["mmd2"].get<double>() - want) <= 1e-15);
    CHECK(run({"mmd", "--spec", gg, "--samples", w.write("bad.csv", "x1\n0.3,4\n")}).code == 3);
    CHECK(run({"mmd", "--spec", gg, "--samples", w.write("empty.csv", "x1\n")}).code == 3);
    CHECK(run({"mmd", "--spec", gg}).code == 3);
  }

  TEST_CASE("numerical failure") {
    Workspace w;
    const auto spec = w.write("neg.json", R"({"schema_version": 1, "kernel": {"family": "matern", "nu": 2.5, "lengthscale": 1.0},
        "measure": {"family": "gaussian", "mean": [0, 0, 0], "variances": [1, 1, 1]}, "oracle": {"budget": 10, "seed": 0}})");
    std::string csv = "x1,x2,x3,y\n";
    for (int i = 0; i < 12; ++i) {
      csv += std::to_string(std::sin(1.0 + i)) + "," + std::to_string(std::cos(2.0 * i)) + "," + std::to_string(0.1 * i - 0.6) + ",1\n";
    }
    const auto data = w.write("neg.csv", csv);
    int failures = 0;
    for (int seed = 0; seed < 8; ++seed) {
      const Result r = run({"bq", "--spec", spec, "--data", data, "--seed", std::to_string(seed)});
      CHECK((r.code == 0 || r.code == 4));
      if (r.code == 4) {
        ++failures;
        CHECK(r.parsed()["error"]["kind"] == "numerical_error");
      }
    }
    CHECK(failures > 0);
  }

  TEST_CASE("seed precedence") {
    Workspace w;
    const auto spec = w.write("mc.json", R"({"schema_version": 1, "kernel": {"family": "sphere_sobolev32"},
        "measure": {"family": "sphere_uniform", "dim": 2}, "oracle": {"budget": 1000, "seed": 5}})");
    const json from_spec = run({"verify", "--spec", spec, "--points", "1"}).parsed();
    CHECK(from_spec["seed"] == 5);
    const json from_flag = run({"verify", "--spec", spec, "--points", "1", "--seed", "6"}).parsed();
    CHECK(from_flag["seed"] == 6);
    const auto nospec = w.write("mc2.json", R"({"schema_version": 1, "kernel": {"family": "sphere_sobolev32"},
        "measure": {"family": "sphere_uniform", "dim": 2}, "oracle": {"budget": 1000}})");
    CHECK(run({"verify", "--spec", nospec, "--points", "1"}).parsed()["seed"] == 0);
    setenv("KED_DEFAULT_SEED", "41", 1);
    CHECK(run({"verify", "--spec", nospec, "--points", "1"}).parsed()["seed"] == 41);
    CHECK(run({"verify", "--spec", spec, "--points", "1"}).parsed()["seed"] == 5);
    setenv("KED_DEFAULT_SEED", "forty", 1);
    CHECK(run({"verify", "--spec", nospec, "--points", "1"}).code == 3);
    unsetenv("KED_DEFAULT_SEED");
  }
}

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "transcp/cli.hpp"
#include "transcp/data.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "transcp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  Run r;
  r.code = transcp::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path workdir() {
  const fs::path d = fs::temp_directory_path() / "transcp_cli_test";
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"simulate", "--bogus", "1", "--seed", "1"}).code == 2);
  const Run noseed = run({"simulate", "--n", "20"});
  CHECK(noseed.code == 2);
  CHECK(noseed.err.find("--seed") != std::string::npos);
  const Run missing = run({"fit", "--data", (workdir() / "absent.csv").string(), "--seed", "1"});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("cannot open") != std::string::npos);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("simulate, fit, ci and test") {
  const fs::path dir = workdir();
  const std::string data = (dir / "sim.csv").string();
  REQUIRE(run({"simulate", "--n", "120", "--eta0", "-3", "--seed", "5", "--out", data}).code == 0);
  const Run again = run({"simulate", "--n", "120", "--eta0", "-3", "--seed", "5"});
  CHECK(again.out == slurp(data));
  const transcp::Dataset ds = transcp::load_dataset_files(data);
  CHECK(ds.n() == 120);

  SUBCASE("fit is byte-reproducible and thread invariant") {
    const std::vector<std::string> args = {"fit", "--data", data, "--seed", "7", "--B", "40", "--draws", "300"};
    const Run a = run(args);
    REQUIRE(a.code == 0);
    const Run b = run(args);
    auto threaded = args;
    threaded.insert(threaded.end(), {"--threads", "3"});
    const Run c = run(threaded);
    CHECK(a.out == b.out);
    CHECK(a.out == c.out);
    const auto j = nlohmann::json::parse(a.out);
    CHECK(j["command"] == "fit");
    CHECK(j["parameters"].size() == 3);
    CHECK(j["parameters"][0]["name"] == "alpha");
    CHECK(j["zeta_ci"]["lower"].get<double>() <= j["zeta_hat"].get<double>());
    CHECK(j["zeta_ci"]["upper"].get<double>() >= j["zeta_hat"].get<double>());
    CHECK(j["bootstrap"]["B"] == 40);
  }

  SUBCASE("ci") {
    const Run a = run({"ci", "--data", data, "--seed", "2", "--draws", "200", "--level", "0.9"});
    REQUIRE(a.code == 0);
    const auto j = nlohmann::json::parse(a.out);
    CHECK(j["zeta_ci"]["level"] == 0.9);
    CHECK(j["gamma"].size() == 3);
  }

  SUBCASE("test schema and determinism") {
    const std::vector<std::string> args = {"test", "--family", "odds-rate:1", "--data", data, "--M", "50", "--seed", "1"};
    const Run a = run(args);
    REQUIRE(a.code == 0);
    auto threaded = args;
    threaded.insert(threaded.end(), {"--threads", "2"});
    CHECK(run(threaded).out == a.out);
    const auto j = nlohmann::json::parse(a.out);
    CHECK(j.contains("t_sup"));
    CHECK(j.contains("p_sup"));
    CHECK(j["family"] == "odds-rate:1");
    CHECK(j["M"].get<int>() + j["dropped"].get<int>() == 50);
  }

  SUBCASE("explicit range and file output") {
    const std::string out = (dir / "test.json").string();
    const Run a = run({"test", "--data", data, "--M", "50", "--seed", "1", "--a", "-0.5", "--b", "0.5", "--out", out});
    REQUIRE(a.code == 0);
    CHECK(a.out.empty());
    const auto j = nlohmann::json::parse(slurp(out));
    CHECK(j["a"] == -0.5);
    CHECK(j["b"] == 0.5);
  }

  SUBCASE("computation errors exit with 1") {
    const Run a = run({"ci", "--data", data, "--seed", "1", "--a", "100", "--b", "200"});
    CHECK(a.code == 1);
    CHECK(a.err.find("error:") != std::string::npos);
  }
}

TEST_CASE("config file values yield to flags") {
  const fs::path dir = workdir();
  const fs::path cfg = dir / "sim.toml";
  {
    std::ofstream f(cfg);
    f << "[simulate]\nn = 30\nseed = 4\neta0 = -1.0\n";
  }
  const Run a = run({"--config", cfg.string(), "simulate"});
  REQUIRE(a.code == 0);
  std::istringstream in(a.out);
  CHECK(transcp::load_dataset(in).n() == 30);
  const Run b = run({"--config", cfg.string(), "simulate", "--n", "25"});
  REQUIRE(b.code == 0);
  std::istringstream in2(b.out);
  CHECK(transcp::load_dataset(in2).n() == 25);
  CHECK(run({"simulate", "--n", "30", "--seed", "4", "--eta0", "-1"}).out == a.out);
}

TEST_CASE("reproduce-table1 at toy scale") {
  const std::vector<std::string> args = {"reproduce-table1", "--n", "50", "--reps", "2", "--M", "20", "--seed", "9"};
  const Run a = run(args);
  REQUIRE(a.code == 0);
  CHECK(a.out.rfind("family,eta0,test,", 0) == 0);
  auto threaded = args;
  threaded.insert(threaded.end(), {"--threads", "2"});
  CHECK(run(threaded).out == a.out);
  auto js = args;
  js.insert(js.end(), {"--format", "json"});
  const Run j = run(js);
  REQUIRE(j.code == 0);
  CHECK(nlohmann::json::parse(j.out)["cells"].size() == 10);
}

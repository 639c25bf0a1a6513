#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "qavb/cli.hpp"
#include "qavb/error.hpp"

using namespace qavb;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Invocation {
  int code;
  std::string out, err;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "qavb");
  std::vector<const char*> argv;
  for (auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("qavb_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("fnv1a64 reference values") {
  CHECK(cli::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(cli::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(cli::fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("config files become option arguments") {
  const auto args = cli::config_to_args("# comment\n\nK = 12\n--method=davb\n  tau1=10  \n");
  CHECK(args == std::vector<std::string>{"--K", "12", "--method", "davb", "--tau1", "10"});
  CHECK_THROWS_AS(cli::config_to_args("K 12\n"), ParseError);
  CHECK_THROWS_AS(cli::config_to_args("=3\n"), ParseError);
}

TEST_CASE("sweep derivations") {
  cli::SweepGrid g{{10, 12, 14}, {10, 50}, Eigen::MatrixXd(3, 2)};
  g.rates << 0.6, 0.8,
             0.5, 0.9,
             0.96, 0.7;
  const auto d = cli::derive_sweep(g, {0.85, 0.95});
  CHECK(d.best_up_to_K(1, 0) == 0.6);
  CHECK(d.best_up_to_K(2, 1) == 0.9);
  CHECK(d.best_up_to_tau1(2, 1) == 0.96);
  CHECK(d.k_min[0][0] == 14);
  CHECK(d.k_min[0][1] == 12);
  CHECK_FALSE(d.k_min[1][1].has_value());
  CHECK(d.tau1_min[0][1] == 50);
  CHECK(d.tau1_min[1][2] == 10);
  CHECK_FALSE(d.tau1_min[1][0].has_value());
  g.Ks = {12, 10, 14};
  CHECK_THROWS_AS(cli::derive_sweep(g, {0.9}), ValidationError);
}

TEST_CASE("report summary groups by method") {
  auto rep = [](const char* m, json conv, json qa) {
    return json{{"format", "qavb-run-report"},
                {"version", 1},
                {"config", {{"method", m}}},
                {"metrics", {{"success_rate_convergence", conv}, {"success_rate_end_of_qa", qa},
                             {"bayes_optimal_rate", 0.98}}}};
  };
  const auto table = cli::summarize_reports({rep("qavb", 0.9, 0.8), rep("qavb", 0.8, 0.7), rep("vb", 0.5, nullptr)});
  CHECK(table.find("| qavb | 2 | 0.8500 ± 0.0707 | 0.7500 ± 0.0707 | 0.9800 ± 0.0000 |") != std::string::npos);
  CHECK(table.find("| vb | 1 | 0.5000 ± 0.0000 | n/a |") != std::string::npos);
  CHECK_THROWS_AS(cli::summarize_reports({}), ValidationError);
  CHECK_THROWS_AS(cli::summarize_reports({json{{"format", "other"}}}), ValidationError);
}

TEST_CASE("generate, run and report end to end") {
  TempDir dir;
  const auto data = dir / "d.txt";
  auto g = invoke({"generate", "--components", "3", "--n", "40", "--seed", "2", "--out", data});
  REQUIRE(g.code == cli::kExitOk);
  CHECK(g.out.find("bayes_optimal_rate=") != std::string::npos);

  const auto rep = dir / "r.json";
  const auto traj = dir / "t.csv";
  auto r = invoke({"run", "--data", data, "--method", "qavb", "--K", "4", "--tau1", "5", "--tau2", "8",
                   "--report", rep, "--trajectory", traj});
  REQUIRE(r.code == cli::kExitOk);
  const auto j = json::parse(slurp(rep));
  CHECK(j["format"] == "qavb-run-report");
  CHECK(j["version"] == 1);
  CHECK(j["config"]["K"] == 4);
  CHECK(j["metrics"]["success_rate_end_of_qa"].is_number());
  CHECK(j["metrics"]["bayes_optimal_rate"].is_number());
  CHECK_FALSE(j.contains("timing"));
  const auto csv = slurp(traj);
  CHECK(csv.rfind("# qavb run config_hash=", 0) == 0);
  CHECK(csv.find("\nt,beta,s,objective,median_purity,median_overlap,success_rate\n0,30,1,") != std::string::npos);

  // Identical invocations give identical artifacts.
  const auto rep2 = dir / "r2.json";
  invoke({"run", "--data", data, "--method", "qavb", "--K", "4", "--tau1", "5", "--tau2", "8",
          "--report", rep2, "--trajectory", traj});
  auto j2 = json::parse(slurp(rep2));
  CHECK(j2["metrics"] == j["metrics"]);

  auto s = invoke({"report", rep, rep2});
  CHECK(s.code == cli::kExitOk);
  CHECK(s.out.find("| qavb | 2 |") != std::string::npos);
}

TEST_CASE("config file values are overridden by flags") {
  TempDir dir;
  const auto data = dir / "d.txt";
  invoke({"generate", "--components", "2", "--n", "20", "--out", data});
  {
    std::ofstream(dir / "c.cfg") << "method = davb\nK = 3\nbeta0 = 5\ntau1 = 4\ntau2 = 6\n";
  }
  const auto rep = dir / "r.json";
  auto r = invoke({"run", "--config", dir / "c.cfg", "--data", data, "--K", "5", "--report", rep,
                   "--trajectory", dir / "t.csv", "--timing"});
  REQUIRE(r.code == cli::kExitOk);
  const auto j = json::parse(slurp(rep));
  CHECK(j["config"]["method"] == "davb");
  CHECK(j["config"]["K"] == 5);
  CHECK(j["config"]["schedule"]["beta0"] == 5.0);
  CHECK(j["timing"]["seconds"].is_number());
}

TEST_CASE("sweep and compare-davb write their tables") {
  TempDir dir;
  const auto data = dir / "d.txt";
  invoke({"generate", "--components", "2", "--n", "30", "--out", data});
  const auto sw = dir / "s.csv";
  auto s = invoke({"sweep", "--data", data, "--K-list", "2,3", "--tau1-list", "2,4", "--tau2-gap", "2",
                   "--threads", "2", "--out", sw});
  REQUIRE(s.code == cli::kExitOk);
  const auto text = slurp(sw);
  CHECK(text.find("quantity,K,tau1,p_cr,value") != std::string::npos);
  CHECK(text.find("\np_suc,3,4,,") != std::string::npos);
  CHECK(text.find("\nK_min,,2,0.84999999999999998,") != std::string::npos);

  const auto cmp = dir / "c.csv";
  auto c = invoke({"compare-davb", "--data", data, "--K", "3", "--beta0-list", "0.1,5", "--restarts", "3",
                   "--tau1", "2", "--tau2", "4", "--qavb-tau1", "4", "--qavb-tau2", "6", "--out", cmp});
  REQUIRE(c.code == cli::kExitOk);
  const auto ctext = slurp(cmp);
  CHECK(ctext.find("beta0,restarts,mean_rate,std_rate,hits,hit_fraction,qavb_rate\n0.10000000000000001,3,") !=
        std::string::npos);
}

TEST_CASE("exit codes and structured errors") {
  CHECK(invoke({}).code == cli::kExitUsage);
  CHECK(invoke({"run"}).code == cli::kExitUsage);
  CHECK(invoke({"run", "--data", "x", "--K", "abc"}).code == cli::kExitUsage);
  CHECK(invoke({"--help"}).code == cli::kExitOk);

  TempDir dir;
  const auto data = dir / "d.txt";
  invoke({"generate", "--components", "2", "--n", "20", "--out", data});
  auto v = invoke({"run", "--data", data, "--K", "1"});
  CHECK(v.code == cli::kExitValidation);
  const auto e = json::parse(v.err);
  CHECK(e["error"]["kind"] == "validation");

  {
    std::ofstream(dir / "bad.txt") << "QAVBDATA v1\nheader,1\n";
  }
  auto p = invoke({"run", "--data", dir / "bad.txt"});
  CHECK(p.code == cli::kExitValidation);
  CHECK(p.err.find("line 2") != std::string::npos);

  auto m = invoke({"run", "--data", dir / "missing.txt"});
  CHECK(m.code == cli::kExitRuntime);
  CHECK(json::parse(m.err)["error"]["kind"] == "runtime");

  CHECK(invoke({"generate", "--weights", "skewed", "--out", dir / "x.txt"}).code == cli::kExitValidation);
  CHECK(invoke({"report", dir / "bad.txt"}).code == cli::kExitValidation);
}

TEST_CASE("CLI examples: usage and validation") {
  TempDir dir;
  auto g = invoke({"generate", "--dim", "2", "--components", "10", "--n", "200", "--seed", "7", "--out", dir / "d.csv"});
  CHECK(g.code == cli::kExitOk);
  CHECK(fs::exists(dir / "d.csv"));
  CHECK(invoke({"generate", "--components", "3"}).code == cli::kExitUsage);
  CHECK(invoke({"generate", "--components", "0", "--out", dir / "z.txt"}).code == cli::kExitValidation);
}

TEST_CASE("re-running with the same seed gives a byte-identical report") {
  TempDir dir;
  const auto data = dir / "d.txt";
  invoke({"generate", "--components", "3", "--n", "40", "--out", data});
  std::vector<std::string> traj;
  for (const char* name : {"a.json", "b.json"}) {
    invoke({"run", "--data", data, "--method", "davb", "--init", "random", "--seed", "5", "--K", "4", "--beta0", "2",
            "--tau1", "3", "--tau2", "6", "--report", dir / name, "--trajectory", dir / "t.csv"});
    traj.push_back(slurp(dir / "t.csv"));
  }
  CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
  CHECK(traj[0] == traj[1]);
}

TEST_CASE("unreachable targets are reported as unachieved") {
  cli::SweepGrid g{{10, 12}, {50}, Eigen::MatrixXd::Constant(2, 1, 0.99)};
  const auto d = cli::derive_sweep(g, {1.1});
  CHECK_FALSE(d.k_min[0][0].has_value());
  TempDir dir;
  const auto data = dir / "d.txt";
  invoke({"generate", "--components", "2", "--n", "20", "--out", data});
  invoke({"sweep", "--data", data, "--K-list", "2", "--tau1-list", "2", "--p-cr", "1.1", "--out", dir / "s.csv"});
  CHECK(slurp(dir / "s.csv").find("K_min,,2,1.1000000000000001,unachieved") != std::string::npos);
}

TEST_CASE("compare-davb emits one row per beta0 with bounded hit counts") {
  TempDir dir;
  const auto data = dir / "d.txt";
  invoke({"generate", "--components", "2", "--n", "20", "--out", data});
  invoke({"compare-davb", "--data", data, "--K", "3", "--beta0-list", "0.001,1,30", "--restarts", "4", "--tau1", "2",
          "--tau2", "4", "--qavb-tau1", "3", "--qavb-tau2", "4", "--out", dir / "c.csv"});
  std::istringstream in(slurp(dir / "c.csv"));
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#' && line[0] != 'b') rows.push_back(line);
  }
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    std::vector<std::string> f;
    std::stringstream ss(r);
    std::string x;
    while (std::getline(ss, x, ',')) f.push_back(x);
    CHECK(std::stoi(f[4]) <= std::stoi(f[1]));
  }
}

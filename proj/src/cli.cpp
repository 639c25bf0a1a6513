#include "qavb/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "qavb/error.hpp"
#include "qavb/evaluation.hpp"

namespace qavb::cli {

using nlohmann::json;

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string opt_real(const std::optional<double>& v) { return v ? real(*v) : std::string(); }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

template <class T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::istringstream is(item);
    T v{};
    is >> v;
    if (!is || !is.eof()) throw ValidationError(std::string(what) + ": cannot parse '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError(std::string(what) + ": list is empty");
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error("write to '" + path + "' failed");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
  int n = 0;
};

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd m;
  m.n = static_cast<int>(v.size());
  if (v.empty()) return m;
  for (double x : v) m.mean += x;
  m.mean /= m.n;
  if (m.n > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / (m.n - 1));
  }
  return m;
}

// Runs fn(0..n-1) on up to `threads` workers; results land by index.
void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

int default_threads() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Options shared by run, sweep and compare-davb.
struct SolverArgs {
  std::string method = "qavb";
  int K = 20;
  double s0 = 1.0;
  double beta0 = 30.0;
  int tau1 = 300;
  int tau2 = 350;
  int max_extra = 200;
  double conv_tol = 1e-6;
  std::uint64_t seed = 0;
  std::string init = "mixed";
  PriorOptions prior;

  void add_to(CLI::App& app, bool with_schedule) {
    app.add_option("--method", method, "Solver: vb, davb or qavb")->capture_default_str();
    app.add_option("--K", K, "Number of mixture components")->capture_default_str();
    if (with_schedule) {
      app.add_option("--s0", s0, "Initial driver weight s_0")->capture_default_str();
      app.add_option("--beta0", beta0, "Initial inverse temperature beta_0")->capture_default_str();
      app.add_option("--tau1", tau1, "Iteration where s reaches 0")->capture_default_str();
      app.add_option("--tau2", tau2, "Iteration where beta reaches 1 (absolute)")->capture_default_str();
    }
    app.add_option("--max-extra", max_extra, "Iterations allowed after tau2")->capture_default_str();
    app.add_option("--conv-tol", conv_tol, "Convergence threshold on the max trace distance")
        ->capture_default_str();
    app.add_option("--seed", seed, "Seed for initialization and prior jitter")->capture_default_str();
    app.add_option("--init", init, "Initial hidden states: mixed or random")->capture_default_str();
    app.add_option("--prior-alpha", prior.alpha, "Dirichlet concentration alpha_pr")->capture_default_str();
    app.add_option("--prior-gamma", prior.gamma, "Mean precision scaling gamma_pr")->capture_default_str();
    app.add_option("--prior-nu-offset", prior.nu_offset, "nu_pr = D + offset")->capture_default_str();
    app.add_option("--prior-cov-fraction", prior.covariance_fraction,
                   "W_pr^-1 = fraction * dbar * I; <= 0 selects K^(-2/D)")
        ->capture_default_str();
    app.add_option("--prior-jitter", prior.mean_jitter, "Spread of m_pr around the sample mean")
        ->capture_default_str();
  }

  SolverConfig resolve() const {
    SolverConfig cfg;
    cfg.method = parse_method(method);
    cfg.K = K;
    cfg.schedule = {s0, beta0, tau1, tau2};
    cfg.max_extra_iters = max_extra;
    cfg.conv_tol = conv_tol;
    cfg.seed = seed;
    cfg.init = parse_init(init);
    cfg.prior = prior;
    cfg.prior.jitter_seed = seed;
    cfg.validate();
    return cfg;
  }
};

json schedule_json(const AnnealingSchedule& s) {
  return {{"s0", s.s0}, {"beta0", s.beta0}, {"tau1", s.tau1}, {"tau2", s.tau2}};
}

json dataset_json(const Dataset& ds, const std::string& path) {
  return {{"path", path},
          {"content_hash", hex64(fnv1a64(format_dataset(ds)))},
          {"N", ds.size()},
          {"D", ds.dim()},
          {"C", ds.components},
          {"seed", ds.seed}};
}

std::string csv_comment(std::string_view command, const json& provenance) {
  return "# qavb " + std::string(command) + " config_hash=" + hex64(fnv1a64(provenance.dump()));
}

std::optional<double> ceiling_of(const Dataset& ds) {
  if (!ds.labels || !ds.params) return std::nullopt;
  return bayes_optimal_rate(ds);
}

// ---- generate ----

struct GenerateArgs {
  GenerativeSpec spec;
  std::string weights = "equal";
  std::string out;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  GenerativeSpec spec = a.spec;
  if (a.weights == "equal") {
    spec.weights = WeightMode::Equal;
  } else if (a.weights == "dirichlet") {
    spec.weights = WeightMode::Dirichlet;
  } else {
    throw ValidationError("--weights must be equal or dirichlet");
  }
  const Dataset ds = generate(spec);
  save_dataset(ds, a.out);
  out << "wrote " << a.out << " (N=" << ds.size() << ", D=" << ds.dim() << ", C=" << ds.components
      << ")\n";
  out << "bayes_optimal_rate=" << std::fixed << std::setprecision(4) << bayes_optimal_rate(ds) << '\n';
  return kExitOk;
}

// ---- run ----

struct RunArgs {
  SolverArgs solver;
  std::string data;
  std::string report = "report.json";
  std::string trajectory = "trajectory.csv";
  bool timing = false;
};

int cmd_run(const RunArgs& a, std::ostream& out) {
  const SolverConfig cfg = a.solver.resolve();
  const Dataset ds = load_dataset(a.data);
  const RunResult res = run(cfg, ds);
  const json report = run_report(cfg, res, ds, a.data, a.trajectory, a.timing);
  write_file(a.trajectory, trajectory_csv(res, csv_comment("run", report["config"])));
  write_file(a.report, report.dump(2) + "\n");
  out << "method=" << to_string(cfg.method) << " iterations=" << res.iterations_run
      << " converged=" << (res.converged ? "yes" : "no");
  if (res.success_rate) out << " success_rate=" << std::fixed << std::setprecision(4) << *res.success_rate;
  out << '\n';
  return kExitOk;
}

// ---- sweep ----

struct SweepArgs {
  SolverArgs solver;
  std::string data;
  std::string k_list = "10,12,14,16,20";
  std::string tau1_list = "10,50,100,300";
  int tau2_gap = 50;
  std::string p_cr = "0.85,0.95";
  int threads = default_threads();
  std::string out = "sweep.csv";
};

std::string fmt_opt_int(const std::optional<int>& v) { return v ? std::to_string(*v) : "unachieved"; }

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  const auto Ks = parse_list<int>(a.k_list, "--K-list");
  const auto taus = parse_list<int>(a.tau1_list, "--tau1-list");
  const auto pcr = parse_list<double>(a.p_cr, "--p-cr");
  if (a.tau2_gap < 0) throw ValidationError("--tau2-gap must be nonnegative");
  SolverConfig base = a.solver.resolve();
  if (base.method != Method::QAVB) throw ValidationError("sweep runs QAVB only");
  const Dataset ds = load_dataset(a.data);
  if (!ds.labels) throw ValidationError("sweep needs a dataset with labels");

  SweepGrid grid{Ks, taus, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(Ks.size()),
                                               static_cast<Eigen::Index>(taus.size()))};
  const int cells = static_cast<int>(Ks.size() * taus.size());
  std::vector<SolverConfig> cfgs(cells, base);
  for (int c = 0; c < cells; ++c) {
    auto& cfg = cfgs[c];
    cfg.K = Ks[c / taus.size()];
    cfg.schedule.tau1 = taus[c % taus.size()];
    cfg.schedule.tau2 = cfg.schedule.tau1 + a.tau2_gap;
    cfg.validate();
  }
  // Validate the grid shape before spending time on runs.
  const auto derived_check = derive_sweep(grid, pcr);
  (void)derived_check;

  std::vector<double> rates(cells);
  parallel_for(cells, a.threads, [&](int c) { rates[c] = *run(cfgs[c], ds).success_rate; });
  for (int c = 0; c < cells; ++c) grid.rates(c / taus.size(), c % taus.size()) = rates[c];
  const auto d = derive_sweep(grid, pcr);

  json prov = config_json(base);
  prov["dataset"] = dataset_json(ds, a.data);
  prov["K_list"] = Ks;
  prov["tau1_list"] = taus;
  prov["tau2_gap"] = a.tau2_gap;
  prov["p_cr"] = pcr;
  std::ostringstream csv;
  csv << csv_comment("sweep", prov) << '\n' << "quantity,K,tau1,p_cr,value\n";
  for (std::size_t i = 0; i < Ks.size(); ++i) {
    for (std::size_t j = 0; j < taus.size(); ++j) {
      csv << "p_suc," << Ks[i] << ',' << taus[j] << ",," << real(grid.rates(i, j)) << '\n';
    }
  }
  for (std::size_t i = 0; i < Ks.size(); ++i) {
    for (std::size_t j = 0; j < taus.size(); ++j) {
      csv << "p_suc_K," << Ks[i] << ',' << taus[j] << ",," << real(d.best_up_to_K(i, j)) << '\n';
    }
  }
  for (std::size_t i = 0; i < Ks.size(); ++i) {
    for (std::size_t j = 0; j < taus.size(); ++j) {
      csv << "p_suc_tau1," << Ks[i] << ',' << taus[j] << ",," << real(d.best_up_to_tau1(i, j)) << '\n';
    }
  }
  for (std::size_t p = 0; p < pcr.size(); ++p) {
    for (std::size_t j = 0; j < taus.size(); ++j) {
      csv << "K_min,," << taus[j] << ',' << real(pcr[p]) << ',' << fmt_opt_int(d.k_min[p][j]) << '\n';
    }
    for (std::size_t i = 0; i < Ks.size(); ++i) {
      csv << "tau1_min," << Ks[i] << ",," << real(pcr[p]) << ',' << fmt_opt_int(d.tau1_min[p][i]) << '\n';
    }
  }
  write_file(a.out, csv.str());
  out << "wrote " << a.out << " (" << cells << " runs)\n";
  return kExitOk;
}

// ---- compare-davb ----

struct CompareArgs {
  std::string data;
  int K = 20;
  std::string beta0_list = "0.001,0.1,1,5,30";
  int tau1 = 10;
  int tau2 = 100;
  int restarts = 100;
  double p_cr = 0.95;
  int max_extra = 200;
  double conv_tol = 1e-6;
  std::uint64_t seed = 0;
  PriorOptions prior;
  SolverArgs qavb;
  int threads = default_threads();
  std::string out = "compare_davb.csv";
};

int cmd_compare_davb(const CompareArgs& a, std::ostream& out) {
  if (a.restarts < 1) throw ValidationError("--restarts must be at least 1");
  if (!(a.p_cr >= 0.0)) throw ValidationError("--p-cr must be nonnegative");
  const auto betas = parse_list<double>(a.beta0_list, "--beta0-list");
  const Dataset ds = load_dataset(a.data);
  if (!ds.labels) throw ValidationError("compare-davb needs a dataset with labels");

  PriorOptions prior = a.prior;
  prior.jitter_seed = a.seed;
  SolverConfig qcfg = a.qavb.resolve();
  qcfg.method = Method::QAVB;
  qcfg.K = a.K;
  qcfg.prior = prior;
  qcfg.validate();

  std::vector<SolverConfig> cfgs;
  for (double b : betas) {
    for (int r = 0; r < a.restarts; ++r) {
      SolverConfig c;
      c.method = Method::DAVB;
      c.K = a.K;
      c.schedule = {0.0, b, a.tau1, a.tau2};
      c.max_extra_iters = a.max_extra;
      c.conv_tol = a.conv_tol;
      c.seed = a.seed + static_cast<std::uint64_t>(r);
      c.init = InitMode::SeededRandom;
      c.prior = prior;
      c.validate();
      cfgs.push_back(c);
    }
  }
  // The QAVB reference is the last job.
  cfgs.push_back(qcfg);
  std::vector<double> rates(cfgs.size());
  parallel_for(static_cast<int>(cfgs.size()), a.threads,
               [&](int i) { rates[i] = *run(cfgs[i], ds).success_rate; });
  const double qavb_rate = rates.back();

  json prov;
  prov["dataset"] = dataset_json(ds, a.data);
  prov["K"] = a.K;
  prov["beta0_list"] = betas;
  prov["tau1"] = a.tau1;
  prov["tau2"] = a.tau2;
  prov["restarts"] = a.restarts;
  prov["p_cr"] = a.p_cr;
  prov["seed"] = a.seed;
  prov["qavb"] = config_json(qcfg);
  std::ostringstream csv;
  csv << csv_comment("compare-davb", prov) << '\n'
      << "beta0,restarts,mean_rate,std_rate,hits,hit_fraction,qavb_rate\n";
  for (std::size_t b = 0; b < betas.size(); ++b) {
    std::vector<double> v(rates.begin() + static_cast<long>(b * a.restarts),
                          rates.begin() + static_cast<long>((b + 1) * a.restarts));
    const auto ms = mean_std(v);
    const auto hits = std::count_if(v.begin(), v.end(), [&](double x) { return x >= a.p_cr; });
    csv << real(betas[b]) << ',' << a.restarts << ',' << real(ms.mean) << ',' << real(ms.std) << ','
        << hits << ',' << real(static_cast<double>(hits) / a.restarts) << ',' << real(qavb_rate) << '\n';
  }
  write_file(a.out, csv.str());
  out << "wrote " << a.out << " (" << betas.size() << " beta0 values x " << a.restarts
      << " restarts, qavb_rate=" << std::fixed << std::setprecision(4) << qavb_rate << ")\n";
  return kExitOk;
}

// ---- report ----

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_path, std::ostream& out) {
  std::vector<json> reports;
  for (const auto& path : inputs) {
    try {
      reports.push_back(json::parse(read_file(path)));
    } catch (const json::parse_error& e) {
      throw ParseError(path + ": " + e.what());
    }
  }
  const std::string table = summarize_reports(reports);
  if (!out_path.empty()) write_file(out_path, table);
  out << table;
  return kExitOk;
}

void print_error(std::ostream& err, std::string_view kind, std::string_view message) {
  err << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << '\n';
}

}  // namespace

std::vector<std::string> config_to_args(const std::string& text) {
  std::vector<std::string> args;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    key.erase(0, key.find_first_not_of('-'));
    if (key.empty()) throw ParseError("config line " + std::to_string(lineno) + ": empty key");
    args.push_back("--" + key);
    args.push_back(value);
  }
  return args;
}

SweepDerived derive_sweep(const SweepGrid& grid, const std::vector<double>& p_cr) {
  const auto nk = static_cast<Eigen::Index>(grid.Ks.size());
  const auto nt = static_cast<Eigen::Index>(grid.tau1s.size());
  if (nk == 0 || nt == 0) throw ValidationError("sweep: grids must be non-empty");
  if (grid.rates.rows() != nk || grid.rates.cols() != nt) throw ValidationError("sweep: rate table shape");
  if (!std::is_sorted(grid.Ks.begin(), grid.Ks.end()) ||
      std::adjacent_find(grid.Ks.begin(), grid.Ks.end()) != grid.Ks.end() ||
      !std::is_sorted(grid.tau1s.begin(), grid.tau1s.end()) ||
      std::adjacent_find(grid.tau1s.begin(), grid.tau1s.end()) != grid.tau1s.end()) {
    throw ValidationError("sweep: K and tau1 lists must be strictly increasing");
  }
  SweepDerived d;
  d.best_up_to_K = grid.rates;
  d.best_up_to_tau1 = grid.rates;
  for (Eigen::Index i = 1; i < nk; ++i) {
    d.best_up_to_K.row(i) = d.best_up_to_K.row(i).cwiseMax(d.best_up_to_K.row(i - 1));
  }
  for (Eigen::Index j = 1; j < nt; ++j) {
    d.best_up_to_tau1.col(j) = d.best_up_to_tau1.col(j).cwiseMax(d.best_up_to_tau1.col(j - 1));
  }
  d.p_cr = p_cr;
  for (double p : p_cr) {
    std::vector<std::optional<int>> kmin(nt), tmin(nk);
    for (Eigen::Index j = 0; j < nt; ++j) {
      for (Eigen::Index i = 0; i < nk && !kmin[j]; ++i) {
        if (grid.rates(i, j) >= p) kmin[j] = grid.Ks[i];
      }
    }
    for (Eigen::Index i = 0; i < nk; ++i) {
      for (Eigen::Index j = 0; j < nt && !tmin[i]; ++j) {
        if (grid.rates(i, j) >= p) tmin[i] = grid.tau1s[j];
      }
    }
    d.k_min.push_back(std::move(kmin));
    d.tau1_min.push_back(std::move(tmin));
  }
  return d;
}

json config_json(const SolverConfig& cfg) {
  return {{"method", to_string(cfg.method)},
          {"K", cfg.K},
          {"schedule", schedule_json(cfg.schedule)},
          {"max_extra_iters", cfg.max_extra_iters},
          {"conv_tol", cfg.conv_tol},
          {"seed", cfg.seed},
          {"init", to_string(cfg.init)},
          {"prior",
           {{"alpha", cfg.prior.alpha},
            {"gamma", cfg.prior.gamma},
            {"nu_offset", cfg.prior.nu_offset},
            {"covariance_fraction", cfg.prior.covariance_fraction},
            {"mean_jitter", cfg.prior.mean_jitter},
            {"override", cfg.prior_override.has_value()}}}};
}

json run_report(const SolverConfig& cfg, const RunResult& res, const Dataset& data,
                const std::string& data_path, const std::string& trajectory_path, bool timing) {
  json config = config_json(cfg);
  config["dataset"] = dataset_json(data, data_path);

  std::vector<double> qa_medians;
  double qa_min_p5 = 1.0;
  for (const auto& r : res.records) {
    const bool in_qa = cfg.method != Method::VB && r.t >= 1 && r.t <= cfg.schedule.tau1;
    if (in_qa && r.median_overlap) {
      qa_medians.push_back(*r.median_overlap);
      qa_min_p5 = std::min(qa_min_p5, *r.p5_overlap);
    }
  }
  json overlap = nullptr;
  if (!qa_medians.empty()) {
    overlap = {{"qa_min_median", *std::min_element(qa_medians.begin(), qa_medians.end())},
               {"qa_mean_median", mean_std(qa_medians).mean},
               {"qa_min_p5", qa_min_p5}};
  }
  const auto& last = res.records.back();
  json end_of_qa = nullptr;
  if (res.end_of_qa) {
    end_of_qa = {{"t", res.end_of_qa->t},
                 {"success_rate", opt_json(res.end_of_qa->success_rate)},
                 {"mean_purity", res.end_of_qa->mean_purity},
                 {"median_purity", res.end_of_qa->median_purity},
                 {"effective_clusters", res.end_of_qa->effective_clusters}};
  }
  json metrics = {{"iterations_run", res.iterations_run},
                  {"converged", res.converged},
                  {"success_rate_convergence", opt_json(res.success_rate)},
                  {"success_rate_end_of_qa",
                   res.end_of_qa ? opt_json(res.end_of_qa->success_rate) : json(nullptr)},
                  {"bayes_optimal_rate", opt_json(ceiling_of(data))},
                  {"effective_clusters", res.effective_clusters},
                  {"final_objective", last.objective},
                  {"final_mean_purity", last.mean_purity},
                  {"final_median_purity", last.median_purity},
                  {"end_of_qa", end_of_qa},
                  {"overlap", overlap}};
  json report = {{"format", kReportFormat},
                 {"version", kReportVersion},
                 {"config", config},
                 {"metrics", metrics},
                 {"trajectory", trajectory_path}};
  if (timing) report["timing"] = {{"seconds", res.seconds}};
  return report;
}

std::string trajectory_csv(const RunResult& res, std::string_view comment) {
  std::ostringstream os;
  os << comment << '\n' << "t,beta,s,objective,median_purity,median_overlap,success_rate\n";
  for (const auto& r : res.records) {
    os << r.t << ',' << real(r.beta) << ',' << real(r.s) << ',' << real(r.objective) << ','
       << real(r.median_purity) << ',' << opt_real(r.median_overlap) << ','
       << opt_real(r.success_rate) << '\n';
  }
  return os.str();
}

std::string summarize_reports(const std::vector<json>& reports) {
  if (reports.empty()) throw ValidationError("report: no input reports");
  struct Columns {
    std::vector<double> conv, qa, best;
    int runs = 0;
  };
  std::map<std::string, Columns> groups;
  for (const auto& r : reports) {
    if (!r.is_object() || r.value("format", "") != kReportFormat) {
      throw ValidationError("report: input is not a qavb run report");
    }
    if (r.value("version", 0) != kReportVersion) throw ValidationError("report: unsupported report version");
    const auto& m = r.at("metrics");
    auto& g = groups[r.at("config").at("method").get<std::string>()];
    ++g.runs;
    auto take = [](const json& v, std::vector<double>& dst) {
      if (v.is_number()) dst.push_back(v.get<double>());
    };
    take(m.at("success_rate_convergence"), g.conv);
    take(m.at("success_rate_end_of_qa"), g.qa);
    take(m.at("bayes_optimal_rate"), g.best);
  }
  auto cell = [](const std::vector<double>& v) -> std::string {
    if (v.empty()) return "n/a";
    const auto ms = mean_std(v);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f ± %.4f", ms.mean, ms.std);
    return buf;
  };
  std::ostringstream os;
  os << "| method | runs | at convergence | at end of QA | best achievable |\n"
     << "|---|---|---|---|---|\n";
  for (const auto& [method, g] : groups) {
    os << "| " << method << " | " << g.runs << " | " << cell(g.conv) << " | " << cell(g.qa) << " | "
       << cell(g.best) << " |\n";
  }
  return os.str();
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  // Splice "--config FILE" into the argument list ahead of the command-line
  // flags; every option keeps its last value, so explicit flags win.
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    for (std::size_t i = 0; i < args.size(); ++i) {
      std::string path;
      std::size_t span = 0;
      if (args[i] == "--config") {
        if (i + 1 >= args.size()) {
          err << "--config needs a file argument\n";
          return kExitUsage;
        }
        path = args[i + 1];
        span = 2;
      } else if (args[i].rfind("--config=", 0) == 0) {
        path = args[i].substr(9);
        span = 1;
      } else {
        continue;
      }
      const auto extra = config_to_args(read_file(path));
      args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i + span));
      const std::size_t at = args.empty() ? 0 : 1;  // right after the subcommand name
      args.insert(args.begin() + static_cast<long>(at), extra.begin(), extra.end());
      break;
    }
  } catch (const ParseError& e) {
    print_error(err, "validation", e.what());
    return kExitValidation;
  } catch (const Error& e) {
    print_error(err, "runtime", e.what());
    return kExitRuntime;
  }

  CLI::App app{"Variational Bayes for Gaussian mixtures: VB, deterministic annealing (DAVB) and "
               "quantum annealing (QAVB)."};
  app.name("qavb");
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a synthetic Gaussian-mixture dataset");
  g->add_option("--dim", gen.spec.dim, "Dimension D")->capture_default_str();
  g->add_option("--components", gen.spec.components, "True component count C")->capture_default_str();
  g->add_option("--n", gen.spec.points, "Point count N")->capture_default_str();
  g->add_option("--seed", gen.spec.seed, "Generator seed")->capture_default_str();
  g->add_option("--box", gen.spec.box_half_width, "Half-width L of the mean box")->capture_default_str();
  g->add_option("--variance", gen.spec.variance, "Isotropic component variance")->capture_default_str();
  g->add_option("--min-separation", gen.spec.min_separation,
                "Minimum distance between means, in standard deviations")
      ->capture_default_str();
  g->add_option("--weights", gen.weights, "Mixture weights: equal or dirichlet")->capture_default_str();
  g->add_option("--out", gen.out, "Output path (QAVBDATA v1)")->required();

  RunArgs runa;
  auto* r = app.add_subcommand("run", "Run one solver and write a report and a trajectory");
  runa.solver.add_to(*r, true);
  r->add_option("--data", runa.data, "Dataset path")->required();
  r->add_option("--report", runa.report, "Report JSON path")->capture_default_str();
  r->add_option("--trajectory", runa.trajectory, "Trajectory CSV path")->capture_default_str();
  r->add_flag("--timing", runa.timing, "Include wall-clock time in the report");

  SweepArgs sw;
  auto* s = app.add_subcommand("sweep", "QAVB success rate over a K x tau1 grid");
  sw.solver.add_to(*s, true);
  s->add_option("--data", sw.data, "Dataset path")->required();
  s->add_option("--K-list", sw.k_list, "Comma-separated K values")->capture_default_str();
  s->add_option("--tau1-list", sw.tau1_list, "Comma-separated tau1 values")->capture_default_str();
  s->add_option("--tau2-gap", sw.tau2_gap, "tau2 = tau1 + gap")->capture_default_str();
  s->add_option("--p-cr", sw.p_cr, "Comma-separated target success rates")->capture_default_str();
  s->add_option("--threads", sw.threads, "Concurrent runs")->capture_default_str();
  s->add_option("--out", sw.out, "Output CSV path")->capture_default_str();

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare-davb", "DAVB restarts over a beta0 grid against one QAVB run");
  c->add_option("--data", cmp.data, "Dataset path")->required();
  c->add_option("--K", cmp.K, "Number of mixture components")->capture_default_str();
  c->add_option("--beta0-list", cmp.beta0_list, "Comma-separated DAVB beta0 values")->capture_default_str();
  c->add_option("--tau1", cmp.tau1, "DAVB tau1")->capture_default_str();
  c->add_option("--tau2", cmp.tau2, "DAVB tau2")->capture_default_str();
  c->add_option("--restarts", cmp.restarts, "Random restarts per beta0")->capture_default_str();
  c->add_option("--p-cr", cmp.p_cr, "Success rate counted as a hit")->capture_default_str();
  c->add_option("--max-extra", cmp.max_extra, "Iterations allowed after tau2")->capture_default_str();
  c->add_option("--conv-tol", cmp.conv_tol, "Convergence threshold")->capture_default_str();
  c->add_option("--seed", cmp.seed, "Restart r uses seed + r")->capture_default_str();
  c->add_option("--prior-alpha", cmp.prior.alpha, "Dirichlet concentration alpha_pr")->capture_default_str();
  c->add_option("--prior-gamma", cmp.prior.gamma, "Mean precision scaling gamma_pr")->capture_default_str();
  c->add_option("--prior-nu-offset", cmp.prior.nu_offset, "nu_pr = D + offset")->capture_default_str();
  c->add_option("--prior-cov-fraction", cmp.prior.covariance_fraction,
                "W_pr^-1 = fraction * dbar * I; <= 0 selects K^(-2/D)")
      ->capture_default_str();
  c->add_option("--prior-jitter", cmp.prior.mean_jitter, "Spread of m_pr around the sample mean")
      ->capture_default_str();
  c->add_option("--qavb-beta0", cmp.qavb.beta0, "QAVB reference beta0")->capture_default_str();
  c->add_option("--qavb-tau1", cmp.qavb.tau1, "QAVB reference tau1")->capture_default_str();
  c->add_option("--qavb-tau2", cmp.qavb.tau2, "QAVB reference tau2")->capture_default_str();
  c->add_option("--qavb-seed", cmp.qavb.seed, "QAVB reference seed")->capture_default_str();
  c->add_option("--threads", cmp.threads, "Concurrent runs")->capture_default_str();
  c->add_option("--out", cmp.out, "Output CSV path")->capture_default_str();

  std::vector<std::string> rep_inputs;
  std::string rep_out;
  auto* rp = app.add_subcommand("report", "Summarize run reports as a markdown table");
  rp->add_option("inputs", rep_inputs, "Run report JSON files")->required()->multi_option_policy(
      CLI::MultiOptionPolicy::TakeAll);
  rp->add_option("--out", rep_out, "Also write the table to this path");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\nRun with --help for more information.\n";
    return kExitUsage;
  }

  try {
    if (*g) return cmd_generate(gen, out);
    if (*r) return cmd_run(runa, out);
    if (*s) return cmd_sweep(sw, out);
    if (*c) return cmd_compare_davb(cmp, out);
    if (*rp) return cmd_report(rep_inputs, rep_out, out);
  } catch (const ValidationError& e) {
    print_error(err, "validation", e.what());
    return kExitValidation;
  } catch (const ParseError& e) {
    print_error(err, "validation", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    print_error(err, "runtime", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace qavb::cli

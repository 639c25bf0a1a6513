#include "qavb/engine.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <string>

#include "qavb/error.hpp"
#include "qavb/evaluation.hpp"
#include "qavb/random.hpp"

namespace qavb {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::VB: return "vb";
    case Method::DAVB: return "davb";
    case Method::QAVB: return "qavb";
  }
  return "?";
}

std::string_view to_string(InitMode m) {
  return m == InitMode::MaximallyMixed ? "maximally-mixed" : "seeded-random";
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Rethrows the active exception with "iteration t: " prepended, keeping its type.
[[noreturn]] void rethrow_at(int t) {
  const std::string where = "iteration " + std::to_string(t) + ": ";
  try {
    throw;
  } catch (const DomainError& e) {
    throw DomainError(where + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(where + e.what());
  } catch (const DegeneratePosteriorError& e) {
    throw DegeneratePosteriorError(where + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(where + e.what());
  } catch (const Error& e) {
    throw Error(where + e.what());
  }
}

struct StepDetail {
  ThetaPosterior theta;
  Eigen::MatrixXd energies;  // empty when skipped
  std::vector<HiddenUpdate> points;
};

StepDetail step_detailed(const HiddenPosterior& hidden, const Eigen::MatrixXd& data,
                         const PriorHyperParams& prior, double beta, double s,
                         const HermitianMatrix& hopping) {
  const auto stats = accumulate_stats(responsibilities(hidden), data);
  StepDetail out{update_theta(stats, prior, beta, 1.0 - s), {}, {}};
  const auto N = data.rows();
  const auto K = hopping.dim();
  out.points.reserve(static_cast<std::size_t>(N));
  if (beta * (1.0 - s) == 0.0) {
    const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(K);
    for (Eigen::Index i = 0; i < N; ++i) out.points.push_back(update_hidden_detailed(zeros, beta, s, hopping));
    return out;
  }
  // Components left at an improper prior (nu = D - 1) have infinite energy
  // and are excluded from the hidden update.
  const auto active = active_components(out.theta);
  out.energies = expected_energies_with_boundary(data, out.theta).values;
  for (Eigen::Index i = 0; i < N; ++i) {
    out.points.push_back(update_hidden_restricted(out.energies.row(i).transpose(), active, beta, s, hopping));
  }
  return out;
}

double hopping_energy(const DensityMatrix& rho, const HermitianMatrix& hopping) {
  return rho.matrix().cwiseProduct(hopping.matrix()).sum();
}

// sum_k r_k E_k with 0 * inf = 0; positive weight on an infinite energy is an error.
double classical_energy(const Eigen::VectorXd& r, const Eigen::VectorXd& energy) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < r.size(); ++k) {
    if (r[k] == 0.0) continue;
    if (!std::isfinite(energy[k])) {
      throw DegeneratePosteriorError("variational_objective: weight on a component at nu = D - 1");
    }
    acc += r[k] * energy[k];
  }
  return acc;
}

// F from the pieces a step already produced.
double objective_from_step(const StepDetail& d, const PriorHyperParams& prior, double beta,
                           double s, const HermitianMatrix& hopping) {
  double f = kl_theta_to_prior(d.theta, prior);
  double classical = 0.0;
  double quantum = 0.0;
  for (std::size_t i = 0; i < d.points.size(); ++i) {
    const auto& p = d.points[i].populations;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      if (p[k] > 0.0) f += p[k] * std::log(p[k]);
    }
    const auto& rho = d.points[i].rho.matrix();
    if (d.energies.size() != 0) {
      classical += classical_energy(rho.diagonal(), d.energies.row(static_cast<Eigen::Index>(i)).transpose());
    }
    if (s != 0.0) quantum += hopping_energy(d.points[i].rho, hopping);
  }
  return f + beta * (1.0 - s) * classical + beta * s * quantum;
}

}  // namespace

Method parse_method(std::string_view text) {
  const auto t = lower(text);
  if (t == "vb") return Method::VB;
  if (t == "davb") return Method::DAVB;
  if (t == "qavb") return Method::QAVB;
  throw ValidationError("unknown method '" + std::string(text) + "' (expected vb, davb or qavb)");
}

InitMode parse_init(std::string_view text) {
  const auto t = lower(text);
  if (t == "mixed" || t == "maximally-mixed") return InitMode::MaximallyMixed;
  if (t == "random" || t == "seeded-random") return InitMode::SeededRandom;
  throw ValidationError("unknown init '" + std::string(text) + "' (expected mixed or random)");
}

void SolverConfig::validate() const {
  if (K < 2) throw ValidationError("solver: K must be at least 2");
  if (!(conv_tol > 0.0)) throw ValidationError("solver: conv_tol must be positive");
  if (max_extra_iters < 0) throw ValidationError("solver: max_extra_iters must be nonnegative");
  if (method == Method::QAVB) schedule.validate();
  if (method == Method::DAVB) schedule.validate_davb();
  if (prior_override) {
    prior_override->validate();
    if (prior_override->K() != K) throw ValidationError("solver: prior override has wrong K");
  }
}

ScheduleValue controls_at(const SolverConfig& cfg, int t) {
  switch (cfg.method) {
    case Method::VB: return {1.0, 0.0};
    case Method::DAVB: return davb_schedule_at(t, cfg.schedule);
    case Method::QAVB: return schedule_at(t, cfg.schedule);
  }
  return {1.0, 0.0};
}

HiddenPosterior initial_hidden(int N, int K, InitMode mode, std::uint64_t seed) {
  if (N < 1 || K < 1) throw ValidationError("initial_hidden: N and K must be positive");
  HiddenPosterior hp;
  hp.states.reserve(N);
  if (mode == InitMode::MaximallyMixed) {
    hp.states.assign(N, DensityMatrix::maximally_mixed(K));
    return hp;
  }
  Rng rng(seed);
  const std::vector<double> ones(K, 1.0);
  for (int i = 0; i < N; ++i) {
    const auto p = rng.dirichlet(ones);
    hp.states.push_back(DensityMatrix::diagonal(Eigen::Map<const Eigen::VectorXd>(p.data(), K)));
  }
  return hp;
}

EngineState step(const EngineState& state, const Eigen::MatrixXd& data,
                 const PriorHyperParams& prior, double beta, double s,
                 const HermitianMatrix& hopping) {
  if (static_cast<Eigen::Index>(state.hidden.states.size()) != data.rows()) {
    throw ValidationError("step: hidden state count differs from point count");
  }
  auto d = step_detailed(state.hidden, data, prior, beta, s, hopping);
  EngineState next{{}, std::move(d.theta)};
  next.hidden.states.reserve(d.points.size());
  for (auto& p : d.points) next.hidden.states.push_back(std::move(p.rho));
  return next;
}

double variational_objective(const HiddenPosterior& hidden, const ThetaPosterior& theta,
                             const PriorHyperParams& prior, const Eigen::MatrixXd& data,
                             double beta, double s, const HermitianMatrix& hopping) {
  if (static_cast<Eigen::Index>(hidden.states.size()) != data.rows()) {
    throw ValidationError("variational_objective: hidden state count differs from point count");
  }
  double f = kl_theta_to_prior(theta, prior);
  for (const auto& rho : hidden.states) f += neg_entropy(rho);
  const double wc = beta * (1.0 - s);
  if (wc != 0.0) {
    const auto E = expected_energies_with_boundary(data, theta).values;
    const auto r = responsibilities(hidden);
    double c = 0.0;
    for (Eigen::Index i = 0; i < r.rows(); ++i) c += classical_energy(r.row(i).transpose(), E.row(i).transpose());
    f += wc * c;
  }
  if (s != 0.0) {
    double q = 0.0;
    for (const auto& rho : hidden.states) q += hopping_energy(rho, hopping);
    f += beta * s * q;
  }
  return f;
}

RunResult run(const SolverConfig& cfg, const Dataset& data, const RunObserver& observer) {
  cfg.validate();
  data.validate();
  const auto start = std::chrono::steady_clock::now();
  const int N = data.size();
  const int K = cfg.K;
  const Eigen::MatrixXd& y = data.points;

  RunResult res;
  res.prior = cfg.prior_override ? *cfg.prior_override : default_prior(y, K, cfg.prior);
  if (res.prior.D() != data.dim()) throw ValidationError("run: prior dimension differs from data");
  const auto hopping = build_hopping_hamiltonian(K);
  const bool has_truth = data.labels.has_value();
  const int k_true = has_truth ? std::max(data.components,
                                          *std::max_element(data.labels->begin(), data.labels->end()))
                               : 0;
  auto rate_of = [&](const std::vector<int>& labels) -> std::optional<double> {
    if (!has_truth) return std::nullopt;
    return success_rate({labels, *data.labels, K, k_true});
  };

  const int tau1 = cfg.method == Method::VB ? 0 : cfg.schedule.tau1;
  const int tau2 = cfg.method == Method::VB ? 0 : cfg.schedule.tau2;

  EngineState state{initial_hidden(N, K, cfg.init, cfg.seed), posterior_from_prior(res.prior)};
  std::vector<Eigen::MatrixXd> prev_ground;
  std::vector<double> purities(N), overlaps(N);

  for (int t = 0;; ++t) {
    const auto ctl = controls_at(cfg, t);
    StepDetail d;
    try {
      d = step_detailed(state.hidden, y, res.prior, ctl.beta, ctl.s, hopping);
    } catch (const Error&) {
      rethrow_at(t);
    }

    IterationRecord rec;
    rec.t = t;
    rec.beta = ctl.beta;
    rec.s = ctl.s;
    try {
      rec.objective = objective_from_step(d, res.prior, ctl.beta, ctl.s, hopping);
    } catch (const Error&) {
      rethrow_at(t);
    }
    for (int i = 0; i < N; ++i) {
      purities[i] = purity(d.points[i].rho);
      rec.max_change = std::max(rec.max_change, trace_distance(d.points[i].rho, state.hidden.states[i]));
    }
    double sum = 0.0;
    for (double p : purities) sum += p;
    rec.mean_purity = sum / N;
    rec.median_purity = quantile(purities, 0.5);
    if (!prev_ground.empty()) {
      for (int i = 0; i < N; ++i) overlaps[i] = subspace_overlap(prev_ground[i], d.points[i].ground_space);
      rec.median_overlap = quantile(overlaps, 0.5);
      rec.p5_overlap = quantile(overlaps, 0.05);
    }
    prev_ground.resize(N);
    for (int i = 0; i < N; ++i) prev_ground[i] = std::move(d.points[i].ground_space);

    state.theta = std::move(d.theta);
    state.hidden.states.clear();
    for (auto& p : d.points) state.hidden.states.push_back(std::move(p.rho));

    if (has_truth) rec.success_rate = rate_of(hard_labels(responsibilities(state.hidden)));

    if (cfg.method != Method::VB && t == tau1) {
      res.end_of_qa = PhaseSnapshot{t, rec.mean_purity, rec.median_purity,
                                    effective_cluster_count(state.theta), rec.success_rate};
    }
    res.records.push_back(rec);
    if (observer) observer(t, state);

    if (t >= tau2) {
      if (rec.max_change < cfg.conv_tol) {
        res.converged = true;
        break;
      }
      if (t - tau2 >= cfg.max_extra_iters) break;
    }
  }

  res.iterations_run = static_cast<int>(res.records.size());
  res.labels = hard_labels(responsibilities(state.hidden));
  res.effective_clusters = effective_cluster_count(state.theta);
  res.success_rate = rate_of(res.labels);
  res.final_state = std::move(state);
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace qavb

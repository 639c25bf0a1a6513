#pragma once

// VB, DAVB and QAVB solver loops. Every solver runs the same alternating
// update (theta first, then the hidden states from the fresh theta) and
// differs only in the (beta_t, s_t) controls it feeds that update.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qavb/annealing.hpp"
#include "qavb/datagen_io.hpp"
#include "qavb/gmm_model.hpp"
#include "qavb/quantum_hidden.hpp"

namespace qavb {

enum class Method { VB, DAVB, QAVB };
enum class InitMode { MaximallyMixed, SeededRandom };

std::string_view to_string(Method m);
std::string_view to_string(InitMode m);
/// Accepts "vb", "davb", "qavb" (any case); throws ValidationError otherwise.
Method parse_method(std::string_view text);
/// Accepts "mixed" / "maximally-mixed" and "random" / "seeded-random".
InitMode parse_init(std::string_view text);

struct SolverConfig {
  Method method = Method::QAVB;
  int K = 20;
  AnnealingSchedule schedule;  // ignored by VB
  int max_extra_iters = 200;   // iterations allowed after tau2
  double conv_tol = 1e-6;
  std::uint64_t seed = 0;
  InitMode init = InitMode::MaximallyMixed;
  PriorOptions prior;
  /// Replaces the data-derived default prior when set.
  std::optional<PriorHyperParams> prior_override;

  void validate() const;
};

/// (beta_t, s_t) the given method uses at iteration t. VB is pinned at (1, 0).
ScheduleValue controls_at(const SolverConfig& cfg, int t);

struct EngineState {
  HiddenPosterior hidden;
  ThetaPosterior theta;
};

/// rho_0 for N points: I/K, or diagonal Dirichlet(1) draws from `seed`.
HiddenPosterior initial_hidden(int N, int K, InitMode mode, std::uint64_t seed);

/// One alternating update at fixed (beta, s): theta from the responsibilities
/// of `state` with weight beta (1 - s), then every hidden state from the new
/// theta. Energies are not evaluated when beta (1 - s) == 0.
EngineState step(const EngineState& state, const Eigen::MatrixXd& data,
                 const PriorHyperParams& prior, double beta, double s,
                 const HermitianMatrix& hopping);

/// F = sum_i Tr[rho_i ln rho_i] + KL(q^theta || prior)
///     + beta (1 - s) sum_{i,k} r_i^k E_i[k] + beta s sum_i Tr[rho_i H_hop],
/// up to the constant ln Z(beta, s). Each half of `step` minimizes F over its
/// own factor, so F never increases across a step at fixed (beta, s).
double variational_objective(const HiddenPosterior& hidden, const ThetaPosterior& theta,
                             const PriorHyperParams& prior, const Eigen::MatrixXd& data,
                             double beta, double s, const HermitianMatrix& hopping);

struct IterationRecord {
  int t = 0;
  double beta = 0.0;
  double s = 0.0;
  double objective = 0.0;
  double mean_purity = 0.0;
  double median_purity = 0.0;
  /// Ground-space overlap between the effective Hamiltonians of iterations
  /// t-1 and t, across points. Absent at t = 0.
  std::optional<double> median_overlap;
  std::optional<double> p5_overlap;
  /// max_i trace distance between rho_i before and after the step.
  double max_change = 0.0;
  std::optional<double> success_rate;
};

/// State summary right after the iteration t = tau1.
struct PhaseSnapshot {
  int t = 0;
  double mean_purity = 0.0;
  double median_purity = 0.0;
  int effective_clusters = 0;
  std::optional<double> success_rate;
};

struct RunResult {
  int iterations_run = 0;
  bool converged = false;
  EngineState final_state;
  PriorHyperParams prior;
  std::vector<IterationRecord> records;
  std::vector<int> labels;  // argmax of the final responsibilities, 1-based
  int effective_clusters = 0;
  std::optional<double> success_rate;
  std::optional<PhaseSnapshot> end_of_qa;
  double seconds = 0.0;
};

/// Called after every iteration with its index and the new state.
using RunObserver = std::function<void(int t, const EngineState& state)>;

/// Iterates t = 0, 1, ... until t >= tau2 and either the largest per-point
/// trace distance falls below conv_tol or max_extra_iters iterations past
/// tau2 are spent (then converged = false). VB uses tau2 = 0. Success rates
/// are filled in when the dataset carries labels. Errors from the update are
/// rethrown with the iteration index prepended.
RunResult run(const SolverConfig& cfg, const Dataset& data, const RunObserver& observer = {});

}  // namespace qavb

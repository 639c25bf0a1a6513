#pragma once

// Conjugate Gaussian mixture: Dirichlet weights and per-component
// Normal-Wishart (mean, precision), with tempered hyperparameter updates.
//
// Conventions: data is N x D (one point per row), responsibilities are N x K.
// The Wishart is parameterized by scale W and degrees of freedom nu, so
// E[Lambda] = nu W.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace qavb {

/// Hyperparameters of q(pi) q(mu | Lambda) q(Lambda) or of the prior.
struct ConjugateParams {
  Eigen::VectorXd alpha;              // Dirichlet concentration, K
  std::vector<Eigen::VectorXd> mean;  // m^k, K vectors of length D
  Eigen::VectorXd gamma;              // precision scaling of the mean, K
  std::vector<Eigen::MatrixXd> W;     // Wishart scale, K SPD D x D
  Eigen::VectorXd nu;                 // Wishart degrees of freedom, K

  int K() const { return static_cast<int>(alpha.size()); }
  int D() const { return mean.empty() ? 0 : static_cast<int>(mean.front().size()); }
};

struct PriorHyperParams : ConjugateParams {
  /// Checks shapes, positivity, nu >= D - 1 and that every W is SPD.
  void validate() const;
};

struct ThetaPosterior : ConjugateParams {
  void validate() const;
};

/// q^theta equal to the prior.
ThetaPosterior posterior_from_prior(const PriorHyperParams& prior);

struct SufficientStats {
  Eigen::VectorXd counts;                 // N^k
  std::vector<Eigen::VectorXd> means;     // ybar^k (zero when N^k < kEmptyCount)
  std::vector<Eigen::MatrixXd> scatters;  // S^k, normalized by N^k (zero when empty)
};

/// N x K matrix of E_q[H_cl^{sigma_i = k | theta}] in nats.
struct ExpectedEnergies {
  Eigen::MatrixXd values;
};

inline constexpr double kEmptyCount = 1e-12;
inline constexpr double kNuGuard = 1e-8;

/// E[ln pi^k] = psi(alpha_k) - psi(sum_j alpha_j).
Eigen::VectorXd expected_log_pi(const Eigen::VectorXd& alpha);

/// E[ln |Lambda|] under Wishart(W, nu).
double expected_log_det_precision(const Eigen::MatrixXd& W, double nu);

/// Expected per-point, per-component classical energies. Requires
/// nu^k > D - 1 + kNuGuard for every k; throws DegeneratePosteriorError
/// otherwise rather than returning infinities.
ExpectedEnergies expected_energies(const Eigen::MatrixXd& data, const ThetaPosterior& post);

/// Components with nu^k > D - 1 + kNuGuard.
std::vector<bool> active_components(const ThetaPosterior& post);

/// expected_energies, except that components at the Wishart boundary get
/// +infinity (the limit of their energy as nu decreases to D - 1) instead of
/// raising. Throws DegeneratePosteriorError when no component is active.
ExpectedEnergies expected_energies_with_boundary(const Eigen::MatrixXd& data,
                                                 const ThetaPosterior& post);

/// Weighted counts, means and normalized scatters. Rows of `responsibilities`
/// must be nonnegative and sum to 1 within 1e-8. Sums run in point order.
SufficientStats accumulate_stats(const Eigen::MatrixXd& responsibilities,
                                 const Eigen::MatrixXd& data);

/// Tempered conjugate update with prior inverse temperature fixed to 1.
/// With w = beta * s_cl:
///   alpha = alpha_pr + w N,  gamma = gamma_pr + w N,  nu = nu_pr + w N,
///   m = (gamma_pr m_pr + w N ybar) / gamma,
///   W^-1 = W_pr^-1 + w N S + (gamma_pr w N / gamma)(ybar - m_pr)(ybar - m_pr)^T.
/// A component with w N^k == 0 is copied from the prior bit for bit.
ThetaPosterior update_theta(const SufficientStats& stats, const PriorHyperParams& prior,
                            double beta, double s_cl);

/// KL(q^theta || p_pr^theta) in closed form: Dirichlet part plus the
/// Normal-Wishart part of each component. Components equal to their prior
/// contribute exactly 0, and a component whose nu equals the prior's uses the
/// form in which both Wishart normalizers cancel. Otherwise, for an improper
/// Wishart prior (nu_pr <= D - 1), the prior's log-normalizer is omitted, so
/// the value is then defined only up to a prior-dependent constant.
double kl_theta_to_prior(const ThetaPosterior& post, const PriorHyperParams& prior);

struct PriorOptions {
  double alpha = 1.0;
  double gamma = 0.01;
  /// Degrees of freedom offset: nu_pr = D + nu_offset. Default gives D - 1.
  double nu_offset = -1.0;
  /// W_pr^-1 = covariance_fraction * dbar * I. Values <= 0 select K^(-2/D),
  /// the share of the data's spread one of K equal cells would cover.
  double covariance_fraction = 0.35;
  /// Per-component displacement of m_pr from the sample mean, as a fraction
  /// of sqrt(mean per-dimension variance). Zero gives a label-symmetric prior.
  double mean_jitter = 0.3;
  std::uint64_t jitter_seed = 0;
};

/// Data-scaled weakly informative prior: m_pr at the sample mean (plus the
/// optional seeded jitter), W_pr = I / (covariance_fraction * dbar) with dbar
/// the mean per-dimension sample variance, alpha_pr, gamma_pr from options,
/// nu_pr = D + nu_offset.
PriorHyperParams default_prior(const Eigen::MatrixXd& data, int K, const PriorOptions& opts = {});

}  // namespace qavb

#include "qavb/gmm_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "qavb/error.hpp"
#include "qavb/random.hpp"
#include "qavb/special_functions.hpp"

namespace qavb {

namespace {

void check_shapes(const ConjugateParams& p, const char* what) {
  const auto K = static_cast<std::size_t>(p.alpha.size());
  if (K < 1) throw ValidationError(std::string(what) + ": K must be at least 1");
  if (p.mean.size() != K || static_cast<std::size_t>(p.gamma.size()) != K ||
      p.W.size() != K || static_cast<std::size_t>(p.nu.size()) != K) {
    throw ValidationError(std::string(what) + ": per-component arrays disagree in length");
  }
  const auto D = p.mean.front().size();
  if (D < 1) throw ValidationError(std::string(what) + ": dimension must be at least 1");
  for (std::size_t k = 0; k < K; ++k) {
    std::ostringstream os;
    os << what << ": component " << k << ' ';
    if (p.mean[k].size() != D || p.W[k].rows() != D || p.W[k].cols() != D) {
      throw ValidationError(os.str() + "has inconsistent dimension");
    }
    if (!(p.alpha[k] > 0.0) || !(p.gamma[k] > 0.0)) {
      throw ValidationError(os.str() + "needs alpha > 0 and gamma > 0");
    }
    if (!p.mean[k].allFinite()) throw ValidationError(os.str() + "has a non-finite mean");
    Eigen::LLT<Eigen::MatrixXd> llt(p.W[k]);
    if (llt.info() != Eigen::Success || !p.W[k].allFinite()) {
      throw ValidationError(os.str() + "has a W that is not positive definite");
    }
  }
}

bool same_component(const ConjugateParams& a, const ConjugateParams& b, int k) {
  return a.gamma[k] == b.gamma[k] && a.nu[k] == b.nu[k] && a.mean[k] == b.mean[k] &&
         a.W[k] == b.W[k];
}

double log_det_spd(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  const Eigen::MatrixXd& L = llt.matrixLLT();
  return 2.0 * L.diagonal().array().log().sum();
}

// ln B(W, nu) of the Wishart density.
double wishart_log_norm(const Eigen::MatrixXd& W, double nu) {
  const int D = static_cast<int>(W.rows());
  return -0.5 * nu * log_det_spd(W) - 0.5 * nu * D * std::numbers::ln2 -
         log_multivariate_gamma(0.5 * nu, D);
}

}  // namespace

void PriorHyperParams::validate() const {
  check_shapes(*this, "prior");
  const double D = this->D();
  for (int k = 0; k < K(); ++k) {
    if (!(nu[k] >= D - 1.0)) throw ValidationError("prior: nu_pr must be at least D - 1");
  }
}

void ThetaPosterior::validate() const {
  check_shapes(*this, "posterior");
  const double D = this->D();
  for (int k = 0; k < K(); ++k) {
    if (!(nu[k] >= D - 1.0)) throw ValidationError("posterior: nu must be at least D - 1");
  }
}

ThetaPosterior posterior_from_prior(const PriorHyperParams& prior) {
  ThetaPosterior post;
  static_cast<ConjugateParams&>(post) = prior;
  return post;
}

Eigen::VectorXd expected_log_pi(const Eigen::VectorXd& alpha) {
  if (alpha.size() < 1) throw DomainError("expected_log_pi: empty concentration vector");
  for (Eigen::Index k = 0; k < alpha.size(); ++k) {
    if (!(alpha[k] > 0.0)) throw DomainError("expected_log_pi: alpha must be positive");
  }
  const double psi_total = digamma(alpha.sum());
  Eigen::VectorXd out(alpha.size());
  for (Eigen::Index k = 0; k < alpha.size(); ++k) out[k] = digamma(alpha[k]) - psi_total;
  return out;
}

double expected_log_det_precision(const Eigen::MatrixXd& W, double nu) {
  const auto D = W.rows();
  double acc = 0.0;
  for (Eigen::Index d = 1; d <= D; ++d) acc += digamma(0.5 * (nu - static_cast<double>(d - 1)));
  return acc + static_cast<double>(D) * std::numbers::ln2 + log_det_spd(W);
}

namespace {
ExpectedEnergies energies_for(const Eigen::MatrixXd& data, const ThetaPosterior& post,
                              const std::vector<bool>& active);
}  // namespace

ExpectedEnergies expected_energies(const Eigen::MatrixXd& data, const ThetaPosterior& post) {
  const int K = post.K();
  const int D = post.D();
  if (data.cols() != D) throw ValidationError("expected_energies: data dimension mismatch");
  for (int k = 0; k < K; ++k) {
    if (!(post.nu[k] > D - 1.0 + kNuGuard)) {
      std::ostringstream os;
      os << "expected_energies: component " << k << " has nu = " << post.nu[k]
         << " <= D - 1 + " << kNuGuard << "; its energies are not finite";
      throw DegeneratePosteriorError(os.str());
    }
  }
  return energies_for(data, post, std::vector<bool>(K, true));
}

std::vector<bool> active_components(const ThetaPosterior& post) {
  const int D = post.D();
  std::vector<bool> active(post.K());
  for (int k = 0; k < post.K(); ++k) active[k] = post.nu[k] > D - 1.0 + kNuGuard;
  return active;
}

ExpectedEnergies expected_energies_with_boundary(const Eigen::MatrixXd& data,
                                                 const ThetaPosterior& post) {
  if (data.cols() != post.D()) throw ValidationError("expected_energies: data dimension mismatch");
  const auto active = active_components(post);
  if (std::find(active.begin(), active.end(), true) == active.end()) {
    throw DegeneratePosteriorError("expected_energies: every component sits at nu <= D - 1");
  }
  return energies_for(data, post, active);
}

namespace {

ExpectedEnergies energies_for(const Eigen::MatrixXd& data, const ThetaPosterior& post,
                              const std::vector<bool>& active) {
  const int K = post.K();
  const int D = post.D();
  const Eigen::VectorXd elog_pi = expected_log_pi(post.alpha);
  const double log_2pi_term = 0.5 * D * std::log(2.0 * std::numbers::pi);

  ExpectedEnergies out{Eigen::MatrixXd(data.rows(), K)};
  for (int k = 0; k < K; ++k) {
    if (!active[k]) {
      out.values.col(k).setConstant(std::numeric_limits<double>::infinity());
      continue;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(post.W[k]);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("expected_energies: W of component " + std::to_string(k) +
                           " is not positive definite");
    }
    const Eigen::MatrixXd L = llt.matrixL();
    const double elog_det = expected_log_det_precision(post.W[k], post.nu[k]);
    const double constant =
        -elog_pi[k] - 0.5 * elog_det + log_2pi_term + 0.5 * D / post.gamma[k];
    const Eigen::MatrixXd diff = data.rowwise() - post.mean[k].transpose();
    const Eigen::VectorXd quad = (diff * L).rowwise().squaredNorm();
    out.values.col(k) = (constant + 0.5 * post.nu[k] * quad.array()).matrix();
  }
  return out;
}

}  // namespace

SufficientStats accumulate_stats(const Eigen::MatrixXd& responsibilities,
                                 const Eigen::MatrixXd& data) {
  const auto N = data.rows();
  const auto D = data.cols();
  const auto K = responsibilities.cols();
  if (responsibilities.rows() != N) {
    throw ValidationError("accumulate_stats: responsibilities and data disagree on N");
  }
  for (Eigen::Index i = 0; i < N; ++i) {
    const double row_sum = responsibilities.row(i).sum();
    if (std::abs(row_sum - 1.0) > 1e-8 || (responsibilities.row(i).array() < 0.0).any()) {
      std::ostringstream os;
      os << "accumulate_stats: responsibility row " << i << " is not a distribution (sum "
         << row_sum << ")";
      throw ValidationError(os.str());
    }
  }

  SufficientStats st;
  st.counts = Eigen::VectorXd::Zero(K);
  st.means.assign(K, Eigen::VectorXd::Zero(D));
  st.scatters.assign(K, Eigen::MatrixXd::Zero(D, D));
  for (Eigen::Index k = 0; k < K; ++k) {
    double n = 0.0;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(D);
    for (Eigen::Index i = 0; i < N; ++i) {
      const double r = responsibilities(i, k);
      n += r;
      sum += r * data.row(i).transpose();
    }
    st.counts[k] = n;
    if (n < kEmptyCount) continue;
    const Eigen::VectorXd mean = sum / n;
    Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(D, D);
    for (Eigen::Index i = 0; i < N; ++i) {
      const Eigen::VectorXd dev = data.row(i).transpose() - mean;
      scatter.noalias() += responsibilities(i, k) * dev * dev.transpose();
    }
    st.means[k] = mean;
    st.scatters[k] = scatter / n;
  }
  return st;
}

ThetaPosterior update_theta(const SufficientStats& stats, const PriorHyperParams& prior,
                            double beta, double s_cl) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("update_theta: beta must be > 0");
  if (!(s_cl >= 0.0 && s_cl <= 1.0)) throw DomainError("update_theta: s_cl must lie in [0, 1]");
  const int K = prior.K();
  if (stats.counts.size() != K) throw ValidationError("update_theta: stats/prior K mismatch");

  const double w = beta * s_cl;
  ThetaPosterior post = posterior_from_prior(prior);
  for (int k = 0; k < K; ++k) {
    const double wn = w * stats.counts[k];
    if (wn == 0.0) continue;
    post.alpha[k] = prior.alpha[k] + wn;
    post.gamma[k] = prior.gamma[k] + wn;
    post.nu[k] = prior.nu[k] + wn;
    post.mean[k] = (prior.gamma[k] * prior.mean[k] + wn * stats.means[k]) / post.gamma[k];
    const Eigen::VectorXd dev = stats.means[k] - prior.mean[k];
    const Eigen::MatrixXd w_inv = prior.W[k].inverse() + wn * stats.scatters[k] +
                                  (prior.gamma[k] * wn / post.gamma[k]) * dev * dev.transpose();
    Eigen::LLT<Eigen::MatrixXd> llt(w_inv);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("update_theta: W^-1 of component " + std::to_string(k) +
                           " lost positive definiteness");
    }
    post.W[k] = llt.solve(Eigen::MatrixXd::Identity(w_inv.rows(), w_inv.cols()));
    post.W[k] = 0.5 * (post.W[k] + post.W[k].transpose());
  }
  return post;
}

double kl_theta_to_prior(const ThetaPosterior& post, const PriorHyperParams& prior) {
  const int K = post.K();
  const int D = post.D();
  if (prior.K() != K || prior.D() != D) throw ValidationError("kl_theta_to_prior: shape mismatch");

  double kl = 0.0;
  if (post.alpha != prior.alpha) {
    const Eigen::VectorXd elog_pi = expected_log_pi(post.alpha);
    kl += std::lgamma(post.alpha.sum()) - std::lgamma(prior.alpha.sum());
    for (int k = 0; k < K; ++k) {
      kl += std::lgamma(prior.alpha[k]) - std::lgamma(post.alpha[k]) +
            (post.alpha[k] - prior.alpha[k]) * elog_pi[k];
    }
  }

  for (int k = 0; k < K; ++k) {
    if (same_component(post, prior, k)) continue;
    const double g_ratio = prior.gamma[k] / post.gamma[k];
    const Eigen::VectorXd dm = post.mean[k] - prior.mean[k];
    const double kl_mean =
        0.5 * (D * (g_ratio - 1.0 - std::log(g_ratio)) +
               prior.gamma[k] * post.nu[k] * dm.dot(post.W[k] * dm));

    const Eigen::MatrixXd prior_w_inv = prior.W[k].inverse();
    double kl_wishart = -0.5 * post.nu[k] * D + 0.5 * post.nu[k] * (prior_w_inv * post.W[k]).trace();
    if (post.nu[k] == prior.nu[k]) {
      // Equal degrees of freedom: the normalizers cancel, even at nu = D - 1.
      kl_wishart += -0.5 * post.nu[k] * (log_det_spd(post.W[k]) - log_det_spd(prior.W[k]));
    } else {
      if (!(post.nu[k] > D - 1.0)) {
        throw DegeneratePosteriorError("kl_theta_to_prior: component " + std::to_string(k) +
                                       " has nu <= D - 1");
      }
      const double elog_det = expected_log_det_precision(post.W[k], post.nu[k]);
      kl_wishart += wishart_log_norm(post.W[k], post.nu[k]) +
                    0.5 * (post.nu[k] - prior.nu[k]) * elog_det;
      if (prior.nu[k] > D - 1.0) kl_wishart -= wishart_log_norm(prior.W[k], prior.nu[k]);
    }
    kl += kl_mean + kl_wishart;
  }
  return kl;
}

PriorHyperParams default_prior(const Eigen::MatrixXd& data, int K, const PriorOptions& opts) {
  if (K < 1) throw DomainError("default_prior: K must be at least 1");
  const auto N = data.rows();
  const auto D = data.cols();
  if (N < 1 || D < 1) throw ValidationError("default_prior: empty dataset");

  const Eigen::VectorXd centre = data.colwise().mean().transpose();
  double dbar = 1.0;
  if (N > 1) {
    const Eigen::MatrixXd dev = data.rowwise() - centre.transpose();
    dbar = dev.array().square().sum() / (static_cast<double>(N - 1) * static_cast<double>(D));
  }
  if (!(dbar > 0.0)) dbar = 1.0;

  PriorHyperParams prior;
  prior.alpha = Eigen::VectorXd::Constant(K, opts.alpha);
  prior.gamma = Eigen::VectorXd::Constant(K, opts.gamma);
  prior.nu = Eigen::VectorXd::Constant(K, static_cast<double>(D) + opts.nu_offset);
  const double fraction = opts.covariance_fraction > 0.0
                              ? opts.covariance_fraction
                              : std::pow(static_cast<double>(K), -2.0 / static_cast<double>(D));
  prior.W.assign(K, Eigen::MatrixXd::Identity(D, D) / (fraction * dbar));
  prior.mean.assign(K, centre);
  if (opts.mean_jitter != 0.0) {
    Rng rng(opts.jitter_seed);
    const double scale = opts.mean_jitter * std::sqrt(dbar);
    for (int k = 0; k < K; ++k) {
      for (Eigen::Index d = 0; d < D; ++d) prior.mean[k][d] += scale * rng.normal();
    }
  }
  prior.validate();
  return prior;
}

}  // namespace qavb

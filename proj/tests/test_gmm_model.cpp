#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/special_functions/digamma.hpp>

#include "oracles.hpp"
#include "qavb/error.hpp"
#include "qavb/gmm_model.hpp"

using namespace qavb;

namespace {

PriorHyperParams proper_prior(int K, int D, double nu) {
  PriorHyperParams p;
  p.alpha = Eigen::VectorXd::Constant(K, 1.0);
  p.gamma = Eigen::VectorXd::Constant(K, 0.5);
  p.nu = Eigen::VectorXd::Constant(K, nu);
  p.mean.assign(K, Eigen::VectorXd::Zero(D));
  p.W.assign(K, Eigen::MatrixXd::Identity(D, D));
  return p;
}

Eigen::MatrixXd random_points(std::mt19937_64& gen, int N, int D) {
  std::normal_distribution<double> nd(0.0, 2.0);
  Eigen::MatrixXd y(N, D);
  for (int i = 0; i < N; ++i)
    for (int d = 0; d < D; ++d) y(i, d) = nd(gen);
  return y;
}

Eigen::MatrixXd random_resp(std::mt19937_64& gen, int N, int K) {
  std::gamma_distribution<double> g(1.0, 1.0);
  Eigen::MatrixXd r(N, K);
  for (int i = 0; i < N; ++i) {
    for (int k = 0; k < K; ++k) r(i, k) = g(gen);
    r.row(i) /= r.row(i).sum();
  }
  return r;
}

}  // namespace

TEST_CASE("expected log weights and log-determinant match digamma identities") {
  Eigen::VectorXd a(3);
  a << 0.3, 2.0, 7.5;
  const auto e = expected_log_pi(a);
  for (int k = 0; k < 3; ++k) {
    CHECK(e[k] == doctest::Approx(boost::math::digamma(a[k]) - boost::math::digamma(a.sum())).epsilon(1e-12));
  }
  // D = 1: lambda ~ Gamma(nu/2, scale 2W).
  Eigen::MatrixXd w(1, 1);
  w << 0.7;
  CHECK(expected_log_det_precision(w, 3.3) ==
        doctest::Approx(boost::math::digamma(1.65) + std::log(1.4)).epsilon(1e-12));
}

TEST_CASE("expected energies match a Monte-Carlo estimate in one dimension") {
  ThetaPosterior q;
  q.alpha = Eigen::Vector2d(3.0, 5.0);
  q.gamma = Eigen::Vector2d(4.0, 2.0);
  q.nu = Eigen::Vector2d(6.0, 3.5);
  q.mean = {Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 2.0)};
  q.W = {Eigen::MatrixXd::Constant(1, 1, 0.3), Eigen::MatrixXd::Constant(1, 1, 1.2)};
  Eigen::MatrixXd y(2, 1);
  y << 0.5, -2.0;
  const auto E = expected_energies(y, q).values;

  std::mt19937_64 gen(3);
  const int S = 400000;
  for (int k = 0; k < 2; ++k) {
    std::gamma_distribution<double> ga(q.alpha[k], 1.0), gb(q.alpha[1 - k], 1.0);
    std::gamma_distribution<double> lam(q.nu[k] / 2.0, 2.0 * q.W[k](0, 0));
    std::normal_distribution<double> z(0.0, 1.0);
    for (int i = 0; i < 2; ++i) {
      double sum = 0.0, sum2 = 0.0;
      for (int s = 0; s < S; ++s) {
        const double xa = ga(gen), xb = gb(gen);
        const double pi = xa / (xa + xb);
        const double l = lam(gen);
        const double mu = q.mean[k][0] + z(gen) / std::sqrt(q.gamma[k] * l);
        const double h = -std::log(pi) - 0.5 * std::log(l) + 0.5 * std::log(2 * std::numbers::pi) +
                         0.5 * l * (y(i, 0) - mu) * (y(i, 0) - mu);
        sum += h;
        sum2 += h * h;
      }
      const double mean = sum / S;
      const double se = std::sqrt((sum2 / S - mean * mean) / S);
      CHECK(std::abs(E(i, k) - mean) < 5.0 * se);
    }
  }
}

TEST_CASE("energies at the Wishart boundary: strict form throws, boundary form gives infinity") {
  auto prior = proper_prior(3, 2, 1.0);  // nu = D - 1
  const auto post = posterior_from_prior(prior);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(4, 2);
  CHECK_THROWS_AS(expected_energies(y, post), DegeneratePosteriorError);
  CHECK_THROWS_AS(expected_energies_with_boundary(y, post), DegeneratePosteriorError);

  auto mixed = post;
  mixed.nu[1] = 5.0;
  const auto active = active_components(mixed);
  CHECK(active == std::vector<bool>{false, true, false});
  const auto E = expected_energies_with_boundary(y, mixed).values;
  CHECK(std::isinf(E(0, 0)));
  CHECK(std::isfinite(E(0, 1)));
  CHECK(std::isinf(E(3, 2)));
}

TEST_CASE("tempered theta update matches the textbook conjugate update") {
  std::mt19937_64 gen(17);
  const int N = 30, D = 2, K = 3;
  const auto y = random_points(gen, N, D);
  const auto r = random_resp(gen, N, K);
  auto prior = proper_prior(K, D, 3.0);
  prior.mean[1] << 1.0, -1.0;
  for (double w : {1.0, 0.37, 12.0}) {
    const auto post = update_theta(accumulate_stats(r, y), prior, w, 1.0);
    oracle::NW p0{prior.alpha, prior.gamma, prior.nu, prior.mean, prior.W};
    const auto ref = oracle::tempered_m_step(r, y, p0, w);
    for (int k = 0; k < K; ++k) {
      CHECK(post.alpha[k] == doctest::Approx(ref.alpha[k]).epsilon(1e-12));
      CHECK(post.gamma[k] == doctest::Approx(ref.kappa[k]).epsilon(1e-12));
      CHECK(post.nu[k] == doctest::Approx(ref.nu[k]).epsilon(1e-12));
      CHECK((post.mean[k] - ref.m[k]).norm() <= 1e-12 * (1.0 + ref.m[k].norm()));
      CHECK((post.W[k] - ref.W[k]).norm() <= 1e-12 * ref.W[k].norm());
    }
  }
}

TEST_CASE("theta update with zero weight copies the prior exactly") {
  std::mt19937_64 gen(2);
  const auto y = random_points(gen, 10, 2);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(10, 3);
  r.col(0).setOnes();
  const auto prior = proper_prior(3, 2, 1.0);
  const auto post = update_theta(accumulate_stats(r, y), prior, 2.0, 1.0);
  CHECK(post.nu[1] == prior.nu[1]);
  CHECK(post.W[2] == prior.W[2]);
  CHECK(post.nu[0] == prior.nu[0] + 20.0);
  const auto frozen = update_theta(accumulate_stats(r, y), prior, 30.0, 0.0);
  CHECK(frozen.alpha == prior.alpha);
  CHECK_THROWS_AS(update_theta(accumulate_stats(r, y), prior, 0.0, 1.0), DomainError);
}

TEST_CASE("accumulate_stats rejects rows that are not distributions") {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(2, 1);
  Eigen::MatrixXd r(2, 2);
  r << 0.5, 0.5, 0.7, 0.4;
  CHECK_THROWS_AS(accumulate_stats(r, y), ValidationError);
  r << 0.5, 0.5, 1.2, -0.2;
  CHECK_THROWS_AS(accumulate_stats(r, y), ValidationError);
}

TEST_CASE("KL divergence matches a Monte-Carlo estimate in one dimension") {
  auto prior = proper_prior(2, 1, 2.5);
  prior.W[0](0, 0) = 0.8;
  ThetaPosterior q = posterior_from_prior(prior);
  q.alpha << 4.0, 2.5;
  q.gamma << 3.0, 1.5;
  q.nu << 7.0, 4.0;
  q.mean[0][0] = 0.6;
  q.mean[1][0] = -0.4;
  q.W[0](0, 0) = 0.3;
  q.W[1](0, 0) = 0.5;
  const double kl = kl_theta_to_prior(q, prior);

  // ln of the Dirichlet and the 1-D Normal-Gamma densities.
  auto log_dir = [](const Eigen::VectorXd& a, double p0) {
    return std::lgamma(a.sum()) - std::lgamma(a[0]) - std::lgamma(a[1]) + (a[0] - 1) * std::log(p0) +
           (a[1] - 1) * std::log(1 - p0);
  };
  auto log_nw = [](double mu, double l, double m, double g, double W, double nu) {
    return 0.5 * std::log(g * l / (2 * std::numbers::pi)) - 0.5 * g * l * (mu - m) * (mu - m) +
           (nu / 2 - 1) * std::log(l) - l / (2 * W) - (nu / 2) * std::log(2 * W) - std::lgamma(nu / 2);
  };
  std::mt19937_64 gen(8);
  std::normal_distribution<double> z(0.0, 1.0);
  std::gamma_distribution<double> ga(q.alpha[0], 1.0), gb(q.alpha[1], 1.0);
  std::vector<std::gamma_distribution<double>> lam;
  for (int k = 0; k < 2; ++k) lam.emplace_back(q.nu[k] / 2.0, 2.0 * q.W[k](0, 0));
  const int S = 400000;
  double sum = 0.0, sum2 = 0.0;
  for (int s = 0; s < S; ++s) {
    const double xa = ga(gen), xb = gb(gen);
    const double p0 = xa / (xa + xb);
    double v = log_dir(q.alpha, p0) - log_dir(prior.alpha, p0);
    for (int k = 0; k < 2; ++k) {
      const double l = lam[k](gen);
      const double mu = q.mean[k][0] + z(gen) / std::sqrt(q.gamma[k] * l);
      v += log_nw(mu, l, q.mean[k][0], q.gamma[k], q.W[k](0, 0), q.nu[k]) -
           log_nw(mu, l, prior.mean[k][0], prior.gamma[k], prior.W[k](0, 0), prior.nu[k]);
    }
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / S;
  const double se = std::sqrt((sum2 / S - mean * mean) / S);
  CHECK(std::abs(kl - mean) < 5.0 * se);
  CHECK(kl > 0.0);
}

TEST_CASE("KL is zero at the prior and uses the cancelled form at equal nu") {
  auto prior = proper_prior(2, 2, 1.0);
  CHECK(kl_theta_to_prior(posterior_from_prior(prior), prior) == 0.0);

  // Equal nu: only W differs; the normalizers cancel, even for an improper prior.
  auto q = posterior_from_prior(prior);
  q.W[0] = 0.5 * Eigen::MatrixXd::Identity(2, 2);
  const double nu = 1.0;
  const double expect = -0.5 * nu * std::log(0.25) - nu * 2 / 2.0 + 0.5 * nu * 1.0;
  CHECK(kl_theta_to_prior(q, prior) == doctest::Approx(expect).epsilon(1e-14));

  auto proper = proper_prior(2, 2, 4.0);
  auto q2 = posterior_from_prior(proper);
  q2.W[1] = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  // Wishart KL with equal nu: (nu/2)(Tr(W0^-1 W) - D - ln|W0^-1 W|).
  CHECK(kl_theta_to_prior(q2, proper) == doctest::Approx(2.0 * (4.0 - 2.0 - std::log(4.0))).epsilon(1e-14));
}

TEST_CASE("default prior is data scaled, jittered reproducibly and validated") {
  std::mt19937_64 gen(4);
  const auto y = random_points(gen, 50, 2);
  PriorOptions o;
  o.mean_jitter = 0.0;
  o.covariance_fraction = 0.0;
  const auto p = default_prior(y, 4, o);
  const Eigen::VectorXd c = y.colwise().mean().transpose();
  const double dbar = (y.rowwise() - c.transpose()).array().square().sum() / (49.0 * 2.0);
  CHECK((p.mean[3] - c).norm() < 1e-14);
  CHECK(p.nu[0] == 1.0);
  CHECK(p.W[0](0, 0) == doctest::Approx(1.0 / (0.25 * dbar)).epsilon(1e-14));
  o.covariance_fraction = 0.5;
  CHECK(default_prior(y, 4, o).W[0](0, 0) == doctest::Approx(1.0 / (0.5 * dbar)).epsilon(1e-14));

  o.mean_jitter = 0.1;
  o.jitter_seed = 9;
  const auto a = default_prior(y, 4, o);
  const auto b = default_prior(y, 4, o);
  CHECK(a.mean[2] == b.mean[2]);
  CHECK(a.mean[0] != a.mean[1]);
  o.jitter_seed = 10;
  CHECK(default_prior(y, 4, o).mean[0] != a.mean[0]);

  o.nu_offset = -1.5;
  CHECK_THROWS_AS(default_prior(y, 4, o), ValidationError);
  CHECK_THROWS_AS(default_prior(y, 0, {}), DomainError);
}

TEST_CASE("expected log weights on small closed forms") {
  const auto a = expected_log_pi(Eigen::Vector2d(1, 1));
  CHECK(a[0] == doctest::Approx(-1.0).epsilon(1e-14));
  const auto b = expected_log_pi(Eigen::Vector2d(2, 1));
  CHECK(b[0] == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(b[1] == doctest::Approx(-1.5).epsilon(1e-14));
}

TEST_CASE("energies of identical components coincide and the quadratic term vanishes at the mean") {
  auto q = posterior_from_prior(proper_prior(2, 2, 5.0));
  Eigen::MatrixXd y(3, 2);
  y << 0, 0, 1, 2, -3, 1;
  const auto E = expected_energies(y, q).values;
  CHECK(E.col(0) == E.col(1));
  // Shifting nu changes only the quadratic term, which is 0 at y = m.
  auto q2 = q;
  q2.W[0] *= 5.0 / 7.0;
  q2.nu[0] = 7.0;
  const auto E2 = expected_energies(y, q2).values;
  const double dlogdet = expected_log_det_precision(q2.W[0], 7.0) - expected_log_det_precision(q.W[0], 5.0);
  CHECK(E2(0, 0) - E(0, 0) == doctest::Approx(-0.5 * dlogdet).epsilon(1e-12));
}

TEST_CASE("sufficient statistics on hard and uniform assignments") {
  Eigen::MatrixXd y(4, 1);
  y << 1, 2, 3, 10;
  Eigen::MatrixXd hard = Eigen::MatrixXd::Zero(4, 2);
  hard(0, 0) = hard(1, 0) = hard(2, 0) = hard(3, 1) = 1.0;
  const auto st = accumulate_stats(hard, y);
  CHECK(st.counts == Eigen::Vector2d(3, 1));
  CHECK(st.means[0][0] == doctest::Approx(2.0));
  CHECK(st.scatters[1](0, 0) == 0.0);
  const auto uni = accumulate_stats(Eigen::MatrixXd::Constant(4, 2, 0.5), y);
  CHECK(uni.counts == Eigen::Vector2d(2, 2));
  CHECK(uni.counts.sum() == doctest::Approx(4.0));
}

TEST_CASE("tempered update substitutes beta times the count") {
  Eigen::MatrixXd y(3, 1);
  y << 1, 2, 3;
  const auto prior = proper_prior(2, 1, 0.0);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(3, 2);
  r.col(0).setOnes();
  const auto post = update_theta(accumulate_stats(r, y), prior, 2.0, 1.0);
  CHECK(post.alpha[0] == prior.alpha[0] + 6.0);
  CHECK(post.nu[0] == prior.nu[0] + 6.0);
  const auto vb = update_theta(accumulate_stats(r, y), prior, 1.0, 1.0);
  CHECK(vb.alpha[0] == prior.alpha[0] + 3.0);
}

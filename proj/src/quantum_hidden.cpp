#include "qavb/quantum_hidden.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qavb/error.hpp"

namespace qavb {

DensityCheck check_density_matrix(const Eigen::MatrixXd& m) {
  DensityCheck c;
  if (m.rows() < 1 || m.rows() != m.cols()) {
    c.finite = false;
    return c;
  }
  c.finite = m.allFinite();
  if (!c.finite) return c;
  c.asymmetry = (m - m.transpose()).cwiseAbs().maxCoeff();
  c.trace_error = std::abs(m.trace() - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()),
                                                    Eigen::EigenvaluesOnly);
  c.min_eigenvalue = es.eigenvalues().minCoeff();
  return c;
}

DensityMatrix::DensityMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
  const auto c = check_density_matrix(m_);
  if (!c.ok()) {
    std::ostringstream os;
    os << "DensityMatrix: invariants violated (asymmetry " << c.asymmetry << ", trace error "
       << c.trace_error << ", min eigenvalue " << c.min_eigenvalue << ")";
    throw ValidationError(os.str());
  }
}

DensityMatrix DensityMatrix::unchecked(Eigen::MatrixXd m) {
  DensityMatrix d;
  d.m_ = std::move(m);
  return d;
}

DensityMatrix DensityMatrix::maximally_mixed(Eigen::Index dim) {
  if (dim < 1) throw DomainError("maximally_mixed: dimension must be positive");
  return unchecked(Eigen::MatrixXd::Identity(dim, dim) / static_cast<double>(dim));
}

DensityMatrix DensityMatrix::diagonal(const Eigen::VectorXd& p) {
  if (p.size() < 1 || (p.array() < 0.0).any() || std::abs(p.sum() - 1.0) > kDensityTol) {
    throw ValidationError("DensityMatrix::diagonal: not a probability vector");
  }
  return unchecked(Eigen::MatrixXd(p.asDiagonal()));
}

bool DensityMatrix::is_diagonal() const {
  for (Eigen::Index j = 0; j < m_.cols(); ++j) {
    for (Eigen::Index i = 0; i < m_.rows(); ++i) {
      if (i != j && m_(i, j) != 0.0) return false;
    }
  }
  return true;
}

HermitianMatrix build_hopping_hamiltonian(int K) {
  if (K < 2) throw DomainError("build_hopping_hamiltonian: K must be at least 2");
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(K, K);
  for (int k = 0; k < K; ++k) {
    const int next = (k + 1) % K;
    h(k, next) += 1.0;
    h(next, k) += 1.0;
  }
  return HermitianMatrix(std::move(h));
}

HermitianMatrix effective_hamiltonian(const Eigen::VectorXd& energy_row, double beta, double s,
                                      const HermitianMatrix& hopping) {
  Eigen::MatrixXd h = (beta * s) * hopping.matrix();
  if (s != 1.0) h.diagonal() += (beta * (1.0 - s)) * energy_row;
  return HermitianMatrix::symmetrized(h);
}

HiddenUpdate update_hidden_detailed(const Eigen::VectorXd& energy_row, double beta, double s,
                                    const HermitianMatrix& hopping) {
  const Eigen::Index K = hopping.dim();
  if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("update_hidden: beta must be > 0");
  if (!(s >= 0.0 && s <= 1.0)) throw DomainError("update_hidden: s must lie in [0, 1]");
  if (s < 1.0) {
    if (energy_row.size() != K) throw ValidationError("update_hidden: energy row has wrong length");
    if (!energy_row.allFinite()) {
      throw NumericalError("update_hidden: non-finite expected energy with s < 1");
    }
  }

  if (s == 0.0) {
    // Diagonal case: populations are a tempered softmax over labels.
    const Eigen::VectorXd scaled = -beta * energy_row;
    const double top = scaled.maxCoeff();
    Eigen::VectorXd p = (scaled.array() - top).exp().matrix();
    p /= p.sum();
    HiddenUpdate out{DensityMatrix::unchecked(Eigen::MatrixXd(p.asDiagonal())), p,
                     Eigen::MatrixXd::Identity(K, K), {}};
    const double tol = 1e-10 * std::max(1.0, std::abs(top));
    Eigen::Index count = 0;
    for (Eigen::Index k = 0; k < K; ++k) count += (top - scaled[k] <= tol);
    out.ground_space = Eigen::MatrixXd::Zero(K, count);
    for (Eigen::Index k = 0, c = 0; k < K; ++k) {
      if (top - scaled[k] <= tol) out.ground_space(k, c++) = 1.0;
    }
    return out;
  }

  const auto dec = eigh(effective_hamiltonian(energy_row, beta, s, hopping));
  const double lowest = dec.eigenvalues[0];
  Eigen::VectorXd p = (-(dec.eigenvalues.array() - lowest)).exp().matrix();
  p /= p.sum();
  Eigen::MatrixXd rho = dec.eigenvectors * p.asDiagonal() * dec.eigenvectors.transpose();
  rho = 0.5 * (rho + rho.transpose()).eval();

  const double tol = 1e-10 * std::max(1.0, std::abs(lowest));
  Eigen::Index degeneracy = 1;
  while (degeneracy < K && dec.eigenvalues[degeneracy] - lowest <= tol) ++degeneracy;
  return HiddenUpdate{DensityMatrix::unchecked(std::move(rho)), p, dec.eigenvectors,
                      dec.eigenvectors.leftCols(degeneracy)};
}

HiddenUpdate update_hidden_restricted(const Eigen::VectorXd& energy_row,
                                      const std::vector<bool>& active, double beta, double s,
                                      const HermitianMatrix& hopping) {
  const Eigen::Index K = hopping.dim();
  if (static_cast<Eigen::Index>(active.size()) != K || energy_row.size() != K) {
    throw ValidationError("update_hidden_restricted: mask or energy row has wrong length");
  }
  if (!(s < 1.0)) throw DomainError("update_hidden_restricted: requires s < 1");
  std::vector<Eigen::Index> on;
  for (Eigen::Index k = 0; k < K; ++k) {
    if (active[k]) on.push_back(k);
  }
  if (on.empty()) throw ValidationError("update_hidden_restricted: no active label");
  if (static_cast<Eigen::Index>(on.size()) == K) {
    return update_hidden_detailed(energy_row, beta, s, hopping);
  }

  const auto M = static_cast<Eigen::Index>(on.size());
  Eigen::VectorXd sub_energy(M);
  Eigen::MatrixXd sub_hop(M, M);
  for (Eigen::Index a = 0; a < M; ++a) {
    sub_energy[a] = energy_row[on[a]];
    for (Eigen::Index b = 0; b < M; ++b) sub_hop(a, b) = hopping.matrix()(on[a], on[b]);
  }
  const auto sub = update_hidden_detailed(sub_energy, beta, s, HermitianMatrix::symmetrized(sub_hop));

  Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(K, K);
  Eigen::VectorXd populations = Eigen::VectorXd::Zero(K);
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(K, K);
  Eigen::MatrixXd ground = Eigen::MatrixXd::Zero(K, sub.ground_space.cols());
  for (Eigen::Index a = 0; a < M; ++a) {
    for (Eigen::Index b = 0; b < M; ++b) rho(on[a], on[b]) = sub.rho.matrix()(a, b);
    basis.row(on[a]).head(M) = sub.basis.row(a);
    ground.row(on[a]) = sub.ground_space.row(a);
  }
  populations.head(M) = sub.populations;
  Eigen::Index col = M;
  for (Eigen::Index k = 0; k < K; ++k) {
    if (!active[k]) basis(k, col++) = 1.0;
  }
  return HiddenUpdate{DensityMatrix::unchecked(std::move(rho)), populations, basis, ground};
}

DensityMatrix update_hidden_one(const Eigen::VectorXd& energy_row, double beta, double s,
                                const HermitianMatrix& hopping) {
  return update_hidden_detailed(energy_row, beta, s, hopping).rho;
}

Eigen::MatrixXd responsibilities(const HiddenPosterior& hp) {
  if (hp.states.empty()) return {};
  const auto K = hp.states.front().dim();
  Eigen::MatrixXd r(static_cast<Eigen::Index>(hp.states.size()), K);
  for (std::size_t i = 0; i < hp.states.size(); ++i) {
    const auto& m = hp.states[i].matrix();
    if (m.rows() != K) throw ValidationError("responsibilities: states disagree on K");
    Eigen::VectorXd d = m.diagonal().cwiseMax(0.0).cwiseMin(1.0);
    r.row(static_cast<Eigen::Index>(i)) = (d / d.sum()).transpose();
  }
  return r;
}

double purity(const DensityMatrix& rho) { return rho.matrix().squaredNorm(); }

double neg_entropy(const DensityMatrix& rho) {
  Eigen::VectorXd lambda;
  if (rho.is_diagonal()) {
    lambda = rho.matrix().diagonal();
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rho.matrix(), Eigen::EigenvaluesOnly);
    lambda = es.eigenvalues();
  }
  double acc = 0.0;
  for (Eigen::Index k = 0; k < lambda.size(); ++k) {
    if (lambda[k] > 0.0) acc += lambda[k] * std::log(lambda[k]);
  }
  return acc;
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) throw ValidationError("trace_distance: dimension mismatch");
  const Eigen::MatrixXd diff = a.matrix() - b.matrix();
  if (a.is_diagonal() && b.is_diagonal()) return 0.5 * diff.diagonal().cwiseAbs().sum();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (diff + diff.transpose()),
                                                    Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

namespace {

void check_bipartite(const Eigen::MatrixXcd& rho_ab, int dim_a, int dim_b) {
  if (dim_a < 1 || dim_b < 1 || rho_ab.rows() != rho_ab.cols() ||
      rho_ab.rows() != static_cast<Eigen::Index>(dim_a) * dim_b) {
    std::ostringstream os;
    os << "partial trace: a " << rho_ab.rows() << "x" << rho_ab.cols()
       << " matrix does not act on C^" << dim_a << " (x) C^" << dim_b;
    throw ValidationError(os.str());
  }
}

}  // namespace

Eigen::MatrixXcd partial_trace_b(const Eigen::MatrixXcd& rho_ab, int dim_a, int dim_b) {
  check_bipartite(rho_ab, dim_a, dim_b);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim_a, dim_a);
  for (int i = 0; i < dim_a; ++i) {
    for (int j = 0; j < dim_a; ++j) {
      for (int mu = 0; mu < dim_b; ++mu) out(i, j) += rho_ab(i * dim_b + mu, j * dim_b + mu);
    }
  }
  return out;
}

Eigen::MatrixXcd kraus_partial_trace(const Eigen::MatrixXcd& rho_ab, int dim_a, int dim_b) {
  check_bipartite(rho_ab, dim_a, dim_b);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim_a, dim_a);
  for (int alpha = 0; alpha < dim_b; ++alpha) {
    Eigen::MatrixXcd kraus = Eigen::MatrixXcd::Zero(dim_a, dim_a * dim_b);
    for (int i = 0; i < dim_a; ++i) kraus(i, i * dim_b + alpha) = 1.0;
    out += kraus * rho_ab * kraus.adjoint();
  }
  return out;
}

bool check_partial_trace_kraus(const Eigen::MatrixXcd& rho_ab, int dim_a, int dim_b) {
  check_bipartite(rho_ab, dim_a, dim_b);
  const double asym = (rho_ab - rho_ab.adjoint()).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho_ab, Eigen::EigenvaluesOnly);
  if (asym > kDensityTol || std::abs(rho_ab.trace() - 1.0) > kDensityTol ||
      es.eigenvalues().minCoeff() < -kDensityTol) {
    throw ValidationError("check_partial_trace_kraus: input is not a density matrix");
  }
  const Eigen::MatrixXcd direct = partial_trace_b(rho_ab, dim_a, dim_b);
  const Eigen::MatrixXcd via_kraus = kraus_partial_trace(rho_ab, dim_a, dim_b);
  return (direct - via_kraus).cwiseAbs().maxCoeff() <= 1e-10 &&
         std::abs(via_kraus.trace() - 1.0) <= 1e-10;
}

bool exponential_is_positive(const HermitianMatrix& h) {
  const auto e = expm_hermitian(h);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e.matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() > 0.0;
}

}  // namespace qavb

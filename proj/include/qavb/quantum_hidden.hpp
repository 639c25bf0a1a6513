#pragma once

// Density-matrix hidden states. Each data point carries a K x K density
// matrix whose diagonal holds its soft cluster responsibilities and whose
// off-diagonals are coherences created by the label-hopping driver.

#include <vector>

#include <Eigen/Dense>

#include "qavb/hermitian_linalg.hpp"

namespace qavb {

inline constexpr double kDensityTol = 1e-10;

/// Result of checking the density-matrix invariants on a raw matrix.
struct DensityCheck {
  double asymmetry = 0.0;       // max |m_ij - m_ji|
  double trace_error = 0.0;     // |Tr m - 1|
  double min_eigenvalue = 0.0;
  bool finite = true;

  bool ok(double tol = kDensityTol) const {
    return finite && asymmetry <= tol && trace_error <= tol && min_eigenvalue >= -tol;
  }
};

DensityCheck check_density_matrix(const Eigen::MatrixXd& m);

class DensityMatrix {
 public:
  /// Validates Hermiticity, unit trace and positivity within kDensityTol.
  explicit DensityMatrix(Eigen::MatrixXd m);

  /// Wraps a matrix that is a density matrix by construction.
  static DensityMatrix unchecked(Eigen::MatrixXd m);
  static DensityMatrix maximally_mixed(Eigen::Index dim);
  /// diag(p) for a probability vector p.
  static DensityMatrix diagonal(const Eigen::VectorXd& p);

  Eigen::Index dim() const { return m_.rows(); }
  const Eigen::MatrixXd& matrix() const { return m_; }
  /// True when every off-diagonal entry is exactly zero.
  bool is_diagonal() const;

 private:
  DensityMatrix() = default;
  Eigen::MatrixXd m_;
};

/// Mean-field product over data points: one state per point.
struct HiddenPosterior {
  std::vector<DensityMatrix> states;
};

/// Cyclic nearest-label hopping sum_k |k><k+1| + |k+1><k| with |K+1> = |1>.
/// For K = 2 both wrap-around terms land on the same entry, giving 2.
HermitianMatrix build_hopping_hamiltonian(int K);

/// One point's hidden update and the spectral data it produced.
struct HiddenUpdate {
  DensityMatrix rho;
  Eigen::VectorXd populations;  // eigenvalues of rho, in basis column order
  Eigen::MatrixXd basis;        // eigenvectors shared by rho and the effective Hamiltonian
  Eigen::MatrixXd ground_space; // orthonormal basis of the effective Hamiltonian's ground space
};

/// rho = exp(M - lambda_max) / Tr[...], M = -beta (1 - s) diag(energy) - beta s H_hop.
/// At s == 1 the energies are ignored. Throws NumericalError on non-finite
/// energies when s < 1, DomainError on bad beta or s.
HiddenUpdate update_hidden_detailed(const Eigen::VectorXd& energy_row, double beta, double s,
                                    const HermitianMatrix& hopping);

/// update_hidden_detailed on the labels with active[k] set. Inactive labels
/// behave as if their energy were +infinity: zero population, no coherence,
/// no share of the ground space. Entries of energy_row at inactive labels are
/// ignored. Requires s < 1 and at least one active label.
HiddenUpdate update_hidden_restricted(const Eigen::VectorXd& energy_row,
                                      const std::vector<bool>& active, double beta, double s,
                                      const HermitianMatrix& hopping);

DensityMatrix update_hidden_one(const Eigen::VectorXd& energy_row, double beta, double s,
                                const HermitianMatrix& hopping);

/// Effective per-point Hamiltonian beta (1 - s) diag(energy) + beta s H_hop.
HermitianMatrix effective_hamiltonian(const Eigen::VectorXd& energy_row, double beta, double s,
                                      const HermitianMatrix& hopping);

/// N x K matrix of diagonals, clamped to [0, 1] and renormalized per row.
Eigen::MatrixXd responsibilities(const HiddenPosterior& hp);

/// Tr[rho^2].
double purity(const DensityMatrix& rho);

/// Tr[rho ln rho] (non-positive; 0 ln 0 = 0).
double neg_entropy(const DensityMatrix& rho);

/// (1/2) ||a - b||_1.
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

/// Tr_B of a density matrix on C^dA (x) C^dB, by direct index summation.
Eigen::MatrixXcd partial_trace_b(const Eigen::MatrixXcd& rho_ab, int dim_a, int dim_b);

/// sum_alpha K_alpha rho K_alpha^dagger with K_alpha = I_A (x) <alpha|.
Eigen::MatrixXcd kraus_partial_trace(const Eigen::MatrixXcd& rho_ab, int dim_a, int dim_b);

/// True iff the Kraus sum equals the direct partial trace within 1e-10 and
/// has unit trace. Throws ValidationError on a dimension mismatch or when
/// rho_ab is not a density matrix.
bool check_partial_trace_kraus(const Eigen::MatrixXcd& rho_ab, int dim_a, int dim_b);

/// True iff every eigenvalue of exp(H) is strictly positive.
bool exponential_is_positive(const HermitianMatrix& h);

}  // namespace qavb

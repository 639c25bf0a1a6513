#pragma once

// Dense kernels for the small Hermitian matrices that appear in the solver:
// per-point effective Hamiltonians and density matrices (K x K, K <= ~30).
//
// Every Hamiltonian in this project is real symmetric, so the storage is a
// real Eigen matrix; the interface is phrased in Hermitian terms.

#include <Eigen/Dense>

namespace qavb {

inline constexpr double kHermitianTol = 1e-12;

class HermitianMatrix {
 public:
  /// Validates symmetry within `tol` (absolute, elementwise) and symmetrizes
  /// the stored copy exactly. Throws ValidationError otherwise.
  explicit HermitianMatrix(Eigen::MatrixXd m, double tol = kHermitianTol);

  /// Takes (m + m^T) / 2 without a tolerance check. For results of
  /// congruence products that are symmetric up to rounding.
  static HermitianMatrix symmetrized(const Eigen::MatrixXd& m);
  static HermitianMatrix zero(Eigen::Index dim);
  static HermitianMatrix identity(Eigen::Index dim);
  static HermitianMatrix diagonal(const Eigen::VectorXd& d);

  Eigen::Index dim() const { return m_.rows(); }
  const Eigen::MatrixXd& matrix() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  HermitianMatrix() = default;

  Eigen::MatrixXd m_;
};

struct EigenDecomposition {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // orthonormal columns, sign-fixed
};

/// Symmetric eigendecomposition. Eigenvalues ascending; each eigenvector is
/// sign-fixed so that its first component with magnitude above 1e-12 is
/// positive.
EigenDecomposition eigh(const HermitianMatrix& h);

/// V diag(f(lambda)) V^T for a precomputed spectrum.
HermitianMatrix from_spectrum(const Eigen::VectorXd& values, const Eigen::MatrixXd& vectors);

/// exp(H) via the spectral decomposition. Throws NumericalError when the
/// largest eigenvalue would overflow; shift H by its top eigenvalue first.
HermitianMatrix expm_hermitian(const HermitianMatrix& h);

/// Principal logarithm of a positive-definite matrix. Throws NumericalError
/// when an eigenvalue is not safely positive.
HermitianMatrix logm_spd(const HermitianMatrix& p);

/// Applies the sign convention used by eigh() to each column in place.
void fix_eigenvector_signs(Eigen::MatrixXd& vectors);

}  // namespace qavb

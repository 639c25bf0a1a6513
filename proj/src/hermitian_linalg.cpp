#include "qavb/hermitian_linalg.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "qavb/error.hpp"

namespace qavb {

HermitianMatrix::HermitianMatrix(Eigen::MatrixXd m, double tol) : m_(std::move(m)) {
  if (m_.rows() < 1 || m_.rows() != m_.cols()) {
    throw ValidationError("HermitianMatrix: expected a non-empty square matrix");
  }
  for (Eigen::Index i = 0; i < m_.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const double a = m_(i, j);
      const double b = m_(j, i);
      if (!std::isfinite(a) || !std::isfinite(b) || std::abs(a - b) > tol) {
        std::ostringstream os;
        os << "HermitianMatrix: entries (" << i << "," << j << ") and (" << j << "," << i
           << ") differ: " << a << " vs " << b;
        throw ValidationError(os.str());
      }
      const double avg = 0.5 * (a + b);
      m_(i, j) = avg;
      m_(j, i) = avg;
    }
    if (!std::isfinite(m_(i, i))) throw ValidationError("HermitianMatrix: non-finite diagonal");
  }
}

HermitianMatrix HermitianMatrix::symmetrized(const Eigen::MatrixXd& m) {
  HermitianMatrix h;
  h.m_ = 0.5 * (m + m.transpose());
  return h;
}

HermitianMatrix HermitianMatrix::zero(Eigen::Index dim) {
  return symmetrized(Eigen::MatrixXd::Zero(dim, dim));
}

HermitianMatrix HermitianMatrix::identity(Eigen::Index dim) {
  return symmetrized(Eigen::MatrixXd::Identity(dim, dim));
}

HermitianMatrix HermitianMatrix::diagonal(const Eigen::VectorXd& d) {
  return symmetrized(Eigen::MatrixXd(d.asDiagonal()));
}

void fix_eigenvector_signs(Eigen::MatrixXd& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
      const double v = vectors(r, c);
      if (std::abs(v) > 1e-12) {
        if (v < 0.0) vectors.col(c) *= -1.0;
        break;
      }
    }
  }
}

EigenDecomposition eigh(const HermitianMatrix& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h.matrix(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigh: symmetric eigensolver did not converge");
  }
  EigenDecomposition out{solver.eigenvalues(), solver.eigenvectors()};
  fix_eigenvector_signs(out.eigenvectors);
  return out;
}

HermitianMatrix from_spectrum(const Eigen::VectorXd& values, const Eigen::MatrixXd& vectors) {
  return HermitianMatrix::symmetrized(vectors * values.asDiagonal() * vectors.transpose());
}

HermitianMatrix expm_hermitian(const HermitianMatrix& h) {
  const auto dec = eigh(h);
  static const double kMaxExponent = std::log(std::numeric_limits<double>::max());
  const double top = dec.eigenvalues.maxCoeff();
  if (top > kMaxExponent) {
    std::ostringstream os;
    os << "expm_hermitian: largest eigenvalue " << top
       << " overflows exp(); shift the matrix by its largest eigenvalue first";
    throw NumericalError(os.str());
  }
  return from_spectrum(dec.eigenvalues.array().exp().matrix(), dec.eigenvectors);
}

HermitianMatrix logm_spd(const HermitianMatrix& p) {
  const auto dec = eigh(p);
  const double lo = dec.eigenvalues.minCoeff();
  const double hi = dec.eigenvalues.maxCoeff();
  if (!(lo > 0.0) || lo <= 1e-14 * hi) {
    std::ostringstream os;
    os << "logm_spd: matrix is singular or indefinite (eigenvalue range [" << lo << ", " << hi
       << "])";
    throw NumericalError(os.str());
  }
  return from_spectrum(dec.eigenvalues.array().log().matrix(), dec.eigenvectors);
}

}  // namespace qavb

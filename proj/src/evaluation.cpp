#include "qavb/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "qavb/error.hpp"

namespace qavb {

void LabeledPrediction::validate() const {
  if (predicted.size() != truth.size()) {
    throw ValidationError("LabeledPrediction: predicted and truth differ in length");
  }
  if (k_pred < 1 || k_true < 1) throw ValidationError("LabeledPrediction: label ranges empty");
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] < 1 || predicted[i] > k_pred || truth[i] < 1 || truth[i] > k_true) {
      std::ostringstream os;
      os << "LabeledPrediction: label out of range at index " << i;
      throw ValidationError(os.str());
    }
  }
}

std::vector<int> max_weight_assignment(const Eigen::MatrixXd& weights) {
  const int rows = static_cast<int>(weights.rows());
  const int cols = static_cast<int>(weights.cols());
  const int n = std::max(rows, cols);
  if (n == 0) return {};
  const double top = weights.size() ? weights.maxCoeff() : 0.0;
  // Square min-cost problem on cost = top - weight (padding has weight 0).
  auto cost = [&](int i, int j) {
    const double w = (i < rows && j < cols) ? weights(i, j) : 0.0;
    return top - w;
  };
  // Potentials-based Hungarian algorithm, 1-indexed with a virtual column 0.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> assignment(rows, -1);
  for (int j = 1; j <= n; ++j) {
    const int i = match[j] - 1;
    if (i >= 0 && i < rows && j - 1 < cols) assignment[i] = j - 1;
  }
  return assignment;
}

double success_rate(const LabeledPrediction& lp) {
  lp.validate();
  if (lp.truth.empty()) return 1.0;
  Eigen::MatrixXd confusion = Eigen::MatrixXd::Zero(lp.k_true, lp.k_pred);
  for (std::size_t i = 0; i < lp.truth.size(); ++i) confusion(lp.truth[i] - 1, lp.predicted[i] - 1) += 1.0;
  const auto assignment = max_weight_assignment(confusion);
  double matched = 0.0;
  for (int r = 0; r < lp.k_true; ++r) {
    if (assignment[r] >= 0) matched += confusion(r, assignment[r]);
  }
  return matched / static_cast<double>(lp.truth.size());
}

std::vector<int> bayes_optimal_labels(const Dataset& ds) {
  if (!ds.params) throw ValidationError("bayes_optimal_labels: generative parameters missing");
  const auto& gp = *ds.params;
  const int C = static_cast<int>(gp.weights.size());
  const int D = ds.dim();
  std::vector<Eigen::LLT<Eigen::MatrixXd>> chol;
  std::vector<double> log_norm(C);
  for (int c = 0; c < C; ++c) {
    chol.emplace_back(gp.covariances[c]);
    if (chol.back().info() != Eigen::Success) {
      throw ValidationError("bayes_optimal_labels: covariance is not positive definite");
    }
    const double log_det = 2.0 * chol.back().matrixLLT().diagonal().array().log().sum();
    log_norm[c] = std::log(gp.weights[c]) - 0.5 * log_det -
                  0.5 * D * std::log(2.0 * std::numbers::pi);
  }
  std::vector<int> labels(ds.size());
  for (int i = 0; i < ds.size(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    int best_c = 0;
    for (int c = 0; c < C; ++c) {
      const Eigen::VectorXd dev = ds.points.row(i).transpose() - gp.means[c];
      const Eigen::VectorXd z = chol[c].matrixL().solve(dev);
      const double score = log_norm[c] - 0.5 * z.squaredNorm();
      if (score > best) {
        best = score;
        best_c = c;
      }
    }
    labels[i] = best_c + 1;
  }
  return labels;
}

double bayes_optimal_rate(const Dataset& ds) {
  if (!ds.labels) throw ValidationError("bayes_optimal_rate: dataset has no truth labels");
  const auto predicted = bayes_optimal_labels(ds);
  const int C = static_cast<int>(ds.params->weights.size());
  return success_rate({predicted, *ds.labels, C, std::max(C, ds.components)});
}

int effective_cluster_count(const ThetaPosterior& post, double threshold) {
  const double total = post.alpha.sum();
  int count = 0;
  for (Eigen::Index k = 0; k < post.alpha.size(); ++k) count += (post.alpha[k] / total > threshold);
  return count;
}

double subspace_overlap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows()) throw ValidationError("subspace_overlap: dimension mismatch");
  const Eigen::MatrixXd m = a.transpose() * b;
  if (m.size() == 0) return 0.0;
  if (m.size() == 1) return std::min(1.0, std::abs(m(0, 0)));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return std::min(1.0, svd.singularValues()(0));
}

Eigen::MatrixXd ground_space(const HermitianMatrix& h) {
  const auto dec = eigh(h);
  const double lowest = dec.eigenvalues[0];
  const double tol = 1e-10 * std::max(1.0, std::abs(lowest));
  Eigen::Index g = 1;
  while (g < h.dim() && dec.eigenvalues[g] - lowest <= tol) ++g;
  return dec.eigenvectors.leftCols(g);
}

double ground_state_overlap(const HermitianMatrix& prev, const HermitianMatrix& next) {
  if (prev.dim() != next.dim()) throw ValidationError("ground_state_overlap: dimension mismatch");
  return subspace_overlap(ground_space(prev), ground_space(next));
}

std::vector<int> hard_labels(const Eigen::MatrixXd& responsibilities) {
  std::vector<int> labels(responsibilities.rows());
  for (Eigen::Index i = 0; i < responsibilities.rows(); ++i) {
    Eigen::Index best = 0;
    responsibilities.row(i).maxCoeff(&best);
    labels[i] = static_cast<int>(best) + 1;
  }
  return labels;
}

}  // namespace qavb

#pragma once

#include <vector>

#include <Eigen/Dense>

#include "qavb/datagen_io.hpp"
#include "qavb/gmm_model.hpp"
#include "qavb/hermitian_linalg.hpp"

namespace qavb {

/// Predicted and true labels, both 1-based.
struct LabeledPrediction {
  std::vector<int> predicted;
  std::vector<int> truth;
  int k_pred = 0;
  int k_true = 0;

  void validate() const;
};

/// Maximum-weight assignment on a nonnegative weight matrix (rows may be
/// fewer or more than columns; the smaller side is padded with zeros).
/// Returns the chosen column for each row, or -1 for a padded match.
std::vector<int> max_weight_assignment(const Eigen::MatrixXd& weights);

/// Fraction of points whose label matches under the best injective map from
/// true labels to predicted labels (Hungarian algorithm on the confusion
/// matrix).
double success_rate(const LabeledPrediction& lp);

/// Labels from argmax_k pi_k N(y | mu_k, Sigma_k) under the true parameters.
std::vector<int> bayes_optimal_labels(const Dataset& ds);

/// success_rate of bayes_optimal_labels against the truth. Throws
/// ValidationError when labels or generative parameters are missing.
double bayes_optimal_rate(const Dataset& ds);

/// Number of components with E[pi_k] = alpha_k / sum alpha > threshold.
int effective_cluster_count(const ThetaPosterior& post, double threshold = 0.01);

/// Largest singular value of A^T B for orthonormal column bases A and B:
/// the cosine of the smallest principal angle between the two spans.
double subspace_overlap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Ground-state basis (eigenvectors within 1e-10 of the minimum eigenvalue).
Eigen::MatrixXd ground_space(const HermitianMatrix& h);

/// |<g_prev|g_next>| for minimum-eigenvalue eigenvectors; for degenerate
/// ground spaces the principal-angle overlap of the spans.
double ground_state_overlap(const HermitianMatrix& prev, const HermitianMatrix& next);

/// Argmax over each row (1-based labels); ties resolve to the lowest index.
std::vector<int> hard_labels(const Eigen::MatrixXd& responsibilities);

}  // namespace qavb

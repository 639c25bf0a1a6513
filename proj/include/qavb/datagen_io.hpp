#pragma once

// Synthetic Gaussian-mixture datasets with ground truth, and the QAVBDATA v1
// text format.
//
// File layout (comma separated, one record per line):
//
//   QAVBDATA v1
//   header,<D>,<C>,<N>,<seed>,<rng>,<has_labels 0|1>,<has_params 0|1>
//   [params]                       (only when has_params = 1)
//   weight,<k>,<w>                 (k = 1..C)
//   mean,<k>,<x_1>,...,<x_D>
//   cov,<k>,<c_11>,<c_12>,...,<c_DD>   (row-major)
//   [points]
//   <label>,<x_1>,...,<x_D>        (label omitted when has_labels = 0)
//
// Reals are written with 17 significant digits, so save/load round-trips
// exactly. Labels are 1-based.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qavb {

enum class WeightMode { Equal, Dirichlet };

inline constexpr int kMaxMeanDraws = 1'000'000;

struct GenerativeSpec {
  int dim = 2;
  int components = 10;
  int points = 200;
  WeightMode weights = WeightMode::Equal;
  double box_half_width = 10.0;
  double variance = 1.0;
  /// Minimum pairwise distance between component means, in units of
  /// sqrt(variance). 0 gives independent uniform means.
  double min_separation = 3.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GenerativeParams {
  Eigen::VectorXd weights;                // C
  std::vector<Eigen::VectorXd> means;     // C vectors of length D
  std::vector<Eigen::MatrixXd> covariances;
};

struct Dataset {
  Eigen::MatrixXd points;                 // N x D
  std::optional<std::vector<int>> labels; // 1-based, length N
  std::optional<GenerativeParams> params;
  int components = 0;                     // C, 0 when unknown
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(points.rows()); }
  int dim() const { return static_cast<int>(points.cols()); }
  void validate() const;
};

/// Means uniform in [-L, L]^D conditioned on min_separation (the whole set is
/// redrawn until every pair is far enough apart; ValidationError after
/// kMaxMeanDraws attempts), covariances variance * I, weights, then for each
/// point its label and coordinates. Deterministic in seed.
Dataset generate(const GenerativeSpec& spec);

void save_dataset(const Dataset& ds, const std::filesystem::path& path);
std::string format_dataset(const Dataset& ds);

/// Throws ParseError (with line number) on malformed input and
/// ValidationError when the content violates dataset invariants.
Dataset load_dataset(const std::filesystem::path& path);
Dataset parse_dataset(const std::string& text);

}  // namespace qavb

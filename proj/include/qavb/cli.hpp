#pragma once

// Command-line harness: generate, run, sweep, compare-davb, report.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "qavb/datagen_io.hpp"
#include "qavb/engine.hpp"

namespace qavb::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

inline constexpr int kReportVersion = 1;
inline constexpr std::string_view kReportFormat = "qavb-run-report";

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view text);

/// Turns a key=value config file into "--key value" arguments. Blank lines
/// and lines starting with '#' are skipped; keys may carry leading dashes.
/// Throws ParseError with the line number on a line without '='.
std::vector<std::string> config_to_args(const std::string& text);

/// Success rates on a K x tau1 grid: rates(i, j) belongs to (Ks[i], tau1s[j]).
struct SweepGrid {
  std::vector<int> Ks;
  std::vector<int> tau1s;
  Eigen::MatrixXd rates;
};

struct SweepDerived {
  Eigen::MatrixXd best_up_to_K;     // max over K' <= K at fixed tau1
  Eigen::MatrixXd best_up_to_tau1;  // max over tau1' <= tau1 at fixed K
  std::vector<double> p_cr;
  /// k_min[p][j]: smallest K reaching p_cr[p] at tau1s[j].
  std::vector<std::vector<std::optional<int>>> k_min;
  /// tau1_min[p][i]: smallest tau1 reaching p_cr[p] at Ks[i].
  std::vector<std::vector<std::optional<int>>> tau1_min;
};

/// Grids must be non-empty and strictly increasing.
SweepDerived derive_sweep(const SweepGrid& grid, const std::vector<double>& p_cr);

/// Resolved configuration as JSON (embedded in every report).
nlohmann::json config_json(const SolverConfig& cfg);

/// Versioned run report. `timing` adds wall-clock seconds, which makes the
/// report differ between otherwise identical runs.
nlohmann::json run_report(const SolverConfig& cfg, const RunResult& res, const Dataset& data,
                          const std::string& data_path, const std::string& trajectory_path,
                          bool timing);

/// Columns t,beta,s,objective,median_purity,median_overlap,success_rate,
/// after a "# ..." provenance line. Missing values are empty fields.
std::string trajectory_csv(const RunResult& res, std::string_view comment);

/// Markdown table of mean +/- sample std per method across run reports.
/// Throws ValidationError on an empty list or a report of the wrong format.
std::string summarize_reports(const std::vector<nlohmann::json>& reports);

/// Full CLI. Returns the process exit code.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qavb::cli

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "embeval/analysis.hpp"
#include "embeval/config.hpp"
#include "embeval/error.hpp"
#include "embeval/evaluators.hpp"
#include "embeval/plots.hpp"

namespace embeval {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitRuntime = 2, kExitPartial = 3 };

/// Every problem validate_config found, joined for what().
class ValidationError : public ConfigError {
 public:
  explicit ValidationError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Throws ValidationError unless the config is valid.
void check_config(const RunConfig& config);

struct RunOptions {
  std::optional<std::filesystem::path> out;
  std::optional<std::size_t> workers;
};

struct RunReport {
  std::filesystem::path output;
  std::vector<EvalResult> results;  // cell order: evaluations as declared, off before on
  std::optional<SizeSweep> sweep;
  std::vector<std::string> warnings;
  std::vector<std::string> nonconverged;  // "task/encoder/..." of cells with a convergence flag

  int exit_code() const { return nonconverged.empty() ? kExitOk : kExitPartial; }
};

/// Validates, loads data, runs every cell on a worker pool and writes the
/// result store (results.csv, diagnostics.csv, analyses, sweep.csv). Outputs
/// are staged in a sibling directory and renamed into place, so a failed run
/// leaves nothing behind.
RunReport run(const RunConfig& config, const RunOptions& options = {});

struct AnalysisRequest {
  std::optional<std::string> metric;   // default: pearson and accuracy
  std::optional<ScoreTable> table;     // external score table for correlations
  bool strict = true;                  // missing counterparts are errors, not warnings
};

/// Writes deltas.csv, dispersion.csv and (with a table) correlation.csv into
/// `dir`. Returns warnings.
std::vector<std::string> analyze_results(const std::vector<EvalResult>& results,
                                         const AnalysisRequest& request,
                                         const std::filesystem::path& dir);

struct PlotRequest {
  std::optional<std::filesystem::path> results;  // results.csv
  std::optional<std::filesystem::path> sweep;    // sweep.csv
  std::optional<ScoreTable> table;
  std::optional<std::string> metric;
  double pair_scale = 1.0;
};

/// Emits every chart the inputs support. Throws when none applies.
std::vector<PlotFiles> emit_plots(const PlotRequest& request, const std::filesystem::path& dir);

}  // namespace embeval

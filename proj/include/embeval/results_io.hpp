#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "embeval/analysis.hpp"
#include "embeval/evaluators.hpp"

namespace embeval {

/// Shortest decimal text that parses back to the same double.
std::string format_number(double v);

/// Quotes a field when it holds a comma, quote or newline.
std::string csv_field(std::string_view text);

/// Splits one CSV line (RFC 4180 quoting). Throws LoadError on an unbalanced quote.
std::vector<std::string> split_csv(std::string_view line, const std::string& path,
                                   std::size_t line_no);

/// Writes text to `path`, throwing Error when the file cannot be written.
void write_text(const std::filesystem::path& path, std::string_view text);

inline constexpr std::string_view kResultsHeader =
    "task,encoder,dim,protocol,classifier,normalized,metric,value,hyperparams";

/// One row per (result, metric); metrics in name order.
std::string results_csv(const std::vector<EvalResult>& results);
void write_results_csv(const std::vector<EvalResult>& results, const std::filesystem::path& path);

/// Inverse of write_results_csv: consecutive rows sharing every column but
/// metric/value fold back into one result. Diagnostics are not stored here.
std::vector<EvalResult> read_results_csv(const std::filesystem::path& path);

void write_diagnostics_csv(const std::vector<EvalResult>& results,
                           const std::filesystem::path& path);

void write_deltas_csv(const std::vector<NormalizationDelta>& deltas,
                      const std::filesystem::path& path);
void write_dispersion_csv(const std::vector<ColumnDispersion>& rows,
                          const std::filesystem::path& path);
void write_correlation_csv(const CorrelationReport& report, const std::filesystem::path& path);

/// "kind,name,size,score" with kind in {mean, task, reference}.
void write_sweep_csv(const SizeSweep& sweep, const std::filesystem::path& path);
SizeSweep read_sweep_csv(const std::filesystem::path& path);

}  // namespace embeval

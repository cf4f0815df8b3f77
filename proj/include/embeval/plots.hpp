#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "embeval/analysis.hpp"

namespace embeval {

// Static SVG charts. Each chart writes <stem>.svg and a sibling <stem>.csv
// holding every number drawn, formatted with plot_label so the two match
// textually. Drawn value labels carry class="value".

struct PlotFiles {
  std::filesystem::path svg;
  std::filesystem::path csv;
};

/// Value rounded to 4 decimals with trailing zeros dropped ("21", "0.8333").
std::string plot_label(double v);

/// Bar chart of per-encoder normalization deltas. Pair-task bars are
/// multiplied by `pair_scale` (already applied by summarize_deltas).
PlotFiles plot_deltas(const std::vector<DeltaSummary>& deltas, double pair_scale,
                      const std::filesystem::path& dir, const std::string& stem = "deltas");

/// Mean score against embedding size, with reference encoders as
/// horizontal lines.
PlotFiles plot_sweep(const SizeSweep& sweep, const std::filesystem::path& dir,
                     const std::string& stem = "sweep");

/// Transfer x probing Spearman matrix plus a row of per-probing averages.
PlotFiles plot_heatmap(const CorrelationReport& report, const std::filesystem::path& dir,
                       const std::string& stem = "heatmap");

}  // namespace embeval

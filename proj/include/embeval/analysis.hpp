#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "embeval/evaluators.hpp"
#include "embeval/metrics.hpp"

namespace embeval {

enum class TaskKind { Transfer, Probing };
enum class Provenance { InternalRun, ExternalImport };

std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view text);

/// Encoders x tasks matrix. Rows and columns keep first-insertion order.
class ScoreTable {
 public:
  explicit ScoreTable(Provenance provenance = Provenance::InternalRun)
      : provenance_(provenance) {}

  /// Throws on a duplicate cell or a task whose kind changes.
  void set(const std::string& encoder, const std::string& task, TaskKind kind, double score);
  std::optional<double> get(const std::string& encoder, const std::string& task) const;

  const std::vector<std::string>& encoders() const { return encoders_; }
  const std::vector<std::string>& tasks() const { return tasks_; }
  TaskKind kind(const std::string& task) const;
  std::vector<std::string> tasks_of(TaskKind kind) const;
  Provenance provenance() const { return provenance_; }

  /// Scores of every encoder on `task`, in row order; throws naming the
  /// first encoder without a cell.
  std::vector<double> column(const std::string& task) const;

 private:
  Provenance provenance_;
  std::vector<std::string> encoders_;
  std::vector<std::string> tasks_;
  std::map<std::string, TaskKind> kinds_;
  std::map<std::pair<std::string, std::string>, double> cells_;
};

/// CSV with header "encoder,task,kind,score"; kind is transfer or probing.
ScoreTable load_score_table(const std::filesystem::path& path);
void write_score_table(const ScoreTable& table, const std::filesystem::path& path);

/// Pivots result rows into a table. Columns are named
/// "<task>/<protocol>/<classifier>/<std|norm>"; all columns are transfer.
ScoreTable table_from_results(const std::vector<EvalResult>& results, const std::string& metric);

// ---------------------------------------------------------------------------

inline double delta_pp(double standard, double normalized) {
  return 100.0 * (normalized - standard);
}

struct NormalizationDelta {
  std::string encoder;
  std::string task;
  std::string protocol;
  std::string classifier;
  std::string metric;
  double standard = 0.0;
  double normalized = 0.0;
  double delta_pp = 0.0;
};

/// Pairs every normalized result with its unnormalized counterpart (same
/// encoder, task, protocol, classifier) and reports 100 * (norm - std) for
/// `metric`. Throws naming the encoder when a counterpart is missing.
std::vector<NormalizationDelta> normalization_delta(const std::vector<EvalResult>& results,
                                                    const std::string& metric);

/// Per-encoder bar heights for a delta chart: the mean delta over
/// classification tasks and the sentence-pair delta multiplied by
/// `pair_scale` (0.1 shrinks it tenfold).
struct DeltaSummary {
  std::string encoder;
  std::optional<double> transfer_pp;
  std::optional<double> pair_pp;
};

std::vector<DeltaSummary> summarize_deltas(const std::vector<NormalizationDelta>& deltas,
                                           double pair_scale = 1.0);

struct ColumnDispersion {
  std::string column;
  Dispersion dispersion;
  std::size_t n = 0;
};

std::vector<ColumnDispersion> dispersion_report(const ScoreTable& table,
                                                const std::vector<std::string>& columns);

struct CorrelationReport {
  std::vector<std::string> transfer;
  std::vector<std::string> probing;
  /// rho[t][p]; nullopt where a column is constant.
  std::vector<std::vector<std::optional<double>>> rho;
  /// Mean over transfer tasks for each probing task (defined cells only).
  std::vector<std::optional<double>> probing_average;
  std::optional<double> grand_mean;
  std::vector<std::string> warnings;
};

/// Spearman correlation across encoders between each transfer and each
/// probing column. Needs >= 3 encoders, both kinds, and a complete table.
CorrelationReport transfer_probing_correlation(const ScoreTable& table);

// ---------------------------------------------------------------------------

struct SweepPoint {
  std::size_t size = 0;
  double mean_score = 0.0;
  std::vector<double> task_scores;
  bool converged = true;
};

struct ReferenceLine {
  std::string encoder;
  std::size_t size = 0;
  double mean_score = 0.0;
};

struct SizeSweep {
  std::vector<std::string> tasks;
  std::vector<SweepPoint> curve;
  std::vector<ReferenceLine> references;
};

using EncoderFamily = std::function<EncoderPtr(std::size_t size)>;

/// Runs every task at every size (strictly increasing) and averages accuracy
/// across tasks without weights; reference encoders become constant lines.
SizeSweep size_sweep(const std::vector<const LabeledDataset*>& tasks, const EncoderFamily& family,
                     const std::vector<std::size_t>& sizes, const ClassifierSpec& spec,
                     bool normalized,
                     const std::vector<std::pair<std::string, EncoderPtr>>& references = {});

}  // namespace embeval

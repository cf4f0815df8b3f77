#include "embeval/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <tuple>

#include <fmt/format.h>
#include <fmt/os.h>

#include "embeval/error.hpp"
#include "line_reader.hpp"

namespace embeval {

std::string_view to_string(TaskKind kind) {
  return kind == TaskKind::Transfer ? "transfer" : "probing";
}

TaskKind parse_task_kind(std::string_view text) {
  if (text == "transfer") return TaskKind::Transfer;
  if (text == "probing") return TaskKind::Probing;
  throw Error(fmt::format("unknown task kind '{}'", text));
}

void ScoreTable::set(const std::string& encoder, const std::string& task, TaskKind kind,
                     double score) {
  if (!std::isfinite(score)) throw Error(fmt::format("non-finite score for {}/{}", encoder, task));
  const auto [k, new_task] = kinds_.try_emplace(task, kind);
  if (!new_task && k->second != kind) {
    throw Error(fmt::format("task '{}' declared both transfer and probing", task));
  }
  if (!cells_.try_emplace({encoder, task}, score).second) {
    throw Error(fmt::format("duplicate score for encoder '{}' task '{}'", encoder, task));
  }
  if (new_task) tasks_.push_back(task);
  if (std::find(encoders_.begin(), encoders_.end(), encoder) == encoders_.end()) {
    encoders_.push_back(encoder);
  }
}

std::optional<double> ScoreTable::get(const std::string& encoder, const std::string& task) const {
  const auto it = cells_.find({encoder, task});
  if (it == cells_.end()) return std::nullopt;
  return it->second;
}

TaskKind ScoreTable::kind(const std::string& task) const {
  const auto it = kinds_.find(task);
  if (it == kinds_.end()) throw Error(fmt::format("unknown task '{}'", task));
  return it->second;
}

std::vector<std::string> ScoreTable::tasks_of(TaskKind kind) const {
  std::vector<std::string> out;
  for (const auto& t : tasks_) {
    if (kinds_.at(t) == kind) out.push_back(t);
  }
  return out;
}

std::vector<double> ScoreTable::column(const std::string& task) const {
  kind(task);
  std::vector<double> out;
  for (const auto& e : encoders_) {
    const auto v = get(e, task);
    if (!v) throw Error(fmt::format("task '{}' has no score for encoder '{}'", task, e));
    out.push_back(*v);
  }
  return out;
}

ScoreTable load_score_table(const std::filesystem::path& path) {
  detail::LineReader reader(path);
  ScoreTable table(Provenance::ExternalImport);
  std::string line;
  bool header = true;
  while (reader.next(line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      f.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (header) {
      header = false;
      if (f != std::vector<std::string>{"encoder", "task", "kind", "score"}) {
        throw LoadError(path.string(), reader.line_number(),
                        "expected header 'encoder,task,kind,score'");
      }
      continue;
    }
    if (f.size() != 4) {
      throw LoadError(path.string(), reader.line_number(),
                      fmt::format("expected 4 fields, got {}", f.size()));
    }
    double score = 0.0;
    auto [p, ec] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), score);
    if (ec != std::errc{} || p != f[3].data() + f[3].size()) {
      throw LoadError(path.string(), reader.line_number(), fmt::format("bad score '{}'", f[3]));
    }
    try {
      table.set(f[0], f[1], parse_task_kind(f[2]), score);
    } catch (const LoadError&) {
      throw;
    } catch (const Error& e) {
      throw LoadError(path.string(), reader.line_number(), e.what());
    }
  }
  if (header) throw LoadError(path.string(), 0, "empty score table");
  return table;
}

void write_score_table(const ScoreTable& table, const std::filesystem::path& path) {
  auto out = fmt::output_file(path.string());
  out.print("encoder,task,kind,score\n");
  for (const auto& e : table.encoders()) {
    for (const auto& t : table.tasks()) {
      if (const auto v = table.get(e, t)) {
        out.print("{},{},{},{:.17g}\n", e, t, to_string(table.kind(t)), *v);
      }
    }
  }
}

ScoreTable table_from_results(const std::vector<EvalResult>& results, const std::string& metric) {
  ScoreTable table(Provenance::InternalRun);
  for (const auto& r : results) {
    const auto m = r.metrics.find(metric);
    if (m == r.metrics.end()) continue;
    table.set(r.encoder,
              fmt::format("{}/{}/{}/{}", r.task, r.protocol, r.classifier,
                          r.normalized ? "norm" : "std"),
              TaskKind::Transfer, m->second);
  }
  return table;
}

std::vector<NormalizationDelta> normalization_delta(const std::vector<EvalResult>& results,
                                                    const std::string& metric) {
  using Key = std::tuple<std::string, std::string, std::string, std::string>;
  std::map<Key, std::pair<std::optional<double>, std::optional<double>>> paired;
  std::vector<Key> order;
  for (const auto& r : results) {
    const auto m = r.metrics.find(metric);
    if (m == r.metrics.end()) continue;
    Key key{r.encoder, r.task, r.protocol, r.classifier};
    auto [it, inserted] = paired.try_emplace(key);
    if (inserted) order.push_back(key);
    auto& slot = r.normalized ? it->second.second : it->second.first;
    if (slot) {
      throw Error(fmt::format("duplicate {} result for encoder '{}' on '{}'",
                              r.normalized ? "normalized" : "standard", r.encoder, r.task));
    }
    slot = m->second;
  }
  std::vector<NormalizationDelta> out;
  for (const auto& key : order) {
    const auto& [standard, normalized] = paired.at(key);
    const auto& [encoder, task, protocol, classifier] = key;
    if (!standard || !normalized) {
      throw Error(fmt::format("encoder '{}' has no {} counterpart on task '{}' ({}/{})", encoder,
                              standard ? "normalized" : "standard", task, protocol, classifier));
    }
    out.push_back({encoder, task, protocol, classifier, metric, *standard, *normalized,
                   delta_pp(*standard, *normalized)});
  }
  return out;
}

std::vector<DeltaSummary> summarize_deltas(const std::vector<NormalizationDelta>& deltas,
                                           double pair_scale) {
  std::vector<DeltaSummary> out;
  std::map<std::string, std::pair<double, std::size_t>> transfer;
  std::map<std::string, std::pair<double, std::size_t>> pair;
  for (const auto& d : deltas) {
    if (std::none_of(out.begin(), out.end(), [&](const auto& s) { return s.encoder == d.encoder; })) {
      out.push_back({d.encoder, std::nullopt, std::nullopt});
    }
    auto& acc = d.protocol == "classify" ? transfer[d.encoder] : pair[d.encoder];
    acc.first += d.delta_pp;
    acc.second += 1;
  }
  for (auto& s : out) {
    if (auto it = transfer.find(s.encoder); it != transfer.end()) {
      s.transfer_pp = it->second.first / static_cast<double>(it->second.second);
    }
    if (auto it = pair.find(s.encoder); it != pair.end()) {
      s.pair_pp = pair_scale * it->second.first / static_cast<double>(it->second.second);
    }
  }
  return out;
}

std::vector<ColumnDispersion> dispersion_report(const ScoreTable& table,
                                                const std::vector<std::string>& columns) {
  std::vector<ColumnDispersion> out;
  for (const auto& c : columns) {
    const auto values = table.column(c);
    out.push_back({c, dispersion(values), values.size()});
  }
  return out;
}

CorrelationReport transfer_probing_correlation(const ScoreTable& table) {
  CorrelationReport r;
  r.transfer = table.tasks_of(TaskKind::Transfer);
  r.probing = table.tasks_of(TaskKind::Probing);
  if (r.transfer.empty() || r.probing.empty()) {
    throw Error("transfer_probing_correlation needs both transfer and probing tasks");
  }
  if (table.encoders().size() < 3) {
    throw Error(fmt::format("transfer_probing_correlation needs >= 3 encoders, got {}",
                            table.encoders().size()));
  }
  std::map<std::string, std::vector<double>> cols;
  for (const auto& t : table.tasks()) cols.emplace(t, table.column(t));

  r.rho.assign(r.transfer.size(), std::vector<std::optional<double>>(r.probing.size()));
  double grand = 0.0;
  std::size_t grand_n = 0;
  for (std::size_t p = 0; p < r.probing.size(); ++p) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t t = 0; t < r.transfer.size(); ++t) {
      try {
        const double rho = spearman(cols.at(r.transfer[t]), cols.at(r.probing[p]));
        r.rho[t][p] = rho;
        sum += rho;
        ++n;
      } catch (const DegenerateCorrelation&) {
        r.warnings.push_back(fmt::format("rho({}, {}) undefined: constant column", r.transfer[t],
                                         r.probing[p]));
      }
    }
    if (n > 0) r.probing_average.push_back(sum / static_cast<double>(n));
    else r.probing_average.push_back(std::nullopt);
    grand += sum;
    grand_n += n;
  }
  if (grand_n > 0) r.grand_mean = grand / static_cast<double>(grand_n);
  return r;
}

SizeSweep size_sweep(const std::vector<const LabeledDataset*>& tasks, const EncoderFamily& family,
                     const std::vector<std::size_t>& sizes, const ClassifierSpec& spec,
                     bool normalized,
                     const std::vector<std::pair<std::string, EncoderPtr>>& references) {
  if (tasks.empty()) throw Error("size_sweep: no tasks");
  if (sizes.empty()) throw Error("size_sweep: no sizes");
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) throw Error("size_sweep: sizes must be strictly increasing");
  }
  SizeSweep sweep;
  for (const auto* t : tasks) sweep.tasks.push_back(t->name);

  auto run_all = [&](const Encoder& enc, SweepPoint& point) {
    double sum = 0.0;
    for (const auto* t : tasks) {
      const auto r = run_transfer_task(*t, enc, spec, normalized);
      point.task_scores.push_back(r.metrics.at("accuracy"));
      point.converged = point.converged && r.diagnostics.converged;
      sum += point.task_scores.back();
    }
    point.mean_score = sum / static_cast<double>(tasks.size());
  };

  for (auto size : sizes) {
    const auto enc = family(size);
    if (!enc) throw Error(fmt::format("size_sweep: no encoder for size {}", size));
    SweepPoint point;
    point.size = enc->output_dim();
    run_all(*enc, point);
    sweep.curve.push_back(std::move(point));
  }
  for (const auto& [name, enc] : references) {
    SweepPoint point;
    run_all(*enc, point);
    sweep.references.push_back({name, enc->output_dim(), point.mean_score});
  }
  return sweep;
}

}  // namespace embeval

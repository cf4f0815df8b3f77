#include "embeval/runner.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <unistd.h>

#include "embeval/results_io.hpp"
#include "embeval/wordvec.hpp"

namespace embeval {

namespace {

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

template <typename T>
const T& named(const std::vector<T>& items, const std::string& name) {
  for (const auto& i : items) {
    if (i.name == name) return i;
  }
  throw ConfigError(fmt::format("unknown name '{}'", name));
}

struct Cell {
  const EvaluationDecl* eval;
  bool normalized;
};

// Everything loaded from disk for a run. Read-only once built.
struct Workspace {
  EncoderResources resources;
  std::map<std::string, EncoderPtr> encoders;
  std::map<std::string, PairDataset> pair_tasks;
  std::map<std::string, LabeledDataset> labeled_tasks;
};

void collect_resources(const EncoderSpec& spec, std::set<std::string>& vectors,
                       std::set<std::string>& frequencies) {
  std::visit(
      [&](const auto& body) {
        using B = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<B, WordEncoderSpec>) {
          vectors.insert(body.vectors);
          if (const auto* sif = std::get_if<SifPoolSpec>(&body.pooling)) {
            frequencies.insert(sif->frequencies);
          }
        } else if constexpr (std::is_same_v<B, ConcatSpec>) {
          for (const auto& m : body.members) collect_resources(m, vectors, frequencies);
        }
      },
      spec.body);
}

Workspace load_workspace(const RunConfig& cfg) {
  std::set<std::string> encoder_names, task_names, vector_names, freq_names;
  for (const auto& ev : cfg.evaluations) {
    encoder_names.insert(ev.encoder);
    task_names.insert(ev.task);
  }
  if (cfg.sweep) {
    for (const auto& r : cfg.sweep->references) encoder_names.insert(r);
    for (const auto& t : cfg.sweep->tasks) task_names.insert(t);
    vector_names.insert(cfg.sweep->vectors);
  }
  std::map<std::string, EncoderSpec> specs;
  for (const auto& name : encoder_names) {
    specs.emplace(name, resolve_encoder(cfg, name));
    collect_resources(specs.at(name), vector_names, freq_names);
  }

  Workspace ws;
  for (const auto& name : vector_names) {
    const auto& decl = named(cfg.vectors, name);
    ws.resources.vectors.emplace(
        name, std::make_shared<const WordVectors>(load_word_vectors(decl.path, decl.dim)));
  }
  for (const auto& name : freq_names) {
    const auto& decl = named(cfg.frequencies, name);
    ws.resources.frequencies.emplace(
        name, std::make_shared<const SifModel>(load_sif_frequencies(decl.path)));
  }
  for (const auto& [name, spec] : specs) ws.encoders.emplace(name, build_encoder(spec, ws.resources));
  for (const auto& name : task_names) {
    const auto& decl = named(cfg.tasks, name);
    if (const auto* sts = std::get_if<StsTaskDecl>(&decl.body)) {
      ws.pair_tasks.emplace(name, PairDataset::load(sts->train, sts->dev, sts->test));
    } else {
      const auto& c = std::get<ClassificationTaskDecl>(decl.body);
      auto ds = load_labeled_dataset(c.path, c.manifest);
      ds.name = name;
      ws.labeled_tasks.emplace(name, std::move(ds));
    }
  }
  return ws;
}

EvalResult run_cell(const Cell& cell, const Workspace& ws) {
  const auto& ev = *cell.eval;
  const auto& encoder = ws.encoders.at(ev.encoder);
  if (ev.protocol == Protocol::Classify) {
    return run_transfer_task(ws.labeled_tasks.at(ev.task), *encoder, ev.classifier,
                             cell.normalized, ev.encoder);
  }

  const auto& data = ws.pair_tasks.at(ev.task);
  EvalResult r;
  r.task = ev.task;
  r.encoder = ev.encoder;
  r.embedding_size = encoder->output_dim();
  r.protocol = std::string(to_string(ev.protocol));
  r.normalized = cell.normalized;
  if (ev.protocol == Protocol::Ucp) {
    const auto ucp = eval_ucp(data.test, *encoder, cell.normalized);
    r.classifier = "cosine";
    r.metrics["pearson"] = ucp.pearson;
    r.metrics["spearman"] = ucp.spearman;
    r.diagnostics.oov_sentences = ucp.oov_sentences;
    r.diagnostics.skipped_pairs = ucp.skipped_pairs;
    return r;
  }
  const auto model = train_similarity_regressor(data.train, data.dev, encoder, cell.normalized,
                                                ev.classifier.l2_grid);
  const auto scored = eval_learned_similarity(model, data.test);
  r.classifier = "ridge";
  r.metrics["mse"] = scored.mse;
  if (scored.pearson) r.metrics["pearson"] = *scored.pearson;
  if (scored.spearman) r.metrics["spearman"] = *scored.spearman;
  r.hyperparams = "l2=" + format_number(model.ridge().l2);
  r.diagnostics.oov_sentences = embed(*encoder, data.test.stacked(), Split::Test).oov_rows.size();
  return r;
}

std::string cell_name(const EvalResult& r) {
  return fmt::format("{}/{}/{}/{}/{}", r.task, r.encoder, r.protocol, r.classifier,
                     r.normalized ? "norm" : "std");
}

std::vector<std::string> result_metrics(const std::vector<EvalResult>& results,
                                        const std::optional<std::string>& metric) {
  if (metric) return {*metric};
  std::vector<std::string> out;
  for (const char* m : {"pearson", "accuracy"}) {
    if (std::any_of(results.begin(), results.end(),
                    [&](const EvalResult& r) { return r.metrics.count(m) > 0; })) {
      out.push_back(m);
    }
  }
  return out;
}

// Deltas per metric; in lenient mode groups lacking a counterpart are dropped
// with a warning instead of failing the whole report.
std::vector<NormalizationDelta> collect_deltas(const std::vector<EvalResult>& results,
                                               const AnalysisRequest& request,
                                               std::vector<std::string>& warnings) {
  std::vector<NormalizationDelta> all;
  for (const auto& metric : result_metrics(results, request.metric)) {
    if (request.strict) {
      auto d = normalization_delta(results, metric);
      all.insert(all.end(), d.begin(), d.end());
      continue;
    }
    std::map<std::string, int> seen;
    for (const auto& r : results) {
      if (!r.metrics.count(metric)) continue;
      seen[fmt::format("{}\t{}\t{}\t{}", r.encoder, r.task, r.protocol, r.classifier)] |=
          r.normalized ? 2 : 1;
    }
    std::vector<EvalResult> paired;
    for (const auto& r : results) {
      if (!r.metrics.count(metric)) continue;
      if (seen[fmt::format("{}\t{}\t{}\t{}", r.encoder, r.task, r.protocol, r.classifier)] == 3) {
        paired.push_back(r);
      }
    }
    const auto with_metric = std::count_if(results.begin(), results.end(), [&](const EvalResult& r) {
      return r.metrics.count(metric) > 0;
    });
    if (paired.size() != static_cast<std::size_t>(with_metric)) {
      warnings.push_back(
          fmt::format("{}: results without a normalized/standard counterpart get no delta", metric));
    }
    auto d = normalization_delta(paired, metric);
    all.insert(all.end(), d.begin(), d.end());
  }
  return all;
}

void write_store(const RunReport& report, const std::filesystem::path& dir) {
  write_results_csv(report.results, dir / "results.csv");
  write_diagnostics_csv(report.results, dir / "diagnostics.csv");
  if (report.sweep) write_sweep_csv(*report.sweep, dir / "sweep.csv");
}

void require_replaceable(const std::filesystem::path& out) {
  namespace fs = std::filesystem;
  if (!fs::exists(out)) return;
  const bool ours = fs::is_directory(out) &&
                    (fs::is_empty(out) || fs::exists(out / "results.csv") ||
                     fs::exists(out / "sweep.csv"));
  if (!ours) throw Error(fmt::format("output '{}' exists and is not a result store", out.string()));
}

void install(const std::filesystem::path& staged, const std::filesystem::path& out) {
  require_replaceable(out);
  std::filesystem::remove_all(out);
  std::filesystem::rename(staged, out);
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> problems)
    : ConfigError(join(problems, "; ")), problems_(std::move(problems)) {}

void check_config(const RunConfig& config) {
  auto problems = validate_config(config);
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

std::vector<std::string> analyze_results(const std::vector<EvalResult>& results,
                                         const AnalysisRequest& request,
                                         const std::filesystem::path& dir) {
  std::vector<std::string> warnings;
  const auto deltas = collect_deltas(results, request, warnings);
  if (!deltas.empty()) write_deltas_csv(deltas, dir / "deltas.csv");

  std::vector<ColumnDispersion> dispersion;
  for (const auto& metric : result_metrics(results, request.metric)) {
    const auto table = table_from_results(results, metric);
    // Each column spans the encoders that ran it; n records how many.
    for (const auto& t : table.tasks()) {
      std::vector<double> values;
      for (const auto& e : table.encoders()) {
        if (const auto v = table.get(e, t)) values.push_back(*v);
      }
      if (values.size() < 2) continue;
      dispersion.push_back({metric + ":" + t, embeval::dispersion(values), values.size()});
    }
  }
  if (!dispersion.empty()) write_dispersion_csv(dispersion, dir / "dispersion.csv");

  if (request.table) {
    const auto report = transfer_probing_correlation(*request.table);
    write_correlation_csv(report, dir / "correlation.csv");
    warnings.insert(warnings.end(), report.warnings.begin(), report.warnings.end());
  }
  return warnings;
}

std::vector<PlotFiles> emit_plots(const PlotRequest& request, const std::filesystem::path& dir) {
  std::vector<PlotFiles> out;
  std::filesystem::create_directories(dir);
  if (request.results) {
    const auto results = read_results_csv(*request.results);
    std::vector<std::string> warnings;
    const auto deltas =
        collect_deltas(results, AnalysisRequest{request.metric, std::nullopt, true}, warnings);
    if (!deltas.empty()) {
      out.push_back(plot_deltas(summarize_deltas(deltas, request.pair_scale), request.pair_scale,
                                dir));
    }
  }
  if (request.sweep) out.push_back(plot_sweep(read_sweep_csv(*request.sweep), dir));
  if (request.table) out.push_back(plot_heatmap(transfer_probing_correlation(*request.table), dir));
  if (out.empty()) throw Error("plot: nothing to plot for the given inputs");
  return out;
}

RunReport run(const RunConfig& cfg, const RunOptions& options) {
  namespace fs = std::filesystem;
  check_config(cfg);
  require_replaceable(fs::absolute(options.out.value_or(cfg.output)));
  const auto ws = load_workspace(cfg);

  std::vector<Cell> cells;
  for (const auto& ev : cfg.evaluations) {
    if (ev.normalization != NormalizationMode::On) cells.push_back({&ev, false});
    if (ev.normalization != NormalizationMode::Off) cells.push_back({&ev, true});
  }

  std::vector<std::optional<EvalResult>> slots(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        slots[i] = run_cell(cells[i], ws);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_workers =
      std::max<std::size_t>(1, std::min(options.workers.value_or(cfg.workers), cells.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  RunReport report;
  report.output = options.out.value_or(cfg.output);
  for (auto& s : slots) report.results.push_back(std::move(*s));
  for (const auto& r : report.results) {
    if (!r.diagnostics.converged) report.nonconverged.push_back(cell_name(r));
  }

  if (cfg.sweep) {
    const auto& sw = *cfg.sweep;
    std::vector<const LabeledDataset*> tasks;
    for (const auto& t : sw.tasks) tasks.push_back(&ws.labeled_tasks.at(t));
    std::vector<std::pair<std::string, EncoderPtr>> refs;
    for (const auto& r : sw.references) refs.emplace_back(r, ws.encoders.at(r));
    const EncoderFamily family = [&](std::size_t size) {
      EncoderSpec spec{fmt::format("{}-rp{}", sw.vectors, size),
                       WordEncoderSpec{sw.vectors, RandomProject{size, sw.projection_seed},
                                       PoolConcatSpec{sw.pooling}}};
      return build_encoder(spec, ws.resources);
    };
    report.sweep = size_sweep(tasks, family, sw.sizes, sw.classifier, sw.normalized, refs);
    for (const auto& pt : report.sweep->curve) {
      if (!pt.converged) report.nonconverged.push_back(fmt::format("sweep/{}", pt.size));
    }
  }

  const fs::path out = fs::absolute(report.output);
  const fs::path staged = out.parent_path() / fmt::format(".{}.staging-{}", out.filename().string(),
                                                          static_cast<long>(::getpid()));
  fs::create_directories(out.parent_path());
  fs::remove_all(staged);
  fs::create_directories(staged);
  try {
    write_store(report, staged);
    AnalysisRequest request;
    request.strict = false;
    if (cfg.analysis) {
      request.metric = cfg.analysis->metric;
      if (cfg.analysis->table) request.table = load_score_table(*cfg.analysis->table);
    }
    if (!report.results.empty() || request.table) {
      auto w = analyze_results(report.results, request, staged);
      report.warnings.insert(report.warnings.end(), w.begin(), w.end());
    }
    install(staged, out);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(staged, ec);
    throw;
  }
  return report;
}

}  // namespace embeval

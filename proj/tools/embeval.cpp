// embeval: run, analyze and plot sentence-embedding evaluations.
//
//   embeval validate --config run.ini
//   embeval run      --config run.ini [--out DIR] [--workers N] [--seed S]
//   embeval analyze  (--config run.ini | --results results.csv) [--table scores.csv]
//                    [--metric NAME] [--out DIR]
//   embeval plot     (--config run.ini | --results results.csv | --sweep sweep.csv |
//                     --table scores.csv) [--pair-scale X] [--out DIR]
//
// Failures print a JSON report on stderr.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "embeval/config.hpp"
#include "embeval/error.hpp"
#include "embeval/results_io.hpp"
#include "embeval/runner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int report_error(int code, std::string_view kind, const std::vector<std::string>& errors,
                 json extra = json::object()) {
  json j = {{"status", "error"}, {"exit_code", code}, {"kind", kind}, {"errors", errors}};
  j.update(extra);
  std::cerr << j.dump() << '\n';
  return code;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const embeval::ValidationError& e) {
    return report_error(embeval::kExitValidation, "validation", e.problems());
  } catch (const embeval::ConfigError& e) {
    return report_error(embeval::kExitValidation, "validation", {e.what()});
  } catch (const embeval::LoadError& e) {
    return report_error(embeval::kExitRuntime, "load", {e.what()},
                        {{"path", e.path()}, {"line", e.line()}});
  } catch (const std::exception& e) {
    return report_error(embeval::kExitRuntime, "runtime", {e.what()});
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sentence embedding evaluation harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> workers;
  std::optional<std::string> results_path, sweep_path, table_path, metric;
  std::optional<double> pair_scale;

  auto* validate = app.add_subcommand("validate", "check a config without running anything");
  validate->add_option("--config", config_path, "run config")->required()->check(CLI::ExistingFile);
  validate->add_option("--seed", seed, "override the run seed");

  auto* run = app.add_subcommand("run", "execute every evaluation cell in a config");
  run->add_option("--config", config_path, "run config")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "output directory (default: [run] output)");
  run->add_option("--workers", workers, "concurrent cells")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "override the run seed");

  auto* analyze = app.add_subcommand("analyze", "deltas, dispersion and correlations");
  analyze->add_option("--config", config_path, "run config (reads its result store)");
  analyze->add_option("--results", results_path, "results.csv")->check(CLI::ExistingFile);
  analyze->add_option("--table", table_path, "score table CSV")->check(CLI::ExistingFile);
  analyze->add_option("--metric", metric, "metric to compare (default: pearson and accuracy)");
  analyze->add_option("--out", out, "output directory");
  analyze->add_option("--seed", seed, "override the run seed");

  auto* plot = app.add_subcommand("plot", "SVG charts with backing CSVs");
  plot->add_option("--config", config_path, "run config (reads its result store)");
  plot->add_option("--results", results_path, "results.csv")->check(CLI::ExistingFile);
  plot->add_option("--sweep", sweep_path, "sweep.csv")->check(CLI::ExistingFile);
  plot->add_option("--table", table_path, "score table CSV")->check(CLI::ExistingFile);
  plot->add_option("--metric", metric, "metric for the delta chart");
  plot->add_option("--pair-scale", pair_scale, "multiplier for sentence-pair deltas");
  plot->add_option("--out", out, "output directory");
  plot->add_option("--seed", seed, "override the run seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return report_error(embeval::kExitValidation, "usage", {e.what()});
  }

  if (*validate) {
    return guarded([&] {
      const auto cfg = embeval::load_config(config_path, seed);
      embeval::check_config(cfg);
      std::cout << "valid: " << embeval::cell_count(cfg) << " evaluation cells\n";
      return int{embeval::kExitOk};
    });
  }

  if (*run) {
    return guarded([&] {
      const auto cfg = embeval::load_config(config_path, seed);
      embeval::RunOptions options;
      if (out) options.out = *out;
      options.workers = workers;
      const auto report = embeval::run(cfg, options);
      for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << "wrote " << report.results.size() << " evaluation cells to "
                << report.output.string() << '\n';
      if (report.exit_code() == embeval::kExitPartial) {
        json j = {{"status", "partial"},
                  {"exit_code", embeval::kExitPartial},
                  {"nonconverged", report.nonconverged}};
        std::cerr << j.dump() << '\n';
      }
      return report.exit_code();
    });
  }

  // analyze and plot share input resolution.
  return guarded([&] {
    std::optional<embeval::RunConfig> cfg;
    if (!config_path.empty()) cfg = embeval::load_config(config_path, seed);
    if (cfg) {
      const auto store = cfg->output;
      if (!results_path && fs::exists(store / "results.csv")) results_path = (store / "results.csv").string();
      if (!sweep_path && fs::exists(store / "sweep.csv")) sweep_path = (store / "sweep.csv").string();
      if (cfg->analysis) {
        if (!table_path && cfg->analysis->table) table_path = cfg->analysis->table->string();
        if (!metric) metric = cfg->analysis->metric;
        if (!pair_scale) pair_scale = cfg->analysis->pair_scale;
      }
      if (!out) out = (*analyze ? store : store / "plots").string();
    }
    std::optional<embeval::ScoreTable> table;
    if (table_path) table = embeval::load_score_table(*table_path);

    if (*analyze) {
      if (!results_path && !table) {
        throw embeval::ConfigError("analyze needs --results, --table or --config");
      }
      const fs::path dir = out ? fs::path(*out)
                               : (results_path ? fs::path(*results_path).parent_path() : fs::path("."));
      fs::create_directories(dir);
      std::vector<embeval::EvalResult> results;
      if (results_path) results = embeval::read_results_csv(*results_path);
      embeval::AnalysisRequest request;
      request.metric = metric;
      request.table = std::move(table);
      for (const auto& w : embeval::analyze_results(results, request, dir)) {
        std::cerr << "warning: " << w << '\n';
      }
      std::cout << "analysis written to " << dir.string() << '\n';
      return int{embeval::kExitOk};
    }

    embeval::PlotRequest request;
    if (results_path) request.results = *results_path;
    if (sweep_path) request.sweep = *sweep_path;
    request.table = std::move(table);
    request.metric = metric;
    request.pair_scale = pair_scale.value_or(1.0);
    const fs::path dir = out ? fs::path(*out) : fs::path(".");
    for (const auto& f : embeval::emit_plots(request, dir)) {
      std::cout << f.svg.string() << '\n';
    }
    return int{embeval::kExitOk};
  });
}

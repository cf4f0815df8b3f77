#include "embeval/results_io.hpp"

#include <charconv>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "embeval/error.hpp"
#include "line_reader.hpp"

namespace embeval {

std::string format_number(double v) { return fmt::format("{}", v); }

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv(std::string_view line, const std::string& path,
                                   std::size_t line_no) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else if (c == '"' && field.empty() && !was_quoted) {
      quoted = was_quoted = true;
    } else {
      field += c;
    }
  }
  if (quoted) throw LoadError(path, line_no, "unterminated quoted field");
  out.push_back(std::move(field));
  return out;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw Error(fmt::format("write failed for '{}'", path.string()));
}

namespace {

double parse_double(const std::string& s, const std::string& path, std::size_t line) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw LoadError(path, line, fmt::format("bad number '{}'", s));
  }
  return v;
}

std::size_t parse_size(const std::string& s, const std::string& path, std::size_t line) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw LoadError(path, line, fmt::format("bad integer '{}'", s));
  }
  return v;
}

template <typename Fn>
void read_csv(const std::filesystem::path& path, std::string_view header, std::size_t fields,
              Fn&& row) {
  detail::LineReader reader(path);
  std::string line;
  if (!reader.next(line) || line != header) {
    throw LoadError(path.string(), reader.line_number(), fmt::format("expected header '{}'", header));
  }
  while (reader.next(line)) {
    if (line.empty()) continue;
    auto f = split_csv(line, path.string(), reader.line_number());
    if (f.size() != fields) {
      throw LoadError(path.string(), reader.line_number(),
                      fmt::format("expected {} fields, got {}", fields, f.size()));
    }
    row(f, reader.line_number());
  }
}

}  // namespace

std::string results_csv(const std::vector<EvalResult>& results) {
  std::string out(kResultsHeader);
  out += '\n';
  for (const auto& r : results) {
    for (const auto& [metric, value] : r.metrics) {
      out += fmt::format("{},{},{},{},{},{},{},{},{}\n", csv_field(r.task), csv_field(r.encoder),
                         r.embedding_size, csv_field(r.protocol), csv_field(r.classifier),
                         r.normalized ? "true" : "false", csv_field(metric), format_number(value),
                         csv_field(r.hyperparams));
    }
  }
  return out;
}

void write_results_csv(const std::vector<EvalResult>& results, const std::filesystem::path& path) {
  write_text(path, results_csv(results));
}

std::vector<EvalResult> read_results_csv(const std::filesystem::path& path) {
  std::vector<EvalResult> out;
  const auto p = path.string();
  read_csv(path, kResultsHeader, 9, [&](const std::vector<std::string>& f, std::size_t line) {
    EvalResult r;
    r.task = f[0];
    r.encoder = f[1];
    r.embedding_size = parse_size(f[2], p, line);
    r.protocol = f[3];
    r.classifier = f[4];
    if (f[5] != "true" && f[5] != "false") {
      throw LoadError(p, line, fmt::format("normalized must be true or false, got '{}'", f[5]));
    }
    r.normalized = f[5] == "true";
    r.hyperparams = f[8];
    const double value = parse_double(f[7], p, line);
    if (!out.empty()) {
      auto& last = out.back();
      if (last.task == r.task && last.encoder == r.encoder &&
          last.embedding_size == r.embedding_size && last.protocol == r.protocol &&
          last.classifier == r.classifier && last.normalized == r.normalized &&
          last.hyperparams == r.hyperparams && !last.metrics.count(f[6])) {
        last.metrics[f[6]] = value;
        return;
      }
    }
    r.metrics[f[6]] = value;
    out.push_back(std::move(r));
  });
  return out;
}

void write_diagnostics_csv(const std::vector<EvalResult>& results,
                           const std::filesystem::path& path) {
  std::string out = "task,encoder,protocol,classifier,normalized,oov_sentences,skipped_pairs,converged\n";
  for (const auto& r : results) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", csv_field(r.task), csv_field(r.encoder),
                       csv_field(r.protocol), csv_field(r.classifier),
                       r.normalized ? "true" : "false", r.diagnostics.oov_sentences,
                       r.diagnostics.skipped_pairs, r.diagnostics.converged ? "true" : "false");
  }
  write_text(path, out);
}

void write_deltas_csv(const std::vector<NormalizationDelta>& deltas,
                      const std::filesystem::path& path) {
  std::string out = "encoder,task,protocol,classifier,metric,standard,normalized,delta_pp\n";
  for (const auto& d : deltas) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", csv_field(d.encoder), csv_field(d.task),
                       csv_field(d.protocol), csv_field(d.classifier), csv_field(d.metric),
                       format_number(d.standard), format_number(d.normalized),
                       format_number(d.delta_pp));
  }
  write_text(path, out);
}

void write_dispersion_csv(const std::vector<ColumnDispersion>& rows,
                          const std::filesystem::path& path) {
  std::string out = "column,n,range,std\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{}\n", csv_field(r.column), r.n, format_number(r.dispersion.range),
                       format_number(r.dispersion.std));
  }
  write_text(path, out);
}

void write_correlation_csv(const CorrelationReport& report, const std::filesystem::path& path) {
  std::string out = "transfer,probing,rho\n";
  for (std::size_t t = 0; t < report.transfer.size(); ++t) {
    for (std::size_t p = 0; p < report.probing.size(); ++p) {
      const auto& rho = report.rho[t][p];
      out += fmt::format("{},{},{}\n", csv_field(report.transfer[t]), csv_field(report.probing[p]),
                         rho ? format_number(*rho) : "");
    }
  }
  for (std::size_t p = 0; p < report.probing.size(); ++p) {
    const auto& avg = report.probing_average[p];
    out += fmt::format("average,{},{}\n", csv_field(report.probing[p]),
                       avg ? format_number(*avg) : "");
  }
  out += fmt::format("average,all,{}\n",
                     report.grand_mean ? format_number(*report.grand_mean) : "");
  write_text(path, out);
}

void write_sweep_csv(const SizeSweep& sweep, const std::filesystem::path& path) {
  std::string out = "kind,name,size,score\n";
  for (const auto& pt : sweep.curve) {
    out += fmt::format("mean,,{},{}\n", pt.size, format_number(pt.mean_score));
    for (std::size_t t = 0; t < pt.task_scores.size(); ++t) {
      out += fmt::format("task,{},{},{}\n", csv_field(sweep.tasks[t]), pt.size,
                         format_number(pt.task_scores[t]));
    }
  }
  for (const auto& ref : sweep.references) {
    out += fmt::format("reference,{},{},{}\n", csv_field(ref.encoder), ref.size,
                       format_number(ref.mean_score));
  }
  write_text(path, out);
}

SizeSweep read_sweep_csv(const std::filesystem::path& path) {
  SizeSweep sweep;
  const auto p = path.string();
  read_csv(path, "kind,name,size,score", 4, [&](const std::vector<std::string>& f,
                                                std::size_t line) {
    const auto size = parse_size(f[2], p, line);
    const double score = parse_double(f[3], p, line);
    if (f[0] == "mean") {
      sweep.curve.push_back({size, score, {}, true});
    } else if (f[0] == "task") {
      if (sweep.curve.empty() || sweep.curve.back().size != size) {
        throw LoadError(p, line, "task row does not follow its mean row");
      }
      auto& scores = sweep.curve.back().task_scores;
      if (sweep.curve.size() == 1) sweep.tasks.push_back(f[1]);
      if (scores.size() >= sweep.tasks.size() || sweep.tasks[scores.size()] != f[1]) {
        throw LoadError(p, line, fmt::format("unexpected task '{}'", f[1]));
      }
      scores.push_back(score);
    } else if (f[0] == "reference") {
      sweep.references.push_back({f[1], size, score});
    } else {
      throw LoadError(p, line, fmt::format("unknown row kind '{}'", f[0]));
    }
  });
  if (sweep.curve.empty()) throw LoadError(p, 0, "sweep has no points");
  return sweep;
}

}  // namespace embeval

#include "embeval/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "embeval/error.hpp"

namespace embeval {

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::Ucp: return "ucp";
    case Protocol::LearnedSim: return "learned_sim";
    case Protocol::Classify: return "classify";
  }
  return "?";
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct Entry {
  std::string value;
  std::size_t line;
};

struct Section {
  std::string kind;
  std::string name;
  std::size_t line = 0;
  std::map<std::string, Entry> entries;
  std::set<std::string> used;

  const Entry* find(const std::string& key) {
    auto it = entries.find(key);
    if (it == entries.end()) return nullptr;
    used.insert(key);
    return &it->second;
  }

  const Entry& require(const std::string& key) {
    if (const auto* e = find(key)) return *e;
    throw ConfigError(fmt::format("line {}: [{}{}{}] is missing '{}'", line, kind,
                                  name.empty() ? "" : " ", name, key));
  }

  void reject_unknown() const {
    for (const auto& [k, e] : entries) {
      if (!used.count(k)) {
        throw ConfigError(fmt::format("line {}: unknown key '{}' in [{}]", e.line, k, kind));
      }
    }
  }
};

[[noreturn]] void bad_value(const Entry& e, const std::string& key, const char* what) {
  throw ConfigError(fmt::format("line {}: '{}' must be {}, got '{}'", e.line, key, what, e.value));
}

template <typename T>
T parse_number(const Entry& e, const std::string& key, const char* what) {
  T out{};
  const auto& s = e.value;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || p != s.data() + s.size()) bad_value(e, key, what);
  return out;
}

std::size_t as_size(const Entry& e, const std::string& key) {
  return parse_number<std::size_t>(e, key, "a non-negative integer");
}

std::uint64_t as_u64(const Entry& e, const std::string& key) {
  return parse_number<std::uint64_t>(e, key, "a non-negative integer");
}

double as_double(const Entry& e, const std::string& key) {
  return parse_number<double>(e, key, "a number");
}

bool as_bool(const Entry& e, const std::string& key) {
  if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no") return false;
  bad_value(e, key, "true or false");
}

std::vector<std::string> as_list(const Entry& e) {
  std::vector<std::string> out;
  std::stringstream ss(e.value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::filesystem::path as_path(const Entry& e, const std::filesystem::path& base) {
  std::filesystem::path p(e.value);
  return (p.is_absolute() ? p : base / p).lexically_normal();
}

bool valid_name(const std::string& name) {
  return !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

std::vector<Section> split_sections(std::string_view text) {
  std::vector<Section> sections;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(fmt::format("line {}: unterminated section", line_no));
      const std::string inner = trim(std::string_view(line).substr(1, line.size() - 2));
      Section s;
      s.line = line_no;
      const auto space = inner.find_first_of(" \t");
      s.kind = inner.substr(0, space);
      if (space != std::string::npos) s.name = trim(std::string_view(inner).substr(space));
      sections.push_back(std::move(s));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
    }
    if (sections.empty()) throw ConfigError(fmt::format("line {}: key outside a section", line_no));
    const std::string key = trim(std::string_view(line).substr(0, eq));
    Entry entry{trim(std::string_view(line).substr(eq + 1)), line_no};
    if (!sections.back().entries.try_emplace(key, std::move(entry)).second) {
      throw ConfigError(fmt::format("line {}: duplicate key '{}'", line_no, key));
    }
  }
  return sections;
}

void require_name(const Section& s, bool named) {
  if (named && !valid_name(s.name)) {
    throw ConfigError(fmt::format("line {}: [{}] needs a name of [A-Za-z0-9_.-]", s.line, s.kind));
  }
  if (!named && !s.name.empty()) {
    throw ConfigError(fmt::format("line {}: [{}] takes no name", s.line, s.kind));
  }
}

void read_classifier(Section& s, ClassifierSpec& spec, std::uint64_t default_seed) {
  spec.seed = default_seed;
  if (const auto* e = s.find("classifier")) {
    try {
      spec.kind = parse_classifier_kind(e->value);
    } catch (const Error&) {
      bad_value(*e, "classifier", "logreg or mlp");
    }
  }
  if (const auto* e = s.find("l2_grid")) {
    spec.l2_grid.clear();
    for (const auto& item : as_list(*e)) spec.l2_grid.push_back(as_double({item, e->line}, "l2_grid"));
  }
  if (const auto* e = s.find("hidden_sizes")) {
    spec.hidden_sizes.clear();
    for (const auto& item : as_list(*e)) {
      spec.hidden_sizes.push_back(as_size({item, e->line}, "hidden_sizes"));
    }
  }
  if (const auto* e = s.find("max_epochs")) spec.max_epochs = as_size(*e, "max_epochs");
  if (const auto* e = s.find("tolerance")) spec.tolerance = as_double(*e, "tolerance");
  if (const auto* e = s.find("inner_folds")) spec.inner_folds = as_size(*e, "inner_folds");
  if (const auto* e = s.find("seed")) spec.seed = as_u64(*e, "seed");
  try {
    spec.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& err) {
    throw ConfigError(fmt::format("line {}: {}", s.line, err.what()));
  }
}

NormalizationMode read_normalization(Section& s) {
  const auto* e = s.find("normalization");
  if (!e) return NormalizationMode::Off;
  if (e->value == "on") return NormalizationMode::On;
  if (e->value == "off") return NormalizationMode::Off;
  if (e->value == "both") return NormalizationMode::Both;
  bad_value(*e, "normalization", "on, off or both");
}

std::variant<AveragePoolSpec, SifPoolSpec, PoolConcatSpec> read_pooling(Section& s) {
  const auto* e = s.find("pooling");
  const std::string value = e ? e->value : "avg";
  if (value == "avg") return AveragePoolSpec{};
  if (value == "sif") {
    SifPoolSpec sif;
    sif.frequencies = s.require("frequencies").value;
    if (const auto* a = s.find("sif_a")) {
      sif.a = as_double(*a, "sif_a");
      if (!(sif.a > 0.0)) bad_value(*a, "sif_a", "positive");
    }
    if (const auto* r = s.find("remove_pc")) sif.remove_pc = as_bool(*r, "remove_pc");
    return sif;
  }
  try {
    return PoolConcatSpec{PoolOps::parse(value)};
  } catch (const Error&) {
    bad_value(*e, "pooling", "avg, sif or a list of min/avg/max");
  }
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir,
                       std::optional<std::uint64_t> seed_override) {
  auto sections = split_sections(text);
  RunConfig cfg;
  cfg.output = (base_dir / "results").lexically_normal();

  // [run] first so its seed is the default everywhere else.
  bool seen_run = false;
  for (auto& s : sections) {
    if (s.kind != "run") continue;
    if (seen_run) throw ConfigError(fmt::format("line {}: duplicate [run]", s.line));
    seen_run = true;
    require_name(s, false);
    if (const auto* e = s.find("seed")) cfg.seed = as_u64(*e, "seed");
    if (const auto* e = s.find("output")) cfg.output = as_path(*e, base_dir);
    if (const auto* e = s.find("workers")) {
      cfg.workers = as_size(*e, "workers");
      if (cfg.workers == 0) bad_value(*e, "workers", "positive");
    }
    s.reject_unknown();
  }
  if (seed_override) cfg.seed = *seed_override;

  std::set<std::pair<std::string, std::string>> names;
  for (auto& s : sections) {
    if (s.kind == "run") continue;
    if (s.kind == "vectors" || s.kind == "frequencies" || s.kind == "encoder" || s.kind == "task") {
      require_name(s, true);
      if (!names.insert({s.kind, s.name}).second) {
        throw ConfigError(fmt::format("line {}: duplicate [{} {}]", s.line, s.kind, s.name));
      }
    }
    if (s.kind == "vectors") {
      VectorsDecl v{s.name, as_path(s.require("path"), base_dir), std::nullopt};
      if (const auto* e = s.find("dim")) {
        v.dim = as_size(*e, "dim");
        if (*v.dim == 0) bad_value(*e, "dim", "positive");
      }
      cfg.vectors.push_back(std::move(v));
    } else if (s.kind == "frequencies") {
      cfg.frequencies.push_back({s.name, as_path(s.require("path"), base_dir)});
    } else if (s.kind == "encoder") {
      EncoderDecl d;
      d.name = s.name;
      d.line = s.line;
      const auto* concat = s.find("concat");
      const auto* pre = s.find("precomputed");
      const auto* vec = s.find("vectors");
      if ((concat != nullptr) + (pre != nullptr) + (vec != nullptr) != 1) {
        throw ConfigError(fmt::format(
            "line {}: [encoder {}] needs exactly one of vectors, concat, precomputed", s.line,
            s.name));
      }
      if (concat) {
        d.concat = as_list(*concat);
        if (d.concat.empty()) bad_value(*concat, "concat", "a non-empty list");
      } else if (pre) {
        const auto p = std::filesystem::path(pre->value);
        d.precomputed = (p.is_absolute() ? p : base_dir / p).lexically_normal().string();
      } else {
        WordEncoderSpec w;
        w.vectors = vec->value;
        w.pooling = read_pooling(s);
        if (const auto* e = s.find("projection_dim")) {
          RandomProject rp;
          rp.target_dim = as_size(*e, "projection_dim");
          if (rp.target_dim == 0) bad_value(*e, "projection_dim", "positive");
          rp.seed = cfg.seed;
          if (const auto* ps = s.find("projection_seed")) rp.seed = as_u64(*ps, "projection_seed");
          w.projection = rp;
        }
        d.word = std::move(w);
      }
      cfg.encoders.push_back(std::move(d));
    } else if (s.kind == "task") {
      const auto& type = s.require("type");
      if (type.value == "sts") {
        cfg.tasks.push_back({s.name, StsTaskDecl{as_path(s.require("train"), base_dir),
                                                 as_path(s.require("dev"), base_dir),
                                                 as_path(s.require("test"), base_dir)}});
      } else if (type.value == "classification") {
        ClassificationTaskDecl c;
        c.path = as_path(s.require("path"), base_dir);
        const auto& classes = s.require("classes");
        c.manifest.n_classes = as_size(classes, "classes");
        if (c.manifest.n_classes < 2) bad_value(classes, "classes", "at least 2");
        const auto* split = s.find("split");
        if (!split || split->value == "cv") {
          CrossValidation cv;
          cv.seed = cfg.seed;
          if (const auto* e = s.find("folds")) cv.folds = as_size(*e, "folds");
          if (cv.folds < 2) bad_value(*s.find("folds"), "folds", "at least 2");
          if (const auto* e = s.find("seed")) cv.seed = as_u64(*e, "seed");
          c.manifest.split = cv;
        } else if (split->value == "fixed") {
          FixedCounts fc;
          fc.train_count = as_size(s.require("train_count"), "train_count");
          if (const auto* e = s.find("dev_count")) fc.dev_count = as_size(*e, "dev_count");
          c.manifest.split = fc;
        } else {
          bad_value(*split, "split", "cv or fixed");
        }
        cfg.tasks.push_back({s.name, std::move(c)});
      } else {
        bad_value(type, "type", "sts or classification");
      }
    } else if (s.kind == "eval") {
      require_name(s, false);
      EvaluationDecl ev;
      ev.line = s.line;
      ev.task = s.require("task").value;
      ev.encoder = s.require("encoder").value;
      const auto& proto = s.require("protocol");
      if (proto.value == "ucp") {
        ev.protocol = Protocol::Ucp;
      } else if (proto.value == "learned_sim") {
        ev.protocol = Protocol::LearnedSim;
      } else if (proto.value == "classify") {
        ev.protocol = Protocol::Classify;
      } else {
        bad_value(proto, "protocol", "ucp, learned_sim or classify");
      }
      ev.normalization = read_normalization(s);
      read_classifier(s, ev.classifier, cfg.seed);
      cfg.evaluations.push_back(std::move(ev));
    } else if (s.kind == "sweep") {
      require_name(s, false);
      if (cfg.sweep) throw ConfigError(fmt::format("line {}: duplicate [sweep]", s.line));
      SweepDecl sw;
      sw.tasks = as_list(s.require("tasks"));
      sw.vectors = s.require("vectors").value;
      const auto& sizes = s.require("sizes");
      for (const auto& item : as_list(sizes)) sw.sizes.push_back(as_size({item, sizes.line}, "sizes"));
      if (sw.sizes.empty()) bad_value(sizes, "sizes", "a non-empty list");
      for (std::size_t i = 0; i < sw.sizes.size(); ++i) {
        if (sw.sizes[i] == 0 || (i > 0 && sw.sizes[i] <= sw.sizes[i - 1])) {
          bad_value(sizes, "sizes", "strictly increasing positive integers");
        }
      }
      sw.projection_seed = cfg.seed;
      if (const auto* e = s.find("projection_seed")) sw.projection_seed = as_u64(*e, "projection_seed");
      if (const auto* e = s.find("pooling")) {
        try {
          sw.pooling = PoolOps::parse(e->value);
        } catch (const Error&) {
          bad_value(*e, "pooling", "a list of min/avg/max");
        }
      }
      read_classifier(s, sw.classifier, cfg.seed);
      const auto mode = read_normalization(s);
      if (mode == NormalizationMode::Both) {
        bad_value(*s.find("normalization"), "normalization", "on or off for a sweep");
      }
      sw.normalized = mode == NormalizationMode::On;
      if (const auto* e = s.find("references")) sw.references = as_list(*e);
      cfg.sweep = std::move(sw);
    } else if (s.kind == "analysis") {
      require_name(s, false);
      if (cfg.analysis) throw ConfigError(fmt::format("line {}: duplicate [analysis]", s.line));
      AnalysisDecl a;
      if (const auto* e = s.find("metric")) a.metric = e->value;
      if (const auto* e = s.find("pair_scale")) a.pair_scale = as_double(*e, "pair_scale");
      if (const auto* e = s.find("table")) a.table = as_path(*e, base_dir);
      cfg.analysis = std::move(a);
    } else {
      throw ConfigError(fmt::format("line {}: unknown section [{}]", s.line, s.kind));
    }
    s.reject_unknown();
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path,
                      std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path(), seed_override);
}

namespace {

template <typename T>
const T* find_named(const std::vector<T>& items, const std::string& name) {
  for (const auto& i : items) {
    if (i.name == name) return &i;
  }
  return nullptr;
}

EncoderSpec resolve(const RunConfig& cfg, const std::string& name,
                    std::vector<std::string>& stack) {
  if (std::find(stack.begin(), stack.end(), name) != stack.end()) {
    throw ConfigError(fmt::format("encoder '{}' is part of a concat cycle", name));
  }
  const auto* d = find_named(cfg.encoders, name);
  if (!d) throw ConfigError(fmt::format("unknown encoder '{}'", name));
  EncoderSpec spec;
  spec.name = name;
  if (d->word) {
    spec.body = *d->word;
  } else if (d->precomputed) {
    spec.body = PrecomputedSpec{*d->precomputed};
  } else {
    stack.push_back(name);
    ConcatSpec c;
    for (const auto& m : d->concat) c.members.push_back(resolve(cfg, m, stack));
    stack.pop_back();
    spec.body = std::move(c);
  }
  return spec;
}

void check_encoder_resources(const RunConfig& cfg, const EncoderSpec& spec,
                             std::vector<std::string>& errors) {
  std::visit(
      [&](const auto& body) {
        using B = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<B, WordEncoderSpec>) {
          if (!find_named(cfg.vectors, body.vectors)) {
            errors.push_back(
                fmt::format("encoder '{}': unknown vectors '{}'", spec.name, body.vectors));
          }
          if (const auto* sif = std::get_if<SifPoolSpec>(&body.pooling)) {
            if (!find_named(cfg.frequencies, sif->frequencies)) {
              errors.push_back(fmt::format("encoder '{}': unknown frequencies '{}'", spec.name,
                                           sif->frequencies));
            }
          }
        } else if constexpr (std::is_same_v<B, ConcatSpec>) {
          for (const auto& m : body.members) check_encoder_resources(cfg, m, errors);
        } else {
          const auto pos = body.path.find("{split}");
          bool any = false;
          if (pos == std::string::npos) {
            any = std::filesystem::exists(body.path);
          } else {
            for (const char* split : {"train", "dev", "test"}) {
              std::string p = body.path;
              p.replace(pos, 7, split);
              any = any || std::filesystem::exists(p);
            }
          }
          if (!any) {
            errors.push_back(
                fmt::format("encoder '{}': precomputed file '{}' not found", spec.name, body.path));
          }
        }
      },
      spec.body);
}

void check_file(const std::filesystem::path& p, const std::string& what,
                std::vector<std::string>& errors) {
  if (!std::filesystem::is_regular_file(p)) {
    errors.push_back(fmt::format("{}: file '{}' not found", what, p.string()));
  }
}

}  // namespace

EncoderSpec resolve_encoder(const RunConfig& config, const std::string& name) {
  std::vector<std::string> stack;
  return resolve(config, name, stack);
}

std::vector<std::string> validate_config(const RunConfig& cfg) {
  std::vector<std::string> errors;
  for (const auto& v : cfg.vectors) check_file(v.path, "vectors '" + v.name + "'", errors);
  for (const auto& f : cfg.frequencies) check_file(f.path, "frequencies '" + f.name + "'", errors);
  for (const auto& t : cfg.tasks) {
    if (const auto* sts = std::get_if<StsTaskDecl>(&t.body)) {
      check_file(sts->train, "task '" + t.name + "'", errors);
      check_file(sts->dev, "task '" + t.name + "'", errors);
      check_file(sts->test, "task '" + t.name + "'", errors);
    } else {
      check_file(std::get<ClassificationTaskDecl>(t.body).path, "task '" + t.name + "'", errors);
    }
  }
  for (const auto& e : cfg.encoders) {
    try {
      check_encoder_resources(cfg, resolve_encoder(cfg, e.name), errors);
    } catch (const ConfigError& err) {
      errors.push_back(fmt::format("line {}: {}", e.line, err.what()));
    }
  }
  for (const auto& ev : cfg.evaluations) {
    const auto* task = find_named(cfg.tasks, ev.task);
    if (!task) {
      errors.push_back(fmt::format("line {}: unknown task '{}'", ev.line, ev.task));
    } else {
      const bool pair_task = std::holds_alternative<StsTaskDecl>(task->body);
      if (pair_task != (ev.protocol != Protocol::Classify)) {
        errors.push_back(fmt::format("line {}: protocol '{}' does not apply to task '{}'", ev.line,
                                     to_string(ev.protocol), ev.task));
      }
    }
    if (!find_named(cfg.encoders, ev.encoder)) {
      errors.push_back(fmt::format("line {}: unknown encoder '{}'", ev.line, ev.encoder));
    }
  }
  if (cfg.sweep) {
    if (!find_named(cfg.vectors, cfg.sweep->vectors)) {
      errors.push_back(fmt::format("sweep: unknown vectors '{}'", cfg.sweep->vectors));
    }
    for (const auto& t : cfg.sweep->tasks) {
      const auto* task = find_named(cfg.tasks, t);
      if (!task || !std::holds_alternative<ClassificationTaskDecl>(task->body)) {
        errors.push_back(fmt::format("sweep: '{}' is not a classification task", t));
      }
    }
    for (const auto& r : cfg.sweep->references) {
      if (!find_named(cfg.encoders, r)) {
        errors.push_back(fmt::format("sweep: unknown reference encoder '{}'", r));
      }
    }
  }
  if (cfg.analysis && cfg.analysis->table) {
    check_file(*cfg.analysis->table, "analysis table", errors);
  }
  if (cfg.evaluations.empty() && !cfg.sweep && !(cfg.analysis && cfg.analysis->table)) {
    errors.push_back("config declares nothing to run");
  }
  return errors;
}

std::size_t cell_count(const RunConfig& config) {
  std::size_t n = 0;
  for (const auto& ev : config.evaluations) {
    n += ev.normalization == NormalizationMode::Both ? 2 : 1;
  }
  return n;
}

}  // namespace embeval

#include "embeval/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "embeval/error.hpp"
#include "line_reader.hpp"

namespace embeval {

LoadError::LoadError(std::string path, std::size_t line, const std::string& what)
    : Error(line > 0 ? fmt::format("{}:{}: {}", path, line, what)
                     : fmt::format("{}: {}", path, what)),
      path_(std::move(path)),
      line_(line) {}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
    case Split::All: return "all";
  }
  return "?";
}

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 128 && std::ispunct(u);
}

char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

}  // namespace

Sentence tokenize(std::string_view raw) {
  Sentence s;
  s.raw = std::string(raw);
  std::size_t i = 0;
  while (i < raw.size()) {
    while (i < raw.size() && is_space(raw[i])) ++i;
    std::size_t j = i;
    while (j < raw.size() && !is_space(raw[j])) ++j;
    if (j > i) {
      std::string_view chunk = raw.substr(i, j - i);
      std::size_t b = 0, e = chunk.size();
      while (b < e && is_punct(chunk[b])) ++b;
      while (e > b && is_punct(chunk[e - 1])) --e;
      if (b == e) {
        b = 0;
        e = chunk.size();
      }
      std::string tok(chunk.substr(b, e - b));
      std::transform(tok.begin(), tok.end(), tok.begin(), lower);
      s.tokens.push_back(std::move(tok));
    }
    i = j;
  }
  return s;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::vector<const Sentence*> PairSplit::stacked() const {
  std::vector<const Sentence*> out;
  out.reserve(2 * pairs.size());
  for (const auto& p : pairs) {
    out.push_back(&p.first);
    out.push_back(&p.second);
  }
  return out;
}

PairSplit load_sts_benchmark(const std::filesystem::path& path, Split split) {
  detail::LineReader reader(path);
  PairSplit out;
  out.split = split;
  std::string line;
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto fields = detail::split_tabs(line);
    if (fields.size() < 7) {
      throw LoadError(path.string(), reader.line_number(),
                      fmt::format("expected 7 tab-separated fields, got {}", fields.size()));
    }
    double score = 0.0;
    const auto& f = fields[4];
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), score);
    if (ec != std::errc{} || ptr != f.data() + f.size()) {
      throw LoadError(path.string(), reader.line_number(),
                      fmt::format("non-numeric score '{}'", f));
    }
    if (!(score >= 0.0 && score <= 5.0)) {
      throw LoadError(path.string(), reader.line_number(),
                      fmt::format("score {} outside [0,5]", f));
    }
    out.pairs.push_back({tokenize(fields[5]), tokenize(fields[6]), score});
  }
  if (out.pairs.empty()) throw LoadError(path.string(), 0, "split is empty");
  return out;
}

PairDataset PairDataset::load(const std::filesystem::path& train,
                              const std::filesystem::path& dev,
                              const std::filesystem::path& test) {
  return {load_sts_benchmark(train, Split::Train), load_sts_benchmark(dev, Split::Dev),
          load_sts_benchmark(test, Split::Test)};
}

std::vector<int> LabeledDataset::labels() const {
  std::vector<int> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back(e.label);
  return out;
}

std::vector<const Sentence*> LabeledDataset::sentences() const {
  std::vector<const Sentence*> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back(&e.sentence);
  return out;
}

std::vector<Partition> LabeledDataset::partitions() const {
  if (const auto* fixed = std::get_if<FixedSplit>(&policy)) {
    return {Partition{fixed->train, fixed->dev, fixed->test}};
  }
  const auto& cv = std::get<CrossValidation>(policy);
  return cv_partitions(examples.size(), cv.folds, cv.seed);
}

std::vector<std::size_t> assign_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(fmt::format("cross-validation needs at least 2 folds, got {}", k));
  if (k > n) throw Error(fmt::format("cannot split {} examples into {} folds", n, k));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> fold(n);
  for (std::size_t j = 0; j < n; ++j) fold[order[j]] = j % k;
  return fold;
}

std::vector<Partition> cv_partitions(std::size_t n, std::size_t k, std::uint64_t seed) {
  const auto fold = assign_folds(n, k, seed);
  std::vector<Partition> parts(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < k; ++f) {
      (fold[i] == f ? parts[f].test : parts[f].train).push_back(i);
    }
  }
  return parts;
}

LabeledDataset load_labeled_dataset(const std::filesystem::path& path,
                                    const DatasetManifest& manifest) {
  if (manifest.n_classes == 0) throw LoadError(path.string(), 0, "n_classes must be positive");
  detail::LineReader reader(path);
  LabeledDataset out;
  out.name = path.stem().string();
  out.n_classes = manifest.n_classes;
  std::string line;
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw LoadError(path.string(), reader.line_number(), "expected 'label<TAB>text'");
    }
    long label = -1;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + tab, label);
    if (ec != std::errc{} || ptr != line.data() + tab) {
      throw LoadError(path.string(), reader.line_number(),
                      fmt::format("non-integer label '{}'", line.substr(0, tab)));
    }
    if (label < 0 || static_cast<std::size_t>(label) >= manifest.n_classes) {
      throw LoadError(path.string(), reader.line_number(),
                      fmt::format("label {} outside [0,{})", label, manifest.n_classes));
    }
    out.examples.push_back({tokenize(std::string_view(line).substr(tab + 1)),
                            static_cast<int>(label)});
  }
  if (out.examples.empty()) throw LoadError(path.string(), 0, "empty dataset");

  const std::size_t n = out.examples.size();
  if (const auto* counts = std::get_if<FixedCounts>(&manifest.split)) {
    if (counts->train_count == 0 || counts->train_count + counts->dev_count >= n) {
      throw LoadError(path.string(), 0,
                      fmt::format("fixed split train={} dev={} leaves no test examples out of {}",
                                  counts->train_count, counts->dev_count, n));
    }
    FixedSplit fixed;
    for (std::size_t i = 0; i < n; ++i) {
      if (i < counts->train_count) {
        fixed.train.push_back(i);
      } else if (i < counts->train_count + counts->dev_count) {
        fixed.dev.push_back(i);
      } else {
        fixed.test.push_back(i);
      }
    }
    out.policy = std::move(fixed);
  } else {
    const auto& cv = std::get<CrossValidation>(manifest.split);
    if (cv.folds < 2 || cv.folds > n) {
      throw LoadError(path.string(), 0,
                      fmt::format("cannot split {} examples into {} folds", n, cv.folds));
    }
    out.policy = cv;
  }
  return out;
}

}  // namespace embeval

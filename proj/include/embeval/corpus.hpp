#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace embeval {

/// Dataset partition tag. `All` marks statistics fitted on a whole evaluated
/// matrix (the unsupervised setting, where no train split exists).
enum class Split { Train, Dev, Test, All };

std::string_view to_string(Split split);

struct Sentence {
  std::vector<std::string> tokens;
  std::string raw;
};

/// Frozen tokenization rule shared by every encoder:
///   1. ASCII letters are lowercased (other bytes pass through unchanged);
///   2. the text is split on whitespace;
///   3. leading and trailing ASCII punctuation is stripped from each chunk,
///      unless the chunk is punctuation only, in which case it is kept whole.
/// Rule 3's exception keeps every non-blank input non-empty and makes the
/// function idempotent on its own re-joined output.
Sentence tokenize(std::string_view raw);

std::string join_tokens(const std::vector<std::string>& tokens);

struct ScoredPair {
  Sentence first;
  Sentence second;
  double gold = 0.0;  // [0, 5]
};

struct PairSplit {
  Split split = Split::Test;
  std::vector<ScoredPair> pairs;

  /// Sentences in stacked order: row 2i is pairs[i].first, row 2i+1 is
  /// pairs[i].second. Precomputed-embedding ids follow the same order.
  std::vector<const Sentence*> stacked() const;
};

/// Reads one split of STSBenchmark (tab separated: genre, file, year, index,
/// score, sentence1, sentence2). Trailing extra fields are ignored.
PairSplit load_sts_benchmark(const std::filesystem::path& path, Split split);

struct PairDataset {
  PairSplit train;
  PairSplit dev;
  PairSplit test;

  static PairDataset load(const std::filesystem::path& train,
                          const std::filesystem::path& dev,
                          const std::filesystem::path& test);
};

struct LabeledExample {
  Sentence sentence;
  int label = 0;
};

struct FixedSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> dev;  // may be empty
  std::vector<std::size_t> test;
};

struct CrossValidation {
  std::size_t folds = 10;
  std::uint64_t seed = 0;
};

using SplitPolicy = std::variant<FixedSplit, CrossValidation>;

/// Manifest form of a fixed split: the file lists `train_count` training
/// lines, then `dev_count` dev lines, then the test lines.
struct FixedCounts {
  std::size_t train_count = 0;
  std::size_t dev_count = 0;
};

struct DatasetManifest {
  std::size_t n_classes = 2;
  std::variant<FixedCounts, CrossValidation> split = CrossValidation{};
};

/// One outer evaluation split (a CV fold or the fixed split).
struct Partition {
  std::vector<std::size_t> train;
  std::vector<std::size_t> dev;
  std::vector<std::size_t> test;
};

struct LabeledDataset {
  std::string name;
  std::vector<LabeledExample> examples;
  std::size_t n_classes = 2;
  SplitPolicy policy = CrossValidation{};

  std::vector<int> labels() const;
  std::vector<const Sentence*> sentences() const;
  std::vector<Partition> partitions() const;
};

/// Fold id of every index in [0, n): a seeded shuffle dealt round-robin, so
/// fold sizes differ by at most one.
std::vector<std::size_t> assign_folds(std::size_t n, std::size_t k,
                                      std::uint64_t seed);

std::vector<Partition> cv_partitions(std::size_t n, std::size_t k,
                                     std::uint64_t seed);

LabeledDataset load_labeled_dataset(const std::filesystem::path& path,
                                    const DatasetManifest& manifest);

}  // namespace embeval

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "embeval/classifiers.hpp"
#include "embeval/compose.hpp"
#include "embeval/corpus.hpp"

namespace embeval {

// Run configuration: a sectioned key=value text file.
//
//   [run]                      seed, output, workers
//   [vectors NAME]             path, dim (optional)
//   [frequencies NAME]         path                    (SIF word counts)
//   [encoder NAME]             one of:
//                                vectors=V, pooling=avg|sif|min,avg,max,
//                                  projection_dim, projection_seed,
//                                  frequencies, sif_a, remove_pc (sif only)
//                                concat=A,B,...
//                                precomputed=PATH      ("{split}" allowed)
//   [task NAME]                type=sts (train, dev, test) or
//                              type=classification (path, classes,
//                                split=cv + folds [+ seed] |
//                                split=fixed + train_count [+ dev_count])
//   [eval]                     task, encoder, protocol=ucp|learned_sim|classify,
//                              normalization=on|off|both, classifier=logreg|mlp,
//                              l2_grid, hidden_sizes, max_epochs, tolerance,
//                              inner_folds, seed           (repeatable)
//   [sweep]                    tasks, vectors, sizes, projection_seed,
//                              pooling, classifier..., normalization,
//                              references
//   [analysis]                 metric, pair_scale, table
//
// '#' starts a comment. Relative paths resolve against the config file.

enum class Protocol { Ucp, LearnedSim, Classify };
enum class NormalizationMode { Off, On, Both };

std::string_view to_string(Protocol p);

struct VectorsDecl {
  std::string name;
  std::filesystem::path path;
  std::optional<std::size_t> dim;
};

struct FrequenciesDecl {
  std::string name;
  std::filesystem::path path;
};

/// Encoder section before name resolution.
struct EncoderDecl {
  std::string name;
  std::size_t line = 0;
  std::optional<WordEncoderSpec> word;
  std::vector<std::string> concat;
  std::optional<std::string> precomputed;
};

struct StsTaskDecl {
  std::filesystem::path train, dev, test;
};

struct ClassificationTaskDecl {
  std::filesystem::path path;
  DatasetManifest manifest;
};

struct TaskDecl {
  std::string name;
  std::variant<StsTaskDecl, ClassificationTaskDecl> body;
};

struct EvaluationDecl {
  std::size_t line = 0;
  std::string task;
  std::string encoder;
  Protocol protocol = Protocol::Classify;
  NormalizationMode normalization = NormalizationMode::Off;
  ClassifierSpec classifier;  // l2_grid doubles as the ridge grid
};

struct SweepDecl {
  std::vector<std::string> tasks;
  std::string vectors;
  std::vector<std::size_t> sizes;
  std::uint64_t projection_seed = 0;
  PoolOps pooling{false, true, false};
  ClassifierSpec classifier;
  bool normalized = false;
  std::vector<std::string> references;
};

struct AnalysisDecl {
  std::optional<std::string> metric;  // default: pearson for pair tasks, accuracy otherwise
  double pair_scale = 1.0;  // 0.1 shrinks sentence-pair bars tenfold
  std::optional<std::filesystem::path> table;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::filesystem::path output = "results";
  std::size_t workers = 1;
  std::vector<VectorsDecl> vectors;
  std::vector<FrequenciesDecl> frequencies;
  std::vector<EncoderDecl> encoders;
  std::vector<TaskDecl> tasks;
  std::vector<EvaluationDecl> evaluations;
  std::optional<SweepDecl> sweep;
  std::optional<AnalysisDecl> analysis;
};

/// Parses text; relative paths are resolved against `base_dir`. Syntax errors
/// throw ConfigError naming the line. `seed_override` replaces [run] seed
/// wherever it acts as a default.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir,
                       std::optional<std::uint64_t> seed_override = std::nullopt);

RunConfig load_config(const std::filesystem::path& path,
                      std::optional<std::uint64_t> seed_override = std::nullopt);

/// Name resolution, value checks and file-existence checks. Reads no dataset
/// contents. Returns every problem found (empty when valid).
std::vector<std::string> validate_config(const RunConfig& config);

/// Resolves an encoder declaration (and concat members) into a spec tree.
EncoderSpec resolve_encoder(const RunConfig& config, const std::string& name);

/// Number of (evaluation, normalization flag) cells after expanding "both".
std::size_t cell_count(const RunConfig& config);

}  // namespace embeval

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "embeval/corpus.hpp"
#include "embeval/wordvec.hpp"

namespace embeval {

/// A sentence embedding plus the fully-out-of-vocabulary flag. Fully OOV
/// sentences map to the zero vector.
struct Encoded {
  Eigen::VectorXd vector;
  bool fully_oov = false;
};

/// Subset of {min, avg, max}; blocks are always emitted in that order.
struct PoolOps {
  bool min = false;
  bool avg = false;
  bool max = false;

  std::size_t count() const { return std::size_t{min} + avg + max; }
  std::string str() const;
  /// Parses a comma separated list such as "min,avg,max".
  static PoolOps parse(const std::string& text);
};

Encoded encode_average(const WordVectors& wv, const Sentence& s);

Encoded encode_pool_concat(const WordVectors& wv, const Sentence& s, PoolOps ops);

// ---------------------------------------------------------------------------
// SIF

inline constexpr double kSifDefaultA = 1e-3;
inline constexpr double kSifFrequencyFloor = 1e-7;

struct SifModel {
  double a = kSifDefaultA;
  std::unordered_map<std::string, double> freq;  // relative frequencies in (0, 1]
  std::optional<Eigen::VectorXd> pc;             // unit norm when present

  double frequency(const std::string& word) const;
};

/// Reads "word count" lines and converts counts to relative frequencies.
SifModel load_sif_frequencies(const std::filesystem::path& path, double a = kSifDefaultA);

/// a / (a + p(w)) for every token (OOV tokens included; pooling skips them).
std::vector<double> sif_weights(const SifModel& model, const Sentence& s);

/// Weighted sum of in-vocabulary token vectors divided by their count, with
/// the model's common component removed when one is fitted.
Encoded encode_sif(const WordVectors& wv, const SifModel& model, const Sentence& s);

/// Dominant right singular vector of the uncentered matrix, by power
/// iteration on X^T X (relative tolerance 1e-9, at most 1000 iterations).
/// The start vector is the basis vector of the highest-energy column, so on
/// an exactly degenerate spectrum the first converged direction is returned.
/// Sign convention: the largest-magnitude entry is positive.
Eigen::VectorXd sif_fit_pc(const Eigen::MatrixXd& embeddings);

Eigen::VectorXd sif_remove_pc(const Eigen::VectorXd& pc, const Eigen::VectorXd& v);

// ---------------------------------------------------------------------------
// Random projection

/// Fixed target_dim x source_dim matrix with i.i.d. N(0, 1/sqrt(source_dim))
/// entries generated from the seed in row-major order.
class RandomProjection {
 public:
  RandomProjection(std::size_t source_dim, std::size_t target_dim, std::uint64_t seed);

  /// Test hook: a square identity map.
  static RandomProjection identity(std::size_t dim);

  Eigen::VectorXd apply(std::span<const float> word) const;
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  std::size_t source_dim() const { return static_cast<std::size_t>(matrix_.cols()); }
  std::size_t target_dim() const { return static_cast<std::size_t>(matrix_.rows()); }

 private:
  explicit RandomProjection(Eigen::MatrixXd m) : matrix_(std::move(m)) {}
  Eigen::MatrixXd matrix_;
};

Encoded encode_random_projection(const WordVectors& wv, const Sentence& s,
                                 std::size_t target_dim, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Encoders

/// Identifies a sentence for encoders that serve stored rows: the split it
/// came from and its position in that split's embedding order (example index
/// for labeled data, stacked row 2i / 2i+1 for pairs).
struct SentenceKey {
  Split split = Split::All;
  std::size_t index = 0;
};

/// Common-component removal fitted on training rows, per column block.
struct ComponentRemoval {
  struct Block {
    std::size_t offset = 0;
    Eigen::VectorXd pc;
  };
  std::vector<Block> blocks;

  bool empty() const { return blocks.empty(); }
  void apply(Eigen::MatrixXd& rows) const;
};

class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual std::size_t output_dim() const = 0;
  virtual Encoded encode(const Sentence& s, const SentenceKey& key) const = 0;

  /// Fits the data-dependent stage on training rows of encode() output. The
  /// encoder itself is not modified.
  virtual ComponentRemoval fit(const Eigen::MatrixXd& train_rows) const;

  virtual std::string describe() const = 0;
};

using EncoderPtr = std::shared_ptr<const Encoder>;

struct AveragePool {};
struct SifPool {
  std::shared_ptr<const SifModel> model;
  bool remove_pc = true;
};
struct ConcatPool {
  PoolOps ops;
};
using Pooling = std::variant<AveragePool, SifPool, ConcatPool>;

/// Word vectors, an optional random projection applied to every word vector,
/// then pooling over in-vocabulary tokens.
class WordPoolEncoder final : public Encoder {
 public:
  WordPoolEncoder(std::shared_ptr<const WordVectors> wv, Pooling pooling,
                  std::optional<RandomProjection> projection = std::nullopt);

  std::size_t output_dim() const override { return output_dim_; }
  Encoded encode(const Sentence& s, const SentenceKey& key) const override;
  ComponentRemoval fit(const Eigen::MatrixXd& train_rows) const override;
  std::string describe() const override;

 private:
  std::shared_ptr<const WordVectors> wv_;
  Pooling pooling_;
  std::optional<RandomProjection> projection_;
  std::size_t word_dim_;
  std::size_t output_dim_;
};

class ConcatEncoder final : public Encoder {
 public:
  explicit ConcatEncoder(std::vector<EncoderPtr> members);

  std::size_t output_dim() const override { return output_dim_; }
  Encoded encode(const Sentence& s, const SentenceKey& key) const override;
  ComponentRemoval fit(const Eigen::MatrixXd& train_rows) const override;
  std::string describe() const override;

 private:
  std::vector<EncoderPtr> members_;
  std::size_t output_dim_ = 0;
};

EncoderPtr concat_encoders(std::vector<EncoderPtr> members);

/// Serves stored vectors by SentenceKey. Tables are registered per split; a
/// table registered under Split::All answers for any split.
class PrecomputedEncoder final : public Encoder {
 public:
  explicit PrecomputedEncoder(std::string name) : name_(std::move(name)) {}

  void add_table(Split split, std::map<std::size_t, Eigen::VectorXd> rows);
  void load_table(Split split, const std::filesystem::path& path);

  std::size_t output_dim() const override { return dim_; }
  Encoded encode(const Sentence& s, const SentenceKey& key) const override;
  std::string describe() const override { return "precomputed(" + name_ + ")"; }

 private:
  std::string name_;
  std::size_t dim_ = 0;
  std::map<Split, std::map<std::size_t, Eigen::VectorXd>> tables_;
};

/// Reads "id<TAB>v1 v2 ... vD" rows into an encoder answering for any split.
std::shared_ptr<PrecomputedEncoder> load_precomputed(const std::filesystem::path& path);

/// Encodes a batch into an N x D matrix and records fully-OOV rows.
struct EmbeddedRows {
  Eigen::MatrixXd rows;
  std::vector<std::size_t> oov_rows;
};

EmbeddedRows embed(const Encoder& encoder, std::span<const Sentence* const> sentences,
                   Split split);

// ---------------------------------------------------------------------------
// Declarative specs (built into encoders against loaded resources)

struct RandomProject {
  std::size_t target_dim = 0;
  std::uint64_t seed = 0;
};

struct AveragePoolSpec {};
struct SifPoolSpec {
  double a = kSifDefaultA;
  std::string frequencies;  // resource name
  bool remove_pc = true;
};
struct PoolConcatSpec {
  PoolOps ops;
};

struct WordEncoderSpec {
  std::string vectors;  // resource name
  std::optional<RandomProject> projection;
  std::variant<AveragePoolSpec, SifPoolSpec, PoolConcatSpec> pooling;
};

struct EncoderSpec;
struct ConcatSpec {
  std::vector<EncoderSpec> members;
};

/// `path` may contain "{split}", replaced by train/dev/test; files that do not
/// exist for a split are simply not registered.
struct PrecomputedSpec {
  std::string path;
};

struct EncoderSpec {
  std::string name;
  std::variant<WordEncoderSpec, ConcatSpec, PrecomputedSpec> body;
};

struct EncoderResources {
  std::map<std::string, std::shared_ptr<const WordVectors>> vectors;
  std::map<std::string, std::shared_ptr<const SifModel>> frequencies;
};

EncoderPtr build_encoder(const EncoderSpec& spec, const EncoderResources& resources);

}  // namespace embeval

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace embeval {

/// Immutable word -> vector store. Values are kept in single precision; a
/// 400k x 300 vocabulary is ~480 MB as float and twice that as double.
class WordVectors {
 public:
  WordVectors(std::string name, std::size_t dim);

  /// Inserts unless the word already exists; returns false for duplicates
  /// (the first occurrence wins).
  bool add(const std::string& word, std::span<const float> values);

  std::optional<std::span<const float>> lookup(const std::string& token) const;

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return index_.size(); }
  const std::string& name() const { return name_; }
  std::size_t duplicate_count() const { return duplicates_; }

 private:
  std::string name_;
  std::size_t dim_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<float> data_;
  std::size_t duplicates_ = 0;
};

/// Only whitespace text is implemented; further formats get an enumerator
/// and a branch in load_word_vectors.
enum class VectorFormat { Text };

/// Text format: "word v1 ... vd" per line, with an optional "count dim"
/// header line (two integer fields) which is auto-detected.
WordVectors load_word_vectors(const std::filesystem::path& path,
                              std::optional<std::size_t> expected_dim = std::nullopt,
                              VectorFormat format = VectorFormat::Text);

}  // namespace embeval

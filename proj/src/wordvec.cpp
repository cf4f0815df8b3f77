#include "embeval/wordvec.hpp"

#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "embeval/error.hpp"
#include "line_reader.hpp"

namespace embeval {

WordVectors::WordVectors(std::string name, std::size_t dim) : name_(std::move(name)), dim_(dim) {
  if (dim == 0) throw Error("word vector dimension must be positive");
}

bool WordVectors::add(const std::string& word, std::span<const float> values) {
  if (values.size() != dim_) {
    throw DimensionMismatch(
        fmt::format("vector for '{}' has {} entries, expected {}", word, values.size(), dim_));
  }
  const auto [it, inserted] = index_.try_emplace(word, index_.size());
  if (!inserted) {
    ++duplicates_;
    return false;
  }
  data_.insert(data_.end(), values.begin(), values.end());
  return true;
}

std::optional<std::span<const float>> WordVectors::lookup(const std::string& token) const {
  const auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return std::span<const float>(data_.data() + it->second * dim_, dim_);
}

namespace {

template <typename T>
bool parse_number(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

WordVectors load_word_vectors(const std::filesystem::path& path,
                              std::optional<std::size_t> expected_dim, VectorFormat format) {
  if (format != VectorFormat::Text) throw LoadError(path.string(), 0, "unsupported vector format");
  if (expected_dim && *expected_dim == 0) {
    throw LoadError(path.string(), 0, "expected dimension must be positive");
  }
  detail::LineReader reader(path);
  std::optional<WordVectors> wv;
  std::optional<std::size_t> header_dim;
  std::vector<float> values;
  std::string line;
  bool first = true;
  while (reader.next(line)) {
    const auto fields = detail::split_ws(line);
    if (fields.empty()) continue;
    if (first) {
      first = false;
      std::size_t count = 0, dim = 0;
      if (fields.size() == 2 && parse_number(fields[0], count) && parse_number(fields[1], dim)) {
        if (dim == 0) throw LoadError(path.string(), reader.line_number(), "header declares dim 0");
        if (expected_dim && dim != *expected_dim) {
          throw LoadError(path.string(), reader.line_number(),
                          fmt::format("header declares dim {}, expected {}", dim, *expected_dim));
        }
        header_dim = dim;
        continue;
      }
    }
    const std::size_t dim = fields.size() - 1;
    if (!wv) {
      const auto want = header_dim ? header_dim : expected_dim;
      if (dim == 0 || (want && dim != *want)) {
        throw LoadError(path.string(), reader.line_number(),
                        fmt::format("line has {} values, expected {}", dim, want ? *want : 1));
      }
      wv.emplace(path.stem().string(), dim);
    } else if (dim != wv->dim()) {
      throw LoadError(path.string(), reader.line_number(),
                      fmt::format("line has {} values, expected {}", dim, wv->dim()));
    }
    values.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      if (!parse_number(fields[i + 1], values[i]) || !std::isfinite(values[i])) {
        throw LoadError(path.string(), reader.line_number(),
                        fmt::format("bad value '{}' in column {}", fields[i + 1], i + 2));
      }
    }
    wv->add(std::string(fields[0]), values);
  }
  if (!wv) throw LoadError(path.string(), 0, "no word vectors");
  return std::move(*wv);
}

}  // namespace embeval

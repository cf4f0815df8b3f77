#include "embeval/compose.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "embeval/error.hpp"
#include "line_reader.hpp"

namespace embeval {

namespace {

Eigen::VectorXd to_vector(std::span<const float> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

// In-vocabulary token vectors as rows (projected when a projection is given),
// plus each row's token position.
struct TokenRows {
  Eigen::MatrixXd rows;
  std::vector<std::size_t> positions;
};

TokenRows gather(const WordVectors& wv, const Sentence& s, const RandomProjection* projection) {
  const std::size_t dim = projection ? projection->target_dim() : wv.dim();
  std::vector<std::span<const float>> found;
  TokenRows out;
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    if (auto v = wv.lookup(s.tokens[i])) {
      found.push_back(*v);
      out.positions.push_back(i);
    }
  }
  out.rows.resize(static_cast<Eigen::Index>(found.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < found.size(); ++r) {
    out.rows.row(static_cast<Eigen::Index>(r)) =
        projection ? projection->apply(found[r]) : to_vector(found[r]);
  }
  return out;
}

Encoded sif_average(const TokenRows& t, std::size_t dim, const SifModel& model,
                    const Sentence& s) {
  const auto n = t.rows.rows();
  if (n == 0) return {Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim)), true};
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& word = s.tokens[t.positions[static_cast<std::size_t>(r)]];
    acc += model.a / (model.a + model.frequency(word)) * t.rows.row(r).transpose();
  }
  acc /= static_cast<double>(n);
  if (model.pc) acc = sif_remove_pc(*model.pc, acc);
  return {std::move(acc), false};
}

Encoded pool(const TokenRows& t, std::size_t dim, const Pooling& pooling, const Sentence& s) {
  const auto n = t.rows.rows();
  return std::visit(
      [&](const auto& p) -> Encoded {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, AveragePool>) {
          if (n == 0) return {Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim)), true};
          return {t.rows.colwise().mean().transpose(), false};
        } else if constexpr (std::is_same_v<P, SifPool>) {
          return sif_average(t, dim, *p.model, s);
        } else {
          const auto d = static_cast<Eigen::Index>(dim);
          Eigen::VectorXd out = Eigen::VectorXd::Zero(d * static_cast<Eigen::Index>(p.ops.count()));
          if (n == 0) return {std::move(out), true};
          Eigen::Index offset = 0;
          if (p.ops.min) {
            out.segment(offset, d) = t.rows.colwise().minCoeff().transpose();
            offset += d;
          }
          if (p.ops.avg) {
            out.segment(offset, d) = t.rows.colwise().mean().transpose();
            offset += d;
          }
          if (p.ops.max) out.segment(offset, d) = t.rows.colwise().maxCoeff().transpose();
          return {std::move(out), false};
        }
      },
      pooling);
}

std::size_t pooled_dim(std::size_t word_dim, const Pooling& pooling) {
  if (const auto* c = std::get_if<ConcatPool>(&pooling)) return word_dim * c->ops.count();
  return word_dim;
}

}  // namespace

std::string PoolOps::str() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(min, "min");
  add(avg, "avg");
  add(max, "max");
  return out;
}

PoolOps PoolOps::parse(const std::string& text) {
  PoolOps ops;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    std::string item = text.substr(start, comma - start);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item == "min") {
      ops.min = true;
    } else if (item == "avg" || item == "mean") {
      ops.avg = true;
    } else if (item == "max") {
      ops.max = true;
    } else {
      throw Error(fmt::format("unknown pooling op '{}'", item));
    }
    start = comma + 1;
  }
  return ops;
}

Encoded encode_average(const WordVectors& wv, const Sentence& s) {
  return pool(gather(wv, s, nullptr), wv.dim(), AveragePool{}, s);
}

Encoded encode_pool_concat(const WordVectors& wv, const Sentence& s, PoolOps ops) {
  if (ops.count() == 0) throw Error("pool_concat needs at least one op");
  return pool(gather(wv, s, nullptr), wv.dim(), ConcatPool{ops}, s);
}

double SifModel::frequency(const std::string& word) const {
  const auto it = freq.find(word);
  return it == freq.end() ? kSifFrequencyFloor : it->second;
}

SifModel load_sif_frequencies(const std::filesystem::path& path, double a) {
  if (!(a > 0.0)) throw LoadError(path.string(), 0, "SIF constant a must be positive");
  detail::LineReader reader(path);
  std::vector<std::pair<std::string, double>> counts;
  double total = 0.0;
  std::string line;
  while (reader.next(line)) {
    const auto fields = detail::split_ws(line);
    if (fields.empty()) continue;
    double c = 0.0;
    if (fields.size() != 2 ||
        std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), c).ec !=
            std::errc{} ||
        !(c > 0.0) || !std::isfinite(c)) {
      throw LoadError(path.string(), reader.line_number(), "expected 'word count' with count > 0");
    }
    counts.emplace_back(std::string(fields[0]), c);
    total += c;
  }
  if (counts.empty()) throw LoadError(path.string(), 0, "no frequencies");
  SifModel model;
  model.a = a;
  for (auto& [w, c] : counts) model.freq.try_emplace(std::move(w), c / total);
  return model;
}

std::vector<double> sif_weights(const SifModel& model, const Sentence& s) {
  std::vector<double> out;
  out.reserve(s.tokens.size());
  for (const auto& t : s.tokens) out.push_back(model.a / (model.a + model.frequency(t)));
  return out;
}

Encoded encode_sif(const WordVectors& wv, const SifModel& model, const Sentence& s) {
  if (!(model.a > 0.0)) throw Error("SIF constant a must be positive");
  return sif_average(gather(wv, s, nullptr), wv.dim(), model, s);
}

namespace {

struct PowerResult {
  Eigen::VectorXd v;
  double lambda = 0.0;
};

PowerResult power_iterate(const Eigen::MatrixXd& g, Eigen::VectorXd v) {
  constexpr double kTol = 1e-9;
  constexpr int kMaxIter = 1000;
  v.normalize();
  for (int it = 0; it < kMaxIter; ++it) {
    Eigen::VectorXd next = g * v;
    const double norm = next.norm();
    if (norm == 0.0) return {v, 0.0};
    next /= norm;
    const double change = (next - v).norm();
    v = std::move(next);
    if (change <= kTol) break;
  }
  return {v, v.dot(g * v)};
}

}  // namespace

Eigen::VectorXd sif_fit_pc(const Eigen::MatrixXd& embeddings) {
  if (embeddings.rows() < 2) throw Error("sif_fit_pc needs at least 2 rows");
  const Eigen::MatrixXd gram = embeddings.transpose() * embeddings;
  Eigen::Index start_col = 0;
  const double max_energy = gram.diagonal().maxCoeff(&start_col);
  if (!(max_energy > 0.0)) throw Error("degenerate PC");

  const auto d = gram.rows();
  auto best = power_iterate(gram, Eigen::VectorXd::Unit(d, start_col));

  // A basis start vector can be orthogonal to the dominant direction; a
  // second run on the deflated matrix detects a larger remaining eigenvalue.
  const Eigen::MatrixXd deflated = gram - best.lambda * best.v * best.v.transpose();
  Eigen::VectorXd probe = Eigen::VectorXd::Ones(d) + Eigen::VectorXd::Unit(d, start_col);
  const auto other = power_iterate(deflated, probe);
  if (other.lambda > best.lambda * (1.0 + 1e-9)) best = power_iterate(gram, other.v);

  Eigen::VectorXd pc = best.v;
  Eigen::Index arg = 0;
  pc.cwiseAbs().maxCoeff(&arg);
  if (pc[arg] < 0) pc = -pc;
  return pc;
}

Eigen::VectorXd sif_remove_pc(const Eigen::VectorXd& pc, const Eigen::VectorXd& v) {
  if (pc.size() != v.size()) {
    throw DimensionMismatch(fmt::format("pc has {} entries, vector {}", pc.size(), v.size()));
  }
  return v - pc.dot(v) * pc;
}

RandomProjection::RandomProjection(std::size_t source_dim, std::size_t target_dim,
                                   std::uint64_t seed) {
  if (source_dim == 0 || target_dim == 0) throw Error("projection dimensions must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(source_dim)));
  matrix_.resize(static_cast<Eigen::Index>(target_dim), static_cast<Eigen::Index>(source_dim));
  for (Eigen::Index i = 0; i < matrix_.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix_.cols(); ++j) matrix_(i, j) = normal(rng);
  }
}

RandomProjection RandomProjection::identity(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  return RandomProjection(Eigen::MatrixXd::Identity(d, d));
}

Eigen::VectorXd RandomProjection::apply(std::span<const float> word) const {
  if (word.size() != source_dim()) {
    throw DimensionMismatch(
        fmt::format("projection expects {} inputs, got {}", source_dim(), word.size()));
  }
  return matrix_ * to_vector(word);
}

Encoded encode_random_projection(const WordVectors& wv, const Sentence& s,
                                 std::size_t target_dim, std::uint64_t seed) {
  const RandomProjection projection(wv.dim(), target_dim, seed);
  return pool(gather(wv, s, &projection), target_dim, AveragePool{}, s);
}

void ComponentRemoval::apply(Eigen::MatrixXd& rows) const {
  for (const auto& b : blocks) {
    const auto off = static_cast<Eigen::Index>(b.offset);
    auto block = rows.middleCols(off, b.pc.size());
    const Eigen::VectorXd proj = block * b.pc;
    block -= proj * b.pc.transpose();
  }
}

ComponentRemoval Encoder::fit(const Eigen::MatrixXd&) const { return {}; }

WordPoolEncoder::WordPoolEncoder(std::shared_ptr<const WordVectors> wv, Pooling pooling,
                                 std::optional<RandomProjection> projection)
    : wv_(std::move(wv)), pooling_(std::move(pooling)), projection_(std::move(projection)) {
  if (!wv_) throw Error("word pool encoder needs word vectors");
  if (projection_ && projection_->source_dim() != wv_->dim()) {
    throw DimensionMismatch(fmt::format("projection expects dim {}, vectors have {}",
                                        projection_->source_dim(), wv_->dim()));
  }
  if (const auto* c = std::get_if<ConcatPool>(&pooling_); c && c->ops.count() == 0) {
    throw Error("pool_concat needs at least one op");
  }
  if (const auto* s = std::get_if<SifPool>(&pooling_); s && (!s->model || !(s->model->a > 0))) {
    throw Error("SIF pooling needs a model with a > 0");
  }
  word_dim_ = projection_ ? projection_->target_dim() : wv_->dim();
  output_dim_ = pooled_dim(word_dim_, pooling_);
}

Encoded WordPoolEncoder::encode(const Sentence& s, const SentenceKey&) const {
  return pool(gather(*wv_, s, projection_ ? &*projection_ : nullptr), word_dim_, pooling_, s);
}

ComponentRemoval WordPoolEncoder::fit(const Eigen::MatrixXd& train_rows) const {
  const auto* sif = std::get_if<SifPool>(&pooling_);
  if (!sif || !sif->remove_pc) return {};
  return {{ComponentRemoval::Block{0, sif_fit_pc(train_rows)}}};
}

std::string WordPoolEncoder::describe() const {
  std::string pooling = std::visit(
      [](const auto& p) -> std::string {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, AveragePool>) {
          return "avg";
        } else if constexpr (std::is_same_v<P, SifPool>) {
          return fmt::format("sif(a={:g}{})", p.model->a, p.remove_pc ? ",pc" : "");
        } else {
          return "pool(" + p.ops.str() + ")";
        }
      },
      pooling_);
  if (projection_) return fmt::format("{}:proj{}:{}", wv_->name(), word_dim_, pooling);
  return fmt::format("{}:{}", wv_->name(), pooling);
}

ConcatEncoder::ConcatEncoder(std::vector<EncoderPtr> members) : members_(std::move(members)) {
  if (members_.empty()) throw Error("concat needs at least one member");
  for (const auto& m : members_) {
    if (!m) throw Error("concat member is null");
    output_dim_ += m->output_dim();
  }
}

Encoded ConcatEncoder::encode(const Sentence& s, const SentenceKey& key) const {
  Encoded out{Eigen::VectorXd(static_cast<Eigen::Index>(output_dim_)), true};
  Eigen::Index offset = 0;
  for (const auto& m : members_) {
    auto e = m->encode(s, key);
    out.vector.segment(offset, e.vector.size()) = e.vector;
    offset += e.vector.size();
    out.fully_oov = out.fully_oov && e.fully_oov;
  }
  return out;
}

ComponentRemoval ConcatEncoder::fit(const Eigen::MatrixXd& train_rows) const {
  ComponentRemoval out;
  std::size_t offset = 0;
  for (const auto& m : members_) {
    const auto width = static_cast<Eigen::Index>(m->output_dim());
    auto sub = m->fit(train_rows.middleCols(static_cast<Eigen::Index>(offset), width));
    for (auto& b : sub.blocks) {
      b.offset += offset;
      out.blocks.push_back(std::move(b));
    }
    offset += m->output_dim();
  }
  return out;
}

std::string ConcatEncoder::describe() const {
  std::string out = "concat(";
  for (std::size_t i = 0; i < members_.size(); ++i) {
    if (i) out += ',';
    out += members_[i]->describe();
  }
  return out + ")";
}

EncoderPtr concat_encoders(std::vector<EncoderPtr> members) {
  return std::make_shared<ConcatEncoder>(std::move(members));
}

void PrecomputedEncoder::add_table(Split split, std::map<std::size_t, Eigen::VectorXd> rows) {
  if (rows.empty()) throw Error(fmt::format("precomputed table for {} is empty", to_string(split)));
  const auto dim = static_cast<std::size_t>(rows.begin()->second.size());
  if (dim == 0) throw Error("precomputed vectors must be non-empty");
  if (dim_ != 0 && dim != dim_) {
    throw DimensionMismatch(fmt::format("precomputed table dim {} differs from {}", dim, dim_));
  }
  for (const auto& [id, v] : rows) {
    if (static_cast<std::size_t>(v.size()) != dim) {
      throw DimensionMismatch(fmt::format("precomputed id {} has dim {}, expected {}", id,
                                          v.size(), dim));
    }
  }
  dim_ = dim;
  tables_[split] = std::move(rows);
}

void PrecomputedEncoder::load_table(Split split, const std::filesystem::path& path) {
  detail::LineReader reader(path);
  std::map<std::size_t, Eigen::VectorXd> rows;
  std::size_t dim = 0;
  std::string line;
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw LoadError(path.string(), reader.line_number(), "expected 'id<TAB>values'");
    }
    std::size_t id = 0;
    auto [p, ec] = std::from_chars(line.data(), line.data() + tab, id);
    if (ec != std::errc{} || p != line.data() + tab) {
      throw LoadError(path.string(), reader.line_number(), "non-integer id");
    }
    const auto fields = detail::split_ws(std::string_view(line).substr(tab + 1));
    if (fields.empty() || (dim != 0 && fields.size() != dim)) {
      throw LoadError(path.string(), reader.line_number(),
                      fmt::format("row has {} values, expected {}", fields.size(), dim));
    }
    dim = fields.size();
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
      double x = 0.0;
      auto [q, ec2] = std::from_chars(fields[i].data(), fields[i].data() + fields[i].size(), x);
      if (ec2 != std::errc{} || q != fields[i].data() + fields[i].size() || !std::isfinite(x)) {
        throw LoadError(path.string(), reader.line_number(),
                        fmt::format("bad value '{}'", fields[i]));
      }
      v[static_cast<Eigen::Index>(i)] = x;
    }
    if (!rows.try_emplace(id, std::move(v)).second) {
      throw LoadError(path.string(), reader.line_number(), fmt::format("duplicate id {}", id));
    }
  }
  if (rows.empty()) throw LoadError(path.string(), 0, "no rows");
  try {
    add_table(split, std::move(rows));
  } catch (const Error& e) {
    throw LoadError(path.string(), 0, e.what());
  }
}

Encoded PrecomputedEncoder::encode(const Sentence&, const SentenceKey& key) const {
  auto table = tables_.find(key.split);
  if (table == tables_.end()) table = tables_.find(Split::All);
  if (table == tables_.end()) {
    throw Error(fmt::format("{}: no vectors for split {}", describe(), to_string(key.split)));
  }
  const auto row = table->second.find(key.index);
  if (row == table->second.end()) {
    throw Error(fmt::format("{}: missing precomputed id {} ({} split)", describe(), key.index,
                            to_string(key.split)));
  }
  return {row->second, row->second.isZero(0.0)};
}

std::shared_ptr<PrecomputedEncoder> load_precomputed(const std::filesystem::path& path) {
  auto enc = std::make_shared<PrecomputedEncoder>(path.stem().string());
  enc->load_table(Split::All, path);
  return enc;
}

EmbeddedRows embed(const Encoder& encoder, std::span<const Sentence* const> sentences,
                   Split split) {
  EmbeddedRows out;
  const auto dim = static_cast<Eigen::Index>(encoder.output_dim());
  out.rows.resize(static_cast<Eigen::Index>(sentences.size()), dim);
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    auto e = encoder.encode(*sentences[i], SentenceKey{split, i});
    if (e.vector.size() != dim) {
      throw DimensionMismatch(fmt::format("{} emitted dim {}, declared {}", encoder.describe(),
                                          e.vector.size(), dim));
    }
    out.rows.row(static_cast<Eigen::Index>(i)) = e.vector.transpose();
    if (e.fully_oov) out.oov_rows.push_back(i);
  }
  return out;
}

namespace {

std::string substitute_split(const std::string& pattern, Split split) {
  std::string out = pattern;
  const auto pos = out.find("{split}");
  if (pos != std::string::npos) out.replace(pos, 7, to_string(split));
  return out;
}

}  // namespace

EncoderPtr build_encoder(const EncoderSpec& spec, const EncoderResources& resources) {
  return std::visit(
      [&](const auto& body) -> EncoderPtr {
        using B = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<B, WordEncoderSpec>) {
          const auto wv = resources.vectors.find(body.vectors);
          if (wv == resources.vectors.end()) {
            throw ConfigError(fmt::format("encoder '{}': unknown vectors '{}'", spec.name,
                                          body.vectors));
          }
          std::optional<RandomProjection> projection;
          if (body.projection) {
            projection.emplace(wv->second->dim(), body.projection->target_dim,
                               body.projection->seed);
          }
          Pooling pooling = std::visit(
              [&](const auto& p) -> Pooling {
                using P = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<P, AveragePoolSpec>) {
                  return AveragePool{};
                } else if constexpr (std::is_same_v<P, SifPoolSpec>) {
                  const auto f = resources.frequencies.find(p.frequencies);
                  if (f == resources.frequencies.end()) {
                    throw ConfigError(fmt::format("encoder '{}': unknown frequencies '{}'",
                                                  spec.name, p.frequencies));
                  }
                  auto model = std::make_shared<SifModel>(*f->second);
                  model->a = p.a;
                  model->pc.reset();
                  return SifPool{std::move(model), p.remove_pc};
                } else {
                  return ConcatPool{p.ops};
                }
              },
              body.pooling);
          return std::make_shared<WordPoolEncoder>(wv->second, std::move(pooling),
                                                   std::move(projection));
        } else if constexpr (std::is_same_v<B, ConcatSpec>) {
          std::vector<EncoderPtr> members;
          for (const auto& m : body.members) members.push_back(build_encoder(m, resources));
          return concat_encoders(std::move(members));
        } else {
          auto enc = std::make_shared<PrecomputedEncoder>(spec.name);
          if (body.path.find("{split}") == std::string::npos) {
            enc->load_table(Split::All, body.path);
          } else {
            for (Split s : {Split::Train, Split::Dev, Split::Test}) {
              const auto p = substitute_split(body.path, s);
              if (std::filesystem::exists(p)) enc->load_table(s, p);
            }
            if (enc->output_dim() == 0) {
              throw ConfigError(fmt::format("encoder '{}': no files match '{}'", spec.name,
                                            body.path));
            }
          }
          return enc;
        }
      },
      spec.body);
}

}  // namespace embeval

#include "embeval/evaluators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "embeval/error.hpp"
#include "embeval/metrics.hpp"

namespace embeval {

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

std::vector<int> take(const std::vector<int>& y, const std::vector<std::size_t>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(y[i]);
  return out;
}

std::vector<double> gold_scores(const PairSplit& pairs) {
  std::vector<double> out;
  out.reserve(pairs.pairs.size());
  for (const auto& p : pairs.pairs) out.push_back(p.gold);
  return out;
}

}  // namespace

UcpResult eval_ucp(const PairSplit& pairs, const Encoder& encoder, bool normalized) {
  if (pairs.pairs.empty()) throw Error("eval_ucp: empty split");
  const auto stacked = pairs.stacked();
  const auto embedded = embed(encoder, stacked, pairs.split);
  const auto n = pairs.pairs.size();

  UcpResult r;
  r.normalized = normalized;
  r.oov_sentences = embedded.oov_rows.size();

  // Pairs with a zero raw vector never enter the fitted statistics.
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = static_cast<Eigen::Index>(2 * i);
    if (embedded.rows.row(a).squaredNorm() > 0.0 && embedded.rows.row(a + 1).squaredNorm() > 0.0) {
      kept.push_back(i);
    }
  }
  if (kept.empty()) throw Error("eval_ucp: every pair has a zero embedding");

  Eigen::MatrixXd rows(static_cast<Eigen::Index>(2 * kept.size()), embedded.rows.cols());
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const auto src = static_cast<Eigen::Index>(2 * kept[k]);
    rows.row(static_cast<Eigen::Index>(2 * k)) = embedded.rows.row(src);
    rows.row(static_cast<Eigen::Index>(2 * k + 1)) = embedded.rows.row(src + 1);
  }
  if (rows.rows() >= 2) encoder.fit(rows).apply(rows);
  if (normalized) rows = normalize_ucp(rows).rows;

  std::vector<double> predicted;
  std::vector<double> gold;
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const auto a = static_cast<Eigen::Index>(2 * k);
    try {
      predicted.push_back(cosine(rows.row(a).transpose(), rows.row(a + 1).transpose()));
      gold.push_back(pairs.pairs[kept[k]].gold);
    } catch (const UndefinedCosine&) {
    }
  }
  r.n_pairs = n;
  r.skipped_pairs = n - predicted.size();
  if (predicted.empty()) throw Error("eval_ucp: all pairs skipped");
  r.pearson = pearson(predicted, gold);
  r.spearman = spearman(predicted, gold);
  return r;
}

Eigen::VectorXd build_pair_features(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (u.size() != v.size()) {
    throw DimensionMismatch(fmt::format("pair features: dims {} and {}", u.size(), v.size()));
  }
  Eigen::VectorXd out(2 * u.size());
  out.head(u.size()) = u.cwiseProduct(v);
  out.tail(u.size()) = (u - v).cwiseAbs();
  return out;
}

Eigen::MatrixXd pair_feature_matrix(const Eigen::MatrixXd& stacked) {
  const auto n = stacked.rows() / 2;
  const auto d = stacked.cols();
  Eigen::MatrixXd out(n, 2 * d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto u = stacked.row(2 * i);
    const auto v = stacked.row(2 * i + 1);
    out.row(i).head(d) = u.cwiseProduct(v);
    out.row(i).tail(d) = (u - v).cwiseAbs();
  }
  return out;
}

Eigen::VectorXd RidgeFit::predict(const Eigen::MatrixXd& features) const {
  return (features * weights).array() + bias;
}

std::optional<RidgeFit> fit_ridge(const Eigen::MatrixXd& features, const Eigen::VectorXd& target,
                                  double l2) {
  if (features.rows() != target.size() || features.rows() == 0) {
    throw DimensionMismatch(
        fmt::format("ridge: {} feature rows, {} targets", features.rows(), target.size()));
  }
  const double n = static_cast<double>(features.rows());
  const Eigen::RowVectorXd mu = features.colwise().mean();
  const double y_mean = target.mean();
  const Eigen::MatrixXd centered = features.rowwise() - mu;
  Eigen::MatrixXd gram = centered.transpose() * centered / n;
  gram.diagonal().array() += l2;
  const Eigen::VectorXd rhs = centered.transpose() * (target.array() - y_mean).matrix() / n;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  // rcond() misses exactly zero pivots, so check the pivot spread as well.
  const Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-12 ||
      pivots.minCoeff() <= 1e-12 * pivots.maxCoeff()) {
    return std::nullopt;
  }
  RidgeFit fit;
  fit.weights = ldlt.solve(rhs);
  if (!fit.weights.allFinite()) return std::nullopt;
  fit.bias = y_mean - mu.dot(fit.weights);
  fit.l2 = l2;
  return fit;
}

SimilarityModel::SimilarityModel(EncoderPtr encoder, ComponentRemoval removal,
                                 std::optional<NormStats> norm, RidgeFit ridge,
                                 double dev_pearson)
    : encoder_(std::move(encoder)),
      removal_(std::move(removal)),
      norm_(std::move(norm)),
      ridge_(std::move(ridge)),
      dev_pearson_(dev_pearson) {
  if (norm_) require_fitted_on(*norm_, Split::Train);
}

Eigen::MatrixXd SimilarityModel::prepare(const PairSplit& pairs) const {
  Eigen::MatrixXd rows = embed(*encoder_, pairs.stacked(), pairs.split).rows;
  removal_.apply(rows);
  if (norm_) rows = apply_znorm(*norm_, rows).rows;
  return rows;
}

std::vector<double> SimilarityModel::predict(const PairSplit& pairs) const {
  const Eigen::VectorXd raw = ridge_.predict(pair_feature_matrix(prepare(pairs)));
  std::vector<double> out(static_cast<std::size_t>(raw.size()));
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    out[static_cast<std::size_t>(i)] = 5.0 * std::clamp(raw[i], 0.0, 1.0);
  }
  return out;
}

double SimilarityModel::predict_prepared(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
  const double raw = ridge_.weights.dot(build_pair_features(u, v)) + ridge_.bias;
  return 5.0 * std::clamp(raw, 0.0, 1.0);
}

SimilarityModel train_similarity_regressor(const PairSplit& train, const PairSplit& dev,
                                           EncoderPtr encoder, bool normalized,
                                           const std::vector<double>& l2_grid) {
  if (train.pairs.empty()) throw Error("train_similarity_regressor: empty train split");
  if (dev.pairs.empty()) throw Error("train_similarity_regressor: empty dev split");
  if (l2_grid.empty()) throw Error("train_similarity_regressor: empty l2 grid");
  if (!encoder) throw Error("train_similarity_regressor: null encoder");

  Eigen::MatrixXd train_rows = embed(*encoder, train.stacked(), train.split).rows;
  ComponentRemoval removal = encoder->fit(train_rows);
  removal.apply(train_rows);
  std::optional<NormStats> norm;
  if (normalized) {
    norm = fit_znorm(train_rows, Split::Train);
    train_rows = apply_znorm(*norm, train_rows).rows;
  }
  const Eigen::MatrixXd features = pair_feature_matrix(train_rows);
  Eigen::VectorXd target(static_cast<Eigen::Index>(train.pairs.size()));
  for (std::size_t i = 0; i < train.pairs.size(); ++i) {
    target[static_cast<Eigen::Index>(i)] = train.pairs[i].gold / 5.0;
  }

  const auto dev_gold = gold_scores(dev);
  std::optional<SimilarityModel> best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (double l2 : l2_grid) {
    auto fit = fit_ridge(features, target, l2);
    if (!fit) continue;
    SimilarityModel candidate(encoder, removal, norm, std::move(*fit), 0.0);
    double score = -std::numeric_limits<double>::infinity();
    try {
      score = pearson(candidate.predict(dev), dev_gold);
    } catch (const DegenerateCorrelation&) {
    }
    if (!best || score > best_score) {
      best_score = score;
      best.emplace(encoder, removal, norm, candidate.ridge(), score);
    }
  }
  if (!best) throw Error("train_similarity_regressor: normal equations singular for every l2");
  return std::move(*best);
}

LearnedSimResult eval_learned_similarity(const SimilarityModel& model, const PairSplit& test) {
  if (test.pairs.empty()) throw Error("eval_learned_similarity: empty split");
  const auto predicted = model.predict(test);
  const auto gold = gold_scores(test);
  LearnedSimResult r;
  r.n_pairs = gold.size();
  r.mse = mse(predicted, gold);
  try {
    r.pearson = pearson(predicted, gold);
    r.spearman = spearman(predicted, gold);
  } catch (const DegenerateCorrelation& e) {
    r.pearson.reset();
    r.spearman.reset();
    r.degenerate = e.what();
  }
  return r;
}

EvalResult run_transfer_task(const LabeledDataset& dataset, const Encoder& encoder,
                             const ClassifierSpec& spec, bool normalized,
                             const std::string& encoder_name) {
  spec.validate();
  const auto embedded = embed(encoder, dataset.sentences(), Split::All);
  const auto labels = dataset.labels();

  EvalResult result;
  result.task = dataset.name;
  result.encoder = encoder_name.empty() ? encoder.describe() : encoder_name;
  result.embedding_size = encoder.output_dim();
  result.protocol = "classify";
  result.classifier = std::string(to_string(spec.kind));
  result.normalized = normalized;
  result.diagnostics.oov_sentences = embedded.oov_rows.size();

  double acc_sum = 0.0;
  std::vector<std::string> choices;
  const auto parts = dataset.partitions();
  for (const auto& part : parts) {
    Eigen::MatrixXd train = take_rows(embedded.rows, part.train);
    Eigen::MatrixXd test = take_rows(embedded.rows, part.test);
    Eigen::MatrixXd dev = take_rows(embedded.rows, part.dev);
    const auto removal = encoder.fit(train);
    removal.apply(train);
    removal.apply(test);
    removal.apply(dev);
    if (normalized) {
      const auto stats = fit_znorm(train, Split::Train);
      require_fitted_on(stats, Split::Train);
      train = apply_znorm(stats, train).rows;
      test = apply_znorm(stats, test).rows;
      if (dev.rows() > 0) dev = apply_znorm(stats, dev).rows;
    }
    std::optional<LabeledRows> dev_rows;
    if (!part.dev.empty()) dev_rows = LabeledRows{std::move(dev), take(labels, part.dev)};
    const auto clf = train_classifier(train, take(labels, part.train), dataset.n_classes, spec,
                                      dev_rows);
    acc_sum += clf.accuracy(test, take(labels, part.test));
    result.diagnostics.converged = result.diagnostics.converged && clf.converged;
    choices.push_back(clf.hyperparams());
  }
  result.metrics["accuracy"] = acc_sum / static_cast<double>(parts.size());
  for (std::size_t i = 0; i < choices.size(); ++i) {
    if (i) result.hyperparams += '|';
    result.hyperparams += choices[i];
  }
  return result;
}

}  // namespace embeval

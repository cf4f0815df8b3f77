#include <gtest/gtest.h>

#include <random>

#include "embeval/error.hpp"
#include "embeval/evaluators.hpp"
#include "embeval/metrics.hpp"
#include "test_util.hpp"

using namespace embeval;

namespace {

EncoderPtr average_encoder() {
  return std::make_shared<WordPoolEncoder>(testutil::toy_vectors(), AveragePool{});
}

PairSplit sts(const char* name, Split split) {
  return load_sts_benchmark(testutil::data(name), split);
}

// Cosines of row pairs, computed without any library helper.
std::vector<double> row_pair_cosines(const Eigen::MatrixXd& rows) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i + 1 < rows.rows(); i += 2) {
    const double dot = rows.row(i).dot(rows.row(i + 1));
    out.push_back(dot / (rows.row(i).norm() * rows.row(i + 1).norm()));
  }
  return out;
}

}  // namespace

TEST(Ucp, MatchesHandAssembledPipeline) {
  const auto test = sts("toy_sts_test.tsv", Split::Test);
  const auto enc = average_encoder();
  const auto rows = embed(*enc, test.stacked(), Split::Test).rows;
  std::vector<double> gold;
  for (const auto& p : test.pairs) gold.push_back(p.gold);

  const auto raw = eval_ucp(test, *enc, false);
  EXPECT_EQ(raw.skipped_pairs, 0u);
  EXPECT_EQ(raw.n_pairs, test.pairs.size());
  EXPECT_NEAR(raw.pearson, pearson(row_pair_cosines(rows), gold), 1e-12);
  EXPECT_NEAR(raw.spearman, spearman(row_pair_cosines(rows), gold), 1e-12);

  // z-norm over the whole stacked matrix, population std, then cosine.
  const Eigen::RowVectorXd mu = rows.colwise().mean();
  const Eigen::MatrixXd c = rows.rowwise() - mu;
  const Eigen::RowVectorXd sd = (c.array().square().colwise().sum() / rows.rows()).sqrt();
  Eigen::MatrixXd z = c;
  for (Eigen::Index j = 0; j < z.cols(); ++j) z.col(j) /= (sd[j] > 0 ? sd[j] : 1.0);
  const auto norm = eval_ucp(test, *enc, true);
  EXPECT_TRUE(norm.normalized);
  EXPECT_NEAR(norm.pearson, pearson(row_pair_cosines(z), gold), 1e-12);
  EXPECT_NEAR(norm.spearman, spearman(row_pair_cosines(z), gold), 1e-12);
  EXPECT_GT(raw.pearson, 0.0);
}

TEST(Ucp, FullyOovPairsAreSkippedAndCounted) {
  auto test = sts("toy_sts_test.tsv", Split::Test);
  test.pairs[0].first = tokenize("qqqq zzzz");
  const auto r = eval_ucp(test, *average_encoder(), true);
  EXPECT_EQ(r.skipped_pairs, 1u);
  EXPECT_EQ(r.oov_sentences, 1u);
  PairSplit empty;
  EXPECT_THROW(eval_ucp(empty, *average_encoder(), false), Error);
}

TEST(PairFeatures, SymmetricAndShaped) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd u(6), v(6);
    for (auto& x : u) x = g(rng);
    for (auto& x : v) x = g(rng);
    const auto f = build_pair_features(u, v);
    ASSERT_EQ(f.size(), 12);
    EXPECT_EQ(f, build_pair_features(v, u));
    EXPECT_EQ(f.head(6), u.cwiseProduct(v));
    EXPECT_EQ(f.tail(6), (u - v).cwiseAbs());
    Eigen::MatrixXd stacked(2, 6);
    stacked.row(0) = u;
    stacked.row(1) = v;
    EXPECT_EQ(Eigen::VectorXd(pair_feature_matrix(stacked).row(0).transpose()), f);
  }
  EXPECT_THROW(build_pair_features(Eigen::VectorXd(2), Eigen::VectorXd(3)), DimensionMismatch);
}

// Augmented least squares [F 1] with the penalty on w only, solved by QR on
// the stacked system [F 1; sqrt(n l2) I 0] w = [y; 0].
TEST(Ridge, MatchesAugmentedLeastSquares) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  const Eigen::Index n = 40, d = 5;
  Eigen::MatrixXd f(n, d);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) f(i, j) = g(rng) + 0.5 * static_cast<double>(j);
    y[i] = 0.3 * f(i, 0) - 0.7 * f(i, 3) + 2.0 + 0.1 * g(rng);
  }
  for (double l2 : {0.0, 1e-3, 0.1, 1.0}) {
    const auto fit = fit_ridge(f, y, l2);
    ASSERT_TRUE(fit);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + d, d + 1);
    a.topLeftCorner(n, d) = f;
    a.topRightCorner(n, 1).setOnes();
    a.bottomLeftCorner(d, d) = std::sqrt(static_cast<double>(n) * l2) * Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n + d);
    b.head(n) = y;
    const Eigen::VectorXd sol = a.colPivHouseholderQr().solve(b);
    EXPECT_LT((fit->weights - sol.head(d)).norm(), 1e-9) << "l2=" << l2;
    EXPECT_NEAR(fit->bias, sol[d], 1e-9);
    EXPECT_EQ(fit->l2, l2);
  }
}

TEST(Ridge, SingularSystemIsReportedAndSkipped) {
  Eigen::MatrixXd f(10, 2);
  Eigen::VectorXd y(10);
  for (Eigen::Index i = 0; i < 10; ++i) {
    f(i, 0) = static_cast<double>(i);
    f(i, 1) = 2.0 * static_cast<double>(i);
    y[i] = static_cast<double>(i % 3);
  }
  EXPECT_FALSE(fit_ridge(f, y, 0.0));
  EXPECT_TRUE(fit_ridge(f, y, 1e-3));
  EXPECT_THROW(fit_ridge(f, Eigen::VectorXd(3), 0.1), DimensionMismatch);
}

TEST(LearnedSimilarity, SingularL2FallsThroughToNext) {
  const auto train = sts("toy_sts_train.tsv", Split::Train);
  const auto dev = sts("toy_sts_dev.tsv", Split::Dev);
  // 20 features (D=10) but duplicate-free data is not guaranteed singular, so
  // force it: a concat of the same encoder twice duplicates every column.
  const auto twin = concat_encoders({average_encoder(), average_encoder()});
  const auto model = train_similarity_regressor(train, dev, twin, false, {0.0, 1e-2});
  EXPECT_EQ(model.ridge().l2, 1e-2);
}

TEST(LearnedSimilarity, PredictionsInGoldRangeAndBeatChance) {
  const auto train = sts("toy_sts_train.tsv", Split::Train);
  const auto dev = sts("toy_sts_dev.tsv", Split::Dev);
  const auto test = sts("toy_sts_test.tsv", Split::Test);
  for (bool normalized : {false, true}) {
    const auto model = train_similarity_regressor(train, dev, average_encoder(), normalized);
    for (double p : model.predict(test)) {
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 5.0);
    }
    const auto r = eval_learned_similarity(model, test);
    ASSERT_TRUE(r.pearson);
    EXPECT_GT(*r.pearson, 0.0);
    EXPECT_EQ(r.n_pairs, test.pairs.size());
    EXPECT_EQ(model.norm().has_value(), normalized);
    const auto prepared = model.prepare(test);
    EXPECT_NEAR(model.predict_prepared(prepared.row(0).transpose(), prepared.row(1).transpose()),
                model.predict(test)[0], 1e-12);
  }
}

TEST(Transfer, ToySentimentCrossValidated) {
  DatasetManifest m;
  m.n_classes = 2;
  m.split = CrossValidation{5, 3};
  auto data = load_labeled_dataset(testutil::data("toy_sentiment.tsv"), m);
  ClassifierSpec spec;
  spec.l2_grid = {1e-3, 1e-1};
  spec.inner_folds = 3;
  const auto a = run_transfer_task(data, *average_encoder(), spec, false, "avg");
  const auto b = run_transfer_task(data, *average_encoder(), spec, false, "avg");
  EXPECT_EQ(a.metrics.at("accuracy"), b.metrics.at("accuracy"));
  EXPECT_GT(a.metrics.at("accuracy"), 0.8);
  EXPECT_EQ(a.protocol, "classify");
  EXPECT_EQ(a.classifier, "logreg");
  EXPECT_EQ(a.encoder, "avg");
  EXPECT_EQ(a.embedding_size, 10u);
  // One hyperparameter choice per fold.
  EXPECT_EQ(std::count(a.hyperparams.begin(), a.hyperparams.end(), '|'), 4);
  EXPECT_EQ(a.diagnostics.oov_sentences, 0u);  // unseen words only, never a whole line
}

TEST(Transfer, ToyTopicsFixedSplitNormalized) {
  DatasetManifest m;
  m.n_classes = 3;
  m.split = FixedCounts{45, 15};
  auto data = load_labeled_dataset(testutil::data("toy_topics.tsv"), m);
  ClassifierSpec spec;
  const auto r = run_transfer_task(data, *average_encoder(), spec, true);
  EXPECT_TRUE(r.normalized);
  EXPECT_GT(r.metrics.at("accuracy"), 0.8);
  EXPECT_EQ(r.hyperparams.find('|'), std::string::npos);
}

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "embeval/error.hpp"
#include "embeval/evaluators.hpp"
#include "embeval/normalize.hpp"
#include "test_util.hpp"

using namespace embeval;

namespace {

Eigen::MatrixXd random_matrix(std::uint64_t seed, Eigen::Index n, Eigen::Index d) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double scale = 0.5 + static_cast<double>(j);
    const double shift = 3.0 * static_cast<double>(j) - 4.0;
    for (Eigen::Index i = 0; i < n; ++i) m(i, j) = shift + scale * g(rng);
  }
  return m;
}

}  // namespace

TEST(ZNorm, StandardizedColumnsHaveZeroMeanUnitVariance) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto x = random_matrix(seed, 40, 6);
    const auto stats = fit_znorm(x, Split::Train);
    const auto z = standardize(stats, x);
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      const double mean = z.col(j).mean();
      const double var = (z.col(j).array() - mean).square().mean();
      EXPECT_NEAR(mean, 0.0, 1e-10);
      EXPECT_NEAR(var, 1.0, 1e-10);
    }
  }
}

TEST(ZNorm, StatsMatchLongDoubleTwoPass) {
  const auto x = random_matrix(42, 25, 5);
  const auto stats = fit_znorm(x, Split::Train);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    long double s = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) s += x(i, j);
    const long double m = s / x.rows();
    long double q = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) q += (x(i, j) - m) * (x(i, j) - m);
    EXPECT_NEAR(stats.mean[j], static_cast<double>(m), 1e-13);
    EXPECT_NEAR(stats.std[j], static_cast<double>(std::sqrt(q / x.rows())), 1e-13);
  }
}

TEST(ZNorm, RowsAreUnitNormOrFlaggedZero) {
  auto x = random_matrix(3, 30, 4);
  // Row 7 equals the mean of the others, so it also equals the column means.
  x.row(7).setZero();
  x.row(7) = x.colwise().sum() / static_cast<double>(x.rows() - 1);
  const auto stats = fit_znorm(x, Split::Train);
  const auto out = apply_znorm(stats, x);
  ASSERT_EQ(out.rows.rows(), x.rows());
  for (Eigen::Index i = 0; i < out.rows.rows(); ++i) {
    const bool flagged =
        std::find(out.zero_rows.begin(), out.zero_rows.end(), static_cast<std::size_t>(i)) !=
        out.zero_rows.end();
    if (flagged) {
      EXPECT_EQ(out.rows.row(i).norm(), 0.0);
    } else {
      EXPECT_NEAR(out.rows.row(i).norm(), 1.0, 1e-12);
    }
  }
  EXPECT_EQ(out.zero_rows, std::vector<std::size_t>{7});
}

TEST(ZNorm, ConstantColumnDividesByOne) {
  Eigen::MatrixXd x(3, 2);
  x << 1, 5, 2, 5, 3, 5;
  const auto stats = fit_znorm(x, Split::Train);
  EXPECT_EQ(stats.degenerate_columns, std::vector<std::size_t>{1});
  const auto z = standardize(stats, x);
  EXPECT_TRUE(z.col(1).isZero());
  EXPECT_TRUE(z.allFinite());
}

TEST(ZNorm, Errors) {
  EXPECT_THROW(fit_znorm(Eigen::MatrixXd::Ones(1, 3), Split::Train), Error);
  const auto stats = fit_znorm(random_matrix(1, 5, 3), Split::Train);
  EXPECT_THROW(standardize(stats, Eigen::MatrixXd::Ones(2, 4)), DimensionMismatch);
}

TEST(ZNorm, FittedOnAuditRejectsWrongSplit) {
  const auto stats = fit_znorm(random_matrix(1, 5, 3), Split::Test);
  EXPECT_NO_THROW(require_fitted_on(stats, Split::Test));
  EXPECT_THROW(require_fitted_on(stats, Split::Train), AuditError);
}

TEST(ZNorm, SimilarityModelRefusesStatsNotFittedOnTrain) {
  const auto stats = fit_znorm(random_matrix(1, 6, 4), Split::Test);
  auto encoder = std::make_shared<WordPoolEncoder>(testutil::toy_vectors(), AveragePool{});
  RidgeFit ridge{Eigen::VectorXd::Zero(20), 0.0, 0.1};
  EXPECT_THROW(SimilarityModel(encoder, {}, stats, ridge, 0.0), AuditError);
}

// The fitted statistics come from training embeddings alone: swapping the dev
// or test data never moves them.
TEST(ZNorm, TrainFittedStatsIgnoreDevAndTest) {
  const auto train = load_sts_benchmark(testutil::data("toy_sts_train.tsv"), Split::Train);
  const auto dev = load_sts_benchmark(testutil::data("toy_sts_dev.tsv"), Split::Dev);
  auto other_dev = load_sts_benchmark(testutil::data("toy_sts_test.tsv"), Split::Dev);
  auto encoder = std::make_shared<WordPoolEncoder>(testutil::toy_vectors(), AveragePool{});

  const auto a = train_similarity_regressor(train, dev, encoder, true);
  const auto b = train_similarity_regressor(train, other_dev, encoder, true);
  ASSERT_TRUE(a.norm() && b.norm());
  EXPECT_EQ(a.norm()->fitted_on, Split::Train);
  EXPECT_EQ(a.norm()->mean, b.norm()->mean);
  EXPECT_EQ(a.norm()->std, b.norm()->std);

  const auto rows = embed(*encoder, train.stacked(), Split::Train).rows;
  const auto direct = fit_znorm(rows, Split::Train);
  EXPECT_EQ(a.norm()->mean, direct.mean);
  EXPECT_EQ(a.norm()->std, direct.std);
}

TEST(ZNorm, UcpNormalizationFitsTheWholeMatrix) {
  const auto x = random_matrix(9, 20, 5);
  const auto out = normalize_ucp(x);
  const auto z = standardize(fit_znorm(x, Split::All), x);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    EXPECT_NEAR(out.rows.row(i).norm(), 1.0, 1e-12);
    EXPECT_NEAR((out.rows.row(i) - z.row(i) / z.row(i).norm()).norm(), 0.0, 1e-14);
  }
}

TEST(ZNorm, ApplyIsRowwiseIndependent) {
  const auto x = random_matrix(5, 12, 3);
  const auto stats = fit_znorm(x, Split::Train);
  const auto all = apply_znorm(stats, x).rows;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto one = apply_znorm(stats, x.row(i)).rows;
    EXPECT_EQ((one.row(0) - all.row(i)).norm(), 0.0);
  }
}

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "embeval/compose.hpp"
#include "embeval/error.hpp"
#include "test_util.hpp"

using namespace embeval;

namespace {

std::shared_ptr<WordVectors> tiny_vectors() {
  auto wv = std::make_shared<WordVectors>("tiny", 3);
  const std::vector<float> a{1, 2, 3}, b{-1, 0, 5}, c{4, -2, 1};
  wv->add("alpha", a);
  wv->add("beta", b);
  wv->add("gamma", c);
  return wv;
}

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = g(rng);
  }
  // A shared offset gives the matrix a clear dominant direction, as sentence
  // embeddings have.
  for (Eigen::Index j = 0; j < d; ++j) m.col(j).array() += 0.3 * static_cast<double>(j + 1);
  return m;
}

SifModel tiny_sif(double a) {
  SifModel m;
  m.a = a;
  m.freq = {{"alpha", 0.5}, {"beta", 0.3}, {"gamma", 0.2}};
  return m;
}

}  // namespace

TEST(Pooling, AverageByHand) {
  const auto wv = tiny_vectors();
  const auto e = encode_average(*wv, tokenize("alpha beta unknown"));
  ASSERT_EQ(e.vector.size(), 3);
  EXPECT_FALSE(e.fully_oov);
  EXPECT_DOUBLE_EQ(e.vector[0], 0.0);
  EXPECT_DOUBLE_EQ(e.vector[1], 1.0);
  EXPECT_DOUBLE_EQ(e.vector[2], 4.0);
}

TEST(Pooling, FullyOutOfVocabularyIsZero) {
  const auto wv = tiny_vectors();
  const auto e = encode_average(*wv, tokenize("nothing known here"));
  EXPECT_TRUE(e.fully_oov);
  EXPECT_TRUE(e.vector.isZero());
  EXPECT_EQ(e.vector.size(), 3);
}

TEST(Pooling, OrderInvariance) {
  const auto wv = testutil::toy_vectors();
  const auto a = encode_pool_concat(*wv, tokenize("good movie the plot"), PoolOps{true, true, true});
  const auto b = encode_pool_concat(*wv, tokenize("plot the movie good"), PoolOps{true, true, true});
  EXPECT_EQ(a.vector, b.vector);
}

TEST(Pooling, MinAvgMaxBlocksInOrder) {
  const auto wv = tiny_vectors();
  const auto e = encode_pool_concat(*wv, tokenize("alpha gamma"), PoolOps{true, true, true});
  ASSERT_EQ(e.vector.size(), 9);
  const std::vector<double> expected{1, -2, 1, 2.5, 0, 2, 4, 2, 3};
  for (int i = 0; i < 9; ++i) EXPECT_DOUBLE_EQ(e.vector[i], expected[i]) << i;
  const auto max_only = encode_pool_concat(*wv, tokenize("alpha gamma"), PoolOps::parse("max"));
  EXPECT_EQ(max_only.vector, e.vector.tail(3));
  EXPECT_THROW(PoolOps::parse("median"), Error);
}

TEST(Sif, WeightsFollowFrequency) {
  const auto model = tiny_sif(0.1);
  const auto w = sif_weights(model, tokenize("alpha gamma unseen"));
  ASSERT_EQ(w.size(), 3u);
  EXPECT_NEAR(w[0], 0.1 / 0.6, 1e-15);
  EXPECT_NEAR(w[1], 0.1 / 0.3, 1e-15);
  EXPECT_NEAR(w[2], 0.1 / (0.1 + kSifFrequencyFloor), 1e-15);
}

TEST(Sif, LargeAReducesToPlainAverage) {
  const auto wv = testutil::toy_vectors();
  const auto freq = load_sif_frequencies(testutil::data("toy_freq.txt"), 1e6);
  for (const char* text : {"the movie was good", "a terrible plot really", "pizza and code"}) {
    const auto s = tokenize(text);
    const auto sif = encode_sif(*wv, freq, s);
    const auto avg = encode_average(*wv, s);
    EXPECT_LT((sif.vector - avg.vector).cwiseAbs().maxCoeff(), 1e-4) << text;
  }
}

TEST(Sif, PowerIterationMatchesDenseSvd) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    const auto x = random_matrix(rng, 50, 5);
    const auto pc = sif_fit_pc(x);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
    Eigen::VectorXd v = svd.matrixV().col(0);
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    EXPECT_NEAR(pc.norm(), 1.0, 1e-12);
    EXPECT_LT((pc - v).cwiseAbs().maxCoeff(), 1e-6) << "trial " << trial;
  }
}

TEST(Sif, PowerIterationSurvivesOrthogonalStart) {
  // X^T X = G: the heaviest column (index 0) is orthogonal to the top
  // eigenvector (0, 1, 1) / sqrt(2).
  Eigen::Matrix3d g;
  g << 10, 0, 0, 0, 8, 5, 0, 5, 8;
  const Eigen::MatrixXd x = Eigen::LLT<Eigen::Matrix3d>(g).matrixU();
  ASSERT_LT((x.transpose() * x - g).norm(), 1e-12);
  const auto pc = sif_fit_pc(x);
  EXPECT_NEAR(pc[0], 0.0, 1e-6);
  EXPECT_NEAR(pc[1], std::sqrt(0.5), 1e-6);
  EXPECT_NEAR(pc[2], std::sqrt(0.5), 1e-6);
}

TEST(Sif, RemovalLeavesResidualOrthogonal) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    const auto x = random_matrix(rng, 50, 5);
    const auto pc = sif_fit_pc(x);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const Eigen::VectorXd out = sif_remove_pc(pc, x.row(i).transpose());
      EXPECT_LE(std::abs(pc.dot(out)), 1e-10 * out.norm() + 1e-12);
    }
  }
}

TEST(Sif, EncoderFitRemovesComponentFromRows) {
  const auto wv = testutil::toy_vectors();
  auto model = std::make_shared<SifModel>(load_sif_frequencies(testutil::data("toy_freq.txt")));
  WordPoolEncoder enc(wv, SifPool{model, true});
  const auto ds = load_labeled_dataset(testutil::data("toy_sentiment.tsv"), DatasetManifest{});
  auto rows = embed(enc, ds.sentences(), Split::All).rows;
  const auto removal = enc.fit(rows);
  ASSERT_EQ(removal.blocks.size(), 1u);
  removal.apply(rows);
  const auto& pc = removal.blocks[0].pc;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    EXPECT_LE(std::abs(rows.row(i).dot(pc)), 1e-10 * rows.row(i).norm() + 1e-12);
  }

  WordPoolEncoder keep(wv, SifPool{model, false});
  EXPECT_TRUE(keep.fit(rows).empty());
}

TEST(RandomProjection, SameSeedSameMatrix) {
  const RandomProjection a(10, 40, 99), b(10, 40, 99), c(10, 40, 100);
  EXPECT_EQ(a.matrix(), b.matrix());
  EXPECT_NE(a.matrix(), c.matrix());
  EXPECT_EQ(a.matrix().rows(), 40);
  EXPECT_EQ(a.matrix().cols(), 10);
}

TEST(RandomProjection, EncoderOutputIsDeterministic) {
  const auto wv = testutil::toy_vectors();
  const auto s = tokenize("the good film");
  const auto a = encode_random_projection(*wv, s, 64, 5);
  const auto b = encode_random_projection(*wv, s, 64, 5);
  ASSERT_EQ(a.vector.size(), 64);
  EXPECT_EQ(a.vector, b.vector);
}

// With source and target dims equal, E||Px||^2 = ||x||^2.
TEST(RandomProjection, PreservesSquaredNormInExpectation) {
  const std::size_t d = 8;
  std::vector<float> word(d);
  for (std::size_t i = 0; i < d; ++i) word[i] = static_cast<float>(i) - 3.5f;
  double x2 = 0.0;
  for (float v : word) x2 += static_cast<double>(v) * v;

  double sum = 0.0;
  const int draws = 2000;
  for (int s = 0; s < draws; ++s) {
    const RandomProjection p(d, d, static_cast<std::uint64_t>(s));
    sum += p.apply(word).squaredNorm();
  }
  EXPECT_NEAR(sum / draws / x2, 1.0, 0.05);
}

TEST(RandomProjection, EntriesHaveDeclaredSpread) {
  const RandomProjection p(100, 200, 1);
  const auto& m = p.matrix();
  const double mean = m.mean();
  const double var = (m.array() - mean).square().mean();
  EXPECT_NEAR(mean, 0.0, 0.01);
  // N(0, 1/sqrt(source)): standard deviation 0.1, variance 0.01.
  EXPECT_NEAR(var, 0.01, 0.0005);
}

TEST(RandomProjection, IdentityIsANoOp) {
  const auto wv = testutil::toy_vectors();
  WordPoolEncoder plain(wv, AveragePool{});
  WordPoolEncoder identity(wv, AveragePool{}, RandomProjection::identity(wv->dim()));
  const auto s = tokenize("really awful acting");
  EXPECT_LT((plain.encode(s, {}).vector - identity.encode(s, {}).vector).norm(), 1e-12);
}

TEST(Encoders, ConcatDimsAndBlocks) {
  const auto wv = testutil::toy_vectors();
  auto model = std::make_shared<SifModel>(load_sif_frequencies(testutil::data("toy_freq.txt")));
  auto avg = std::make_shared<WordPoolEncoder>(wv, AveragePool{});
  auto sif = std::make_shared<WordPoolEncoder>(wv, SifPool{model, true});
  const auto both = concat_encoders({avg, sif});
  EXPECT_EQ(both->output_dim(), 2 * wv->dim());
  const auto s = tokenize("good plot");
  const auto e = both->encode(s, {});
  EXPECT_EQ(e.vector.head(wv->dim()), avg->encode(s, {}).vector);

  const auto ds = load_labeled_dataset(testutil::data("toy_sentiment.tsv"), DatasetManifest{});
  const auto rows = embed(*both, ds.sentences(), Split::All).rows;
  const auto removal = both->fit(rows);
  ASSERT_EQ(removal.blocks.size(), 1u);
  EXPECT_EQ(removal.blocks[0].offset, wv->dim());
}

TEST(Encoders, OutputDimMatchesEveryEncodedRow) {
  const auto wv = testutil::toy_vectors();
  const auto ds = load_labeled_dataset(testutil::data("toy_topics.tsv"), DatasetManifest{3, CrossValidation{}});
  std::vector<EncoderPtr> encoders{
      std::make_shared<WordPoolEncoder>(wv, AveragePool{}),
      std::make_shared<WordPoolEncoder>(wv, ConcatPool{PoolOps{true, true, true}}),
      std::make_shared<WordPoolEncoder>(wv, AveragePool{}, RandomProjection(wv->dim(), 37, 1)),
  };
  encoders.push_back(concat_encoders(encoders));
  for (const auto& enc : encoders) {
    for (const auto* s : ds.sentences()) {
      EXPECT_EQ(static_cast<std::size_t>(enc->encode(*s, {}).vector.size()), enc->output_dim());
    }
  }
}

TEST(Encoders, PrecomputedServesRowsByKey) {
  testutil::TempDir dir;
  testutil::write_file(dir / "emb.tsv", "0\t1 2\n1\t3 4\n2\t0 0\n");
  const auto enc = load_precomputed(dir / "emb.tsv");
  EXPECT_EQ(enc->output_dim(), 2u);
  const Sentence any = tokenize("ignored");
  EXPECT_EQ(enc->encode(any, {Split::Test, 1}).vector, Eigen::Vector2d(3, 4));
  EXPECT_TRUE(enc->encode(any, {Split::Test, 2}).fully_oov);
  EXPECT_THROW(enc->encode(any, {Split::Test, 5}), Error);

  testutil::write_file(dir / "bad.tsv", "0\t1 2\n1\t3\n");
  try {
    load_precomputed(dir / "bad.tsv");
    FAIL();
  } catch (const LoadError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Encoders, PrecomputedPerSplitTables) {
  PrecomputedEncoder enc("split");
  enc.add_table(Split::Train, {{0, Eigen::Vector2d(1, 1)}});
  enc.add_table(Split::Test, {{0, Eigen::Vector2d(2, 2)}});
  const Sentence s = tokenize("x");
  EXPECT_EQ(enc.encode(s, {Split::Train, 0}).vector, Eigen::Vector2d(1, 1));
  EXPECT_EQ(enc.encode(s, {Split::Test, 0}).vector, Eigen::Vector2d(2, 2));
  EXPECT_THROW(enc.encode(s, {Split::Dev, 0}), Error);
  EXPECT_THROW(enc.add_table(Split::Dev, {{0, Eigen::Vector3d(1, 1, 1)}}), DimensionMismatch);
}

TEST(Encoders, BuildFromSpec) {
  EncoderResources res;
  res.vectors["toy"] = testutil::toy_vectors();
  res.frequencies["freq"] =
      std::make_shared<const SifModel>(load_sif_frequencies(testutil::data("toy_freq.txt")));
  EncoderSpec pmean{"pmean", WordEncoderSpec{"toy", std::nullopt, PoolConcatSpec{PoolOps{true, true, true}}}};
  EncoderSpec sif{"sif", WordEncoderSpec{"toy", std::nullopt, SifPoolSpec{1e-3, "freq", true}}};
  EncoderSpec big{"big", WordEncoderSpec{"toy", RandomProject{50, 3}, AveragePoolSpec{}}};
  EncoderSpec cat{"cat", ConcatSpec{{pmean, sif, big}}};
  EXPECT_EQ(build_encoder(pmean, res)->output_dim(), 30u);
  EXPECT_EQ(build_encoder(big, res)->output_dim(), 50u);
  EXPECT_EQ(build_encoder(cat, res)->output_dim(), 90u);
  EncoderSpec missing{"m", WordEncoderSpec{"nope", std::nullopt, AveragePoolSpec{}}};
  EXPECT_THROW(build_encoder(missing, res), ConfigError);
}

#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <random>
#include <sstream>

#include "embeval/analysis.hpp"
#include "embeval/error.hpp"
#include "embeval/results_io.hpp"
#include "test_util.hpp"

using namespace embeval;

namespace {

std::vector<double> counted_ranks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double less = 0, equal = 0;
    for (double v : x) {
      less += v < x[i];
      equal += v == x[i];
    }
    r[i] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

double rank_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = counted_ranks(a), rb = counted_ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i] / n;
    mb += rb[i] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

EvalResult result(std::string encoder, std::string task, std::string protocol, bool normalized,
                  std::string metric, double v) {
  EvalResult r;
  r.encoder = std::move(encoder);
  r.task = std::move(task);
  r.protocol = std::move(protocol);
  r.classifier = r.protocol == "classify" ? "logreg" : "cosine";
  r.normalized = normalized;
  r.metrics[std::move(metric)] = v;
  return r;
}

}  // namespace

TEST(Deltas, PublishedUcpTableRoundsToPublishedDeltas) {
  const auto results = read_results_csv(testutil::data("published_ucp_results.csv"));
  const auto deltas = normalization_delta(results, "pearson");
  const auto expected_text = testutil::read_file(testutil::data("published_ucp_deltas.csv"));
  std::istringstream in(expected_text);
  std::string line;
  std::getline(in, line);
  std::size_t i = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    ASSERT_LT(i, deltas.size());
    EXPECT_EQ(deltas[i].encoder, line.substr(0, comma));
    EXPECT_EQ(std::lround(deltas[i].delta_pp), std::stol(line.substr(comma + 1)))
        << deltas[i].encoder;
    ++i;
  }
  EXPECT_EQ(i, deltas.size());
  EXPECT_EQ(deltas.size(), 9u);
}

TEST(Deltas, MissingCounterpartNamesTheEncoder) {
  std::vector<EvalResult> rs{result("a", "t", "ucp", false, "pearson", 0.5),
                             result("a", "t", "ucp", true, "pearson", 0.6),
                             result("lonely", "t", "ucp", true, "pearson", 0.6)};
  try {
    normalization_delta(rs, "pearson");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("lonely"), std::string::npos);
  }
  rs.pop_back();
  rs.push_back(result("a", "t", "ucp", true, "pearson", 0.7));
  EXPECT_THROW(normalization_delta(rs, "pearson"), Error);
}

TEST(Deltas, SummaryAveragesTransferAndScalesPairs) {
  std::vector<EvalResult> rs{
      result("e", "mr", "classify", false, "accuracy", 0.70),
      result("e", "mr", "classify", true, "accuracy", 0.72),
      result("e", "cr", "classify", false, "accuracy", 0.80),
      result("e", "cr", "classify", true, "accuracy", 0.84),
      result("e", "sts", "ucp", false, "accuracy", 0.40),
      result("e", "sts", "ucp", true, "accuracy", 0.60),
  };
  const auto deltas = normalization_delta(rs, "accuracy");
  const auto s = summarize_deltas(deltas, 0.1);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_NEAR(*s[0].transfer_pp, 3.0, 1e-9);
  EXPECT_NEAR(*s[0].pair_pp, 2.0, 1e-9);
}

TEST(Dispersion, ReportFromScoreTable) {
  ScoreTable t;
  const std::vector<double> standard{0.41, 0.56, 0.56, 0.67, 0.66, 0.67, 0.70, 0.67, 0.64};
  for (std::size_t i = 0; i < standard.size(); ++i) {
    t.set("e" + std::to_string(i), "sts", TaskKind::Transfer, standard[i]);
  }
  const auto rep = dispersion_report(t, {"sts"});
  ASSERT_EQ(rep.size(), 1u);
  EXPECT_EQ(rep[0].n, 9u);
  EXPECT_NEAR(rep[0].dispersion.range, 0.29, 1e-12);
  t.set("late", "other", TaskKind::Transfer, 1.0);
  EXPECT_THROW(dispersion_report(t, {"other"}), Error);
}

TEST(Correlation, MatchesRankOracleOnRandomTables) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> level(0, 3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n_enc = 3 + static_cast<std::size_t>(trial % 4);
    ScoreTable t;
    std::vector<std::vector<double>> cols(4, std::vector<double>(n_enc));
    for (std::size_t e = 0; e < n_enc; ++e) {
      for (std::size_t c = 0; c < 4; ++c) {
        cols[c][e] = 0.1 * level(rng);
        t.set("enc" + std::to_string(e), "task" + std::to_string(c),
              c < 2 ? TaskKind::Transfer : TaskKind::Probing, cols[c][e]);
      }
    }
    const auto rep = transfer_probing_correlation(t);
    ASSERT_EQ(rep.transfer.size(), 2u);
    ASSERT_EQ(rep.probing.size(), 2u);
    for (std::size_t ti = 0; ti < 2; ++ti) {
      for (std::size_t p = 0; p < 2; ++p) {
        const auto& a = cols[ti];
        const auto& b = cols[2 + p];
        const bool constant = std::all_of(a.begin(), a.end(), [&](double v) { return v == a[0]; }) ||
                              std::all_of(b.begin(), b.end(), [&](double v) { return v == b[0]; });
        if (constant) {
          EXPECT_FALSE(rep.rho[ti][p]);
        } else {
          ASSERT_TRUE(rep.rho[ti][p]);
          EXPECT_NEAR(*rep.rho[ti][p], rank_correlation(a, b), 1e-12);
        }
      }
    }
  }
}

// All 3! x 3! rankings of three encoders.
TEST(Correlation, ThreeEncodersEveryPermutation) {
  std::vector<int> pa{0, 1, 2};
  do {
    std::vector<int> pb{0, 1, 2};
    do {
      ScoreTable t;
      std::vector<double> a, b;
      for (int e = 0; e < 3; ++e) {
        a.push_back(pa[e]);
        b.push_back(pb[e]);
        t.set(std::to_string(e), "x", TaskKind::Transfer, pa[e]);
        t.set(std::to_string(e), "y", TaskKind::Probing, pb[e]);
      }
      int d2 = 0;
      for (int e = 0; e < 3; ++e) d2 += (pa[e] - pb[e]) * (pa[e] - pb[e]);
      const auto rep = transfer_probing_correlation(t);
      EXPECT_NEAR(*rep.rho[0][0], 1.0 - 6.0 * d2 / 24.0, 1e-12);
      EXPECT_NEAR(*rep.grand_mean, *rep.rho[0][0], 1e-15);
    } while (std::next_permutation(pb.begin(), pb.end()));
  } while (std::next_permutation(pa.begin(), pa.end()));
}

TEST(Correlation, InvariantUnderMonotoneRescaling) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  ScoreTable t, u;
  for (int e = 0; e < 6; ++e) {
    for (int c = 0; c < 5; ++c) {
      const double v = g(rng);
      const auto kind = c < 3 ? TaskKind::Transfer : TaskKind::Probing;
      t.set(std::to_string(e), std::to_string(c), kind, v);
      u.set(std::to_string(e), std::to_string(c), kind, c % 2 ? std::exp(v) : 3.0 * v + 1.0);
    }
  }
  const auto a = transfer_probing_correlation(t);
  const auto b = transfer_probing_correlation(u);
  for (std::size_t i = 0; i < a.rho.size(); ++i) {
    for (std::size_t j = 0; j < a.rho[i].size(); ++j) EXPECT_NEAR(*a.rho[i][j], *b.rho[i][j], 1e-12);
  }
  EXPECT_NEAR(*a.grand_mean, *b.grand_mean, 1e-12);
}

TEST(Correlation, ConstantColumnIsUndefinedWithWarning) {
  ScoreTable t;
  for (int e = 0; e < 4; ++e) {
    t.set(std::to_string(e), "flat", TaskKind::Transfer, 0.5);
    t.set(std::to_string(e), "moving", TaskKind::Transfer, e);
    t.set(std::to_string(e), "probe", TaskKind::Probing, e * e);
  }
  const auto rep = transfer_probing_correlation(t);
  EXPECT_FALSE(rep.rho[0][0]);
  EXPECT_NEAR(*rep.rho[1][0], 1.0, 1e-15);
  ASSERT_EQ(rep.warnings.size(), 1u);
  EXPECT_NE(rep.warnings[0].find("flat"), std::string::npos);
  EXPECT_NEAR(*rep.probing_average[0], 1.0, 1e-15);
}

TEST(Correlation, Preconditions) {
  ScoreTable t;
  t.set("a", "x", TaskKind::Transfer, 1);
  t.set("a", "y", TaskKind::Probing, 1);
  t.set("b", "x", TaskKind::Transfer, 2);
  t.set("b", "y", TaskKind::Probing, 2);
  EXPECT_THROW(transfer_probing_correlation(t), Error);
  t.set("c", "x", TaskKind::Transfer, 3);
  EXPECT_THROW(transfer_probing_correlation(t), Error);  // c has no probing score
}

TEST(ScoreTables, CsvRoundTripAndErrors) {
  testutil::TempDir dir;
  ScoreTable t;
  t.set("glove", "MR", TaskKind::Transfer, 0.1 + 0.2);
  t.set("glove", "Depth", TaskKind::Probing, 1.0 / 3.0);
  t.set("bow", "MR", TaskKind::Transfer, 77.5);
  write_score_table(t, dir / "t.csv");
  const auto back = load_score_table(dir / "t.csv");
  EXPECT_EQ(back.encoders(), t.encoders());
  EXPECT_EQ(back.tasks(), t.tasks());
  EXPECT_EQ(*back.get("glove", "MR"), 0.1 + 0.2);
  EXPECT_EQ(*back.get("glove", "Depth"), 1.0 / 3.0);
  EXPECT_FALSE(back.get("bow", "Depth"));
  EXPECT_EQ(back.provenance(), Provenance::ExternalImport);

  EXPECT_THROW(t.set("glove", "MR", TaskKind::Transfer, 1), Error);
  EXPECT_THROW(t.set("x", "MR", TaskKind::Probing, 1), Error);

  testutil::write_file(dir / "bad.csv", "encoder,task,kind,score\na,b,transfer,1\na,c,sideways,2\n");
  try {
    load_score_table(dir / "bad.csv");
    FAIL();
  } catch (const LoadError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(ScoreTables, PivotFromResults) {
  std::vector<EvalResult> rs{result("a", "mr", "classify", false, "accuracy", 0.7),
                             result("a", "mr", "classify", true, "accuracy", 0.8),
                             result("a", "sts", "ucp", false, "pearson", 0.4)};
  const auto t = table_from_results(rs, "accuracy");
  EXPECT_EQ(t.tasks(), (std::vector<std::string>{"mr/classify/logreg/std", "mr/classify/logreg/norm"}));
  EXPECT_EQ(*t.get("a", "mr/classify/logreg/norm"), 0.8);
}

TEST(SizeSweep, BookkeepingAndDeterminism) {
  DatasetManifest m;
  m.n_classes = 2;
  m.split = CrossValidation{3, 1};
  const auto sentiment = load_labeled_dataset(testutil::data("toy_sentiment.tsv"), m);
  DatasetManifest m3;
  m3.n_classes = 3;
  m3.split = FixedCounts{45, 15};
  const auto topics = load_labeled_dataset(testutil::data("toy_topics.tsv"), m3);

  const auto wv = testutil::toy_vectors();
  const EncoderFamily family = [&](std::size_t size) -> EncoderPtr {
    return std::make_shared<WordPoolEncoder>(wv, AveragePool{}, RandomProjection(10, size, 9));
  };
  ClassifierSpec spec;
  spec.l2_grid = {1e-2};
  const std::vector<std::pair<std::string, EncoderPtr>> refs{
      {"plain", std::make_shared<WordPoolEncoder>(wv, AveragePool{})}};
  const auto a = size_sweep({&sentiment, &topics}, family, {4, 8, 16}, spec, false, refs);
  const auto b = size_sweep({&sentiment, &topics}, family, {4, 8, 16}, spec, false, refs);

  ASSERT_EQ(a.curve.size(), 3u);
  EXPECT_EQ(a.tasks, (std::vector<std::string>{sentiment.name, topics.name}));
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    EXPECT_EQ(a.curve[i].size, std::size_t{4} << i);
    ASSERT_EQ(a.curve[i].task_scores.size(), 2u);
    EXPECT_DOUBLE_EQ(a.curve[i].mean_score,
                     (a.curve[i].task_scores[0] + a.curve[i].task_scores[1]) / 2.0);
    EXPECT_EQ(a.curve[i].task_scores, b.curve[i].task_scores);
  }
  ASSERT_EQ(a.references.size(), 1u);
  EXPECT_EQ(a.references[0].encoder, "plain");
  EXPECT_EQ(a.references[0].size, 10u);
  EXPECT_EQ(a.references[0].mean_score, b.references[0].mean_score);

  const auto single = size_sweep({&sentiment}, family, {8}, spec, false);
  ASSERT_EQ(single.curve.size(), 1u);
  EXPECT_EQ(single.curve[0].mean_score, single.curve[0].task_scores[0]);
  EXPECT_TRUE(single.references.empty());

  EXPECT_THROW(size_sweep({&sentiment}, family, {8, 8}, spec, false), Error);
  EXPECT_THROW(size_sweep({&sentiment}, family, {}, spec, false), Error);
  EXPECT_THROW(size_sweep({}, family, {8}, spec, false), Error);
}

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "embeval/classifiers.hpp"
#include "embeval/compose.hpp"
#include "embeval/corpus.hpp"
#include "embeval/normalize.hpp"

namespace embeval {

struct RunDiagnostics {
  std::size_t oov_sentences = 0;
  std::size_t skipped_pairs = 0;
  bool converged = true;
};

/// One evaluation cell. `metrics` is ordered so serialization is stable.
struct EvalResult {
  std::string task;
  std::string encoder;
  std::size_t embedding_size = 0;
  std::string protocol;    // ucp | learned_sim | classify
  std::string classifier;  // cosine | ridge | logreg | mlp
  bool normalized = false;
  std::map<std::string, double> metrics;
  std::string hyperparams;
  RunDiagnostics diagnostics;
};

// ---------------------------------------------------------------------------
// Unsupervised cosine + correlation

struct UcpResult {
  double pearson = 0.0;
  double spearman = 0.0;
  std::size_t n_pairs = 0;
  std::size_t skipped_pairs = 0;
  bool normalized = false;
  std::size_t oov_sentences = 0;
};

/// Embeds both sentences of every pair, optionally z-normalizes the stacked
/// 2N x D matrix (fitted on the evaluated pairs themselves), and correlates
/// per-pair cosines with gold. Pairs with a zero vector are skipped. An
/// encoder with a fitted stage (SIF) is fitted on the same evaluated rows.
UcpResult eval_ucp(const PairSplit& pairs, const Encoder& encoder, bool normalized);

// ---------------------------------------------------------------------------
// Learned similarity

/// [u * v ; |u - v|], symmetric in (u, v).
Eigen::VectorXd build_pair_features(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// Pair features of a stacked matrix (rows 2i and 2i+1 form pair i).
Eigen::MatrixXd pair_feature_matrix(const Eigen::MatrixXd& stacked);

struct RidgeFit {
  Eigen::VectorXd weights;
  double bias = 0.0;
  double l2 = 0.0;

  Eigen::VectorXd predict(const Eigen::MatrixXd& features) const;
};

/// Minimizes (1/n)||y - F w - b||^2 + l2 ||w||^2 with an unpenalized bias.
/// Returns nullopt when the normal equations are numerically singular.
std::optional<RidgeFit> fit_ridge(const Eigen::MatrixXd& features, const Eigen::VectorXd& target,
                                  double l2);

class SimilarityModel {
 public:
  SimilarityModel(EncoderPtr encoder, ComponentRemoval removal, std::optional<NormStats> norm,
                  RidgeFit ridge, double dev_pearson);

  /// Stacked, post-processed embeddings of a split.
  Eigen::MatrixXd prepare(const PairSplit& pairs) const;
  /// Predicted scores in [0, 5].
  std::vector<double> predict(const PairSplit& pairs) const;
  /// Scores one pair from already prepared (post-processed) embeddings.
  double predict_prepared(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;

  const RidgeFit& ridge() const { return ridge_; }
  const std::optional<NormStats>& norm() const { return norm_; }
  double dev_pearson() const { return dev_pearson_; }
  std::size_t embedding_size() const { return encoder_->output_dim(); }

 private:
  EncoderPtr encoder_;
  ComponentRemoval removal_;
  std::optional<NormStats> norm_;
  RidgeFit ridge_;
  double dev_pearson_;
};

/// Ridge regression from pair features to gold / 5. l2 is chosen by Pearson
/// on `dev`; a singular l2 falls through to the next one. When `normalized`,
/// z-norm statistics are fitted on the training embeddings only.
SimilarityModel train_similarity_regressor(const PairSplit& train, const PairSplit& dev,
                                           EncoderPtr encoder, bool normalized,
                                           const std::vector<double>& l2_grid = kDefaultL2Grid);

struct LearnedSimResult {
  double mse = 0.0;  // in gold units [0, 5]
  std::optional<double> pearson;
  std::optional<double> spearman;
  std::string degenerate;  // non-empty when correlations are undefined
  std::size_t n_pairs = 0;
};

LearnedSimResult eval_learned_similarity(const SimilarityModel& model, const PairSplit& test);

// ---------------------------------------------------------------------------
// Transfer tasks

/// Embeds every sentence once, then per outer split fits the encoder's data
/// dependent stage and (when `normalized`) z-norm statistics on the training
/// rows only, trains the classifier and scores test accuracy. Cross
/// validation reports the mean over folds.
EvalResult run_transfer_task(const LabeledDataset& dataset, const Encoder& encoder,
                             const ClassifierSpec& spec, bool normalized,
                             const std::string& encoder_name = {});

}  // namespace embeval

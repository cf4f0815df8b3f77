#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "embeval/optim.hpp"

namespace embeval {

enum class ClassifierKind { LogisticRegression, Mlp };

std::string_view to_string(ClassifierKind kind);
ClassifierKind parse_classifier_kind(std::string_view text);

/// Shared L2 grid for logistic regression, MLP and ridge.
inline const std::vector<double> kDefaultL2Grid{1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0};

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::LogisticRegression;
  std::vector<double> l2_grid = kDefaultL2Grid;
  std::vector<std::size_t> hidden_sizes{50, 100, 200};  // MLP only
  std::uint64_t seed = 1;
  std::size_t max_epochs = 500;  // optimizer iterations, each a full pass
  double tolerance = 1e-5;       // gradient l2 norm
  std::size_t inner_folds = 10;  // used when no dev split exists

  /// Throws Error on an empty grid, negative l2, zero hidden size or
  /// non-positive tolerance.
  void validate() const;
};

/// Mean softmax cross-entropy + (l2/2)||W||^2 (biases unpenalized).
/// Parameters are packed as [W (C x D, row-major), b (C)].
class SoftmaxRegressionLoss {
 public:
  SoftmaxRegressionLoss(const Eigen::MatrixXd& x, const std::vector<int>& y,
                        std::size_t n_classes, double l2);

  std::size_t n_params() const { return (dim_ + 1) * n_classes_; }
  double operator()(const Eigen::VectorXd& params, Eigen::VectorXd& grad) const;

 private:
  const Eigen::MatrixXd& x_;
  const std::vector<int>& y_;
  std::size_t n_classes_;
  std::size_t dim_;
  double l2_;
};

/// One hidden ReLU layer, softmax output, mean cross-entropy plus
/// (l2/2)(||W1||^2 + ||W2||^2). Parameters are packed as
/// [W1 (H x D, row-major), b1 (H), W2 (C x H, row-major), b2 (C)].
class MlpLoss {
 public:
  MlpLoss(const Eigen::MatrixXd& x, const std::vector<int>& y, std::size_t n_classes,
          std::size_t hidden, double l2);

  std::size_t n_params() const { return hidden_ * (dim_ + 1) + n_classes_ * (hidden_ + 1); }
  double operator()(const Eigen::VectorXd& params, Eigen::VectorXd& grad) const;

 private:
  const Eigen::MatrixXd& x_;
  const std::vector<int>& y_;
  std::size_t n_classes_;
  std::size_t dim_;
  std::size_t hidden_;
  double l2_;
};

/// He-normal first layer, 1/sqrt(H) second layer, zero biases.
Eigen::VectorXd mlp_initial_params(std::size_t dim, std::size_t hidden, std::size_t n_classes,
                                   std::uint64_t seed);

struct TrainedClassifier {
  ClassifierKind kind = ClassifierKind::LogisticRegression;
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  std::size_t hidden = 0;  // 0 for logistic regression
  double l2 = 0.0;
  Eigen::VectorXd params;
  bool converged = false;
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
  double loss = 0.0;
  std::optional<double> validation_accuracy;  // set when chosen from a grid

  Eigen::MatrixXd logits(const Eigen::MatrixXd& x) const;
  /// argmax of logits; ties go to the lowest class id.
  std::vector<int> predict(const Eigen::MatrixXd& x) const;
  double accuracy(const Eigen::MatrixXd& x, const std::vector<int>& y) const;
  std::string hyperparams() const;
};

/// Labeled rows used for hyperparameter selection.
struct LabeledRows {
  Eigen::MatrixXd x;
  std::vector<int> y;
};

/// Single fit at a fixed l2 from zero weights.
TrainedClassifier fit_logreg(const Eigen::MatrixXd& x, const std::vector<int>& y,
                             std::size_t n_classes, double l2, const ClassifierSpec& spec);

/// Single fit at fixed (hidden, l2) from the given initial parameters.
TrainedClassifier fit_mlp(const Eigen::MatrixXd& x, const std::vector<int>& y,
                          std::size_t n_classes, std::size_t hidden, double l2,
                          const ClassifierSpec& spec, const Eigen::VectorXd& init);

/// Selects l2 (and hidden size for the MLP) by accuracy on `dev` when given,
/// otherwise by inner k-fold CV on the training rows, then refits on all
/// training rows. Ties keep the earliest grid entry.
TrainedClassifier train_logreg(const Eigen::MatrixXd& x, const std::vector<int>& y,
                               std::size_t n_classes, const ClassifierSpec& spec,
                               const std::optional<LabeledRows>& dev = std::nullopt);

TrainedClassifier train_mlp(const Eigen::MatrixXd& x, const std::vector<int>& y,
                            std::size_t n_classes, const ClassifierSpec& spec,
                            const std::optional<LabeledRows>& dev = std::nullopt);

TrainedClassifier train_classifier(const Eigen::MatrixXd& x, const std::vector<int>& y,
                                   std::size_t n_classes, const ClassifierSpec& spec,
                                   const std::optional<LabeledRows>& dev = std::nullopt);

}  // namespace embeval

#include "embeval/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <fmt/format.h>

#include "embeval/corpus.hpp"
#include "embeval/error.hpp"

namespace embeval {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

// Row-wise softmax cross-entropy on logits. Returns the summed loss and
// overwrites `logits` with (softmax - onehot).
double softmax_xent(Eigen::MatrixXd& logits, const std::vector<int>& y) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    auto row = logits.row(i);
    const double m = row.maxCoeff();
    row.array() -= m;
    row = row.array().exp().matrix();
    const double z = row.sum();
    row /= z;
    const auto label = static_cast<Eigen::Index>(y[static_cast<std::size_t>(i)]);
    loss -= std::log(std::max(row[label], 1e-300));
    row[label] -= 1.0;
  }
  return loss;
}

void check_inputs(const Eigen::MatrixXd& x, const std::vector<int>& y, std::size_t n_classes) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw DimensionMismatch(fmt::format("{} rows but {} labels", x.rows(), y.size()));
  }
  if (x.rows() == 0) throw Error("no training rows");
  for (int label : y) {
    if (label < 0 || static_cast<std::size_t>(label) >= n_classes) {
      throw Error(fmt::format("label {} outside [0,{})", label, n_classes));
    }
  }
}

void require_two_classes(const std::vector<int>& y) {
  if (std::set<int>(y.begin(), y.end()).size() < 2) {
    throw Error("classifier training needs at least 2 classes present");
  }
}

LbfgsOptions optimizer_options(const ClassifierSpec& spec) {
  LbfgsOptions o;
  o.max_iterations = spec.max_epochs;
  o.gradient_tolerance = spec.tolerance;
  return o;
}

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

struct Candidate {
  std::size_t hidden;
  double l2;
};

// Grid search shared by both classifiers; `fit` trains one candidate.
template <typename Fit>
TrainedClassifier select_and_fit(const Eigen::MatrixXd& x, const std::vector<int>& y,
                                 const std::vector<Candidate>& grid, const ClassifierSpec& spec,
                                 const std::optional<LabeledRows>& dev, Fit fit) {
  if (grid.size() == 1) return fit(x, y, grid.front());

  std::vector<Partition> folds;
  if (!dev) {
    const std::size_t k = std::min(spec.inner_folds, static_cast<std::size_t>(x.rows()));
    folds = cv_partitions(static_cast<std::size_t>(x.rows()), k, spec.seed);
  }
  std::size_t best = 0;
  double best_acc = -1.0;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    double acc = 0.0;
    if (dev) {
      acc = fit(x, y, grid[c]).accuracy(dev->x, dev->y);
    } else {
      for (const auto& f : folds) {
        const auto ytr = take(y, f.train);
        // A fold without two classes cannot train; it scores by majority vote.
        if (std::set<int>(ytr.begin(), ytr.end()).size() < 2) {
          const auto yte = take(y, f.test);
          acc += static_cast<double>(std::count(yte.begin(), yte.end(), ytr.front())) /
                 static_cast<double>(yte.size());
          continue;
        }
        acc += fit(take_rows(x, f.train), ytr, grid[c]).accuracy(take_rows(x, f.test),
                                                                  take(y, f.test));
      }
      acc /= static_cast<double>(folds.size());
    }
    if (acc > best_acc) {
      best_acc = acc;
      best = c;
    }
  }
  auto out = fit(x, y, grid[best]);
  out.validation_accuracy = best_acc;
  return out;
}

}  // namespace

std::string_view to_string(ClassifierKind kind) {
  return kind == ClassifierKind::LogisticRegression ? "logreg" : "mlp";
}

ClassifierKind parse_classifier_kind(std::string_view text) {
  if (text == "logreg" || text == "logistic_regression") return ClassifierKind::LogisticRegression;
  if (text == "mlp") return ClassifierKind::Mlp;
  throw Error(fmt::format("unknown classifier '{}'", text));
}

void ClassifierSpec::validate() const {
  if (l2_grid.empty()) throw Error("l2 grid is empty");
  for (double l : l2_grid) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw Error(fmt::format("invalid l2 value {}", l));
  }
  if (kind == ClassifierKind::Mlp) {
    if (hidden_sizes.empty()) throw Error("hidden size grid is empty");
    for (auto h : hidden_sizes) {
      if (h == 0) throw Error("hidden size must be positive");
    }
  }
  if (!(tolerance > 0.0)) throw Error("tolerance must be positive");
  if (max_epochs == 0) throw Error("max_epochs must be positive");
  if (inner_folds < 2) throw Error("inner_folds must be at least 2");
}

SoftmaxRegressionLoss::SoftmaxRegressionLoss(const Eigen::MatrixXd& x, const std::vector<int>& y,
                                             std::size_t n_classes, double l2)
    : x_(x), y_(y), n_classes_(n_classes), dim_(static_cast<std::size_t>(x.cols())), l2_(l2) {
  check_inputs(x, y, n_classes);
}

double SoftmaxRegressionLoss::operator()(const Eigen::VectorXd& params,
                                         Eigen::VectorXd& grad) const {
  const auto c = static_cast<Eigen::Index>(n_classes_);
  const auto d = static_cast<Eigen::Index>(dim_);
  const ConstMap w(params.data(), c, d);
  const auto b = params.segment(c * d, c);
  const double n = static_cast<double>(x_.rows());

  Eigen::MatrixXd z = x_ * w.transpose();
  z.rowwise() += b.transpose();
  const double data_loss = softmax_xent(z, y_) / n;

  grad.resize(params.size());
  MutMap gw(grad.data(), c, d);
  gw = z.transpose() * x_ / n + l2_ * w;
  grad.segment(c * d, c) = z.colwise().sum().transpose() / n;
  return data_loss + 0.5 * l2_ * w.squaredNorm();
}

MlpLoss::MlpLoss(const Eigen::MatrixXd& x, const std::vector<int>& y, std::size_t n_classes,
                 std::size_t hidden, double l2)
    : x_(x),
      y_(y),
      n_classes_(n_classes),
      dim_(static_cast<std::size_t>(x.cols())),
      hidden_(hidden),
      l2_(l2) {
  check_inputs(x, y, n_classes);
  if (hidden == 0) throw Error("hidden size must be positive");
}

double MlpLoss::operator()(const Eigen::VectorXd& params, Eigen::VectorXd& grad) const {
  const auto c = static_cast<Eigen::Index>(n_classes_);
  const auto d = static_cast<Eigen::Index>(dim_);
  const auto h = static_cast<Eigen::Index>(hidden_);
  const double n = static_cast<double>(x_.rows());

  Eigen::Index off = 0;
  const ConstMap w1(params.data() + off, h, d);
  off += h * d;
  const auto b1 = params.segment(off, h);
  off += h;
  const ConstMap w2(params.data() + off, c, h);
  off += c * h;
  const auto b2 = params.segment(off, c);

  Eigen::MatrixXd pre = x_ * w1.transpose();
  pre.rowwise() += b1.transpose();
  const Eigen::MatrixXd act = pre.cwiseMax(0.0);
  Eigen::MatrixXd z = act * w2.transpose();
  z.rowwise() += b2.transpose();
  const double data_loss = softmax_xent(z, y_) / n;
  z /= n;  // dL/dlogits

  Eigen::MatrixXd dact = z * w2;
  dact = (pre.array() > 0.0).select(dact, 0.0);

  grad.resize(params.size());
  off = 0;
  MutMap(grad.data() + off, h, d) = dact.transpose() * x_ + l2_ * w1;
  off += h * d;
  grad.segment(off, h) = dact.colwise().sum().transpose();
  off += h;
  MutMap(grad.data() + off, c, h) = z.transpose() * act + l2_ * w2;
  off += c * h;
  grad.segment(off, c) = z.colwise().sum().transpose();
  return data_loss + 0.5 * l2_ * (w1.squaredNorm() + w2.squaredNorm());
}

Eigen::VectorXd mlp_initial_params(std::size_t dim, std::size_t hidden, std::size_t n_classes,
                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> first(0.0, std::sqrt(2.0 / static_cast<double>(dim)));
  std::normal_distribution<double> second(0.0, 1.0 / std::sqrt(static_cast<double>(hidden)));
  const auto total = static_cast<Eigen::Index>(hidden * (dim + 1) + n_classes * (hidden + 1));
  Eigen::VectorXd p = Eigen::VectorXd::Zero(total);
  Eigen::Index off = 0;
  for (std::size_t i = 0; i < hidden * dim; ++i) p[off++] = first(rng);
  off += static_cast<Eigen::Index>(hidden);
  for (std::size_t i = 0; i < n_classes * hidden; ++i) p[off++] = second(rng);
  return p;
}

Eigen::MatrixXd TrainedClassifier::logits(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.cols()) != n_features) {
    throw DimensionMismatch(
        fmt::format("classifier expects {} features, got {}", n_features, x.cols()));
  }
  const auto c = static_cast<Eigen::Index>(n_classes);
  const auto d = static_cast<Eigen::Index>(n_features);
  if (kind == ClassifierKind::LogisticRegression) {
    const ConstMap w(params.data(), c, d);
    Eigen::MatrixXd z = x * w.transpose();
    z.rowwise() += params.segment(c * d, c).transpose();
    return z;
  }
  const auto h = static_cast<Eigen::Index>(hidden);
  const ConstMap w1(params.data(), h, d);
  const auto b1 = params.segment(h * d, h);
  const ConstMap w2(params.data() + h * d + h, c, h);
  const auto b2 = params.segment(h * d + h + c * h, c);
  Eigen::MatrixXd pre = x * w1.transpose();
  pre.rowwise() += b1.transpose();
  Eigen::MatrixXd z = pre.cwiseMax(0.0) * w2.transpose();
  z.rowwise() += b2.transpose();
  return z;
}

std::vector<int> TrainedClassifier::predict(const Eigen::MatrixXd& x) const {
  const auto z = logits(x);
  std::vector<int> out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index arg = 0;
    z.row(i).maxCoeff(&arg);
    out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  return out;
}

double TrainedClassifier::accuracy(const Eigen::MatrixXd& x, const std::vector<int>& y) const {
  if (y.empty()) throw Error("accuracy of an empty set");
  const auto pred = predict(x);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hits += pred[i] == y[i];
  return static_cast<double>(hits) / static_cast<double>(y.size());
}

std::string TrainedClassifier::hyperparams() const {
  if (kind == ClassifierKind::Mlp) return fmt::format("l2={:g};hidden={}", l2, hidden);
  return fmt::format("l2={:g}", l2);
}

TrainedClassifier fit_logreg(const Eigen::MatrixXd& x, const std::vector<int>& y,
                             std::size_t n_classes, double l2, const ClassifierSpec& spec) {
  const SoftmaxRegressionLoss loss(x, y, n_classes, l2);
  const auto r = minimize_lbfgs(std::cref(loss), Eigen::VectorXd::Zero(
                                                     static_cast<Eigen::Index>(loss.n_params())),
                                optimizer_options(spec));
  TrainedClassifier out;
  out.kind = ClassifierKind::LogisticRegression;
  out.n_features = static_cast<std::size_t>(x.cols());
  out.n_classes = n_classes;
  out.l2 = l2;
  out.params = r.x;
  out.converged = r.converged;
  out.iterations = r.iterations;
  out.gradient_norm = r.gradient_norm;
  out.loss = r.value;
  return out;
}

TrainedClassifier fit_mlp(const Eigen::MatrixXd& x, const std::vector<int>& y,
                          std::size_t n_classes, std::size_t hidden, double l2,
                          const ClassifierSpec& spec, const Eigen::VectorXd& init) {
  const MlpLoss loss(x, y, n_classes, hidden, l2);
  if (static_cast<std::size_t>(init.size()) != loss.n_params()) {
    throw DimensionMismatch(
        fmt::format("MLP init has {} params, expected {}", init.size(), loss.n_params()));
  }
  const auto r = minimize_lbfgs(std::cref(loss), init, optimizer_options(spec));
  TrainedClassifier out;
  out.kind = ClassifierKind::Mlp;
  out.n_features = static_cast<std::size_t>(x.cols());
  out.n_classes = n_classes;
  out.hidden = hidden;
  out.l2 = l2;
  out.params = r.x;
  out.converged = r.converged;
  out.iterations = r.iterations;
  out.gradient_norm = r.gradient_norm;
  out.loss = r.value;
  return out;
}

TrainedClassifier train_logreg(const Eigen::MatrixXd& x, const std::vector<int>& y,
                               std::size_t n_classes, const ClassifierSpec& spec,
                               const std::optional<LabeledRows>& dev) {
  spec.validate();
  check_inputs(x, y, n_classes);
  require_two_classes(y);
  std::vector<Candidate> grid;
  for (double l2 : spec.l2_grid) grid.push_back({0, l2});
  return select_and_fit(x, y, grid, spec, dev,
                        [&](const Eigen::MatrixXd& xs, const std::vector<int>& ys, Candidate c) {
                          return fit_logreg(xs, ys, n_classes, c.l2, spec);
                        });
}

TrainedClassifier train_mlp(const Eigen::MatrixXd& x, const std::vector<int>& y,
                            std::size_t n_classes, const ClassifierSpec& spec,
                            const std::optional<LabeledRows>& dev) {
  spec.validate();
  check_inputs(x, y, n_classes);
  require_two_classes(y);
  std::vector<Candidate> grid;
  for (auto h : spec.hidden_sizes) {
    for (double l2 : spec.l2_grid) grid.push_back({h, l2});
  }
  const auto d = static_cast<std::size_t>(x.cols());
  return select_and_fit(
      x, y, grid, spec, dev,
      [&](const Eigen::MatrixXd& xs, const std::vector<int>& ys, Candidate c) {
        return fit_mlp(xs, ys, n_classes, c.hidden, c.l2, spec,
                       mlp_initial_params(d, c.hidden, n_classes, spec.seed));
      });
}

TrainedClassifier train_classifier(const Eigen::MatrixXd& x, const std::vector<int>& y,
                                   std::size_t n_classes, const ClassifierSpec& spec,
                                   const std::optional<LabeledRows>& dev) {
  return spec.kind == ClassifierKind::LogisticRegression ? train_logreg(x, y, n_classes, spec, dev)
                                                         : train_mlp(x, y, n_classes, spec, dev);
}

}  // namespace embeval

#include "embeval/normalize.hpp"

#include <cmath>

#include <fmt/format.h>

#include "embeval/error.hpp"

namespace embeval {

NormStats fit_znorm(const Eigen::MatrixXd& x, Split fitted_on) {
  if (x.rows() < 2) throw Error(fmt::format("fit_znorm needs at least 2 rows, got {}", x.rows()));
  const auto n = x.rows();
  const auto d = x.cols();
  NormStats stats;
  stats.fitted_on = fitted_on;
  stats.mean.resize(d);
  stats.std.resize(d);
  // Sequential two-pass per column keeps the summation order fixed.
  for (Eigen::Index j = 0; j < d; ++j) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) sum += x(i, j);
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double dev = x(i, j) - mean;
      sq += dev * dev;
    }
    stats.mean[j] = mean;
    stats.std[j] = std::sqrt(sq / static_cast<double>(n));
    if (stats.std[j] == 0.0) stats.degenerate_columns.push_back(static_cast<std::size_t>(j));
  }
  return stats;
}

Eigen::MatrixXd standardize(const NormStats& stats, const Eigen::MatrixXd& x) {
  if (static_cast<std::size_t>(x.cols()) != stats.dim()) {
    throw DimensionMismatch(
        fmt::format("normalization stats have dim {}, matrix has {} columns", stats.dim(), x.cols()));
  }
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double s = stats.std[j] == 0.0 ? 1.0 : stats.std[j];
    for (Eigen::Index i = 0; i < x.rows(); ++i) out(i, j) = (x(i, j) - stats.mean[j]) / s;
  }
  return out;
}

NormalizedRows unit_rows(Eigen::MatrixXd x) {
  NormalizedRows out;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double norm = x.row(i).norm();
    if (norm <= kZeroRowNorm) {
      x.row(i).setZero();
      out.zero_rows.push_back(static_cast<std::size_t>(i));
    } else {
      x.row(i) /= norm;
    }
  }
  out.rows = std::move(x);
  return out;
}

NormalizedRows apply_znorm(const NormStats& stats, const Eigen::MatrixXd& x) {
  return unit_rows(standardize(stats, x));
}

void require_fitted_on(const NormStats& stats, Split expected) {
  if (stats.fitted_on != expected) {
    throw AuditError(fmt::format("normalization stats fitted on '{}', expected '{}'",
                                 to_string(stats.fitted_on), to_string(expected)));
  }
}

NormalizedRows normalize_ucp(const Eigen::MatrixXd& all_rows) {
  return apply_znorm(fit_znorm(all_rows, Split::All), all_rows);
}

}  // namespace embeval

#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "embeval/corpus.hpp"

namespace embeval {

/// Column statistics for z-normalization. `fitted_on` records which split the
/// statistics were estimated from; supervised evaluators refuse stats that
/// were not fitted on Split::Train.
struct NormStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;  // population standard deviation
  Split fitted_on = Split::Train;
  std::vector<std::size_t> degenerate_columns;  // std == 0

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
};

/// Rows with norm below this after centering are treated as zero.
inline constexpr double kZeroRowNorm = 1e-12;

NormStats fit_znorm(const Eigen::MatrixXd& x, Split fitted_on);

/// (x - mean) / std column-wise; zero-std columns are divided by 1.
Eigen::MatrixXd standardize(const NormStats& stats, const Eigen::MatrixXd& x);

struct NormalizedRows {
  Eigen::MatrixXd rows;
  std::vector<std::size_t> zero_rows;
};

/// Scales each row to unit l2 norm; (near-)zero rows are zeroed and flagged.
NormalizedRows unit_rows(Eigen::MatrixXd x);

/// standardize followed by unit_rows.
NormalizedRows apply_znorm(const NormStats& stats, const Eigen::MatrixXd& x);

/// Throws AuditError unless stats.fitted_on == expected.
void require_fitted_on(const NormStats& stats, Split expected);

/// Unsupervised setting: fit on the whole stacked 2N x D matrix and apply to
/// it. Not idempotent, since row rescaling breaks the column centering.
NormalizedRows normalize_ucp(const Eigen::MatrixXd& all_rows);

}  // namespace embeval

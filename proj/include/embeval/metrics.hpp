#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace embeval {

// All reductions below sum sequentially in index order.

/// Product-moment correlation. Throws DegenerateCorrelation when either
/// series is constant and Error on length mismatch or n < 2.
double pearson(std::span<const double> x, std::span<const double> y);

/// 1-based fractional ranks: tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> x);

/// Pearson correlation of average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

double mse(std::span<const double> pred, std::span<const double> gold);

/// Throws UndefinedCosine if either vector is zero.
double cosine(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

struct Dispersion {
  double range = 0.0;
  double std = 0.0;  // population
};

Dispersion dispersion(std::span<const double> values);

}  // namespace embeval

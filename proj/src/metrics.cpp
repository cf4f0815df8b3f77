#include "embeval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "embeval/error.hpp"

namespace embeval {

namespace {

double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

bool is_constant(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
}

void check_lengths(std::span<const double> x, std::span<const double> y, std::size_t min_len,
                   const char* what) {
  if (x.size() != y.size()) {
    throw Error(fmt::format("{}: length mismatch ({} vs {})", what, x.size(), y.size()));
  }
  if (x.size() < min_len) {
    throw Error(fmt::format("{}: need at least {} values, got {}", what, min_len, x.size()));
  }
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  check_lengths(x, y, 2, "pearson");
  if (is_constant(x) || is_constant(y)) {
    throw DegenerateCorrelation("correlation undefined: zero-variance series");
  }
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw DegenerateCorrelation("correlation undefined: zero-variance series");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
    // Positions i..j-1 (0-based) share rank mean((i+1)..j).
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  check_lengths(x, y, 2, "spearman");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

double mse(std::span<const double> pred, std::span<const double> gold) {
  check_lengths(pred, gold, 1, "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - gold[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

double cosine(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (u.size() != v.size()) {
    throw DimensionMismatch(fmt::format("cosine: dims {} and {}", u.size(), v.size()));
  }
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) throw UndefinedCosine();
  return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

Dispersion dispersion(std::span<const double> values) {
  if (values.empty()) throw Error("dispersion of an empty series");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double m = mean_of(values);
  double sq = 0.0;
  for (double v : values) sq += (v - m) * (v - m);
  return {*hi - *lo, std::sqrt(sq / static_cast<double>(values.size()))};
}

}  // namespace embeval

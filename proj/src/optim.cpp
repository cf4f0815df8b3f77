#include "embeval/optim.hpp"

#include <cmath>
#include <vector>
#include <deque>

namespace embeval {

namespace {

struct Correction {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho;
};

Eigen::VectorXd two_loop(const std::deque<Correction>& history, const Eigen::VectorXd& g) {
  Eigen::VectorXd q = g;
  std::vector<double> alpha(history.size());
  for (std::size_t i = history.size(); i-- > 0;) {
    alpha[i] = history[i].rho * history[i].s.dot(q);
    q -= alpha[i] * history[i].y;
  }
  const auto& last = history.back();
  q *= last.s.dot(last.y) / last.y.squaredNorm();
  for (std::size_t i = 0; i < history.size(); ++i) {
    const double beta = history[i].rho * history[i].y.dot(q);
    q += (alpha[i] - beta) * history[i].s;
  }
  return -q;
}

}  // namespace

OptimResult minimize_lbfgs(const Objective& objective, Eigen::VectorXd x0,
                           const LbfgsOptions& options) {
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxBacktracks = 60;

  OptimResult r;
  r.x = std::move(x0);
  Eigen::VectorXd g(r.x.size());
  r.value = objective(r.x, g);
  r.gradient_norm = g.norm();
  if (r.gradient_norm <= options.gradient_tolerance) {
    r.converged = true;
    return r;
  }

  std::deque<Correction> history;
  Eigen::VectorXd x_new(r.x.size());
  Eigen::VectorXd g_new(r.x.size());
  while (r.iterations < options.max_iterations) {
    Eigen::VectorXd dir = history.empty() ? Eigen::VectorXd(-g / r.gradient_norm)
                                          : two_loop(history, g);
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      history.clear();
      dir = -g / r.gradient_norm;
      slope = g.dot(dir);
    }

    double step = 1.0;
    double f_new = 0.0;
    bool accepted = false;
    for (int k = 0; k < kMaxBacktracks; ++k) {
      x_new = r.x + step * dir;
      f_new = objective(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= r.value + kArmijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++r.iterations;
    if (!accepted) {
      if (history.empty()) break;  // no descent even along -g
      history.clear();
      continue;
    }

    Eigen::VectorXd s = x_new - r.x;
    Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      history.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (history.size() > options.history) history.pop_front();
    }
    r.x.swap(x_new);
    g.swap(g_new);
    r.value = f_new;
    r.gradient_norm = g.norm();
    if (r.gradient_norm <= options.gradient_tolerance) {
      r.converged = true;
      break;
    }
  }
  return r;
}

}  // namespace embeval

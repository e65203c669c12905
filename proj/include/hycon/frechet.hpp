#pragma once

// Weighted Frechet (Karcher) mean on the hyperboloid.
//
// Fixed-step Riemannian gradient descent, y <- exp_y(eta * mean_i w_i log_y(x_i)),
// with step halving until the objective decreases, or holds while the gradient
// norm decreases. Per-point work can be spread over threads; accumulation always
// uses the same pairwise tree and the result is bitwise identical for any thread
// count.

#include <cmath>
#include <optional>
#include <span>
#include <sstream>
#include <vector>

#include "hycon/errors.hpp"
#include "hycon/lorentz.hpp"
#include "hycon/parallel.hpp"

namespace hycon {

enum class FrechetInit { projected_arithmetic_mean, first_point };

struct FrechetConfig {
  int max_iters = 1000;
  double step_size = 0.5;
  double tol = 1e-10;
  FrechetInit init = FrechetInit::projected_arithmetic_mean;
  int max_halvings = 30;
  unsigned threads = 1;

  void validate() const {
    if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
    if (!(step_size > 0.0 && step_size <= 1.0)) throw ConfigError("step_size must lie in (0, 1]");
    if (!(tol > 0.0)) throw ConfigError("tol must be positive");
    if (max_halvings < 0) throw ConfigError("max_halvings must be >= 0");
  }
};

struct FrechetResult {
  LorentzPoint mean;
  int iterations = 0;
  double final_gradient_norm = 0.0;
  bool converged = false;
  // Objective (weighted mean squared distance) at the initial point and after
  // every accepted step.
  std::vector<double> objective_trace;
};

namespace detail {

inline void check_point_set(std::span<const LorentzPoint> points, std::span<const double> weights) {
  if (points.empty()) throw EmptySetError("Frechet mean of an empty point set");
  for (const auto& p : points) require_compatible(points.front(), p);
  if (weights.empty()) return;
  if (weights.size() != points.size()) {
    std::ostringstream os;
    os << "got " << weights.size() << " weights for " << points.size() << " points";
    throw ConfigError(os.str());
  }
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw ConfigError("weights must be finite and nonnegative");
    total += w;
  }
  if (total <= 0.0) throw ConfigError("weights are all zero");
}

inline std::vector<double> normalized_weights(std::size_t n, std::span<const double> weights) {
  std::vector<double> w(n, 1.0);
  if (!weights.empty()) w.assign(weights.begin(), weights.end());
  double total = pairwise_sum(std::span<const double>(w));
  for (double& x : w) x /= total;
  return w;
}

// Weighted mean of log_y(x_i) as raw coordinates in T_y.
inline Vector mean_log(const LorentzPoint& y, std::span<const LorentzPoint> points,
                       const std::vector<double>& w, unsigned threads) {
  std::vector<Vector> terms(points.size());
  parallel_for(points.size(), threads,
               [&](std::size_t i) { terms[i] = w[i] * log_map(y, points[i]).coords(); });
  return project_to_tangent(pairwise_sum(std::span<const Vector>(terms)), y);
}

inline double objective(const LorentzPoint& y, std::span<const LorentzPoint> points,
                        const std::vector<double>& w, unsigned threads) {
  std::vector<double> terms(points.size());
  parallel_for(points.size(), threads, [&](std::size_t i) {
    const double d = geodesic_distance(y, points[i]);
    terms[i] = w[i] * d * d;
  });
  return pairwise_sum(std::span<const double>(terms));
}

}  // namespace detail

// Weighted mean squared geodesic distance from y to the points.
inline double frechet_objective(const LorentzPoint& y, std::span<const LorentzPoint> points,
                                std::span<const double> weights = {}) {
  detail::check_point_set(points, weights);
  require_compatible(y, points.front());
  return detail::objective(y, points, detail::normalized_weights(points.size(), weights), 1);
}

// Lorentz norm of the mean of log_candidate(x_i); zero exactly at the mean.
inline double riemannian_grad_norm(const LorentzPoint& candidate, std::span<const LorentzPoint> points,
                                   std::span<const double> weights = {}) {
  detail::check_point_set(points, weights);
  require_compatible(candidate, points.front());
  const auto w = detail::normalized_weights(points.size(), weights);
  return lorentz_norm(detail::mean_log(candidate, points, w, 1));
}

inline FrechetResult frechet_mean(std::span<const LorentzPoint> points, std::span<const double> weights = {},
                                  const FrechetConfig& config = {}) {
  config.validate();
  detail::check_point_set(points, weights);
  const auto w = detail::normalized_weights(points.size(), weights);
  const Curvature c = points.front().curvature();

  std::optional<LorentzPoint> y;
  if (config.init == FrechetInit::first_point) {
    y = points.front();
  } else {
    Vector spatial = Vector::Zero(points.front().dim());
    for (std::size_t i = 0; i < points.size(); ++i) spatial += w[i] * points[i].spatial();
    y = lift(spatial, c);
  }

  FrechetResult result{*y, 0, 0.0, false, {}};
  double f = detail::objective(*y, points, w, config.threads);
  result.objective_trace.push_back(f);

  Vector grad = detail::mean_log(*y, points, w, config.threads);
  double grad_norm = lorentz_norm(grad);
  bool stalled = false;
  while (grad_norm > config.tol && result.iterations < config.max_iters) {
    double eta = config.step_size;
    bool accepted = false;
    for (int h = 0; h <= config.max_halvings; ++h, eta *= 0.5) {
      LorentzPoint candidate = exp_map(*y, eta * grad);
      const double f_new = detail::objective(candidate, points, w, config.threads);
      if (f_new > f) continue;
      // Once the objective is flat to rounding, a step must shrink the gradient.
      Vector grad_new = detail::mean_log(candidate, points, w, config.threads);
      const double norm_new = lorentz_norm(grad_new);
      if (f_new < f || norm_new < grad_norm) {
        y = std::move(candidate);
        f = f_new;
        grad = std::move(grad_new);
        grad_norm = norm_new;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // Neither the objective nor the gradient resolves further progress.
      stalled = true;
      break;
    }
    ++result.iterations;
    result.objective_trace.push_back(f);
  }

  result.mean = *y;
  result.final_gradient_norm = grad_norm;
  result.converged = grad_norm <= config.tol || (stalled && grad_norm <= std::sqrt(config.tol));
  return result;
}

inline FrechetResult frechet_mean(const std::vector<LorentzPoint>& points, const FrechetConfig& config) {
  return frechet_mean(std::span<const LorentzPoint>(points), {}, config);
}

}  // namespace hycon

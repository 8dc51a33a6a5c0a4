#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include <Eigen/Dense>

namespace cernet::testing {

// Central differences of f at x, one coordinate at a time.
inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                          Eigen::VectorXd x, double step = 1e-5) {
  Eigen::VectorXd grad(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + step;
    const double up = f(x);
    x[i] = orig - step;
    const double down = f(x);
    x[i] = orig;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

// |a - n| / max(|a|, |n|, floor). The floor keeps components that are zero
// up to round-off from dominating the comparison.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

struct GradientComparison {
  double max_relative_error = 0.0;
  Eigen::Index worst_index = -1;
  int compared = 0;
};

inline GradientComparison compare_gradients(const Eigen::VectorXd& analytic,
                                            const Eigen::VectorXd& numeric,
                                            double floor = 1e-6) {
  GradientComparison out;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double err = relative_error(analytic[i], numeric[i], floor);
    if (out.worst_index < 0 || err > out.max_relative_error) {
      out.max_relative_error = err;
      out.worst_index = i;
    }
    ++out.compared;
  }
  return out;
}

}  // namespace cernet::testing

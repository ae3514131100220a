#pragma once

// Independent numerical references used by the tests: adaptive and composite
// quadrature, Monte Carlo means with standard errors.

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

// Adaptive Gauss-Kronrod on [a,b], split at the given breakpoints so that
// kinks of piecewise integrands fall on panel edges.
inline double adaptive(const std::function<double(double)>& f, double a, double b, std::vector<double> breaks = {}) {
  using boost::math::quadrature::gauss_kronrod;
  breaks.push_back(a);
  breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double lo = std::max(a, breaks[i]), hi = std::min(b, breaks[i + 1]);
    if (hi <= lo) continue;
    double err = 0.0;
    total += gauss_kronrod<double, 31>::integrate(f, lo, hi, 12, 1e-12, &err);
  }
  return total;
}

// Composite 10-point Gauss-Legendre between sorted breakpoints in [0,1].
// Exact (to rounding) for piecewise polynomials of degree <= 19 per panel.
inline std::vector<std::pair<double, double>> composite_rule(std::vector<double> breaks) {
  breaks.push_back(0.0);
  breaks.push_back(1.0);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  using G = boost::math::quadrature::gauss<double, 10>;
  const auto& abs = G::abscissa();
  const auto& w = G::weights();
  std::vector<std::pair<double, double>> rule;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double lo = std::max(0.0, breaks[i]), hi = std::min(1.0, breaks[i + 1]);
    if (hi <= lo) continue;
    const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
    for (std::size_t j = 0; j < abs.size(); ++j) {
      if (abs[j] == 0.0) {
        rule.emplace_back(c, h * w[j]);
      } else {
        rule.emplace_back(c - h * abs[j], h * w[j]);
        rule.emplace_back(c + h * abs[j], h * w[j]);
      }
    }
  }
  return rule;
}

struct McResult {
  double mean;
  double stderr_;
};

// Sample mean and its standard error of g over n draws.
template <typename Draw>
McResult monte_carlo(std::size_t n, Draw&& draw) {
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = draw();
    s += v;
    s2 += v * v;
  }
  const double mean = s / static_cast<double>(n);
  const double var = (s2 - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1);
  return {mean, std::sqrt(std::max(var, 0.0) / static_cast<double>(n))};
}

}  // namespace oracle

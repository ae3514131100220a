#pragma once

// Oracles that need library types: the Wendland recursion, quadrature of a
// fitted surrogate, and a Monte Carlo estimate of the squared MMD.

#include <cmath>
#include <functional>

#include "cfqmc/interpolate.hpp"
#include "cfqmc/kernels.hpp"
#include "cfqmc/points.hpp"
#include "cfqmc/rng.hpp"
#include "oracles.hpp"

namespace oracle {

// phi_{1,k} from the integral-operator recursion I[phi](r) = int_r^1 t phi(t) dt
// applied k times to (1-r)^{k+1}, evaluated numerically and normalized at 0.
// Every level integrates a polynomial of degree < 60, which a 30-point
// Gauss-Legendre rule handles to rounding error.
inline double wendland_recursion_unnormalized(int k, double r) {
  using G = boost::math::quadrature::gauss<double, 30>;
  std::function<double(double)> g = [k](double t) { return std::pow(1.0 - t, k + 1); };
  for (int j = 0; j < k; ++j) {
    auto prev = g;
    g = [prev](double s) { return G::integrate([&](double t) { return t * prev(t); }, s, 1.0); };
  }
  return g(r);
}

inline double wendland_recursion(int k, double r) {
  return wendland_recursion_unnormalized(k, r) / wendland_recursion_unnormalized(k, 0.0);
}

// Integral of a d <= 2 surrogate by a composite rule whose panels end at
// every kink of the piecewise-polynomial kernel sum.
inline double surrogate_integral(const cfq::Interpolant& I) {
  const auto& nodes = I.nodes();
  const double rho = I.spec().support_radius();
  const std::size_t d = nodes.dim();
  std::vector<std::vector<std::pair<double, double>>> rules(d);
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> br;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      for (double b : {nodes[i][j] - rho, nodes[i][j], nodes[i][j] + rho})
        if (b > 0.0 && b < 1.0) br.push_back(b);
    rules[j] = composite_rule(br);
  }
  if (d == 1) {
    double s = 0.0;
    for (auto [x, w] : rules[0]) s += w * I.evaluate(std::vector<double>{x});
    return s;
  }
  double s = 0.0;
  for (auto [x, wx] : rules[0])
    for (auto [y, wy] : rules[1]) s += wx * wy * I.evaluate(std::vector<double>{x, y});
  return s;
}

// Unbiased Monte Carlo estimate of the squared MMD between the points and the
// uniform measure: h(X, X') = K(X,X') - mean_n [K(x_n,X) + K(x_n,X')] + mean_nm K(x_n,x_m).
inline McResult mmd_squared_mc(const cfq::KernelSpec& s, const cfq::PointSet& ps, std::size_t samples,
                               std::uint64_t seed) {
  const double n = static_cast<double>(ps.size());
  double pair = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i)
    for (std::size_t j = 0; j < ps.size(); ++j) pair += cfq::kernel_eval(s, ps[i], ps[j]);
  pair /= n * n;
  cfq::Rng rng(seed);
  return monte_carlo(samples, [&] {
    const auto x = rng.uniform_vector(ps.dim()), y = rng.uniform_vector(ps.dim());
    double cross = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) cross += cfq::kernel_eval(s, ps[i], x) + cfq::kernel_eval(s, ps[i], y);
    return cfq::kernel_eval(s, x, y) - cross / n + pair;
  });
}

}  // namespace oracle

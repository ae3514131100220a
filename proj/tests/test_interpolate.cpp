#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cfqmc/interpolate.hpp"
#include "cfqmc/points.hpp"
#include "cfqmc/rng.hpp"
#include "reference.hpp"

using namespace cfq;
using doctest::Approx;

namespace {

std::vector<double> sample(const PointSet& ps, const std::function<double(PointView)>& f) {
  std::vector<double> v(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) v[i] = f(ps[i]);
  return v;
}

double smooth_target(PointView x, std::uint64_t seed) {
  Rng rng(seed);
  double s = rng.uniform();
  for (double xi : x) s += std::sin(3.0 * rng.uniform() * xi + rng.uniform()) * (0.5 + rng.uniform());
  return s;
}

double max_node_residual(const Interpolant& I, const std::vector<double>& v) {
  double r = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) r = std::max(r, std::abs(I.evaluate(I.nodes()[i]) - v[i]));
  return r;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("default jitter scales with the node count") {
  CHECK(default_jitter(1) == 1e-10);
  CHECK(default_jitter(100) == Approx(1e-8));
}

TEST_CASE("single node") {
  const KernelSpec s(1, 2, 0.6);
  const PointSet u(2, {0.3, 0.7}, {});
  const std::vector<double> c{2.5};
  const auto I = fit(s, u, c, 0.0);
  CHECK(I.beta()[0] == Approx(2.5));
  CHECK(I.exact_integral() == Approx(2.5 * kernel_integral(s, u[0])));
  const std::vector<double> x{0.5, 0.5};
  CHECK(I.evaluate(x) == Approx(2.5 * kernel_eval(s, x, u[0])));
}

TEST_CASE("zero values give a zero surrogate") {
  const KernelSpec s(2, 2, 1.0);
  const auto u = midpoint_grid(4, 2);
  const std::vector<double> z(u.size(), 0.0);
  const auto I = fit(s, u, z, default_jitter(u.size()));
  CHECK(I.beta().cwiseAbs().maxCoeff() == 0.0);
  CHECK(I.exact_integral() == 0.0);
  const std::vector<double> x{0.1, 0.9};
  CHECK(I.control_functional(x) == 0.0);
}

TEST_CASE("reproducing column gives a unit coefficient vector") {
  const KernelSpec s(1, 1, 0.5);
  const auto u = midpoint_grid(6, 1);
  const auto v = sample(u, [&](PointView x) { return kernel_eval(s, x, u[0]); });
  const auto I = fit(s, u, v, 0.0);
  CHECK(I.beta()[0] == Approx(1.0).epsilon(1e-12));
  for (Eigen::Index i = 1; i < I.beta().size(); ++i) CHECK(std::abs(I.beta()[i]) < 1e-12);
}

TEST_CASE("hand example: one node at 0.5, k = 0") {
  const KernelSpec s(0, 1, 1.0);
  const PointSet u(1, {0.5}, {});
  const std::vector<double> one{1.0};
  const auto I = fit(s, u, one, 0.0);
  CHECK(I.evaluate(std::vector<double>{0.75}) == Approx(0.75));
}

TEST_CASE("compact support: far from every node the surrogate vanishes") {
  const KernelSpec s(1, 2, 0.1);
  const PointSet u(2, {0.1, 0.1, 0.2, 0.15}, {});
  const std::vector<double> v{1.0, -2.0};
  const auto I = fit(s, u, v, 0.0);
  CHECK(I.evaluate(std::vector<double>{0.8, 0.8}) == 0.0);
  CHECK(I.evaluate(std::vector<double>{0.15, 0.9}) == 0.0);
}

TEST_CASE("interpolation exactness on up to 256 nodes, d <= 3, jitter 1e-10") {
  for (std::size_t d = 1; d <= 3; ++d)
    for (int k : {0, 1, 2})
      for (std::size_t m : {16u, 64u, 256u}) {
        const auto u = halton(m, d, true);
        const auto v = sample(u, [&](PointView x) { return smooth_target(x, 31 * d + m + static_cast<std::size_t>(k)); });
        const auto I = fit(KernelSpec(k, d, 1.0), u, v, 1e-10);
        CAPTURE(d);
        CAPTURE(k);
        CAPTURE(m);
        CHECK(max_node_residual(I, v) <= 1e-8 * (1.0 + max_abs(v)));
        CHECK(I.residual_norm() <= I.fit_tolerance());
      }
}

TEST_CASE("exact integral equals the coefficient-weighted kernel integrals") {
  const KernelSpec s(2, 3, 0.7);
  const auto u = halton(40, 3, true);
  const auto v = sample(u, [](PointView x) { return smooth_target(x, 5); });
  const auto I = fit(s, u, v, default_jitter(u.size()));
  double sum = 0.0;
  for (std::size_t n = 0; n < u.size(); ++n) sum += I.beta()[static_cast<Eigen::Index>(n)] * kernel_integral(s, u[n]);
  CHECK(I.exact_integral() == Approx(sum).epsilon(1e-14));
}

TEST_CASE("exact integral matches quadrature of the surrogate (d <= 2)") {
  for (int k : {0, 1, 2})
    for (double rho : {0.35, 1.0}) {
      const auto u1 = halton(50, 1, true);
      const auto v1 = sample(u1, [](PointView x) { return std::exp(x[0]) * std::cos(4 * x[0]); });
      const auto I1 = fit(KernelSpec(k, 1, rho), u1, v1, default_jitter(u1.size()));
      CHECK(std::abs(I1.exact_integral() - oracle::surrogate_integral(I1)) <= 1e-8);

      for (const auto& u2 : {midpoint_grid(8, 2), halton(40, 2, true)}) {
        const auto v2 = sample(u2, [](PointView x) { return smooth_target(x, 77); });
        const auto I2 = fit(KernelSpec(k, 2, rho), u2, v2, default_jitter(u2.size()));
        CHECK(std::abs(I2.exact_integral() - oracle::surrogate_integral(I2)) <= 1e-8);
      }
    }
}

TEST_CASE("control functional has zero mean (Monte Carlo, 1e6 points)") {
  const KernelSpec s(1, 2, 1.0);
  const auto u = midpoint_grid(5, 2);
  const auto v = sample(u, [](PointView x) { return std::exp(-3.0 * (x[0] - 0.4) * (x[0] - 0.4)) + x[1]; });
  const auto I = fit(s, u, v, default_jitter(u.size()));
  Rng rng(3);
  const auto mc = oracle::monte_carlo(1000000, [&] { return I.control_functional(rng.uniform_vector(2)); });
  CHECK(std::abs(mc.mean) <= 3.0 * mc.stderr_);
  const std::vector<double> x{0.3, 0.6};
  CHECK(I.control_functional(x) + I.exact_integral() == I.evaluate(x));
}

TEST_CASE("fitted surrogate has the smallest native-space norm among interpolants") {
  // Any interpolant built from the nodes plus extra centres, with arbitrary
  // values at the extras, has a norm at least as large as the fitted one.
  const KernelSpec s(1, 2, 0.8);
  const auto u = halton(12, 2, true);
  const auto v = sample(u, [](PointView x) { return smooth_target(x, 9); });
  const auto I = fit(s, u, v, 0.0);
  const double norm = I.beta().dot(gram(s, u, 0.0) * I.beta());
  Rng rng(123);
  for (int trial = 0; trial < 20; ++trial) {
    const auto extra = uniform_points(6, 2, derive_seed(41, {static_cast<std::uint64_t>(trial)}));
    const auto all = u.concat(extra);
    auto vals = v;
    for (std::size_t i = 0; i < extra.size(); ++i) vals.push_back(4.0 * rng.uniform() - 2.0);
    const auto J = fit(s, all, vals, 0.0);
    const double other = J.beta().dot(gram(s, all, 0.0) * J.beta());
    CHECK(norm <= other + 1e-8);
  }
}

TEST_CASE("duplicated nodes with jitter fit without error") {
  const KernelSpec s(1, 1, 1.0);
  const PointSet u(1, {0.2, 0.2, 0.7}, {});
  const std::vector<double> v{1.0, 1.0, 3.0};
  const auto I = fit(s, u, v, 1e-8);
  CHECK(I.beta().allFinite());
  CHECK(std::abs(I.evaluate(u[2]) - 3.0) < 1e-6);
  CHECK_THROWS(fit(s, u, v, 0.0));
}

TEST_CASE("fit argument validation") {
  const KernelSpec s(1, 2, 1.0);
  const auto u = midpoint_grid(2, 2);
  const std::vector<double> short_v{1.0, 2.0};
  CHECK_THROWS_AS(fit(s, u, short_v, 0.0), std::invalid_argument);
  const std::vector<double> v(4, 1.0);
  CHECK_THROWS_AS(fit(s, u, v, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(fit(KernelSpec(1, 3, 1.0), u, v, 0.0), std::invalid_argument);
}

TEST_CASE("support window evaluation equals brute force") {
  const KernelSpec s(2, 2, 0.15);
  const auto u = halton(200, 2, true);
  const auto v = sample(u, [](PointView x) { return smooth_target(x, 2); });
  const auto I = fit(s, u, v, default_jitter(u.size()));
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const auto x = rng.uniform_vector(2);
    double brute = 0.0;
    for (std::size_t n = 0; n < u.size(); ++n) brute += I.beta()[static_cast<Eigen::Index>(n)] * kernel_eval(s, x, u[n]);
    CHECK(I.evaluate(x) == Approx(brute).epsilon(1e-12));
  }
}

TEST_CASE("interpolant export round trip") {
  const KernelSpec s(1, 2, 0.9);
  const auto u = midpoint_grid(3, 2);
  const auto v = sample(u, [](PointView x) { return x[0] * x[1]; });
  const auto I = fit(s, u, v, default_jitter(u.size()));
  std::stringstream io;
  write_interpolant(I, io);
  const auto J = read_interpolant(io);
  CHECK(J.spec() == I.spec());
  CHECK(J.nodes() == I.nodes());
  CHECK(J.beta() == I.beta());
  CHECK(J.exact_integral() == I.exact_integral());
  std::string text = io.str();
  std::stringstream tampered(text.replace(text.find("exact_integral,") + 15, 1, "9"));
  CHECK_THROWS(read_interpolant(tampered));
}

#include <doctest.h>

#include <cmath>
#include <limits>
#include <thread>

#include "cfqmc/estimators.hpp"
#include "cfqmc/genz.hpp"
#include "cfqmc/rng.hpp"
#include "reference.hpp"

using namespace cfq;
using doctest::Approx;

TEST_CASE("integrand counts every evaluation, also concurrently") {
  const Integrand f(2, [](PointView x) { return x[0] + x[1]; });
  const std::vector<double> x{0.2, 0.3};
  CHECK(f(x) == Approx(0.5));
  CHECK(f.eval_count() == 1);
  std::vector<std::thread> pool;
  for (int t = 0; t < 4; ++t)
    pool.emplace_back([&] {
      for (int i = 0; i < 1000; ++i) (void)f(x);
    });
  for (auto& t : pool) t.join();
  CHECK(f.eval_count() == 4001);
  const std::vector<double> bad{0.1};
  CHECK_THROWS(f(bad));
}

TEST_CASE("method names") {
  for (auto m : {Method::MC, Method::QMC, Method::QMC_CF, Method::QMC_CF_Folded, Method::MC_CF})
    CHECK(parse_method(to_string(m)) == m);
  CHECK(to_string(Method::QMC_CF) == "QMC+CF");
  CHECK(to_string(Method::QMC_CF_Folded) == "QMC+CF-folded");
  CHECK(uses_cf(Method::MC_CF));
  CHECK_FALSE(uses_cf(Method::QMC));
  CHECK_THROWS_AS(parse_method("QMC+XX"), std::invalid_argument);
}

TEST_CASE("plain QMC average") {
  const Integrand c(3, [](PointView) { return 2.75; });
  CHECK(qmc_estimate(c, halton(37, 3, true)) == 2.75);
  const Integrand id(1, [](PointView x) { return x[0]; });
  const std::vector<std::uint64_t> z{1};
  CHECK(qmc_estimate(id, lattice(4, z)) == Approx(0.375));
  const auto ps = halton(50, 2, true);
  const Integrand f(2, [](PointView x) { return std::sin(x[0]); });
  const Integrand g(2, [](PointView x) { return x[1] * x[1]; });
  const Integrand h(2, [](PointView x) { return 2.0 * std::sin(x[0]) - 3.0 * x[1] * x[1]; });
  CHECK(qmc_estimate(h, ps) == Approx(2.0 * qmc_estimate(f, ps) - 3.0 * qmc_estimate(g, ps)).epsilon(1e-13));
  CHECK_THROWS(qmc_estimate(f, PointSet()));
  CHECK_THROWS(qmc_estimate(f, halton(4, 3, false)));
}

TEST_CASE("CF estimator is exact on kernel-span functions") {
  for (std::size_t d : {1u, 2u, 3u})
    for (int k : {0, 1, 2}) {
      const KernelSpec s(k, d, 0.8);
      const auto nodes = midpoint_grid(d == 1 ? 9 : (d == 2 ? 4 : 3), d);
      const std::vector<double> w{1.5, -0.7, 0.3};
      const std::size_t m = nodes.size();
      const auto centre = [&](std::size_t j) { return nodes[(j * 5 + 1) % m]; };
      double exact = 0.0;
      for (std::size_t j = 0; j < 3; ++j) exact += w[j] * kernel_integral(s, centre(j));
      const Integrand f(d, [&](PointView x) {
        double v = 0.0;
        for (std::size_t j = 0; j < 3; ++j) v += w[j] * kernel_eval(s, x, centre(j));
        return v;
      });
      const auto eval = random_shift(halton(64, d, true), uniform_shift(d, 4));
      const auto r = cf_estimate(f, nodes, eval, s, 0.0);
      CHECK(std::abs(r.estimate - exact) <= 1e-8 * (1.0 + std::abs(exact)));
      CHECK(f.eval_count() == m + 64);
    }
}

TEST_CASE("CF estimator on a constant: error is the QMC error of the surrogate") {
  // Constants are not in the kernel span, so the estimate is not exact: with
  // f = c the error is I[f_M] - Q[f_M] on the evaluation points.
  const double c = 3.0;
  const Integrand f(2, [&](PointView) { return c; });
  const KernelSpec s(1, 2, 1.0);
  const auto eval = random_shift(halton(128, 2, true), uniform_shift(2, 9));
  const auto r = cf_estimate(f, midpoint_grid(8, 2), eval, s, default_jitter(64));
  double q = 0.0;
  for (std::size_t i = 0; i < eval.size(); ++i) q += r.interpolant.evaluate(eval[i]);
  q /= static_cast<double>(eval.size());
  MESSAGE("constant-function CF relative error: " << (r.estimate - c) / c);
  CHECK(r.estimate - c == Approx(r.interpolant.exact_integral() - q).epsilon(1e-9));
  CHECK(std::abs(r.estimate - c) < 1e-3 * c);
}

TEST_CASE("CF estimator is unbiased under random shifts") {
  const auto g = make_genz(GenzFamily::Gaussian, 2, {3.0, 4.0}, {0.3, 0.6});
  const KernelSpec s(1, 2, 1.0);
  const auto nodes = midpoint_grid(11, 2);
  const auto base = halton(128, 2, true);
  std::vector<double> err;
  for (std::uint64_t r = 0; r < 200; ++r) {
    const Integrand f(2, [&](PointView x) { return g(x); });
    err.push_back(cf_estimate(f, nodes, random_shift(base, uniform_shift(2, derive_seed(5, {r}))), s,
                              default_jitter(nodes.size()))
                      .estimate -
                  g.exact());
  }
  double mean = 0.0, ss = 0.0;
  for (double e : err) mean += e;
  mean /= 200.0;
  for (double e : err) ss += (e - mean) * (e - mean);
  const double t = mean / std::sqrt(ss / 199.0 / 200.0);
  CHECK(std::abs(t) <= 3.0);
}

TEST_CASE("folded CF equals CF on the pre-transformed points") {
  const auto g = make_genz(GenzFamily::Oscillatory, 2, {2.0, 1.0}, {0.2, 0.0});
  const KernelSpec s(1, 2, 1.0);
  const auto nodes = midpoint_grid(6, 2);
  const auto lat = lattice(64, default_lattice_generator(2));
  const auto shift = uniform_shift(2, 77);
  const Integrand f1(2, [&](PointView x) { return g(x); });
  const Integrand f2(2, [&](PointView x) { return g(x); });
  const double a = cf_estimate_folded(f1, nodes, lat, shift, s, 1e-9);
  const double b = cf_estimate(f2, nodes, baker_fold(random_shift(lat, shift)), s, 1e-9).estimate;
  CHECK(a == b);
  CHECK(f1.eval_count() == 36 + 64);
}

TEST_CASE("folding beats the unfolded shifted lattice on a smooth d=1 integrand") {
  const auto g = make_genz(GenzFamily::Gaussian, 1, {7.03}, {0.1});
  const KernelSpec s(1, 1, 1.0);
  const auto nodes = midpoint_grid(32, 1);
  const std::vector<std::uint64_t> z{1};
  const auto lat = lattice(1024, z);
  double cf_fold = 0.0, cf_plain = 0.0, q_fold = 0.0, q_plain = 0.0;
  for (std::uint64_t r = 0; r < 10; ++r) {
    const auto shift = uniform_shift(1, derive_seed(21, {r}));
    const auto shifted = random_shift(lat, shift);
    const Integrand f(1, [&](PointView x) { return g(x); });
    const auto sq = [&](double v) { return (v - g.exact()) * (v - g.exact()); };
    cf_fold += sq(cf_estimate_folded(f, nodes, lat, shift, s, default_jitter(32)));
    cf_plain += sq(cf_estimate(f, nodes, shifted, s, default_jitter(32)).estimate);
    q_fold += sq(qmc_estimate(f, baker_fold(shifted)));
    q_plain += sq(qmc_estimate(f, shifted));
  }
  CHECK(cf_fold < cf_plain);
  CHECK(q_fold < q_plain);
}

TEST_CASE("worst-case error: single point by hand") {
  const PointSet p(1, {0.5}, {});
  CHECK(std::abs(worst_case_error(KernelSpec(0, 1, 1.0), p) - std::sqrt(1.0 / 6.0)) <= 1e-12);
}

TEST_CASE("worst-case error is invariant to point order") {
  const KernelSpec s(1, 2, 0.7);
  const auto ps = halton(30, 2, true);
  std::vector<double> rev;
  for (std::size_t i = ps.size(); i-- > 0;) rev.insert(rev.end(), ps[i].begin(), ps[i].end());
  CHECK(worst_case_error(s, PointSet(2, rev, {})) == Approx(worst_case_error(s, ps)).epsilon(1e-12));
}

TEST_CASE("worst-case error decreases along Halton sizes 2^4..2^10") {
  const KernelSpec s(1, 2, 1.0);
  double prev = std::numeric_limits<double>::infinity();
  for (int n = 4; n <= 10; ++n) {
    const double e = worst_case_error(s, halton(std::size_t{1} << n, 2, true));
    CHECK(e <= prev);
    prev = e;
  }
}

TEST_CASE("worst-case error agrees with the Monte Carlo MMD oracle") {
  for (std::uint64_t t = 0; t < 5; ++t) {
    const std::size_t d = 1 + t % 3;
    const KernelSpec s(static_cast<int>(t % 3), d, t % 2 ? 0.6 : 1.0);
    const auto ps = uniform_points(6 + t, d, derive_seed(8, {t}));
    const auto w = worst_case_error_detail(s, ps);
    const auto mc = oracle::mmd_squared_mc(s, ps, 200000, derive_seed(9, {t}));
    CHECK(std::abs(w.squared_raw - mc.mean) <= 3.0 * mc.stderr_);
  }
}

TEST_CASE("optimal split") {
  CHECK(optimal_split(2.0, 1.0) == 0.5);
  CHECK(optimal_split(3.0, 1.0) == Approx(2.0 / 3.0));
  CHECK(optimal_split(1.0 + 1e-9, 1.0) < 1e-8);
  CHECK(optimal_split(1.0 + 1e-9, 1.0) > 0.0);
  CHECK_THROWS_AS(optimal_split(1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(optimal_split(0.5, 1.0), std::domain_error);
  CHECK_THROWS_AS(optimal_split(2.0, 0.0), std::domain_error);
  for (double al : {0.5, 1.0, 2.0}) {
    double prev = 0.0;
    for (double a = al + 0.05; a < al + 10.0; a += 0.05) {
      const double c = optimal_split(a, al);
      CHECK(c > prev);
      CHECK(c < 1.0);
      prev = c;
    }
  }
}

TEST_CASE("budget split") {
  const auto a = split_budget(512, 0.5, true, 1);
  CHECK(a.n_eval == 256);
  CHECK(a.m_nodes == 256);
  CHECK(a.discarded == 0);
  const auto b = split_budget(100, 0.5, true, 1);
  CHECK(b.n_eval == 32);
  CHECK(b.m_requested == 68);
  CHECK(b.m_nodes == 68);
  const auto c = split_budget(100, 0.5, true, 2);
  CHECK(c.m_nodes == 64);
  CHECK(c.grid_side == 8);
  CHECK(c.discarded == 4);
  const auto d = split_budget(256, 0.5, true, 2);
  CHECK(d.n_eval == 128);
  CHECK(d.m_nodes == 121);
  CHECK(d.discarded == 7);
  // fraction -> 0: N_eval is capped at the largest power of two not above
  // N, so a budget of exactly 2^n still leaves half for the nodes
  const auto e = split_budget(64, 1e-6, true, 3);
  CHECK(e.n_eval == 32);
  CHECK(e.m_nodes == 27);
  const auto e2 = split_budget(70, 1e-6, true, 3);
  CHECK(e2.n_eval == 64);
  CHECK(e2.grid_side == 1);
  CHECK(e2.m_nodes == 1);
  const auto f = split_budget(100, 0.3, false, 1);
  CHECK(f.n_eval == 70);
  CHECK(f.m_nodes == 30);
  CHECK_THROWS(split_budget(3, 0.5, true, 1));
  CHECK_THROWS(split_budget(64, 0.0, true, 1));
  CHECK_THROWS(split_budget(64, 1.0, true, 1));
}

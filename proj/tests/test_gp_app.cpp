#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cfqmc/gp_app.hpp"
#include "cfqmc/rng.hpp"
#include "oracles.hpp"

using namespace cfq;
using doctest::Approx;

namespace {

Dataset random_dataset(std::size_t n, std::size_t p, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      x(i, j) = rng.uniform();
      s += std::sin(3.0 * x(i, j) + static_cast<double>(j));
    }
    y[i] = s + 0.1 * rng.normal();
  }
  return make_dataset(x, y);
}

std::string temp_file(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / ("cfqmc_gp_" + name);
  std::ofstream(path) << content;
  return path.string();
}

}  // namespace

TEST_CASE("Gamma(2) CDF and inverse") {
  CHECK(gamma2_cdf(0.0, 2.0) == 0.0);
  const double med = gamma2_inverse_cdf(0.5, 2.0);
  CHECK(med == Approx(3.35669).epsilon(1e-5));
  CHECK(std::abs(gamma2_cdf(med, 2.0) - 0.5) <= 1e-12);
  for (int i = 1; i <= 99; ++i) {
    const double q = i / 100.0;
    for (double scale : {0.5, 2.0, 7.0}) CHECK(std::abs(gamma2_cdf(gamma2_inverse_cdf(q, scale), scale) - q) <= 1e-12);
  }
  double prev = 1.0;
  for (double q : {1e-2, 1e-4, 1e-6, 1e-8}) {
    const double t = gamma2_inverse_cdf(q, 2.0);
    CHECK(t > 0.0);
    CHECK(t < prev);
    prev = t;
  }
  CHECK(prev < 1e-3);
  CHECK_THROWS_AS(gamma2_inverse_cdf(0.0, 2.0), std::domain_error);
  CHECK_THROWS_AS(gamma2_inverse_cdf(1.0, 2.0), std::domain_error);
  CHECK_THROWS_AS(gamma2_inverse_cdf(0.5, 0.0), std::domain_error);
}

TEST_CASE("prior mean of theta1 through the inverse CDF (Monte Carlo)") {
  Rng rng(17);
  const auto mc = oracle::monte_carlo(1000000, [&] { return gamma2_inverse_cdf(rng.uniform_open(), 2.0); });
  CHECK(std::abs(mc.mean - 4.0) <= 3.0 * mc.stderr_);
}

TEST_CASE("standardization invariants") {
  const auto d = random_dataset(120, 3, 5);
  for (Eigen::Index j = 0; j < 3; ++j) {
    const auto col = d.covariates.col(j);
    CHECK(std::abs(col.mean()) <= 1e-10);
    CHECK(std::abs((col.array() - col.mean()).square().mean() - 1.0) <= 1e-8);
  }
  CHECK(std::abs(d.responses.mean()) <= 1e-10);
}

TEST_CASE("full predictor: one training point by hand") {
  Eigen::MatrixXd x(1, 2);
  x << 0.3, 0.8;
  Eigen::VectorXd y(1);
  y << 1.7;
  Dataset d;
  d.covariates = x;
  d.responses = y;
  const GPConfig cfg;
  const Theta th{2.5, 0.7};
  const Eigen::VectorXd z = x.row(0).transpose();
  CHECK(gp_predictive_mean_full(d, cfg, th, z) == Approx(2.5 / (2.5 + 0.01) * 1.7).epsilon(1e-14));
}

TEST_CASE("predictors vanish for zero responses and tiny amplitude") {
  auto d = random_dataset(40, 2, 3);
  const GPConfig cfg;
  const Eigen::VectorXd z = Eigen::VectorXd::Constant(2, 0.2);
  const auto subset = draw_subset(40, 10, 4);
  CHECK(std::abs(gp_predictive_mean_full(d, cfg, {1e-12, 1.0}, z)) < 1e-9);
  CHECK(std::abs(gp_predictive_mean_sor(d, cfg, {1e-12, 1.0}, z, subset)) < 1e-6);
  d.responses.setZero();
  CHECK(gp_predictive_mean_full(d, cfg, {3.0, 1.0}, z) == 0.0);
  CHECK(gp_predictive_mean_sor(d, cfg, {3.0, 1.0}, z, subset) == 0.0);
}

TEST_CASE("subset of regressors at n' = n matches the full predictor") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto d = random_dataset(50, 3, 100 + s);
    const GPConfig cfg;
    std::vector<std::size_t> all(50);
    for (std::size_t i = 0; i < 50; ++i) all[i] = i;
    Rng rng(s);
    for (int t = 0; t < 5; ++t) {
      const Theta th{0.5 + 3.0 * rng.uniform(), 0.5 + 2.0 * rng.uniform()};
      Eigen::VectorXd z(3);
      for (Eigen::Index j = 0; j < 3; ++j) z[j] = 2.0 * rng.uniform() - 1.0;
      const double full = gp_predictive_mean_full(d, cfg, th, z);
      const double sor = gp_predictive_mean_sor(d, cfg, th, z, all);
      CHECK(std::abs(sor - full) <= 1e-6 * std::max(1.0, std::abs(full)));
    }
  }
}

TEST_CASE("n' = 1 gives a finite rank-one predictor") {
  const auto d = random_dataset(30, 2, 8);
  const GPConfig cfg;
  const std::vector<std::size_t> one{7};
  for (double a : {0.1, 1.0, 10.0})
    for (double l : {0.05, 1.0, 20.0}) CHECK(std::isfinite(gp_predictive_mean_sor(d, cfg, {a, l}, d.covariates.row(3).transpose(), one)));
}

TEST_CASE("predictions are finite over the prior 0.001..0.999 quantile box") {
  const auto prob = synthetic_problem(200, 4, 5, 0.1, 21);
  GPConfig cfg;
  cfg.n_subset = 50;
  cfg.subset_seed = 3;
  const GpPredictor pred(prob.train, cfg);
  for (double q1 : {0.001, 0.1, 0.5, 0.9, 0.999})
    for (double q2 : {0.001, 0.1, 0.5, 0.9, 0.999}) {
      const std::vector<double> x{q1, q2};
      const Theta th = theta_from_unit(x, cfg);
      for (Eigen::Index t = 0; t < prob.test.rows(); ++t)
        CHECK(std::isfinite(pred(th, prob.test.row(t).transpose())));
    }
}

TEST_CASE("subset draws") {
  const auto a = draw_subset(100, 20, 9);
  CHECK(a == draw_subset(100, 20, 9));
  CHECK(a != draw_subset(100, 20, 10));
  CHECK(a.size() == 20);
  for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i - 1] < a[i]);
  CHECK(a.back() < 100);
  CHECK_THROWS(draw_subset(5, 6, 1));
}

TEST_CASE("marginal prediction") {
  const auto prob = synthetic_problem(60, 2, 2, 0.1, 4);
  GPConfig cfg;
  cfg.n_subset = 20;
  const GpPredictor pred(prob.train, cfg);
  const Eigen::VectorXd z = prob.test.row(0).transpose();
  const auto q = marginal_prediction(pred, cfg, z, Method::QMC, 256, 5);
  const auto c = marginal_prediction(pred, cfg, z, Method::QMC_CF, 256, 5);
  const auto m = marginal_prediction(pred, cfg, z, Method::MC_CF, 256, 5);
  CHECK(q.n_total == c.n_total);
  CHECK(c.n_total == m.n_total);
  CHECK(c.m_nodes > 0);
  CHECK(q.m_nodes == 0);
  CHECK(std::abs(q.estimate - c.estimate) < 0.1 * (1.0 + std::abs(q.estimate)));
  CHECK(marginal_prediction(pred, cfg, z, Method::QMC_CF, 256, 5).estimate == c.estimate);

  Dataset zero = prob.train;
  zero.responses.setZero();
  const GpPredictor zp(zero, cfg);
  for (auto method : {Method::QMC, Method::QMC_CF, Method::MC, Method::MC_CF})
    CHECK(marginal_prediction(zp, cfg, z, method, 256, 5).estimate == 0.0);
}

TEST_CASE("GP study bookkeeping") {
  const auto prob = synthetic_problem(60, 2, 3, 0.1, 4);
  GPConfig cfg;
  cfg.n_subset = 20;
  const GpPredictor pred(prob.train, cfg);
  const std::vector<Method> methods{Method::QMC, Method::QMC_CF};
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const auto st = run_gp_study(pred, cfg, prob.test, methods, 64, seeds, 2);
  REQUIRE(st.estimates.size() == 3);
  CHECK(st.failures.empty());
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t m = 0; m < 2; ++m) {
      double mean = 0.0;
      for (const auto& r : st.estimates[t][m]) mean += r.estimate / 3.0;
      double ss = 0.0;
      for (const auto& r : st.estimates[t][m]) ss += (r.estimate - mean) * (r.estimate - mean);
      CHECK(st.sd(t, m) == Approx(std::sqrt(ss / 2.0)).epsilon(1e-12));
    }
  std::ostringstream a, b;
  write_gp_estimates(st, a);
  write_gp_summary(st, b);
  CHECK(a.str().rfind("test_index,method,N,seed,estimate\n", 0) == 0);
  CHECK(b.str().rfind("test_index,method,sd_over_seeds\n", 0) == 0);
  const auto st1 = run_gp_study(pred, cfg, prob.test, methods, 64, seeds, 1);
  std::ostringstream c;
  write_gp_estimates(st1, c);
  CHECK(a.str() == c.str());
}

TEST_CASE("dataset loading") {
  std::string text = "a,b,y\n";
  for (int i = 0; i < 30; ++i) text += std::to_string(i) + "," + std::to_string(i % 7) + "," + std::to_string(2 * i) + "\n";
  const auto path = temp_file("ok.csv", text);

  const auto whole = load_dataset(path, 100, 1);
  CHECK(whole.size() == 30);
  CHECK(whole.features() == 2);
  const auto a = load_dataset(path, 10, 5);
  const auto b = load_dataset(path, 10, 5);
  CHECK(a.size() == 10);
  CHECK(a.source_rows == b.source_rows);
  CHECK(a.source_rows != load_dataset(path, 10, 6).source_rows);
  for (Eigen::Index j = 0; j < 2; ++j) CHECK(std::abs(a.covariates.col(j).mean()) <= 1e-10);
  CHECK(std::abs(a.responses.mean()) <= 1e-10);

  std::istringstream headerless("1,2,3\n4,5,6\n7,8,10\n");
  CHECK(parse_dataset(headerless, 10, 1).size() == 3);

  const auto prob = load_problem(path, 20, 5, 3);
  CHECK(prob.train.size() == 20);
  CHECK(prob.test.rows() == 5);
  CHECK(prob.test.cols() == 2);
  CHECK_THROWS_AS(load_problem(path, 20, 30, 3), std::invalid_argument);

  std::istringstream bad("1,2,3\n4,x,6\n");
  try {
    (void)parse_dataset(bad, 10, 1);
    FAIL("non-numeric cell accepted");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  std::istringstream ragged("1,2,3\n4,5\n");
  CHECK_THROWS_AS(parse_dataset(ragged, 10, 1), std::invalid_argument);
  std::istringstream empty("");
  CHECK_THROWS_AS(parse_dataset(empty, 10, 1), std::invalid_argument);
  CHECK_THROWS(load_dataset("/nonexistent/file.csv", 10, 1));
  std::filesystem::remove(path);
}

TEST_CASE("synthetic problem") {
  const auto p = synthetic_problem(200, 4, 20, 0.1, 7);
  CHECK(p.train.size() == 200);
  CHECK(p.train.features() == 4);
  CHECK(p.test.rows() == 20);
  const auto q = synthetic_problem(200, 4, 20, 0.1, 7);
  CHECK(p.train.responses == q.train.responses);
  CHECK(p.test == q.test);
}

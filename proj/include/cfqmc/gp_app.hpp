#pragma once

// Marginalizing Gaussian-process hyper-parameters by (Q)MC over the unit
// square. The integrand is the predictive mean at a test input,
//
//   f(x) = E[Y* | y, theta = Pi^{-1}(x)],
//
// where Pi^{-1} maps each coordinate through the inverse CDF of a shape-2
// Gamma prior, and c(z, z') = theta1 exp(-|z - z'|^2 / (2 theta2^2)).

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cfqmc/estimators.hpp"

namespace cfq {

struct Standardization {
  Eigen::VectorXd covariate_mean;
  Eigen::VectorXd covariate_scale;
  double response_mean = 0.0;
};

struct Dataset {
  Eigen::MatrixXd covariates;  // n x p, standardized
  Eigen::VectorXd responses;   // n, centered
  Standardization standardization;
  std::vector<std::size_t> source_rows;  // rows taken from the input, ascending

  std::size_t size() const noexcept { return static_cast<std::size_t>(responses.size()); }
  std::size_t features() const noexcept { return static_cast<std::size_t>(covariates.cols()); }

  /// Apply the training standardization to a raw covariate vector.
  Eigen::VectorXd standardize(const Eigen::VectorXd& raw) const;
};

/// Standardize raw covariates (mean 0, population variance 1 per column) and
/// center responses. Constant columns keep scale 1.
Dataset make_dataset(const Eigen::MatrixXd& raw_covariates, const Eigen::VectorXd& raw_responses);

struct GPConfig {
  double sigma = 0.1;
  double shape1 = 2.0, scale1 = 2.0;  // theta1 ~ Gamma(shape1, scale1)
  double shape2 = 2.0, scale2 = 2.0;  // theta2 ~ Gamma(shape2, scale2)
  std::size_t n_subset = 100;         // n' for subset of regressors; >= n means exact
  std::uint64_t subset_seed = 0;

  void validate(std::size_t n) const;
};

struct Theta {
  double amplitude;     // theta1
  double lengthscale;   // theta2
};

/// CDF of Gamma(2, scale): 1 - (1 + t/scale) exp(-t/scale).
double gamma2_cdf(double t, double scale);

/// Inverse of gamma2_cdf by safeguarded Newton. Throws std::domain_error for
/// q outside (0,1) or scale <= 0.
double gamma2_inverse_cdf(double q, double scale);

/// Predictive means for one dataset, with the subset-of-regressors pieces
/// (subset indices and squared distances) precomputed.
class GpPredictor {
 public:
  GpPredictor(const Dataset& data, const GPConfig& cfg);
  GpPredictor(const Dataset& data, const GPConfig& cfg, std::vector<std::size_t> subset);

  /// C_{*,n} (C_n + sigma^2 I)^{-1} y. Throws std::runtime_error if the
  /// factorization fails.
  double full(const Theta& theta, const Eigen::VectorXd& z_star) const;

  /// C_{*,n'} (C_{n',n} C_{n,n'} + sigma^2 C_{n'})^{-1} C_{n',n} y, with
  /// jitter 1e-10 trace(C_{n'})/n' on C_{n'}. Evaluated through L = chol(C_{n'}),
  /// V = L^{-1} C_{n',n} as k_*^T L^{-T} (sigma^2 I + V V^T)^{-1} V y, which
  /// avoids squaring the condition number of C_{n'}.
  double sor(const Theta& theta, const Eigen::VectorXd& z_star) const;

  /// sor() when the subset is smaller than the data, else full().
  double operator()(const Theta& theta, const Eigen::VectorXd& z_star) const;

  const std::vector<std::size_t>& subset() const noexcept { return subset_; }

 private:
  Dataset data_;
  GPConfig cfg_;
  std::vector<std::size_t> subset_;
  Eigen::MatrixXd dist_sub_all_;  // n' x n squared distances
  Eigen::MatrixXd dist_sub_sub_;  // n' x n'
  Eigen::MatrixXd dist_all_all_;  // n x n (only when the full predictor is used)
};

double gp_predictive_mean_full(const Dataset& data, const GPConfig& cfg, const Theta& theta,
                               const Eigen::VectorXd& z_star);
double gp_predictive_mean_sor(const Dataset& data, const GPConfig& cfg, const Theta& theta,
                              const Eigen::VectorXd& z_star, std::span<const std::size_t> subset_indices);

/// n' distinct indices drawn uniformly without replacement, ascending.
std::vector<std::size_t> draw_subset(std::size_t n, std::size_t n_subset, std::uint64_t seed);

/// Map a unit-square point to hyper-parameters through the prior inverse CDFs.
Theta theta_from_unit(PointView x, const GPConfig& cfg);

/// Integrate the predictive mean over the prior with `method` and budget N
/// (CF: Wendland k = 1, M = N/2 snapped to a grid; all methods spend the same
/// number of evaluations). QMC points are reverse-radix Halton with a uniform
/// shift drawn from `seed`.
EstimateReport marginal_prediction(const GpPredictor& predictor, const GPConfig& cfg,
                                   const Eigen::VectorXd& z_star, Method method, std::size_t budget,
                                   std::uint64_t seed);

/// CSV with covariate columns then one response column; header optional.
/// Takes a seed-deterministic random subset of up to n_train_cap rows.
Dataset load_dataset(const std::string& path, std::size_t n_train_cap, std::uint64_t seed);
Dataset parse_dataset(std::istream& in, std::size_t n_train_cap, std::uint64_t seed);

struct GpProblem {
  Dataset train;
  Eigen::MatrixXd test;  // standardized test inputs, one per row
};

/// Training subset of up to n_train_cap rows from a dataset file plus n_test
/// held-out rows (standardized with the training statistics) as test inputs.
GpProblem load_problem(const std::string& path, std::size_t n_train_cap, std::size_t n_test, std::uint64_t seed);

/// n points in p dimensions, y = smooth function + N(0, noise^2).
GpProblem synthetic_problem(std::size_t n, std::size_t p, std::size_t n_test, double noise,
                                   std::uint64_t seed);

struct GpStudy {
  std::vector<Method> methods;
  std::size_t budget = 0;
  std::vector<std::uint64_t> seeds;
  // estimates[t][m][s]
  std::vector<std::vector<std::vector<EstimateReport>>> estimates;  // failed runs hold a NaN estimate
  std::vector<std::string> failures;

  /// Sample standard deviation over the successful seeds for test point t,
  /// method index m; NaN with fewer than two.
  double sd(std::size_t t, std::size_t m) const;
};

/// Every (test point, method, seed) combination; test points run in parallel.
GpStudy run_gp_study(const GpPredictor& predictor, const GPConfig& cfg, const Eigen::MatrixXd& test_points,
                     const std::vector<Method>& methods, std::size_t budget, const std::vector<std::uint64_t>& seeds,
                     unsigned threads = 0);

/// `test_index,method,N,seed,estimate`
void write_gp_estimates(const GpStudy& study, std::ostream& out);
/// `test_index,method,sd_over_seeds`
void write_gp_summary(const GpStudy& study, std::ostream& out);

}  // namespace cfq

#include "cfqmc/gp_app.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "cfqmc/csv.hpp"
#include "cfqmc/rng.hpp"

namespace cfq {

Eigen::VectorXd Dataset::standardize(const Eigen::VectorXd& raw) const {
  if (raw.size() != covariates.cols()) throw std::invalid_argument("Dataset::standardize: wrong covariate count");
  return (raw - standardization.covariate_mean).cwiseQuotient(standardization.covariate_scale);
}

Dataset make_dataset(const Eigen::MatrixXd& raw_covariates, const Eigen::VectorXd& raw_responses) {
  if (raw_covariates.rows() != raw_responses.size())
    throw std::invalid_argument("make_dataset: covariate and response counts differ");
  if (raw_covariates.rows() == 0) throw std::invalid_argument("make_dataset: empty dataset");
  const double n = static_cast<double>(raw_covariates.rows());
  Dataset d;
  d.standardization.covariate_mean = raw_covariates.colwise().mean().transpose();
  d.standardization.covariate_scale.resize(raw_covariates.cols());
  d.covariates = raw_covariates.rowwise() - d.standardization.covariate_mean.transpose();
  for (Eigen::Index j = 0; j < d.covariates.cols(); ++j) {
    const double sd = std::sqrt(d.covariates.col(j).squaredNorm() / n);
    const double scale = sd > 0.0 ? sd : 1.0;
    d.standardization.covariate_scale[j] = scale;
    d.covariates.col(j) /= scale;
  }
  d.standardization.response_mean = raw_responses.mean();
  d.responses = raw_responses.array() - d.standardization.response_mean;
  d.source_rows.resize(static_cast<std::size_t>(raw_covariates.rows()));
  std::iota(d.source_rows.begin(), d.source_rows.end(), std::size_t{0});
  return d;
}

void GPConfig::validate(std::size_t n) const {
  if (!(sigma > 0.0)) throw std::invalid_argument("GPConfig: sigma must be positive");
  if (!(scale1 > 0.0 && scale2 > 0.0)) throw std::invalid_argument("GPConfig: prior scales must be positive");
  if (shape1 != 2.0 || shape2 != 2.0)
    throw std::invalid_argument("GPConfig: only shape-2 Gamma priors are supported");
  if (n_subset == 0) throw std::invalid_argument("GPConfig: n_subset must be >= 1");
  if (n == 0) throw std::invalid_argument("GPConfig: empty dataset");
}

// ---------------------------------------------------------------------------

double gamma2_cdf(double t, double scale) {
  if (!(scale > 0.0)) throw std::domain_error("gamma2_cdf: scale must be positive");
  if (t <= 0.0) return 0.0;
  const double u = t / scale;
  // 1 - (1+u) e^{-u}, written to avoid cancellation for small u.
  return -std::expm1(-u) - u * std::exp(-u);
}

double gamma2_inverse_cdf(double q, double scale) {
  if (!(scale > 0.0)) throw std::domain_error("gamma2_inverse_cdf: scale must be positive");
  if (!(q > 0.0 && q < 1.0)) throw std::domain_error("gamma2_inverse_cdf: q must lie in (0,1)");
  auto cdf = [](double u) { return -std::expm1(-u) - u * std::exp(-u); };
  double lo = 0.0, hi = 1.0;
  while (cdf(hi) < q) hi *= 2.0;
  // Small-q start: G(u) ~ u^2/2.
  double u = q < 0.1 ? std::sqrt(2.0 * q) : 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double g = cdf(u) - q;
    if (g == 0.0) break;
    if (g < 0.0)
      lo = u;
    else
      hi = u;
    const double dens = u * std::exp(-u);
    double next = dens > 0.0 ? u - g / dens : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - u) <= 1e-16 * std::max(1.0, u)) {
      u = next;
      break;
    }
    u = next;
  }
  return u * scale;
}

// ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd d(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) d(i, j) = (a.row(i) - b.row(j)).squaredNorm();
  return d;
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

Eigen::VectorXd cov_to(const Eigen::MatrixXd& pts, const Eigen::VectorXd& z, const Theta& th) {
  const double c = -0.5 / (th.lengthscale * th.lengthscale);
  Eigen::VectorXd k(pts.rows());
  for (Eigen::Index i = 0; i < pts.rows(); ++i) k[i] = th.amplitude * std::exp(c * (pts.row(i).transpose() - z).squaredNorm());
  return k;
}

void check_theta(const Theta& th) {
  if (!(th.amplitude > 0.0 && th.lengthscale > 0.0))
    throw std::invalid_argument("GP hyper-parameters must be positive");
}

}  // namespace

GpPredictor::GpPredictor(const Dataset& data, const GPConfig& cfg)
    : GpPredictor(data, cfg, draw_subset(data.size(), std::min(cfg.n_subset, data.size()), cfg.subset_seed)) {}

GpPredictor::GpPredictor(const Dataset& data, const GPConfig& cfg, std::vector<std::size_t> subset)
    : data_(data), cfg_(cfg), subset_(std::move(subset)) {
  cfg_.validate(data_.size());
  if (subset_.empty() || subset_.size() > data_.size())
    throw std::invalid_argument("GpPredictor: subset size must lie in [1, n]");
  std::vector<bool> seen(data_.size(), false);
  for (auto i : subset_) {
    if (i >= data_.size() || seen[i]) throw std::invalid_argument("GpPredictor: subset indices must be distinct and in range");
    seen[i] = true;
  }
  const Eigen::MatrixXd sub = rows_of(data_.covariates, subset_);
  dist_sub_all_ = squared_distances(sub, data_.covariates);
  dist_sub_sub_ = squared_distances(sub, sub);
  if (data_.size() <= 5000) dist_all_all_ = squared_distances(data_.covariates, data_.covariates);
}

double GpPredictor::full(const Theta& th, const Eigen::VectorXd& z_star) const {
  check_theta(th);
  if (z_star.size() != data_.covariates.cols()) throw std::invalid_argument("GP: test point has wrong dimension");
  const Eigen::MatrixXd dist =
      dist_all_all_.size() ? dist_all_all_ : squared_distances(data_.covariates, data_.covariates);
  const double c = -0.5 / (th.lengthscale * th.lengthscale);
  Eigen::MatrixXd a = th.amplitude * (c * dist.array()).exp().matrix();
  a.diagonal().array() += cfg_.sigma * cfg_.sigma;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw std::runtime_error("GP: Cholesky factorization of C_n + sigma^2 I failed");
  return cov_to(data_.covariates, z_star, th).dot(llt.solve(data_.responses));
}

double GpPredictor::sor(const Theta& th, const Eigen::VectorXd& z_star) const {
  check_theta(th);
  if (z_star.size() != data_.covariates.cols()) throw std::invalid_argument("GP: test point has wrong dimension");
  const double c = -0.5 / (th.lengthscale * th.lengthscale);
  const Eigen::MatrixXd k_mn = th.amplitude * (c * dist_sub_all_.array()).exp().matrix();
  Eigen::MatrixXd k_mm = th.amplitude * (c * dist_sub_sub_.array()).exp().matrix();
  const auto m = static_cast<double>(subset_.size());
  k_mm.diagonal().array() += 1e-10 * k_mm.trace() / m;
  // With C_{n'} = L L^T and V = L^{-1} C_{n',n} the system matrix factors as
  // L (sigma^2 I + V V^T) L^T, whose middle term is bounded below by sigma^2.
  const Eigen::LLT<Eigen::MatrixXd> chol(k_mm);
  if (chol.info() != Eigen::Success) throw std::runtime_error("GP: Cholesky factorization of C_n' failed");
  const Eigen::MatrixXd v_mn = chol.matrixL().solve(k_mn);
  Eigen::MatrixXd a = v_mn * v_mn.transpose();
  a.diagonal().array() += cfg_.sigma * cfg_.sigma;
  const Eigen::LLT<Eigen::MatrixXd> inner(a);
  if (inner.info() != Eigen::Success) throw std::runtime_error("GP: subset-of-regressors system is singular");
  const Eigen::VectorXd w = chol.matrixU().solve(inner.solve(v_mn * data_.responses));
  const Eigen::MatrixXd sub = rows_of(data_.covariates, subset_);
  const double v = cov_to(sub, z_star, th).dot(w);
  if (!std::isfinite(v)) throw std::runtime_error("GP: non-finite predictive mean");
  return v;
}

double GpPredictor::operator()(const Theta& th, const Eigen::VectorXd& z_star) const {
  return subset_.size() < data_.size() ? sor(th, z_star) : full(th, z_star);
}

double gp_predictive_mean_full(const Dataset& data, const GPConfig& cfg, const Theta& theta,
                               const Eigen::VectorXd& z_star) {
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return GpPredictor(data, cfg, all).full(theta, z_star);
}

double gp_predictive_mean_sor(const Dataset& data, const GPConfig& cfg, const Theta& theta,
                              const Eigen::VectorXd& z_star, std::span<const std::size_t> subset_indices) {
  return GpPredictor(data, cfg, std::vector<std::size_t>(subset_indices.begin(), subset_indices.end()))
      .sor(theta, z_star);
}

std::vector<std::size_t> draw_subset(std::size_t n, std::size_t n_subset, std::uint64_t seed) {
  if (n_subset > n) throw std::invalid_argument("draw_subset: subset larger than population");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < n_subset; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
  idx.resize(n_subset);
  std::sort(idx.begin(), idx.end());
  return idx;
}

Theta theta_from_unit(PointView x, const GPConfig& cfg) {
  if (x.size() != 2) throw std::invalid_argument("theta_from_unit: expected a point in the unit square");
  // Closed-cube points (a shifted coordinate can be exactly 0) are pulled
  // inside so the inverse CDF stays finite.
  static constexpr double kEdge = 1e-12;
  auto q = [](double v) { return std::clamp(v, kEdge, 1.0 - kEdge); };
  return Theta{gamma2_inverse_cdf(q(x[0]), cfg.scale1), gamma2_inverse_cdf(q(x[1]), cfg.scale2)};
}

EstimateReport marginal_prediction(const GpPredictor& predictor, const GPConfig& cfg, const Eigen::VectorXd& z_star,
                                   Method method, std::size_t budget, std::uint64_t seed) {
  constexpr std::size_t kDim = 2;
  const auto t0 = std::chrono::steady_clock::now();
  const Integrand f(kDim, [&](PointView x) { return predictor(theta_from_unit(x, cfg), z_star); });
  const BudgetSplit split = split_budget(budget, 0.5, true, kDim);
  const std::size_t total = split.m_nodes + split.n_eval;
  const std::vector<double> shift = uniform_shift(kDim, derive_seed(seed, {hash_label("gp-shift")}));
  const std::uint64_t mc_seed = derive_seed(seed, {hash_label("gp-mc")});

  EstimateReport rep;
  rep.method = method;
  rep.seed = seed;
  if (uses_cf(method)) {
    rep.m_nodes = split.m_nodes;
    rep.discarded = split.discarded;
  }
  const KernelSpec spec(1, kDim, 1.0);
  const PointSet nodes = midpoint_grid(split.grid_side, kDim);
  const double jitter = default_jitter(nodes.size());
  switch (method) {
    case Method::MC: rep.estimate = qmc_estimate(f, uniform_points(total, kDim, mc_seed)); break;
    case Method::QMC: rep.estimate = qmc_estimate(f, random_shift(halton(total, kDim, true), shift)); break;
    case Method::QMC_CF:
      rep.estimate = cf_estimate(f, nodes, random_shift(halton(split.n_eval, kDim, true), shift), spec, jitter).estimate;
      break;
    case Method::MC_CF:
      rep.estimate = cf_estimate(f, nodes, uniform_points(split.n_eval, kDim, mc_seed), spec, jitter).estimate;
      break;
    case Method::QMC_CF_Folded:
      rep.estimate = cf_estimate_folded(f, nodes, lattice(split.n_eval, default_lattice_generator(kDim)), shift, spec, jitter);
      break;
  }
  rep.n_total = f.eval_count();
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

using Rows = std::vector<std::vector<double>>;

Rows read_rows(std::istream& in) {
  Rows rows;
  std::string line;
  std::size_t lineno = 0, width = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    auto fields = csv::split(line);
    if (first) {
      first = false;
      try {
        (void)csv::parse_double(fields[0]);
      } catch (const std::invalid_argument&) {
        width = fields.size();  // header
        continue;
      }
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width || width < 2)
      throw std::invalid_argument("dataset line " + std::to_string(lineno) + ": expected " + std::to_string(std::max<std::size_t>(width, 2)) +
                                  " columns, found " + std::to_string(fields.size()));
    std::vector<double> row(width);
    for (std::size_t j = 0; j < width; ++j) {
      try {
        row[j] = csv::parse_double(fields[j], "cell");
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("dataset line " + std::to_string(lineno) + ", column " + std::to_string(j + 1) + ": " + e.what());
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("dataset contains no rows");
  return rows;
}

std::vector<std::size_t> pick_rows(std::size_t n, std::size_t cap, std::uint64_t seed) {
  if (cap >= n) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  return draw_subset(n, cap, seed);
}

Dataset build_dataset(const Rows& rows, std::vector<std::size_t> pick) {
  const auto p = static_cast<Eigen::Index>(rows.front().size() - 1);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(pick.size()), p);
  Eigen::VectorXd y(static_cast<Eigen::Index>(pick.size()));
  for (std::size_t i = 0; i < pick.size(); ++i) {
    const auto& r = rows[pick[i]];
    for (Eigen::Index j = 0; j < p; ++j) x(static_cast<Eigen::Index>(i), j) = r[static_cast<std::size_t>(j)];
    y[static_cast<Eigen::Index>(i)] = r.back();
  }
  Dataset d = make_dataset(x, y);
  d.source_rows = std::move(pick);
  return d;
}

}  // namespace

Dataset parse_dataset(std::istream& in, std::size_t n_train_cap, std::uint64_t seed) {
  const auto rows = read_rows(in);
  return build_dataset(rows, pick_rows(rows.size(), n_train_cap, seed));
}

Dataset load_dataset(const std::string& path, std::size_t n_train_cap, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");
  return parse_dataset(in, n_train_cap, seed);
}

GpProblem load_problem(const std::string& path, std::size_t n_train_cap, std::size_t n_test, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");
  const auto rows = read_rows(in);
  if (n_test >= rows.size())
    throw std::invalid_argument("dataset has " + std::to_string(rows.size()) + " rows; need more than n_test = " +
                                std::to_string(n_test));
  // Test rows first, then the training subset from what is left.
  const auto test_idx = draw_subset(rows.size(), n_test, derive_seed(seed, {hash_label("test-rows")}));
  std::vector<std::size_t> rest;
  for (std::size_t i = 0, t = 0; i < rows.size(); ++i) {
    if (t < test_idx.size() && test_idx[t] == i) {
      ++t;
      continue;
    }
    rest.push_back(i);
  }
  auto local = pick_rows(rest.size(), n_train_cap, derive_seed(seed, {hash_label("train-rows")}));
  for (auto& i : local) i = rest[i];
  GpProblem out{build_dataset(rows, std::move(local)), Eigen::MatrixXd()};
  const auto p = out.train.features();
  out.test.resize(static_cast<Eigen::Index>(n_test), static_cast<Eigen::Index>(p));
  for (std::size_t t = 0; t < n_test; ++t) {
    Eigen::VectorXd raw(static_cast<Eigen::Index>(p));
    for (std::size_t j = 0; j < p; ++j) raw[static_cast<Eigen::Index>(j)] = rows[test_idx[t]][j];
    out.test.row(static_cast<Eigen::Index>(t)) = out.train.standardize(raw).transpose();
  }
  return out;
}

GpProblem synthetic_problem(std::size_t n, std::size_t p, std::size_t n_test, double noise, std::uint64_t seed) {
  if (n == 0 || p == 0) throw std::invalid_argument("synthetic_problem: n and p must be >= 1");
  Rng rng(seed);
  auto truth = [p](const Eigen::VectorXd& z) {
    double g = std::sin(1.5 * z[0]);
    for (std::size_t j = 1; j < p; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      g += 0.5 / static_cast<double>(j) * std::cos(z[jj]) * z[jj - 1];
    }
    return g;
  };
  auto draw = [&](std::size_t count, Eigen::MatrixXd& x) {
    x.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(p));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();
  };
  Eigen::MatrixXd x, xt;
  draw(n, x);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.rows(); ++i) y[i] = truth(x.row(i).transpose()) + noise * rng.normal();
  draw(n_test, xt);
  GpProblem out{make_dataset(x, y), Eigen::MatrixXd(xt.rows(), xt.cols())};
  for (Eigen::Index i = 0; i < xt.rows(); ++i) out.test.row(i) = out.train.standardize(xt.row(i).transpose()).transpose();
  return out;
}

// ---------------------------------------------------------------------------

double GpStudy::sd(std::size_t t, std::size_t m) const {
  std::vector<double> ok;
  for (const auto& r : estimates.at(t).at(m))
    if (std::isfinite(r.estimate)) ok.push_back(r.estimate);
  if (ok.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double mean = std::accumulate(ok.begin(), ok.end(), 0.0) / static_cast<double>(ok.size());
  double ss = 0.0;
  for (double v : ok) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(ok.size() - 1));
}

GpStudy run_gp_study(const GpPredictor& predictor, const GPConfig& cfg, const Eigen::MatrixXd& test_points,
                     const std::vector<Method>& methods, std::size_t budget, const std::vector<std::uint64_t>& seeds,
                     unsigned threads) {
  GpStudy study;
  study.methods = methods;
  study.budget = budget;
  study.seeds = seeds;
  const auto n_test = static_cast<std::size_t>(test_points.rows());
  study.estimates.assign(n_test, std::vector<std::vector<EstimateReport>>(methods.size()));
  std::vector<std::string> errors(n_test);
  std::vector<std::vector<std::string>> failures(n_test);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t; (t = next.fetch_add(1)) < n_test;) {
      try {
        const Eigen::VectorXd z = test_points.row(static_cast<Eigen::Index>(t)).transpose();
        for (std::size_t m = 0; m < methods.size(); ++m)
          for (auto s : seeds) {
            const std::uint64_t seed = derive_seed(s, {t});
            try {
              study.estimates[t][m].push_back(marginal_prediction(predictor, cfg, z, methods[m], budget, seed));
            } catch (const std::runtime_error& e) {
              // Numerical failure: keep the slot, mark it NaN, report it.
              EstimateReport bad;
              bad.method = methods[m];
              bad.seed = seed;
              bad.estimate = std::numeric_limits<double>::quiet_NaN();
              study.estimates[t][m].push_back(bad);
              failures[t].push_back(to_string(methods[m]) + " seed " + std::to_string(s) + ": " + e.what());
            }
          }
      } catch (const std::exception& e) {
        errors[t] = e.what();
      }
    }
  };
  unsigned nt = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  nt = static_cast<unsigned>(std::min<std::size_t>(nt, std::max<std::size_t>(n_test, 1)));
  if (nt <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < nt; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (std::size_t t = 0; t < n_test; ++t)
    if (!errors[t].empty()) throw std::runtime_error("test point " + std::to_string(t) + ": " + errors[t]);
  for (std::size_t t = 0; t < n_test; ++t)
    for (auto& f : failures[t]) study.failures.push_back("test point " + std::to_string(t) + ", " + f);
  return study;
}

void write_gp_estimates(const GpStudy& study, std::ostream& out) {
  out << "test_index,method,N,seed,estimate\n";
  for (std::size_t t = 0; t < study.estimates.size(); ++t)
    for (std::size_t m = 0; m < study.methods.size(); ++m)
      for (std::size_t s = 0; s < study.seeds.size(); ++s)
        out << t << ',' << to_string(study.methods[m]) << ',' << study.estimates[t][m][s].n_total << ','
            << study.seeds[s] << ',' << csv::format_double(study.estimates[t][m][s].estimate) << '\n';
}

void write_gp_summary(const GpStudy& study, std::ostream& out) {
  out << "test_index,method,sd_over_seeds\n";
  for (std::size_t t = 0; t < study.estimates.size(); ++t)
    for (std::size_t m = 0; m < study.methods.size(); ++m)
      out << t << ',' << to_string(study.methods[m]) << ',' << csv::format_double(study.sd(t, m)) << '\n';
}

}  // namespace cfq

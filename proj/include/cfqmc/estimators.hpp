#pragma once

// Integration estimators: plain (Q)MC averages, the control-functional
// estimator and its folded variant, the closed-form worst-case error, and the
// budget-split rules.

#include <atomic>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>

#include "cfqmc/interpolate.hpp"
#include "cfqmc/kernels.hpp"
#include "cfqmc/points.hpp"

namespace cfq {

// Black-box integrand with an evaluation counter. The counter is atomic so the
// same integrand may be evaluated from several threads.
class Integrand {
 public:
  using Fn = std::function<double(PointView)>;

  Integrand(std::size_t dim, Fn fn);
  Integrand(const Integrand&) = delete;
  Integrand& operator=(const Integrand&) = delete;

  double operator()(PointView x) const;
  std::size_t dim() const noexcept { return dim_; }
  std::uint64_t eval_count() const noexcept { return count_.load(std::memory_order_relaxed); }

 private:
  std::size_t dim_;
  Fn fn_;
  mutable std::atomic<std::uint64_t> count_{0};
};

enum class Method { MC, QMC, QMC_CF, QMC_CF_Folded, MC_CF };

std::string to_string(Method m);
/// Accepts "MC", "QMC", "QMC+CF", "QMC+CF-folded", "MC+CF". Throws std::invalid_argument.
Method parse_method(const std::string& s);
bool uses_cf(Method m) noexcept;

struct EstimateReport {
  Method method = Method::QMC;
  double estimate = 0.0;
  std::uint64_t n_total = 0;   // integrand evaluations actually spent
  std::uint64_t m_nodes = 0;   // 0 for plain methods
  std::uint64_t discarded = 0; // budget dropped when snapping M to a grid
  std::uint64_t seed = 0;
  double wall_time = 0.0;      // seconds
};

/// Mean of f over the points. Throws on an empty set or dimension mismatch.
double qmc_estimate(const Integrand& f, const PointSet& ps);

struct CfResult {
  double estimate;
  Interpolant interpolant;
};

/// I[f_M] + mean over eval_points of (f - f_M), with f_M fitted on `nodes`.
/// Spends |nodes| + |eval_points| evaluations of f.
CfResult cf_estimate(const Integrand& f, const PointSet& nodes, const PointSet& eval_points,
                     const KernelSpec& spec, double jitter);

/// CF estimator on baker_fold(random_shift(lattice_points, shift)).
double cf_estimate_folded(const Integrand& f, const PointSet& nodes, const PointSet& lattice_points,
                          PointView shift, const KernelSpec& spec, double jitter);

struct WorstCaseError {
  double value;
  double squared_raw;  // before clamping
  bool clamped;        // squared_raw was negative
  bool warning;        // |squared_raw| beyond the 1e-14 clamping threshold while negative
};

/// sqrt of  iint K - (2/N) sum_n int K(x_n, y) dy + (1/N^2) sum_{n,m} K(x_n, x_m).
WorstCaseError worst_case_error_detail(const KernelSpec& spec, const PointSet& ps);
double worst_case_error(const KernelSpec& spec, const PointSet& ps);

/// Asymptotically optimal node fraction M/N = (alpha - alpha_L) / alpha.
/// Throws std::domain_error unless alpha > alpha_L > 0.
double optimal_split(double alpha, double alpha_l);

struct BudgetSplit {
  std::size_t m_nodes;       // after snapping to m^d
  std::size_t n_eval;
  std::size_t grid_side;     // m
  std::size_t discarded;     // M before snapping minus m^d
  std::size_t m_requested;   // M before snapping
};

/// Split N_total into grid nodes and evaluation points. With pow2_eval,
/// n_eval is the largest power of two <= (1 - fraction) N_total and M takes
/// the rest; otherwise M = round(fraction N_total). M is then snapped down to
/// the largest m^d. Throws std::invalid_argument when N_total < 4, the
/// fraction is outside (0,1), or either part would be empty.
BudgetSplit split_budget(std::size_t n_total, double fraction, bool pow2_eval, std::size_t dim);

}  // namespace cfq

#include "cfqmc/estimators.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace cfq {

Integrand::Integrand(std::size_t dim, Fn fn) : dim_(dim), fn_(std::move(fn)) {
  if (dim_ == 0) throw std::invalid_argument("Integrand: dimension must be >= 1");
  if (!fn_) throw std::invalid_argument("Integrand: empty function");
}

double Integrand::operator()(PointView x) const {
  if (x.size() != dim_) throw std::invalid_argument("integrand: point has the wrong dimension");
  count_.fetch_add(1, std::memory_order_relaxed);
  return fn_(x);
}

std::string to_string(Method m) {
  switch (m) {
    case Method::MC: return "MC";
    case Method::QMC: return "QMC";
    case Method::QMC_CF: return "QMC+CF";
    case Method::QMC_CF_Folded: return "QMC+CF-folded";
    case Method::MC_CF: return "MC+CF";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  for (Method m : {Method::MC, Method::QMC, Method::QMC_CF, Method::QMC_CF_Folded, Method::MC_CF})
    if (to_string(m) == s) return m;
  throw std::invalid_argument("unknown method '" + s + "' (expected MC, QMC, QMC+CF, QMC+CF-folded or MC+CF)");
}

bool uses_cf(Method m) noexcept { return m == Method::QMC_CF || m == Method::QMC_CF_Folded || m == Method::MC_CF; }

double qmc_estimate(const Integrand& f, const PointSet& ps) {
  if (ps.empty()) throw std::invalid_argument("qmc_estimate: empty point set");
  if (ps.dim() != f.dim()) throw std::invalid_argument("qmc_estimate: point dimension differs from integrand dimension");
  // Compensated sum of deviations from the first value, so a constant
  // integrand averages back to itself exactly.
  const double first = f(ps[0]);
  double sum = 0.0, comp = 0.0;
  for (std::size_t i = 1; i < ps.size(); ++i) {
    const double v = f(ps[i]) - first;
    const double t = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return first + (sum + comp) / static_cast<double>(ps.size());
}

CfResult cf_estimate(const Integrand& f, const PointSet& nodes, const PointSet& eval_points,
                     const KernelSpec& spec, double jitter) {
  if (nodes.dim() != f.dim() || eval_points.dim() != f.dim())
    throw std::invalid_argument("cf_estimate: point dimension differs from integrand dimension");
  if (eval_points.empty()) throw std::invalid_argument("cf_estimate: empty evaluation set");
  std::vector<double> values(nodes.size());
  for (std::size_t n = 0; n < nodes.size(); ++n) values[n] = f(nodes[n]);
  Interpolant interp = fit(spec, nodes, values, jitter);

  double sum = 0.0;
  for (std::size_t i = 0; i < eval_points.size(); ++i) {
    const auto x = eval_points[i];
    sum += f(x) - interp.evaluate(x);
  }
  const double estimate = interp.exact_integral() + sum / static_cast<double>(eval_points.size());
  return CfResult{estimate, std::move(interp)};
}

double cf_estimate_folded(const Integrand& f, const PointSet& nodes, const PointSet& lattice_points,
                          PointView shift, const KernelSpec& spec, double jitter) {
  return cf_estimate(f, nodes, baker_fold(random_shift(lattice_points, shift)), spec, jitter).estimate;
}

WorstCaseError worst_case_error_detail(const KernelSpec& spec, const PointSet& ps) {
  if (ps.empty()) throw std::invalid_argument("worst_case_error: empty point set");
  if (ps.dim() != spec.dim()) throw std::invalid_argument("worst_case_error: point dimension differs from kernel dimension");
  const double n = static_cast<double>(ps.size());
  double single = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) single += kernel_integral(spec, ps[i]);
  double pair = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    pair += 1.0;  // K(x, x)
    for (std::size_t j = i + 1; j < ps.size(); ++j) pair += 2.0 * kernel_eval(spec, ps[i], ps[j]);
  }
  const double sq = kernel_double_integral(spec) - 2.0 * single / n + pair / (n * n);
  WorstCaseError r{0.0, sq, sq < 0.0, sq < -1e-14};
  r.value = sq > 0.0 ? std::sqrt(sq) : 0.0;
  return r;
}

double worst_case_error(const KernelSpec& spec, const PointSet& ps) {
  return worst_case_error_detail(spec, ps).value;
}

double optimal_split(double alpha, double alpha_l) {
  if (!(alpha_l > 0.0)) throw std::domain_error("optimal_split: alpha_L must be > 0");
  if (!(alpha > alpha_l))
    throw std::domain_error("optimal_split: alpha must exceed alpha_L; the CF split is undefined, use plain QMC");
  return (alpha - alpha_l) / alpha;
}

BudgetSplit split_budget(std::size_t n_total, double fraction, bool pow2_eval, std::size_t dim) {
  if (n_total < 4) throw std::invalid_argument("split_budget: N_total must be >= 4");
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("split_budget: fraction must lie in (0,1)");
  std::size_t n_eval = 0;
  std::size_t m = 0;
  if (pow2_eval) {
    const auto cap = static_cast<std::size_t>(std::floor((1.0 - fraction) * static_cast<double>(n_total)));
    if (cap == 0) throw std::invalid_argument("split_budget: budget too small for any evaluation points");
    n_eval = std::bit_floor(cap);
    m = n_total - n_eval;
  } else {
    m = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n_total)));
    n_eval = n_total - m;
  }
  if (m == 0 || n_eval == 0)
    throw std::invalid_argument("split_budget: budget " + std::to_string(n_total) + " too small to allocate nodes and evaluation points");
  const std::size_t side = grid_side_for(m, dim);
  std::size_t snapped = 1;
  for (std::size_t j = 0; j < dim; ++j) snapped *= side;
  return BudgetSplit{snapped, n_eval, side, m - snapped, m};
}

}  // namespace cfq

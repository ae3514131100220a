#include "cfqmc/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>

namespace cfq {
namespace {

// Monomial coefficients of phi_k on [0,1] (ascending powers):
//   k=0: 1 - r
//   k=1: (1-r)^3 (3r+1)       = 1 - 6r^2 + 8r^3 - 3r^4
//   k=2: (1-r)^5 (8r^2+5r+1)  = 1 - 7r^2 + 35r^4 - 56r^5 + 35r^6 - 8r^7
constexpr std::array<double, 2> kPhi0 = {1.0, -1.0};
constexpr std::array<double, 5> kPhi1 = {1.0, 0.0, -6.0, 8.0, -3.0};
constexpr std::array<double, 8> kPhi2 = {1.0, 0.0, -7.0, 0.0, 35.0, -56.0, 35.0, -8.0};

// Antiderivatives Phi_k(s) = int_0^s phi_k, coefficients of s^1.. (index 0 is s^0).
constexpr std::array<double, 3> kCum0 = {0.0, 1.0, -0.5};
constexpr std::array<double, 6> kCum1 = {0.0, 1.0, 0.0, -2.0, 2.0, -0.6};
constexpr std::array<double, 9> kCum2 = {0.0, 1.0, 0.0, -7.0 / 3.0, 0.0, 7.0, -28.0 / 3.0, 5.0, -1.0};

// int_0^1 phi_k(r) dr and int_0^1 r phi_k(r) dr.
constexpr std::array<double, 3> kMass = {0.5, 0.4, 1.0 / 3.0};
constexpr std::array<double, 3> kMoment = {1.0 / 6.0, 0.1, 5.0 / 72.0};

double horner(std::span<const double> c, double x) noexcept {
  double acc = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) acc = acc * x + c[i];
  return acc;
}

void check_k(int k) {
  if (k < 0 || k > 2)
    throw std::invalid_argument("Wendland smoothness k must be 0, 1 or 2 (got " + std::to_string(k) + ")");
}

double phi_unchecked(int k, double r) noexcept {
  if (r >= 1.0) return 0.0;
  switch (k) {
    case 0: return horner(kPhi0, r);
    case 1: {
      const double t = 1.0 - r;
      return t * t * t * (3.0 * r + 1.0);
    }
    default: {
      const double t = 1.0 - r;
      const double t2 = t * t;
      return t2 * t2 * t * ((8.0 * r + 5.0) * r + 1.0);
    }
  }
}

double cumulative_unchecked(int k, double s) noexcept {
  if (s >= 1.0) return kMass[static_cast<std::size_t>(k)];
  switch (k) {
    case 0: return horner(kCum0, s);
    case 1: return horner(kCum1, s);
    default: return horner(kCum2, s);
  }
}

}  // namespace

KernelSpec::KernelSpec(int k, std::size_t dim, double support_radius)
    : k_(k), dim_(dim), rho_(support_radius) {
  check_k(k);
  if (dim == 0) throw std::invalid_argument("KernelSpec: dimension must be >= 1");
  if (!(support_radius > 0.0 && support_radius <= 1.0))
    throw std::invalid_argument("KernelSpec: support radius must lie in (0,1]");
}

double wendland_1d(int k, double r) {
  check_k(k);
  if (!(r >= 0.0)) throw std::invalid_argument("wendland_1d: r must be >= 0");
  return phi_unchecked(k, r);
}

double wendland_cumulative(int k, double s) {
  check_k(k);
  if (!(s >= 0.0)) throw std::invalid_argument("wendland_cumulative: s must be >= 0");
  return cumulative_unchecked(k, s);
}

double wendland_first_moment(int k) {
  check_k(k);
  return kMoment[static_cast<std::size_t>(k)];
}

double kernel_eval(const KernelSpec& spec, PointView x, PointView y) {
  if (x.size() != spec.dim() || y.size() != spec.dim())
    throw std::invalid_argument("kernel_eval: point dimension differs from kernel dimension");
  const double inv_rho = 1.0 / spec.support_radius();
  double v = 1.0;
  for (std::size_t i = 0; i < x.size() && v != 0.0; ++i)
    v *= phi_unchecked(spec.k(), std::abs(x[i] - y[i]) * inv_rho);
  return v;
}

double kernel_integral_1d(int k, double support_radius, double y) {
  check_k(k);
  if (!(y >= 0.0 && y <= 1.0)) throw std::invalid_argument("kernel_integral_1d: y outside [0,1]");
  if (!(support_radius > 0.0 && support_radius <= 1.0))
    throw std::invalid_argument("kernel_integral_1d: support radius must lie in (0,1]");
  // Split at y: both halves reduce to Phi evaluated at the truncated reach.
  const double rho = support_radius;
  return rho * (cumulative_unchecked(k, y / rho) + cumulative_unchecked(k, (1.0 - y) / rho));
}

double kernel_integral(const KernelSpec& spec, PointView y) {
  if (y.size() != spec.dim())
    throw std::invalid_argument("kernel_integral: point dimension differs from kernel dimension");
  double v = 1.0;
  for (double yi : y) v *= kernel_integral_1d(spec.k(), spec.support_radius(), yi);
  return v;
}

double kernel_double_integral_1d(int k, double support_radius) {
  check_k(k);
  if (!(support_radius > 0.0 && support_radius <= 1.0))
    throw std::invalid_argument("kernel_double_integral_1d: support radius must lie in (0,1]");
  // int int g(|x-y|) = 2 int_0^1 (1-t) g(t) dt, and g vanishes beyond rho <= 1.
  const double rho = support_radius;
  const auto ks = static_cast<std::size_t>(k);
  return 2.0 * rho * (kMass[ks] - rho * kMoment[ks]);
}

double kernel_double_integral(const KernelSpec& spec) {
  return std::pow(kernel_double_integral_1d(spec.k(), spec.support_radius()),
                  static_cast<double>(spec.dim()));
}

Eigen::MatrixXd gram(const KernelSpec& spec, const PointSet& nodes, double jitter) {
  if (nodes.empty()) throw std::invalid_argument("gram: empty node set");
  if (nodes.dim() != spec.dim()) throw std::invalid_argument("gram: node dimension differs from kernel dimension");
  if (!(jitter >= 0.0)) throw std::invalid_argument("gram: jitter must be >= 0");
  const auto m = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXd g(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    g(i, i) = 1.0 + jitter;
    const auto ui = nodes[static_cast<std::size_t>(i)];
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const auto uj = nodes[static_cast<std::size_t>(j)];
      if (jitter == 0.0 && std::equal(ui.begin(), ui.end(), uj.begin()))
        throw IllConditionedError("gram: nodes " + std::to_string(i) + " and " + std::to_string(j) +
                                  " coincide and jitter is zero; the Gram matrix is singular");
      const double v = kernel_eval(spec, ui, uj);
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

}  // namespace cfq

#pragma once

// Tensor-product Wendland kernels on [0,1]^d:
//
//   K(x, y) = prod_i phi_k(|x_i - y_i| / rho)
//
// with phi_k the one-dimensional Wendland function of smoothness k, normalized
// so phi_k(0) = 1. Native space of the product is the mixed-smoothness Sobolev
// space of order k + 1. For k = 0 the radial native-space statement formally
// needs d > 3; the one-dimensional factors are used regardless.
//
// All kernel integrals over the cube are closed-form piecewise polynomials.

#include <Eigen/Dense>
#include <stdexcept>

#include "cfqmc/points.hpp"

namespace cfq {

// Raised when a Gram matrix is singular by construction (duplicate nodes
// without jitter).
class IllConditionedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class KernelSpec {
 public:
  /// Throws std::invalid_argument unless k in {0,1,2}, dim >= 1 and
  /// support_radius in (0,1].
  KernelSpec(int k, std::size_t dim, double support_radius = 1.0);

  int k() const noexcept { return k_; }
  std::size_t dim() const noexcept { return dim_; }
  double support_radius() const noexcept { return rho_; }

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;

 private:
  int k_;
  std::size_t dim_;
  double rho_;
};

/// phi_k(r): k=0 (1-r)_+, k=1 (1-r)_+^3 (3r+1), k=2 (1-r)_+^5 (8r^2+5r+1).
double wendland_1d(int k, double r);

/// Phi_k(s) = int_0^s phi_k(r) dr for s >= 0 (constant for s >= 1).
double wendland_cumulative(int k, double s);

/// int_0^1 r phi_k(r) dr.
double wendland_first_moment(int k);

double kernel_eval(const KernelSpec& spec, PointView x, PointView y);

/// int_0^1 phi_k(|x - y| / rho) dx.
double kernel_integral_1d(int k, double support_radius, double y);

/// int_{[0,1]^d} K(x, y) dx.
double kernel_integral(const KernelSpec& spec, PointView y);

/// int_0^1 int_0^1 phi_k(|x - y| / rho) dx dy.
double kernel_double_integral_1d(int k, double support_radius);

/// Double integral of K over [0,1]^d x [0,1]^d.
double kernel_double_integral(const KernelSpec& spec);

/// Gram matrix G_ij = K(u_i, u_j) + jitter [i == j]. Throws
/// IllConditionedError for duplicate nodes with jitter == 0.
Eigen::MatrixXd gram(const KernelSpec& spec, const PointSet& nodes, double jitter);

}  // namespace cfq

#pragma once

// Kernel interpolant f_M(x) = sum_n beta_n K(x, u_n) fitted to values at the
// nodes u_n, together with its exact cube integral. The control functional
// psi = f_M - I[f_M] integrates to zero.

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfqmc/kernels.hpp"
#include "cfqmc/points.hpp"

namespace cfq {

/// Scaled nugget used when the caller does not choose one: 1e-10 * M.
double default_jitter(std::size_t node_count) noexcept;

class Interpolant {
 public:
  /// Assemble from stored parts; exact_integral is recomputed from the
  /// closed-form kernel integrals.
  Interpolant(KernelSpec spec, PointSet nodes, Eigen::VectorXd beta, double jitter,
              double residual_norm = 0.0, double fit_tolerance = 0.0,
              std::optional<std::string> warning = std::nullopt);

  const KernelSpec& spec() const noexcept { return spec_; }
  const PointSet& nodes() const noexcept { return nodes_; }
  const Eigen::VectorXd& beta() const noexcept { return beta_; }
  double exact_integral() const noexcept { return exact_integral_; }
  double jitter() const noexcept { return jitter_; }
  /// max_n |f_M(u_n) - f(u_n)| at fit time.
  double residual_norm() const noexcept { return residual_norm_; }
  double fit_tolerance() const noexcept { return fit_tolerance_; }
  /// Set when the Cholesky factorization failed and a least-squares solve was used,
  /// or when the node residual exceeded the fit tolerance.
  const std::optional<std::string>& warning() const noexcept { return warning_; }

  double evaluate(PointView x) const;
  /// psi(x) = f_M(x) - I[f_M].
  double control_functional(PointView x) const;

 private:
  KernelSpec spec_;
  PointSet nodes_;
  Eigen::VectorXd beta_;
  double jitter_;
  double exact_integral_;
  double residual_norm_;
  double fit_tolerance_;
  std::optional<std::string> warning_;
  // Node order sorted by first coordinate, used to restrict evaluation to the
  // support window when the support radius is below 1.
  std::vector<std::size_t> order_;
  std::vector<double> first_coord_;
};

/// Solve (G + jitter I) beta = values by Cholesky, falling back to a pivoted
/// least-squares solve when the factorization fails. With jitter > 0 the
/// solution is then refined against G beta = values, using the jittered
/// factor as preconditioner, so the node residual is not inflated by
/// jitter * beta on ill-conditioned Gram matrices.
/// Throws std::invalid_argument on size mismatch or negative jitter, and
/// IllConditionedError for duplicate nodes with zero jitter.
Interpolant fit(const KernelSpec& spec, const PointSet& nodes, std::span<const double> values,
                double jitter);

/// Text record: key,value header lines then one `x1..xd,beta` row per node.
void write_interpolant(const Interpolant& interp, std::ostream& out);
/// Throws std::invalid_argument if the stored exact integral disagrees with
/// the one recomputed from nodes and coefficients.
Interpolant read_interpolant(std::istream& in);

}  // namespace cfq

#pragma once

// Genz test families on [0,1]^d with closed-form integrals.
//
//   oscillatory    cos(2 pi u_1 + sum a_i x_i)
//   product_peak   prod (a_i^-2 + (x_i - u_i)^2)^-1
//   corner_peak    (1 + sum a_i x_i)^-(d+1)
//   gaussian       exp(-sum a_i^2 (x_i - u_i)^2)
//   continuous     exp(-sum a_i |x_i - u_i|)
//   discontinuous  exp(sum a_i x_i) if x_1 <= u_1 and x_2 <= u_2, else 0
//                  (only x_1 <= u_1 for d = 1)
//
// plus a `constant` debug family f = a_1.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cfqmc/points.hpp"

namespace cfq {

enum class GenzFamily { Oscillatory, ProductPeak, CornerPeak, Gaussian, Continuous, Discontinuous, Constant };

std::string to_string(GenzFamily f);
GenzFamily parse_genz_family(const std::string& s);

/// Classic total-difficulty values sum(a) per family (constant: 1).
double default_difficulty(GenzFamily f) noexcept;

class GenzInstance {
 public:
  GenzFamily family() const noexcept { return family_; }
  std::size_t dim() const noexcept { return a_.size(); }
  const std::vector<double>& a() const noexcept { return a_; }
  const std::vector<double>& u() const noexcept { return u_; }
  double exact() const noexcept { return exact_; }

  double operator()(PointView x) const;

  friend GenzInstance make_genz(GenzFamily, std::size_t, std::vector<double>, std::vector<double>);

 private:
  GenzFamily family_ = GenzFamily::Constant;
  std::vector<double> a_;
  std::vector<double> u_;
  double exact_ = 0.0;
};

/// Throws std::invalid_argument for size mismatch, a_i <= 0, u outside the cube,
/// or corner_peak with d > 6.
GenzInstance make_genz(GenzFamily family, std::size_t dim, std::vector<double> a, std::vector<double> u);

/// u uniform on the cube; a uniform on (0,1] rescaled so sum(a) = difficulty_scale.
GenzInstance random_genz(GenzFamily family, std::size_t dim, std::uint64_t seed, double difficulty_scale);

/// One line: family,d,a_1..a_d,u_1..u_d,exact (17 digits).
void write_genz(const GenzInstance& g, std::ostream& out);
GenzInstance read_genz(const std::string& line);

}  // namespace cfq

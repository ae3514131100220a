#include "cfqmc/genz.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "cfqmc/csv.hpp"
#include "cfqmc/rng.hpp"

namespace cfq {
namespace {

constexpr GenzFamily kAll[] = {GenzFamily::Oscillatory, GenzFamily::ProductPeak, GenzFamily::CornerPeak,
                               GenzFamily::Gaussian,    GenzFamily::Continuous,  GenzFamily::Discontinuous,
                               GenzFamily::Constant};

double sinc_half(double a) {
  const double h = 0.5 * a;
  return std::abs(h) < 1e-8 ? 1.0 - h * h / 6.0 : std::sin(h) / h;
}

// exp(t) - 1 over a, stable for small a.
double expm1_over(double t, double a) { return std::expm1(t) / a; }

double exact_integral(GenzFamily family, const std::vector<double>& a, const std::vector<double>& u) {
  const std::size_t d = a.size();
  switch (family) {
    case GenzFamily::Oscillatory: {
      // Re[e^{i 2pi u1} prod (e^{i a_j} - 1)/(i a_j)] with (e^{ia}-1)/(ia) = e^{ia/2} sinc(a/2).
      double phase = 2.0 * std::numbers::pi * u[0];
      double mag = 1.0;
      for (double aj : a) {
        phase += 0.5 * aj;
        mag *= sinc_half(aj);
      }
      return std::cos(phase) * mag;
    }
    case GenzFamily::ProductPeak: {
      double v = 1.0;
      for (std::size_t j = 0; j < d; ++j) v *= a[j] * (std::atan(a[j] * (1.0 - u[j])) + std::atan(a[j] * u[j]));
      return v;
    }
    case GenzFamily::CornerPeak: {
      // Repeated 1-d integration of (c + a x)^-p gives an alternating sum over
      // the 2^d cube corners: 1/(d! prod a) sum_v (-1)^|v| / (1 + a.v).
      double sum = 0.0;
      for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
        double s = 1.0;
        int bits = 0;
        for (std::size_t j = 0; j < d; ++j)
          if (mask & (std::uint64_t{1} << j)) {
            s += a[j];
            ++bits;
          }
        sum += (bits % 2 ? -1.0 : 1.0) / s;
      }
      double denom = 1.0;
      for (std::size_t j = 0; j < d; ++j) denom *= a[j] * static_cast<double>(j + 1);
      return sum / denom;
    }
    case GenzFamily::Gaussian: {
      double v = 1.0;
      for (std::size_t j = 0; j < d; ++j)
        v *= std::sqrt(std::numbers::pi) / (2.0 * a[j]) * (std::erf(a[j] * (1.0 - u[j])) + std::erf(a[j] * u[j]));
      return v;
    }
    case GenzFamily::Continuous: {
      double v = 1.0;
      for (std::size_t j = 0; j < d; ++j)
        v *= (-std::expm1(-a[j] * u[j]) - std::expm1(-a[j] * (1.0 - u[j]))) / a[j];
      return v;
    }
    case GenzFamily::Discontinuous: {
      double v = 1.0;
      for (std::size_t j = 0; j < d; ++j) v *= expm1_over(a[j] * (j < 2 ? u[j] : 1.0), a[j]);
      return v;
    }
    case GenzFamily::Constant: return a[0];
  }
  return 0.0;
}

}  // namespace

std::string to_string(GenzFamily f) {
  switch (f) {
    case GenzFamily::Oscillatory: return "oscillatory";
    case GenzFamily::ProductPeak: return "product_peak";
    case GenzFamily::CornerPeak: return "corner_peak";
    case GenzFamily::Gaussian: return "gaussian";
    case GenzFamily::Continuous: return "continuous";
    case GenzFamily::Discontinuous: return "discontinuous";
    case GenzFamily::Constant: return "constant";
  }
  return "?";
}

GenzFamily parse_genz_family(const std::string& s) {
  for (GenzFamily f : kAll)
    if (to_string(f) == s) return f;
  throw std::invalid_argument("unknown Genz family '" + s + "'");
}

double default_difficulty(GenzFamily f) noexcept {
  switch (f) {
    case GenzFamily::Oscillatory: return 9.0;
    case GenzFamily::ProductPeak: return 7.25;
    case GenzFamily::CornerPeak: return 1.85;
    case GenzFamily::Gaussian: return 7.03;
    case GenzFamily::Continuous: return 20.4;
    case GenzFamily::Discontinuous: return 4.3;
    case GenzFamily::Constant: return 1.0;
  }
  return 1.0;
}

double GenzInstance::operator()(PointView x) const {
  const std::size_t d = a_.size();
  if (x.size() != d) throw std::invalid_argument("Genz: point has the wrong dimension");
  switch (family_) {
    case GenzFamily::Oscillatory: {
      double s = 2.0 * std::numbers::pi * u_[0];
      for (std::size_t j = 0; j < d; ++j) s += a_[j] * x[j];
      return std::cos(s);
    }
    case GenzFamily::ProductPeak: {
      double v = 1.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double t = x[j] - u_[j];
        v /= 1.0 / (a_[j] * a_[j]) + t * t;
      }
      return v;
    }
    case GenzFamily::CornerPeak: {
      double s = 1.0;
      for (std::size_t j = 0; j < d; ++j) s += a_[j] * x[j];
      return std::pow(s, -static_cast<double>(d + 1));
    }
    case GenzFamily::Gaussian: {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double t = a_[j] * (x[j] - u_[j]);
        s += t * t;
      }
      return std::exp(-s);
    }
    case GenzFamily::Continuous: {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += a_[j] * std::abs(x[j] - u_[j]);
      return std::exp(-s);
    }
    case GenzFamily::Discontinuous: {
      for (std::size_t j = 0; j < std::min<std::size_t>(d, 2); ++j)
        if (x[j] > u_[j]) return 0.0;
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += a_[j] * x[j];
      return std::exp(s);
    }
    case GenzFamily::Constant: return a_[0];
  }
  return 0.0;
}

GenzInstance make_genz(GenzFamily family, std::size_t dim, std::vector<double> a, std::vector<double> u) {
  if (dim == 0) throw std::invalid_argument("make_genz: dimension must be >= 1");
  if (a.size() != dim || u.size() != dim)
    throw std::invalid_argument("make_genz: parameter vectors must have " + std::to_string(dim) + " entries");
  for (double ai : a)
    if (!(ai > 0.0) || !std::isfinite(ai)) throw std::invalid_argument("make_genz: difficulty parameters must be positive");
  for (double ui : u)
    if (!(ui >= 0.0 && ui <= 1.0)) throw std::invalid_argument("make_genz: location parameters must lie in [0,1]");
  if (family == GenzFamily::CornerPeak && dim > 6)
    throw std::invalid_argument("make_genz: corner_peak exact integral supported for d <= 6");
  GenzInstance g;
  g.family_ = family;
  g.exact_ = exact_integral(family, a, u);
  g.a_ = std::move(a);
  g.u_ = std::move(u);
  return g;
}

GenzInstance random_genz(GenzFamily family, std::size_t dim, std::uint64_t seed, double difficulty_scale) {
  if (!(difficulty_scale > 0.0)) throw std::invalid_argument("random_genz: difficulty scale must be positive");
  Rng rng(seed);
  std::vector<double> u = rng.uniform_vector(dim);
  std::vector<double> a(dim);
  for (auto& ai : a) ai = 1.0 - rng.uniform();  // (0,1]
  const double total = std::accumulate(a.begin(), a.end(), 0.0);
  for (auto& ai : a) ai *= difficulty_scale / total;
  return make_genz(family, dim, std::move(a), std::move(u));
}

void write_genz(const GenzInstance& g, std::ostream& out) {
  out << to_string(g.family()) << ',' << g.dim();
  for (double v : g.a()) out << ',' << csv::format_double(v);
  for (double v : g.u()) out << ',' << csv::format_double(v);
  out << ',' << csv::format_double(g.exact()) << '\n';
}

GenzInstance read_genz(const std::string& line) {
  auto f = csv::split(line);
  if (f.size() < 2) throw std::invalid_argument("Genz record: too few fields");
  const auto family = parse_genz_family(f[0]);
  const auto d = static_cast<std::size_t>(csv::parse_int(f[1], "dim"));
  if (f.size() != 2 * d + 3) throw std::invalid_argument("Genz record: expected " + std::to_string(2 * d + 3) + " fields");
  std::vector<double> a(d), u(d);
  for (std::size_t j = 0; j < d; ++j) {
    a[j] = csv::parse_double(f[2 + j], "a");
    u[j] = csv::parse_double(f[2 + d + j], "u");
  }
  const double stored = csv::parse_double(f[2 * d + 2], "exact");
  auto g = make_genz(family, d, std::move(a), std::move(u));
  // recomputed, so a record from a different formula version is caught
  if (std::abs(stored - g.exact()) > 1e-12 * (1.0 + std::abs(stored)))
    throw std::invalid_argument("Genz record: stored exact integral disagrees with the recomputed value");
  return g;
}

}  // namespace cfq

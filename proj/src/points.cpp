#include "cfqmc/points.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "cfqmc/csv.hpp"
#include "cfqmc/rng.hpp"

namespace cfq {

void Provenance::add_randomization(const std::string& step) {
  if (randomization.empty() || randomization == "none")
    randomization = step;
  else
    randomization += "+" + step;
}

PointSet::PointSet(std::size_t dim, std::vector<double> coords, Provenance provenance)
    : dim_(dim), coords_(std::move(coords)), provenance_(std::move(provenance)) {
  if (dim_ == 0) throw std::invalid_argument("PointSet: dimension must be >= 1");
  if (coords_.size() % dim_ != 0)
    throw std::invalid_argument("PointSet: coordinate count is not a multiple of the dimension");
  for (double c : coords_) {
    if (!(c >= 0.0 && c <= 1.0))
      throw std::invalid_argument("PointSet: coordinate outside [0,1]: " + csv::format_double(c));
  }
}

PointSet PointSet::prefix(std::size_t n) const {
  if (n > size()) throw std::out_of_range("PointSet::prefix: n exceeds size");
  Provenance p = provenance_;
  p.index_end = p.index_begin + n;
  return PointSet(dim_, std::vector<double>(coords_.begin(), coords_.begin() + n * dim_), p);
}

PointSet PointSet::concat(const PointSet& other) const {
  if (other.dim_ != dim_) throw std::invalid_argument("PointSet::concat: dimension mismatch");
  std::vector<double> c = coords_;
  c.insert(c.end(), other.coords_.begin(), other.coords_.end());
  Provenance p = provenance_;
  p.index_end = p.index_begin + size() + other.size();
  return PointSet(dim_, std::move(c), p);
}

// ---------------------------------------------------------------------------

double radical_inverse(std::uint64_t n, unsigned base, std::span<const unsigned> permutation) {
  if (base < 2) throw std::invalid_argument("radical_inverse: base must be >= 2");
  if (!permutation.empty()) {
    if (permutation.size() != base)
      throw std::invalid_argument("radical_inverse: permutation size differs from base");
    std::vector<bool> seen(base, false);
    for (unsigned p : permutation) {
      if (p >= base || seen[p])
        throw std::invalid_argument("radical_inverse: permutation is not a bijection");
      seen[p] = true;
    }
  }
  const double inv_base = 1.0 / base;
  double scale = inv_base;
  double result = 0.0;
  while (n > 0) {
    const auto digit = static_cast<unsigned>(n % base);
    result += (permutation.empty() ? digit : permutation[digit]) * scale;
    n /= base;
    scale *= inv_base;
  }
  return result;
}

std::vector<unsigned> first_primes(std::size_t count) {
  std::vector<unsigned> primes;
  primes.reserve(count);
  for (unsigned c = 2; primes.size() < count; ++c) {
    bool prime = true;
    for (unsigned p : primes) {
      if (p * p > c) break;
      if (c % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) primes.push_back(c);
  }
  return primes;
}

std::vector<unsigned> reverse_radix_permutation(unsigned base) {
  if (base < 2) throw std::invalid_argument("reverse_radix_permutation: base must be >= 2");
  unsigned bits = 0;
  while ((1u << bits) < base) ++bits;
  std::vector<unsigned> perm;
  perm.reserve(base);
  for (unsigned i = 0; i < (1u << bits); ++i) {
    unsigned r = 0;
    for (unsigned b = 0; b < bits; ++b)
      if (i & (1u << b)) r |= 1u << (bits - 1 - b);
    if (r < base) perm.push_back(r);
  }
  return perm;
}

PointSet halton(std::size_t n, std::size_t dim, bool scramble) {
  if (dim == 0) throw std::invalid_argument("halton: dimension must be >= 1");
  const auto bases = first_primes(dim);
  std::vector<std::vector<unsigned>> perms(dim);
  if (scramble)
    for (std::size_t j = 0; j < dim; ++j) perms[j] = reverse_radix_permutation(bases[j]);

  std::vector<double> coords(n * dim);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      coords[i * dim + j] = radical_inverse(i + 1, bases[j], perms[j]);

  Provenance p{"halton", scramble ? "reverse-radix" : "none", std::nullopt, 1, n + 1};
  return PointSet(dim, std::move(coords), std::move(p));
}

// ---------------------------------------------------------------------------
// Sobol

DirectionTable::DirectionTable(std::vector<Entry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.dim != i + 2)
      throw std::invalid_argument("DirectionTable: expected dimension " + std::to_string(i + 2) +
                                  ", found " + std::to_string(e.dim));
    if (e.degree == 0 || e.m.size() != e.degree)
      throw std::invalid_argument("DirectionTable: dimension " + std::to_string(e.dim) +
                                  " needs exactly s = " + std::to_string(e.degree) +
                                  " initial direction numbers");
    for (std::size_t k = 0; k < e.m.size(); ++k) {
      if (e.m[k] % 2 == 0 || e.m[k] >= (std::uint32_t{1} << (k + 1)))
        throw std::invalid_argument("DirectionTable: dimension " + std::to_string(e.dim) +
                                    " has invalid m_" + std::to_string(k + 1));
    }
  }
}

const DirectionTable& DirectionTable::builtin() {
  static const DirectionTable table(std::vector<Entry>{
      {2, 1, 0, {1}},
      {3, 2, 1, {1, 3}},
      {4, 3, 1, {1, 3, 1}},
      {5, 3, 2, {1, 1, 1}},
      {6, 4, 1, {1, 1, 3, 3}},
      {7, 4, 4, {1, 3, 5, 13}},
      {8, 5, 2, {1, 1, 5, 5, 17}},
  });
  return table;
}

DirectionTable DirectionTable::parse(std::istream& in) {
  std::vector<Entry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tokens;
    for (std::string t; ls >> t;) tokens.push_back(t);
    if (tokens.empty()) continue;
    if (!std::isdigit(static_cast<unsigned char>(tokens[0][0]))) continue;  // header
    if (tokens.size() < 4)
      throw std::invalid_argument("direction table line " + std::to_string(lineno) +
                                  ": expected 'd s a m_1 .. m_s'");
    try {
      Entry e;
      e.dim = static_cast<unsigned>(csv::parse_int(tokens[0], "d"));
      e.degree = static_cast<unsigned>(csv::parse_int(tokens[1], "s"));
      e.coeffs = static_cast<std::uint32_t>(csv::parse_int(tokens[2], "a"));
      for (std::size_t k = 3; k < tokens.size(); ++k)
        e.m.push_back(static_cast<std::uint32_t>(csv::parse_int(tokens[k], "m")));
      entries.push_back(std::move(e));
    } catch (const std::invalid_argument& err) {
      throw std::invalid_argument("direction table line " + std::to_string(lineno) + ": " +
                                  err.what());
    }
  }
  return DirectionTable(std::move(entries));
}

DirectionTable DirectionTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open direction table '" + path + "'");
  return parse(in);
}

std::vector<std::uint32_t> DirectionTable::direction_words(std::size_t dim) const {
  if (dim == 0 || dim > max_dim())
    throw std::invalid_argument("DirectionTable: no direction numbers for dimension " +
                                std::to_string(dim) + " (table covers " +
                                std::to_string(max_dim()) + ")");
  std::vector<std::uint32_t> v(kBits);
  if (dim == 1) {
    for (unsigned i = 0; i < kBits; ++i) v[i] = std::uint32_t{1} << (kBits - 1 - i);
    return v;
  }
  const Entry& e = entries_[dim - 2];
  const unsigned s = e.degree;
  for (unsigned i = 0; i < std::min(s, kBits); ++i) v[i] = e.m[i] << (kBits - 1 - i);
  for (unsigned i = s; i < kBits; ++i) {
    v[i] = v[i - s] ^ (v[i - s] >> s);
    for (unsigned k = 1; k < s; ++k) v[i] ^= ((e.coeffs >> (s - 1 - k)) & 1u) * v[i - k];
  }
  return v;
}

PointSet sobol(std::size_t n, std::size_t dim, const DirectionTable& table,
               std::span<const std::uint32_t> shift) {
  if (dim == 0) throw std::invalid_argument("sobol: dimension must be >= 1");
  if (dim > table.max_dim())
    throw std::invalid_argument("sobol: direction table covers " + std::to_string(table.max_dim()) +
                                " dimensions; dimension " + std::to_string(dim) + " is missing");
  if (n > (std::uint64_t{1} << DirectionTable::kBits))
    throw std::invalid_argument("sobol: N = " + std::to_string(n) + " needs more than " +
                                std::to_string(DirectionTable::kBits) + " bits");
  if (!shift.empty() && shift.size() != dim)
    throw std::invalid_argument("sobol: shift must have one word per dimension");

  std::vector<std::vector<std::uint32_t>> words(dim);
  for (std::size_t j = 0; j < dim; ++j) words[j] = table.direction_words(j + 1);

  std::vector<double> coords(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      std::uint32_t x = shift.empty() ? 0u : shift[j];
      std::uint64_t idx = i;
      for (unsigned b = 0; idx != 0; ++b, idx >>= 1)
        if (idx & 1u) x ^= words[j][b];
      coords[i * dim + j] = static_cast<double>(x) * 0x1.0p-32;
    }
  }
  Provenance p{"sobol", shift.empty() ? "none" : "digital-shift", std::nullopt, 0, n};
  return PointSet(dim, std::move(coords), std::move(p));
}

PointSet sobol(std::size_t n, std::size_t dim, const DirectionTable& table, bool digital_shift,
               std::optional<std::uint64_t> seed) {
  if (!digital_shift) return sobol(n, dim, table, std::span<const std::uint32_t>{});
  if (!seed) throw std::invalid_argument("sobol: digital shift requires a seed");
  Rng rng(*seed);
  std::vector<std::uint32_t> shift(dim);
  for (auto& w : shift) w = static_cast<std::uint32_t>(rng.bits() >> 32);
  PointSet ps = sobol(n, dim, table, shift);
  Provenance p = ps.provenance();
  p.seed = seed;
  return PointSet(dim, ps.coords(), std::move(p));
}

// ---------------------------------------------------------------------------

PointSet lattice(std::size_t n, std::span<const std::uint64_t> generator) {
  const std::size_t dim = generator.size();
  if (dim == 0) throw std::invalid_argument("lattice: generator must have >= 1 component");
  if (n == 0) return PointSet(dim, {}, Provenance{"lattice", "none", std::nullopt, 0, 0});
  std::vector<double> coords(n * dim);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j) {
      // Exact integer reduction before the division keeps frac() exact.
      const auto r = static_cast<std::uint64_t>(
          (static_cast<unsigned __int128>(i) * generator[j]) % n);
      coords[i * dim + j] = static_cast<double>(r) / static_cast<double>(n);
    }
  return PointSet(dim, std::move(coords), Provenance{"lattice", "none", std::nullopt, 0, n});
}

std::vector<std::uint64_t> default_lattice_generator(std::size_t dim) {
  static constexpr std::uint64_t kGen[] = {1,      182667, 469891, 498753, 110745, 446247,
                                           250185, 118627, 245333, 283199, 408519, 391023,
                                           246327, 126539, 399185, 461527};
  if (dim == 0 || dim > std::size(kGen))
    throw std::invalid_argument("default_lattice_generator: supports 1 <= dim <= 16");
  return std::vector<std::uint64_t>(kGen, kGen + dim);
}

PointSet uniform_points(std::size_t n, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("uniform_points: dimension must be >= 1");
  Rng rng(seed);
  auto coords = rng.uniform_vector(n * dim);
  return PointSet(dim, std::move(coords), Provenance{"mc", "none", seed, 0, n});
}

std::vector<double> uniform_shift(std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  return rng.uniform_vector(dim);
}

PointSet midpoint_grid(std::size_t m, std::size_t dim) {
  if (m == 0) throw std::invalid_argument("midpoint_grid: m must be >= 1");
  if (dim == 0) throw std::invalid_argument("midpoint_grid: dimension must be >= 1");
  std::size_t total = 1;
  for (std::size_t j = 0; j < dim; ++j) {
    if (total > std::numeric_limits<std::size_t>::max() / m / dim)
      throw std::overflow_error("midpoint_grid: m^d overflows");
    total *= m;
  }
  std::vector<double> coords(total * dim);
  std::vector<std::size_t> idx(dim, 0);
  for (std::size_t i = 0; i < total; ++i) {
    // Last axis varies fastest.
    for (std::size_t j = 0; j < dim; ++j)
      coords[i * dim + j] = (2.0 * static_cast<double>(idx[j]) + 1.0) / (2.0 * static_cast<double>(m));
    for (std::size_t j = dim; j-- > 0;) {
      if (++idx[j] < m) break;
      idx[j] = 0;
    }
  }
  return PointSet(dim, std::move(coords), Provenance{"grid", "none", std::nullopt, 0, total});
}

std::size_t grid_side_for(std::size_t count, std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("grid_side_for: dimension must be >= 1");
  auto pow_le = [&](std::size_t m) {
    std::size_t t = 1;
    for (std::size_t j = 0; j < dim; ++j) {
      if (t > count / m) return false;
      t *= m;
    }
    return t <= count;
  };
  std::size_t m = 1;
  while (pow_le(m + 1)) ++m;
  return m;
}

// ---------------------------------------------------------------------------

PointSet random_shift(const PointSet& ps, PointView shift) {
  if (shift.size() != ps.dim())
    throw std::invalid_argument("random_shift: shift dimension " + std::to_string(shift.size()) +
                                " differs from point set dimension " + std::to_string(ps.dim()));
  std::vector<double> coords = ps.coords();
  const std::size_t d = ps.dim();
  for (std::size_t i = 0; i < coords.size(); ++i) {
    double v = coords[i] + shift[i % d];
    v -= std::floor(v);
    // Rounding in v - floor(v) can yield exactly 1.0 for v just below an integer.
    if (v >= 1.0) v = 0.0;
    coords[i] = v;
  }
  Provenance p = ps.provenance();
  p.add_randomization("shift");
  return PointSet(d, std::move(coords), std::move(p));
}

double baker(double t) noexcept { return 1.0 - std::abs(2.0 * t - 1.0); }

PointSet baker_fold(const PointSet& ps) {
  std::vector<double> coords = ps.coords();
  for (auto& c : coords) c = std::clamp(baker(c), 0.0, 1.0);
  Provenance p = ps.provenance();
  p.add_randomization("fold");
  return PointSet(ps.dim(), std::move(coords), std::move(p));
}

// ---------------------------------------------------------------------------

std::size_t default_fill_resolution(std::size_t dim) noexcept {
  if (dim <= 2) return 256;
  if (dim == 3) return 64;
  if (dim == 4) return 32;
  return 16;
}

double separation_radius(const PointSet& ps) {
  if (ps.size() < 2) return std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  const std::size_t d = ps.dim();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    auto a = ps[i];
    for (std::size_t j = i + 1; j < ps.size(); ++j) {
      auto b = ps[j];
      double s = 0.0;
      for (std::size_t k = 0; k < d && s < best; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
      best = std::min(best, s);
    }
  }
  return 0.5 * std::sqrt(best);
}

double fill_distance(const PointSet& ps, std::size_t res) {
  if (ps.empty()) throw std::invalid_argument("fill_distance: empty point set");
  if (res == 0) throw std::invalid_argument("fill_distance: resolution must be >= 1");
  const std::size_t d = ps.dim();
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> x(d);
  double worst = 0.0;  // squared
  while (true) {
    for (std::size_t k = 0; k < d; ++k) x[k] = static_cast<double>(idx[k]) / static_cast<double>(res);
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ps.size() && nearest > worst; ++i) {
      auto p = ps[i];
      double s = 0.0;
      for (std::size_t k = 0; k < d && s < nearest; ++k) s += (x[k] - p[k]) * (x[k] - p[k]);
      nearest = std::min(nearest, s);
    }
    worst = std::max(worst, nearest);
    std::size_t k = d;
    while (k-- > 0) {
      if (++idx[k] <= res) break;
      idx[k] = 0;
    }
    if (k == static_cast<std::size_t>(-1)) break;
  }
  return std::sqrt(worst);
}

GeometryMetrics geometry(const PointSet& ps, std::size_t fill_resolution) {
  if (ps.empty()) throw std::invalid_argument("geometry: empty point set");
  GeometryMetrics g;
  g.fill_resolution = fill_resolution;
  g.fill_distance = fill_distance(ps, fill_resolution);
  g.separation_radius = separation_radius(ps);
  g.has_separation = ps.size() >= 2;
  g.mesh_ratio = g.has_separation && g.separation_radius > 0.0
                     ? g.fill_distance / g.separation_radius
                     : std::numeric_limits<double>::quiet_NaN();
  return g;
}

// ---------------------------------------------------------------------------

void write_csv(const PointSet& ps, std::ostream& out) {
  out << "dim,index";
  for (std::size_t k = 1; k <= ps.dim(); ++k) out << ",x" << k;
  out << '\n';
  for (std::size_t i = 0; i < ps.size(); ++i) {
    out << ps.dim() << ',' << ps.provenance().index_begin + i;
    for (double c : ps[i]) out << ',' << csv::format_double(c);
    out << '\n';
  }
}

PointSet read_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::size_t dim = 0;
  std::vector<double> coords;
  std::uint64_t first_index = 0;
  bool any = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    auto fields = csv::split(line);
    if (fields[0] == "dim") continue;
    try {
      const auto d = static_cast<std::size_t>(csv::parse_int(fields[0], "dim"));
      if (d == 0 || fields.size() != d + 2)
        throw std::invalid_argument("expected " + std::to_string(d + 2) + " fields");
      if (dim == 0) dim = d;
      if (d != dim) throw std::invalid_argument("dimension changes within file");
      const auto index = static_cast<std::uint64_t>(csv::parse_int(fields[1], "index"));
      if (!any) first_index = index;
      any = true;
      for (std::size_t k = 0; k < d; ++k) coords.push_back(csv::parse_double(fields[k + 2], "coordinate"));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("point CSV line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!any) throw std::invalid_argument("point CSV contains no points");
  const std::size_t n = coords.size() / dim;
  return PointSet(dim, std::move(coords), Provenance{"file", "none", std::nullopt, first_index, first_index + n});
}

}  // namespace cfq

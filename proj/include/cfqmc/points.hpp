#pragma once

// Low-discrepancy point generation, randomizations and point-set geometry.
//
// Every generator is a pure function of its arguments: identical inputs give
// bit-identical PointSets, and the provenance record carries enough to
// regenerate a set.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cfq {

using PointView = std::span<const double>;

struct Provenance {
  std::string generator;      // "halton", "sobol", "lattice", "grid", "mc", "file", ...
  std::string randomization;  // "none", "reverse-radix", "shift", "fold", joined with '+'
  std::optional<std::uint64_t> seed;
  std::uint64_t index_begin = 0;  // index of the first point in the generating sequence
  std::uint64_t index_end = 0;    // one past the last index

  void add_randomization(const std::string& step);
};

// Ordered points in [0,1]^d stored row-major.
class PointSet {
 public:
  PointSet() = default;
  /// Throws std::invalid_argument if dim == 0, coords.size() is not a multiple
  /// of dim, or any coordinate lies outside [0,1].
  PointSet(std::size_t dim, std::vector<double> coords, Provenance provenance);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const noexcept { return size() == 0; }

  PointView operator[](std::size_t i) const noexcept {
    return PointView(coords_.data() + i * dim_, dim_);
  }
  const std::vector<double>& coords() const noexcept { return coords_; }
  const Provenance& provenance() const noexcept { return provenance_; }

  /// First `n` points (n <= size()).
  PointSet prefix(std::size_t n) const;

  /// Concatenation; provenance of *this is kept with the index range widened.
  PointSet concat(const PointSet& other) const;

  friend bool operator==(const PointSet& a, const PointSet& b) noexcept {
    return a.dim_ == b.dim_ && a.coords_ == b.coords_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
  Provenance provenance_;
};

// ---------------------------------------------------------------------------
// Generators

/// Radical inverse of n in `base`, optionally with a digit permutation applied
/// to every digit. Throws std::invalid_argument for base < 2 or a permutation
/// that is not a bijection on {0..base-1}.
double radical_inverse(std::uint64_t n, unsigned base, std::span<const unsigned> permutation = {});

/// The first `count` primes.
std::vector<unsigned> first_primes(std::size_t count);

/// Kocis-Whiten reverse-radix digit permutation for `base`: bit-reversed
/// integers 0..2^m-1 (m = ceil(log2 base)) filtered to those below `base`.
std::vector<unsigned> reverse_radix_permutation(unsigned base);

/// Halton points with indices 1..N. With `scramble`, each base's digits go
/// through the reverse-radix permutation; this is deterministic.
PointSet halton(std::size_t n, std::size_t dim, bool scramble);

// Sobol direction numbers in the Joe-Kuo text format. Dimension 1 is implicit
// (all m_i = 1), so a table with entries for dimensions 2..D covers D dims.
class DirectionTable {
 public:
  struct Entry {
    unsigned dim = 0;
    unsigned degree = 0;       // s
    std::uint32_t coeffs = 0;  // a
    std::vector<std::uint32_t> m;
  };

  static constexpr unsigned kBits = 32;

  DirectionTable() = default;
  explicit DirectionTable(std::vector<Entry> entries);

  /// Small table covering d <= 8.
  static const DirectionTable& builtin();
  /// Parse whitespace-separated lines "d s a m_1 .. m_s"; '#' starts a comment.
  /// A header line starting with a non-digit token is skipped.
  static DirectionTable parse(std::istream& in);
  static DirectionTable load(const std::string& path);

  std::size_t max_dim() const noexcept { return entries_.size() + 1; }

  /// Direction words V_1..V_32 (left-aligned) for 1-based dimension `dim`.
  std::vector<std::uint32_t> direction_words(std::size_t dim) const;

 private:
  std::vector<Entry> entries_;
};

/// Sobol points with indices 0..N-1 (the unshifted first point is the origin),
/// XOR-shifted per dimension by `shift` (one 32-bit word per dimension).
/// Throws if the table covers fewer than `dim` dimensions or N exceeds 2^32.
PointSet sobol(std::size_t n, std::size_t dim, const DirectionTable& table,
               std::span<const std::uint32_t> shift);

/// Sobol points; with `digital_shift` a random shift word per dimension is
/// drawn from `seed` (required in that case).
PointSet sobol(std::size_t n, std::size_t dim, const DirectionTable& table, bool digital_shift,
               std::optional<std::uint64_t> seed);

/// Rank-1 lattice: point n = frac(n * z_i / N), n = 0..N-1.
PointSet lattice(std::size_t n, std::span<const std::uint64_t> generator);

/// Fixed generating vector used by the bench layer for lattice rules (odd
/// components, first component 1). Supports dim <= 16.
std::vector<std::uint64_t> default_lattice_generator(std::size_t dim);

/// Uniform i.i.d. points from `seed`.
PointSet uniform_points(std::size_t n, std::size_t dim, std::uint64_t seed);

/// A single uniform point (shift vector) from `seed`.
std::vector<double> uniform_shift(std::size_t dim, std::uint64_t seed);

/// Midpoint grid {(2i-1)/(2m)}^d. Throws std::overflow_error if m^d overflows.
PointSet midpoint_grid(std::size_t m, std::size_t dim);

/// Largest m with m^dim <= count (at least 1).
std::size_t grid_side_for(std::size_t count, std::size_t dim);

// ---------------------------------------------------------------------------
// Randomizations

/// frac(v + shift) coordinate-wise.
PointSet random_shift(const PointSet& ps, PointView shift);

/// Baker's (tent) transformation t -> 1 - |2t - 1|.
double baker(double t) noexcept;
PointSet baker_fold(const PointSet& ps);

// ---------------------------------------------------------------------------
// Geometry

struct GeometryMetrics {
  double fill_distance = 0.0;
  double separation_radius = 0.0;  // +inf for a single point
  double mesh_ratio = 0.0;         // NaN when separation is undefined
  std::size_t fill_resolution = 0;
  bool has_separation = false;
};

/// Grid resolution default: 256 cells per axis for d <= 2, 64 for d = 3,
/// 32 for d = 4, 16 beyond.
std::size_t default_fill_resolution(std::size_t dim) noexcept;

/// Separation radius exact; fill distance maximized over the (res+1)^d grid
/// of points j/res, which bounds the true supremum from below.
GeometryMetrics geometry(const PointSet& ps, std::size_t fill_resolution);

double separation_radius(const PointSet& ps);
double fill_distance(const PointSet& ps, std::size_t fill_resolution);

// ---------------------------------------------------------------------------
// CSV: header `dim,index,x1,...,xd`, 17 significant digits.

void write_csv(const PointSet& ps, std::ostream& out);
PointSet read_csv(std::istream& in);

}  // namespace cfq

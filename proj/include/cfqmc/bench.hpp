#pragma once

// Convergence campaigns: (family x dim x method x k) cells over a grid of
// power-of-two budgets, replicated with seed-derived randomization, reduced
// to RMSE tables with fitted log-log slopes.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cfqmc/estimators.hpp"
#include "cfqmc/genz.hpp"

namespace cfq {

enum class Sequence { HaltonRRShift, SobolDShift, Lattice };

std::string to_string(Sequence s);
Sequence parse_sequence(const std::string& s);

struct CampaignConfig {
  std::vector<GenzFamily> families{GenzFamily::Gaussian};
  std::vector<std::size_t> dims{1};
  std::vector<Method> methods{Method::QMC, Method::QMC_CF};
  Sequence sequence = Sequence::HaltonRRShift;
  std::vector<int> k_values{1};
  double support_radius = 1.0;
  std::vector<std::size_t> n_grid{16, 32, 64, 128, 256, 512, 1024, 2048, 4096};
  std::size_t replicates = 10;
  std::optional<double> assumed_alpha;  // unset: M = N/2
  std::uint64_t seed_base = 0;
  std::vector<double> difficulty;       // per family; empty = classic defaults
  std::string directions;               // Joe-Kuo file; empty = built-in table
  unsigned threads = 0;                 // 0 = hardware concurrency; never affects output

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  /// M/N fraction: optimal_split(assumed_alpha, 1) when set, else 0.5.
  double split_fraction() const;
  double difficulty_for(std::size_t family_index) const;
};

/// Flat `key = value` text; lists comma-separated; '#' comments. N_grid also
/// accepts `2^a..2^b`. Unknown keys throw std::invalid_argument naming the key.
CampaignConfig parse_config(std::istream& in);
CampaignConfig load_config(const std::string& path);
void write_config(const CampaignConfig& cfg, std::ostream& out);

/// One estimator run within a (cell, replicate).
struct ReplicateRecord {
  GenzFamily family;
  std::size_t dim;
  Method method;
  int k;                       // -1 for plain methods
  std::size_t n_nominal;       // grid value
  std::size_t n_total;         // evaluations spent
  std::size_t m_nodes;
  std::size_t discarded;
  std::size_t replicate;
  std::uint64_t randomization_seed;
  std::vector<double> shift;   // shift vector (uniform or digital-shift words / 2^32)
  std::uint64_t evals;         // integrand eval_count delta
  double estimate;
  double exact;
  double error;
  std::optional<std::string> failure;
};

struct TableRow {
  GenzFamily family;
  std::size_t dim;
  Method method;
  int k;
  std::size_t n_nominal;
  std::size_t n_total;
  std::size_t m_nodes;
  std::size_t replicates;      // successful replicates
  std::size_t failures;
  std::size_t discarded;
  double rmse;
  double stderr_rmse;
  double mean_error;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;       // RMS residual in log2 units
  std::size_t used = 0;
  std::size_t excluded = 0;    // points dropped for rmse == 0
};

struct SlopeRow {
  GenzFamily family;
  std::size_t dim;
  Method method;
  int k;
  SlopeFit fit;
};

struct ConvergenceTable {
  CampaignConfig config;
  std::vector<TableRow> rows;        // sorted by cell key then N
  std::vector<SlopeRow> slopes;      // one per cell; NaN slope if < 4 usable points
  std::vector<ReplicateRecord> records;

  const SlopeRow* slope_for(GenzFamily f, std::size_t dim, Method m, int k) const;
};

struct SingleRun {
  EstimateReport report;
  std::vector<double> shift;  // randomization actually applied (empty for MC)
};

/// One estimator run on a Genz instance with nominal budget N. The budget is
/// split as in a campaign (nodes snapped to a grid) and every method spends the
/// same realized number of evaluations. `seed` drives the shift / digital shift
/// and the MC draws; k is ignored for plain methods.
SingleRun integrate_genz(const GenzInstance& inst, Method method, std::size_t n_nominal, int k, double support_radius,
                         Sequence sequence, double split_fraction, std::uint64_t seed, const DirectionTable& table);

/// OLS on (log2 N, log2 rmse); points with rmse == 0 are excluded and counted.
/// Throws std::invalid_argument with fewer than two usable points.
SlopeFit fit_slope(const std::vector<std::pair<double, double>>& points);

ConvergenceTable run_campaign(const CampaignConfig& cfg);

/// Reduce replicate records into rows (RMSE, standard error, mean error).
std::vector<TableRow> aggregate(const std::vector<ReplicateRecord>& records);

void write_table_csv(const ConvergenceTable& table, std::ostream& out);
/// Parses the main row block and the slope block of write_table_csv output.
ConvergenceTable read_table_csv(std::istream& in);
void emit_csv(const ConvergenceTable& table, const std::string& path);

void write_table_svg(const ConvergenceTable& table, std::ostream& out);
void emit_svg(const ConvergenceTable& table, const std::string& path);

}  // namespace cfq

#include "cfqmc/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "cfqmc/csv.hpp"
#include "cfqmc/rng.hpp"

namespace cfq {

std::string to_string(Sequence s) {
  switch (s) {
    case Sequence::HaltonRRShift: return "halton-rr-shift";
    case Sequence::SobolDShift: return "sobol-dshift";
    case Sequence::Lattice: return "lattice";
  }
  return "?";
}

Sequence parse_sequence(const std::string& s) {
  for (Sequence q : {Sequence::HaltonRRShift, Sequence::SobolDShift, Sequence::Lattice})
    if (to_string(q) == s) return q;
  throw std::invalid_argument("unknown sequence '" + s + "' (expected halton-rr-shift, sobol-dshift or lattice)");
}

// ---------------------------------------------------------------------------
// Config

void CampaignConfig::validate() const {
  if (families.empty()) throw std::invalid_argument("config: families is empty");
  if (dims.empty()) throw std::invalid_argument("config: dims is empty");
  for (auto d : dims)
    if (d == 0) throw std::invalid_argument("config: dims must be >= 1");
  if (methods.empty()) throw std::invalid_argument("config: methods is empty");
  const bool any_cf = std::any_of(methods.begin(), methods.end(), uses_cf);
  if (any_cf && k_values.empty()) throw std::invalid_argument("config: k_values is empty");
  for (int k : k_values)
    if (k < 0 || k > 2) throw std::invalid_argument("config: k_values must be a subset of {0,1,2}");
  if (!(support_radius > 0.0 && support_radius <= 1.0))
    throw std::invalid_argument("config: support_radius must lie in (0,1]");
  if (n_grid.empty()) throw std::invalid_argument("config: N_grid is empty");
  for (auto n : n_grid)
    if (n < 4 || (n & (n - 1)) != 0)
      throw std::invalid_argument("config: N_grid entry " + std::to_string(n) + " is not a power of two >= 4");
  if (replicates < 2) throw std::invalid_argument("config: replicates must be >= 2");
  if (assumed_alpha) (void)optimal_split(*assumed_alpha, 1.0);
  if (!difficulty.empty() && difficulty.size() != families.size())
    throw std::invalid_argument("config: difficulty needs one value per family");
  for (double v : difficulty)
    if (!(v > 0.0)) throw std::invalid_argument("config: difficulty values must be positive");
}

double CampaignConfig::split_fraction() const {
  return assumed_alpha ? optimal_split(*assumed_alpha, 1.0) : 0.5;
}

double CampaignConfig::difficulty_for(std::size_t family_index) const {
  return difficulty.empty() ? default_difficulty(families.at(family_index)) : difficulty.at(family_index);
}

namespace {

std::vector<std::string> list_of(const std::string& value) {
  auto items = csv::split(value);
  items.erase(std::remove(items.begin(), items.end(), std::string{}), items.end());
  return items;
}

std::vector<std::size_t> parse_n_grid(const std::string& value) {
  const std::string v(csv::trim(value));
  if (auto dots = v.find(".."); dots != std::string::npos) {
    auto exponent = [&](std::string part) -> long long {
      part = std::string(csv::trim(part));
      if (part.rfind("2^", 0) != 0) throw std::invalid_argument("config: N_grid range must look like 2^a..2^b");
      return csv::parse_int(part.substr(2), "N_grid exponent");
    };
    const long long lo = exponent(v.substr(0, dots)), hi = exponent(v.substr(dots + 2));
    if (lo < 0 || hi > 40 || lo > hi) throw std::invalid_argument("config: N_grid range out of bounds");
    std::vector<std::size_t> out;
    for (long long e = lo; e <= hi; ++e) out.push_back(std::size_t{1} << e);
    return out;
  }
  std::vector<std::size_t> out;
  for (const auto& s : list_of(v)) out.push_back(static_cast<std::size_t>(csv::parse_int(s, "N_grid")));
  return out;
}

}  // namespace

CampaignConfig parse_config(std::istream& in) {
  CampaignConfig cfg;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (csv::trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key(csv::trim(std::string_view(line).substr(0, eq)));
    const std::string value(csv::trim(std::string_view(line).substr(eq + 1)));
    if (!seen.insert(key).second) throw std::invalid_argument("config: duplicate key '" + key + "'");
    if (key == "families") {
      cfg.families.clear();
      for (const auto& s : list_of(value)) cfg.families.push_back(parse_genz_family(s));
    } else if (key == "dims") {
      cfg.dims.clear();
      for (const auto& s : list_of(value)) cfg.dims.push_back(static_cast<std::size_t>(csv::parse_int(s, "dims")));
    } else if (key == "methods") {
      cfg.methods.clear();
      for (const auto& s : list_of(value)) cfg.methods.push_back(parse_method(s));
    } else if (key == "sequence") {
      cfg.sequence = parse_sequence(value);
    } else if (key == "k_values") {
      cfg.k_values.clear();
      for (const auto& s : list_of(value)) cfg.k_values.push_back(static_cast<int>(csv::parse_int(s, "k_values")));
    } else if (key == "support_radius") {
      cfg.support_radius = csv::parse_double(value, "support_radius");
    } else if (key == "N_grid") {
      cfg.n_grid = parse_n_grid(value);
    } else if (key == "replicates") {
      cfg.replicates = static_cast<std::size_t>(csv::parse_int(value, "replicates"));
    } else if (key == "assumed_alpha") {
      if (value.empty() || value == "none")
        cfg.assumed_alpha.reset();
      else
        cfg.assumed_alpha = csv::parse_double(value, "assumed_alpha");
    } else if (key == "seed_base") {
      cfg.seed_base = static_cast<std::uint64_t>(csv::parse_int(value, "seed_base"));
    } else if (key == "difficulty") {
      cfg.difficulty.clear();
      for (const auto& s : list_of(value)) cfg.difficulty.push_back(csv::parse_double(s, "difficulty"));
    } else if (key == "directions") {
      cfg.directions = value;
    } else if (key == "threads") {
      cfg.threads = static_cast<unsigned>(csv::parse_int(value, "threads"));
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

CampaignConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  return parse_config(in);
}

void write_config(const CampaignConfig& cfg, std::ostream& out) {
  auto join = [](const auto& items, auto fmt) {
    std::string s;
    for (std::size_t i = 0; i < items.size(); ++i) s += (i ? "," : "") + fmt(items[i]);
    return s;
  };
  out << "families = " << join(cfg.families, [](GenzFamily f) { return to_string(f); }) << '\n'
      << "dims = " << join(cfg.dims, [](std::size_t d) { return std::to_string(d); }) << '\n'
      << "methods = " << join(cfg.methods, [](Method m) { return to_string(m); }) << '\n'
      << "sequence = " << to_string(cfg.sequence) << '\n'
      << "k_values = " << join(cfg.k_values, [](int k) { return std::to_string(k); }) << '\n'
      << "support_radius = " << csv::format_double(cfg.support_radius) << '\n'
      << "N_grid = " << join(cfg.n_grid, [](std::size_t n) { return std::to_string(n); }) << '\n'
      << "replicates = " << cfg.replicates << '\n'
      << "assumed_alpha = " << (cfg.assumed_alpha ? csv::format_double(*cfg.assumed_alpha) : "none") << '\n'
      << "seed_base = " << cfg.seed_base << '\n';
  if (!cfg.difficulty.empty())
    out << "difficulty = " << join(cfg.difficulty, [](double v) { return csv::format_double(v); }) << '\n';
  if (!cfg.directions.empty()) out << "directions = " << cfg.directions << '\n';
}

// ---------------------------------------------------------------------------

SlopeFit fit_slope(const std::vector<std::pair<double, double>>& points) {
  SlopeFit fit;
  std::vector<double> xs, ys;
  for (const auto& [n, rmse] : points) {
    if (!(n > 0.0)) throw std::invalid_argument("fit_slope: N must be positive");
    if (rmse == 0.0) {
      ++fit.excluded;
      continue;
    }
    if (!(rmse > 0.0)) throw std::invalid_argument("fit_slope: rmse must be non-negative and finite");
    xs.push_back(std::log2(n));
    ys.push_back(std::log2(rmse));
  }
  fit.used = xs.size();
  if (xs.size() < 2) throw std::invalid_argument("fit_slope: need at least two points with rmse > 0");
  const double k = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_slope: all N values coincide");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / k);
  return fit;
}

// ---------------------------------------------------------------------------

namespace {

struct WorkItem {
  std::size_t family_index;
  std::size_t dim;
  std::size_t replicate;
  std::size_t n;
};

PointSet sequence_points(Sequence seq, std::size_t n, std::size_t dim, const std::vector<double>& shift,
                         std::uint64_t seed, const DirectionTable& table) {
  switch (seq) {
    case Sequence::HaltonRRShift: return random_shift(halton(n, dim, true), shift);
    case Sequence::SobolDShift: return sobol(n, dim, table, true, seed);
    case Sequence::Lattice: return random_shift(lattice(n, default_lattice_generator(dim)), shift);
  }
  throw std::logic_error("unhandled sequence");
}

}  // namespace

SingleRun integrate_genz(const GenzInstance& inst, Method method, std::size_t n_nominal, int k, double support_radius,
                         Sequence sequence, double split_fraction, std::uint64_t seed, const DirectionTable& table) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t d = inst.dim();
  const Integrand f(d, [&inst](PointView x) { return inst(x); });
  const BudgetSplit split = split_budget(n_nominal, split_fraction, true, d);
  const std::size_t budget = split.m_nodes + split.n_eval;
  const std::uint64_t rseed = derive_seed(seed, {hash_label("shift")});
  const std::uint64_t mcseed = derive_seed(seed, {hash_label("mc")});

  // Uniform shift for Halton / lattice; for Sobol the recorded shift is the
  // digital-shift words scaled to [0,1), drawn exactly as sobol() draws them.
  std::vector<double> shift;
  if (sequence == Sequence::SobolDShift) {
    Rng rng(rseed);
    for (std::size_t j = 0; j < d; ++j) shift.push_back(static_cast<double>(rng.bits() >> 32) * 0x1.0p-32);
  } else {
    shift = uniform_shift(d, rseed);
  }

  SingleRun run;
  run.report.method = method;
  run.report.seed = seed;
  run.shift = shift;
  switch (method) {
    case Method::MC:
      run.shift.clear();
      run.report.estimate = qmc_estimate(f, uniform_points(budget, d, mcseed));
      break;
    case Method::QMC:
      run.report.estimate = qmc_estimate(f, sequence_points(sequence, budget, d, shift, rseed, table));
      break;
    case Method::QMC_CF:
    case Method::MC_CF:
    case Method::QMC_CF_Folded: {
      const KernelSpec spec(k, d, support_radius);
      const PointSet nodes = midpoint_grid(split.grid_side, d);
      const double jitter = default_jitter(nodes.size());
      run.report.m_nodes = nodes.size();
      run.report.discarded = split.discarded;
      if (method == Method::QMC_CF) {
        run.report.estimate =
            cf_estimate(f, nodes, sequence_points(sequence, split.n_eval, d, shift, rseed, table), spec, jitter).estimate;
      } else if (method == Method::MC_CF) {
        run.shift.clear();
        run.report.estimate = cf_estimate(f, nodes, uniform_points(split.n_eval, d, mcseed), spec, jitter).estimate;
      } else {
        run.shift = uniform_shift(d, rseed);
        run.report.estimate =
            cf_estimate_folded(f, nodes, lattice(split.n_eval, default_lattice_generator(d)), run.shift, spec, jitter);
      }
      break;
    }
  }
  run.report.n_total = f.eval_count();
  run.report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

namespace {

std::vector<ReplicateRecord> run_item(const CampaignConfig& cfg, const WorkItem& item, const DirectionTable& table) {
  const GenzFamily family = cfg.families[item.family_index];
  const std::size_t d = item.dim;
  const std::uint64_t fam = hash_label(to_string(family));
  const GenzInstance inst = random_genz(
      family, d, derive_seed(cfg.seed_base, {hash_label("instance"), fam, d, item.replicate}),
      cfg.difficulty_for(item.family_index));
  // Shared by every method and k in this (cell, replicate, N): paired randomness.
  const std::uint64_t seed = derive_seed(cfg.seed_base, {hash_label("cell"), fam, d, item.replicate, item.n});

  std::vector<ReplicateRecord> out;
  for (Method method : cfg.methods) {
    std::vector<int> ks = uses_cf(method) ? cfg.k_values : std::vector<int>{-1};
    for (int k : ks) {
      ReplicateRecord rec{family, d, method, k, item.n, 0, 0, 0, item.replicate, seed, {}, 0, 0.0, inst.exact(), 0.0,
                          std::nullopt};
      try {
        const SingleRun run = integrate_genz(inst, method, item.n, k, cfg.support_radius, cfg.sequence,
                                             cfg.split_fraction(), seed, table);
        rec.shift = run.shift;
        rec.evals = run.report.n_total;
        rec.n_total = run.report.n_total;
        rec.m_nodes = run.report.m_nodes;
        rec.discarded = run.report.discarded;
        rec.estimate = run.report.estimate;
        rec.error = rec.estimate - rec.exact;
        if (!std::isfinite(rec.error)) rec.failure = "non-finite estimate";
      } catch (const std::exception& e) {
        rec.failure = e.what();
      }
      out.push_back(std::move(rec));
    }
  }
  return out;
}

using CellKey = std::tuple<std::string, std::size_t, std::string, int>;

CellKey cell_key(GenzFamily f, std::size_t d, Method m, int k) { return {to_string(f), d, to_string(m), k}; }

std::string k_label(int k) { return k < 0 ? "NA" : std::to_string(k); }

}  // namespace

std::vector<TableRow> aggregate(const std::vector<ReplicateRecord>& records) {
  std::map<std::tuple<CellKey, std::size_t>, std::vector<const ReplicateRecord*>> groups;
  for (const auto& r : records) groups[{cell_key(r.family, r.dim, r.method, r.k), r.n_nominal}].push_back(&r);

  std::vector<TableRow> rows;
  for (const auto& [key, recs] : groups) {
    const ReplicateRecord& first = *recs.front();
    TableRow row{first.family, first.dim, first.method, first.k, first.n_nominal, first.n_total, first.m_nodes,
                 0, 0, first.discarded, std::numeric_limits<double>::quiet_NaN(),
                 std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    std::vector<double> sq;
    double sum = 0.0;
    for (const auto* r : recs) {
      if (r->failure) {
        ++row.failures;
        continue;
      }
      sq.push_back(r->error * r->error);
      sum += r->error;
      row.n_total = r->n_total;
      row.m_nodes = r->m_nodes;
    }
    row.replicates = sq.size();
    if (!sq.empty()) {
      const double n = static_cast<double>(sq.size());
      double msq = 0.0;
      for (double s : sq) msq += s;
      msq /= n;
      row.rmse = std::sqrt(msq);
      row.mean_error = sum / n;
      // Delta method: se(rmse) = se(mean squared error) / (2 rmse).
      double var = 0.0;
      for (double s : sq) var += (s - msq) * (s - msq);
      const double se_msq = sq.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
      row.stderr_rmse = row.rmse > 0.0 ? se_msq / (2.0 * row.rmse) : 0.0;
    }
    rows.push_back(row);
  }
  return rows;
}

const SlopeRow* ConvergenceTable::slope_for(GenzFamily f, std::size_t dim, Method m, int k) const {
  for (const auto& s : slopes)
    if (s.family == f && s.dim == dim && s.method == m && (s.k == k || !uses_cf(m))) return &s;
  return nullptr;
}

ConvergenceTable run_campaign(const CampaignConfig& cfg) {
  cfg.validate();
  const DirectionTable table = cfg.directions.empty() ? DirectionTable::builtin() : DirectionTable::load(cfg.directions);

  std::vector<WorkItem> items;
  for (std::size_t fi = 0; fi < cfg.families.size(); ++fi)
    for (auto d : cfg.dims)
      for (std::size_t r = 0; r < cfg.replicates; ++r)
        for (auto n : cfg.n_grid) items.push_back({fi, d, r, n});

  std::vector<std::vector<ReplicateRecord>> results(items.size());
  std::vector<std::string> errors(items.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < items.size();) {
      try {
        results[i] = run_item(cfg, items[i], table);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, items.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < items.size(); ++i)
    if (!errors[i].empty()) throw std::runtime_error("campaign setup failed: " + errors[i]);

  ConvergenceTable out;
  out.config = cfg;
  for (auto& r : results)
    for (auto& rec : r) out.records.push_back(std::move(rec));
  out.rows = aggregate(out.records);

  std::map<CellKey, std::vector<std::pair<double, double>>> cells;
  std::map<CellKey, const TableRow*> cell_rows;
  for (const auto& row : out.rows) {
    const auto key = cell_key(row.family, row.dim, row.method, row.k);
    cell_rows.emplace(key, &row);
    if (row.replicates > 0) cells[key].emplace_back(static_cast<double>(row.n_total), row.rmse);
  }
  for (const auto& [key, first] : cell_rows) {
    SlopeRow s{first->family, first->dim, first->method, first->k, {}};
    const auto& pts = cells[key];
    std::size_t positive = 0;
    for (const auto& p : pts) positive += p.second > 0.0;
    if (positive >= 4) {
      s.fit = fit_slope(pts);
    } else {
      s.fit.slope = s.fit.intercept = s.fit.residual = std::numeric_limits<double>::quiet_NaN();
      s.fit.used = positive;
      s.fit.excluded = pts.size() - positive;
    }
    out.slopes.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

void write_table_csv(const ConvergenceTable& table, std::ostream& out) {
  const auto& cfg = table.config;
  out << "family,dim,method,k,support_radius,sequence,N_total,M_nodes,replicates,rmse,stderr,mean_error,seed_base\n";
  for (const auto& r : table.rows) {
    out << to_string(r.family) << ',' << r.dim << ',' << to_string(r.method) << ',' << k_label(r.k) << ','
        << csv::format_double(cfg.support_radius) << ',' << to_string(cfg.sequence) << ',' << r.n_total << ','
        << r.m_nodes << ',' << r.replicates << ',' << csv::format_double(r.rmse) << ','
        << csv::format_double(r.stderr_rmse) << ',' << csv::format_double(r.mean_error) << ',' << cfg.seed_base
        << '\n';
  }
  if (table.rows.empty()) return;
  out << "#slope\nfamily,dim,method,k,slope,intercept,residual\n";
  for (const auto& s : table.slopes)
    out << to_string(s.family) << ',' << s.dim << ',' << to_string(s.method) << ',' << k_label(s.k) << ','
        << csv::format_double(s.fit.slope) << ',' << csv::format_double(s.fit.intercept) << ','
        << csv::format_double(s.fit.residual) << '\n';
  out << "#budget\nfamily,dim,method,k,N_nominal,N_total,split_fraction,assumed_alpha,discarded,failures\n";
  for (const auto& r : table.rows)
    out << to_string(r.family) << ',' << r.dim << ',' << to_string(r.method) << ',' << k_label(r.k) << ','
        << r.n_nominal << ',' << r.n_total << ',' << csv::format_double(cfg.split_fraction()) << ','
        << (cfg.assumed_alpha ? csv::format_double(*cfg.assumed_alpha) : "none") << ',' << r.discarded << ','
        << r.failures << '\n';
}

ConvergenceTable read_table_csv(std::istream& in) {
  ConvergenceTable t;
  std::string line;
  enum { Rows, Slopes, Other } section = Rows;
  std::size_t lineno = 0;
  bool seq_set = false;
  auto parse_k = [](const std::string& s) { return s == "NA" ? -1 : static_cast<int>(csv::parse_int(s, "k")); };
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    if (line == "#slope") {
      section = Slopes;
      continue;
    }
    if (line[0] == '#') {
      section = Other;
      continue;
    }
    auto f = csv::split(line);
    if (f[0] == "family") continue;
    try {
      if (section == Rows) {
        if (f.size() != 13) throw std::invalid_argument("expected 13 fields");
        TableRow r{parse_genz_family(f[0]), static_cast<std::size_t>(csv::parse_int(f[1])), parse_method(f[2]),
                   parse_k(f[3]), static_cast<std::size_t>(csv::parse_int(f[6])),
                   static_cast<std::size_t>(csv::parse_int(f[6])), static_cast<std::size_t>(csv::parse_int(f[7])),
                   static_cast<std::size_t>(csv::parse_int(f[8])), 0, 0, csv::parse_double(f[9]),
                   csv::parse_double(f[10]), csv::parse_double(f[11])};
        t.config.support_radius = csv::parse_double(f[4]);
        if (!seq_set) t.config.sequence = parse_sequence(f[5]);
        seq_set = true;
        t.config.seed_base = static_cast<std::uint64_t>(csv::parse_int(f[12]));
        t.rows.push_back(r);
      } else if (section == Slopes) {
        if (f.size() != 7) throw std::invalid_argument("expected 7 fields");
        SlopeRow s{parse_genz_family(f[0]), static_cast<std::size_t>(csv::parse_int(f[1])), parse_method(f[2]),
                   parse_k(f[3]), {}};
        s.fit.slope = csv::parse_double(f[4]);
        s.fit.intercept = csv::parse_double(f[5]);
        s.fit.residual = csv::parse_double(f[6]);
        t.slopes.push_back(s);
      }
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("table CSV line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return t;
}

void emit_csv(const ConvergenceTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_table_csv(table, out);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// SVG

namespace {

std::string fmt2(double v) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(2);
  s << v;
  return s.str();
}

std::string legend_for(Method m, int k) { return uses_cf(m) ? to_string(m) + " k=" + std::to_string(k) : to_string(m); }

}  // namespace

void write_table_svg(const ConvergenceTable& table, std::ostream& out) {
  // One panel per (family, dim); one curve per (method, k).
  std::map<std::pair<std::string, std::size_t>, std::map<std::pair<std::string, int>, std::vector<const TableRow*>>> panels;
  for (const auto& r : table.rows)
    if (r.replicates > 0 && r.rmse > 0.0)
      panels[{to_string(r.family), r.dim}][{to_string(r.method), r.k}].push_back(&r);

  constexpr double kW = 360, kH = 280, kL = 60, kR = 130, kT = 30, kB = 45;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  const std::size_t cols = std::max<std::size_t>(1, std::min<std::size_t>(3, panels.size()));
  const std::size_t nrows = panels.empty() ? 1 : (panels.size() + cols - 1) / cols;
  const double pw = kW + kR;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << pw * static_cast<double>(cols) << "\" height=\""
      << kH * static_cast<double>(nrows) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  std::size_t idx = 0;
  for (const auto& [pkey, curves] : panels) {
    const double ox = pw * static_cast<double>(idx % cols), oy = kH * static_cast<double>(idx / cols);
    ++idx;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& [ckey, rows] : curves)
      for (const auto* r : rows) {
        const double x = std::log2(static_cast<double>(r->n_total));
        const double lo = std::log2(std::max(r->rmse - r->stderr_rmse, r->rmse * 0.1));
        const double hi = std::log2(r->rmse + r->stderr_rmse);
        xmin = std::min(xmin, x), xmax = std::max(xmax, x);
        ymin = std::min(ymin, lo), ymax = std::max(ymax, hi);
      }
    if (xmax - xmin < 1e-9) xmin -= 0.5, xmax += 0.5;
    ymin = std::floor(ymin), ymax = std::ceil(ymax);
    if (ymax - ymin < 1.0) ymax = ymin + 1.0;
    const double pl = ox + kL, pr = ox + kW - 10, pt = oy + kT, pb = oy + kH - kB;
    auto sx = [&](double x) { return pl + (x - xmin) / (xmax - xmin) * (pr - pl); };
    auto sy = [&](double y) { return pb - (y - ymin) / (ymax - ymin) * (pb - pt); };

    out << "<g>\n<text x=\"" << fmt2((pl + pr) / 2) << "\" y=\"" << fmt2(oy + 18) << "\" text-anchor=\"middle\">"
        << pkey.first << ", d=" << pkey.second << "</text>\n";
    out << "<rect x=\"" << fmt2(pl) << "\" y=\"" << fmt2(pt) << "\" width=\"" << fmt2(pr - pl) << "\" height=\""
        << fmt2(pb - pt) << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double t = std::ceil(xmin); t <= xmax + 1e-9; t += 1.0)
      out << "<text x=\"" << fmt2(sx(t)) << "\" y=\"" << fmt2(pb + 14) << "\" text-anchor=\"middle\">2^"
          << static_cast<int>(t) << "</text>\n";
    const double ystep = std::max(1.0, std::ceil((ymax - ymin) / 8.0));
    for (double t = ymin; t <= ymax + 1e-9; t += ystep)
      out << "<text x=\"" << fmt2(pl - 4) << "\" y=\"" << fmt2(sy(t) + 4) << "\" text-anchor=\"end\">2^"
          << static_cast<int>(t) << "</text>\n";
    out << "<text x=\"" << fmt2((pl + pr) / 2) << "\" y=\"" << fmt2(pb + 32) << "\" text-anchor=\"middle\">N</text>\n";
    out << "<text x=\"" << fmt2(ox + 14) << "\" y=\"" << fmt2((pt + pb) / 2) << "\" transform=\"rotate(-90 "
        << fmt2(ox + 14) << ' ' << fmt2((pt + pb) / 2) << ")\" text-anchor=\"middle\">RMSE</text>\n";

    std::size_t c = 0;
    for (const auto& [ckey, rows] : curves) {
      const Method m = parse_method(ckey.first);
      const char* color = kColors[c % std::size(kColors)];
      const std::string dash = uses_cf(m) ? " stroke-dasharray=\"6,4\"" : "";
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"" << dash << " points=\"";
      for (const auto* r : rows)
        out << fmt2(sx(std::log2(static_cast<double>(r->n_total)))) << ',' << fmt2(sy(std::log2(r->rmse))) << ' ';
      out << "\"/>\n";
      for (const auto* r : rows) {
        const double x = sx(std::log2(static_cast<double>(r->n_total)));
        const double lo = sy(std::log2(std::max(r->rmse - r->stderr_rmse, r->rmse * 0.1)));
        const double hi = sy(std::log2(r->rmse + r->stderr_rmse));
        out << "<line x1=\"" << fmt2(x) << "\" y1=\"" << fmt2(lo) << "\" x2=\"" << fmt2(x) << "\" y2=\"" << fmt2(hi)
            << "\" stroke=\"" << color << "\"/>\n";
      }
      const double ly = pt + 14.0 * static_cast<double>(c);
      out << "<line x1=\"" << fmt2(ox + kW) << "\" y1=\"" << fmt2(ly) << "\" x2=\"" << fmt2(ox + kW + 20) << "\" y2=\""
          << fmt2(ly) << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"" << dash << "/>\n";
      out << "<text x=\"" << fmt2(ox + kW + 24) << "\" y=\"" << fmt2(ly + 4) << "\">" << legend_for(m, ckey.second)
          << "</text>\n";
      ++c;
    }
    out << "</g>\n";
  }
  out << "</svg>\n";
}

void emit_svg(const ConvergenceTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_table_svg(table, out);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace cfq

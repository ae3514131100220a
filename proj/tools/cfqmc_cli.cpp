// cfqmc: point generation, worst-case error, single integrations, convergence
// campaigns and the GP marginalization study.
//
// Exit codes: 0 success, 1 usage error, 2 runtime or numerical error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cfqmc/bench.hpp"
#include "cfqmc/csv.hpp"
#include "cfqmc/estimators.hpp"
#include "cfqmc/genz.hpp"
#include "cfqmc/gp_app.hpp"
#include "cfqmc/points.hpp"
#include "cfqmc/rng.hpp"

namespace {

// Bad user input discovered after flag parsing; maps to exit code 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename T>
std::string opt_str(const std::optional<T>& v) {
  if (!v) return "none";
  std::ostringstream s;
  s << *v;
  return s.str();
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto& f : cfq::csv::split(s))
    if (!f.empty()) out.push_back(f);
  return out;
}

// --------------------------------------------------------------------------

struct PointsArgs {
  std::string seq = "halton";
  std::size_t n = 0;
  std::size_t dim = 1;
  bool scramble = false;
  std::optional<std::uint64_t> shift_seed;
  std::optional<std::uint64_t> seed;
  bool fold = false;
  bool metrics = false;
  std::size_t resolution = 0;
  std::string directions;
  std::string generator;
  std::string out;
};

cfq::PointSet build_points(const PointsArgs& a) {
  cfq::PointSet ps;
  if (a.seq == "halton") {
    ps = cfq::halton(a.n, a.dim, a.scramble);
  } else if (a.seq == "sobol") {
    const auto table = a.directions.empty() ? cfq::DirectionTable::builtin() : cfq::DirectionTable::load(a.directions);
    if (a.scramble && !a.seed) throw UsageError("--scramble with --seq sobol applies a digital shift and needs --seed");
    ps = cfq::sobol(a.n, a.dim, table, a.scramble, a.seed);
  } else if (a.seq == "lattice") {
    std::vector<std::uint64_t> z;
    if (a.generator.empty()) {
      z = cfq::default_lattice_generator(a.dim);
    } else {
      for (const auto& s : split_list(a.generator)) z.push_back(static_cast<std::uint64_t>(cfq::csv::parse_int(s, "generator")));
      if (z.size() != a.dim) throw UsageError("--generator needs --dim components");
    }
    ps = cfq::lattice(a.n, z);
  } else if (a.seq == "grid") {
    ps = cfq::midpoint_grid(a.n, a.dim);
  } else if (a.seq == "mc") {
    if (!a.seed) throw UsageError("--seq mc needs --seed");
    ps = cfq::uniform_points(a.n, a.dim, *a.seed);
  } else {
    throw UsageError("unknown --seq '" + a.seq + "' (halton, sobol, lattice, grid, mc)");
  }
  if (a.shift_seed) ps = cfq::random_shift(ps, cfq::uniform_shift(a.dim, *a.shift_seed));
  if (a.fold) ps = cfq::baker_fold(ps);
  return ps;
}

int cmd_points(const PointsArgs& a) {
  std::cout << "# points seq=" << a.seq << " n=" << a.n << " dim=" << a.dim << " scramble=" << a.scramble
            << " shift_seed=" << opt_str(a.shift_seed) << " seed=" << opt_str(a.seed) << " fold=" << a.fold << '\n';
  const auto ps = build_points(a);
  if (a.out.empty()) {
    cfq::write_csv(ps, std::cout);
  } else {
    std::ofstream out(a.out);
    if (!out) throw std::runtime_error("cannot open '" + a.out + "' for writing");
    cfq::write_csv(ps, out);
    std::cout << "wrote " << ps.size() << " points to " << a.out << '\n';
  }
  if (a.metrics) {
    const std::size_t res = a.resolution ? a.resolution : cfq::default_fill_resolution(a.dim);
    const auto g = cfq::geometry(ps, res);
    std::cout << "fill_distance=" << cfq::csv::format_double(g.fill_distance)
              << " separation_radius=" << cfq::csv::format_double(g.separation_radius)
              << " mesh_ratio=" << cfq::csv::format_double(g.mesh_ratio) << " fill_resolution=" << g.fill_resolution
              << '\n';
  }
  return 0;
}

// --------------------------------------------------------------------------

struct WceArgs {
  std::string in;
  PointsArgs gen;
  int k = 0;
  double support = 1.0;
};

int cmd_wce(WceArgs a) {
  cfq::PointSet ps;
  if (!a.in.empty()) {
    std::ifstream in(a.in);
    if (!in) throw UsageError("cannot open --in '" + a.in + "'");
    try {
      ps = cfq::read_csv(in);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  } else {
    if (a.gen.n == 0) throw UsageError("wce needs --in or --n");
    ps = build_points(a.gen);
  }
  std::cout << "# wce k=" << a.k << " support=" << cfq::csv::format_double(a.support) << " n=" << ps.size()
            << " dim=" << ps.dim() << " source=" << (a.in.empty() ? a.gen.seq : a.in) << '\n';
  const cfq::KernelSpec spec(a.k, ps.dim(), a.support);
  const auto w = cfq::worst_case_error_detail(spec, ps);
  if (w.warning) std::cerr << "warning: squared worst-case error " << w.squared_raw << " clamped to zero\n";
  std::cout << cfq::csv::format_double(w.value) << '\n';
  return 0;
}

// --------------------------------------------------------------------------

struct IntegrateArgs {
  std::string family;
  std::size_t dim = 1;
  std::string method = "QMC";
  std::size_t n = 0;
  int k = 1;
  std::optional<std::uint64_t> seed;
  double support = 1.0;
  std::optional<double> difficulty;
  std::string sequence = "halton-rr-shift";
  std::optional<double> assumed_alpha;
  std::string directions;
  std::string out;
};

int cmd_integrate(const IntegrateArgs& a) {
  if (!a.seed) throw UsageError("--seed is required");
  const auto family = cfq::parse_genz_family(a.family);
  const auto method = cfq::parse_method(a.method);
  const auto sequence = cfq::parse_sequence(a.sequence);
  const double difficulty = a.difficulty.value_or(cfq::default_difficulty(family));
  const double fraction = a.assumed_alpha ? cfq::optimal_split(*a.assumed_alpha, 1.0) : 0.5;
  std::cout << "# integrate family=" << a.family << " dim=" << a.dim << " method=" << a.method << " n=" << a.n
            << " k=" << a.k << " support=" << cfq::csv::format_double(a.support) << " sequence=" << a.sequence
            << " difficulty=" << cfq::csv::format_double(difficulty) << " split=" << cfq::csv::format_double(fraction)
            << " seed=" << *a.seed << '\n';
  const auto inst = cfq::random_genz(family, a.dim, cfq::derive_seed(*a.seed, {cfq::hash_label("instance")}), difficulty);
  std::cout << "# instance ";
  cfq::write_genz(inst, std::cout);
  const auto table = a.directions.empty() ? cfq::DirectionTable::builtin() : cfq::DirectionTable::load(a.directions);
  const auto run = cfq::integrate_genz(inst, method, a.n, a.k, a.support, sequence, fraction, *a.seed, table);
  const auto& r = run.report;
  std::ostringstream row;
  row << cfq::to_string(r.method) << ',' << a.family << ',' << a.dim << ',' << r.n_total << ',' << r.m_nodes << ','
      << r.discarded << ',' << r.seed << ',' << cfq::csv::format_double(r.estimate) << ','
      << cfq::csv::format_double(inst.exact()) << ',' << cfq::csv::format_double(r.estimate - inst.exact()) << '\n';
  const std::string header = "method,family,dim,N_total,M_nodes,discarded,seed,estimate,exact,error\n";
  std::cout << header << row.str();
  std::cerr << "wall_time=" << r.wall_time << "s\n";
  if (!a.out.empty()) {
    std::ofstream out(a.out);
    if (!out) throw std::runtime_error("cannot open '" + a.out + "' for writing");
    out << header << row.str();
  }
  return 0;
}

// --------------------------------------------------------------------------

int cmd_bench(const std::string& config_path, const std::string& out_dir) {
  cfq::CampaignConfig cfg;
  {
    std::ifstream in(config_path);
    if (!in) throw UsageError("cannot open --config '" + config_path + "'");
    try {
      cfg = cfq::parse_config(in);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  std::cout << "# resolved config\n";
  cfq::write_config(cfg, std::cout);
  const auto table = cfq::run_campaign(cfg);
  std::filesystem::create_directories(out_dir);
  const auto csv_path = (std::filesystem::path(out_dir) / "convergence.csv").string();
  const auto svg_path = (std::filesystem::path(out_dir) / "convergence.svg").string();
  cfq::emit_csv(table, csv_path);
  cfq::emit_svg(table, svg_path);
  std::cout << "# slopes\n";
  for (const auto& s : table.slopes)
    std::cout << cfq::to_string(s.family) << " d=" << s.dim << ' ' << cfq::to_string(s.method)
              << (s.k >= 0 ? " k=" + std::to_string(s.k) : std::string{}) << " slope=" << s.fit.slope << '\n';
  std::size_t failures = 0;
  for (const auto& r : table.rows) failures += r.failures;
  if (failures) std::cout << "# " << failures << " replicate failures (see #budget section)\n";
  std::cout << "wrote " << csv_path << " and " << svg_path << '\n';
  return 0;
}

// --------------------------------------------------------------------------

struct GpArgs {
  std::string data;
  bool synthetic = false;
  std::size_t n_train = 200;
  std::size_t n_test = 20;
  std::string methods = "QMC,QMC+CF,MC+CF";
  std::size_t budget = 256;
  std::size_t seeds = 10;
  std::optional<std::uint64_t> seed_base;
  std::size_t n_subset = 100;
  std::string out_dir = ".";
};

int cmd_gp(const GpArgs& a) {
  if (a.data.empty() == !a.synthetic) throw UsageError("gp needs exactly one of --data or --synthetic");
  if (!a.seed_base) throw UsageError("--seed-base is required");
  std::vector<cfq::Method> methods;
  for (const auto& m : split_list(a.methods)) methods.push_back(cfq::parse_method(m));
  if (methods.empty()) throw UsageError("--methods is empty");
  std::cout << "# gp source=" << (a.synthetic ? "synthetic" : a.data) << " n_train=" << a.n_train
            << " n_test=" << a.n_test << " n_subset=" << a.n_subset << " methods=" << a.methods
            << " budget=" << a.budget << " seeds=" << a.seeds << " seed_base=" << *a.seed_base << '\n';
  const auto problem = a.synthetic ? cfq::synthetic_problem(a.n_train, 4, a.n_test, 0.1, *a.seed_base)
                                   : cfq::load_problem(a.data, a.n_train, a.n_test, *a.seed_base);
  cfq::GPConfig cfg;
  cfg.n_subset = a.n_subset;
  cfg.subset_seed = cfq::derive_seed(*a.seed_base, {cfq::hash_label("subset")});
  const cfq::GpPredictor predictor(problem.train, cfg);
  std::vector<std::uint64_t> seeds;
  for (std::size_t s = 0; s < a.seeds; ++s) seeds.push_back(cfq::derive_seed(*a.seed_base, {cfq::hash_label("gp-seed"), s}));
  const auto study = cfq::run_gp_study(predictor, cfg, problem.test, methods, a.budget, seeds);
  std::filesystem::create_directories(a.out_dir);
  const auto est_path = (std::filesystem::path(a.out_dir) / "gp_estimates.csv").string();
  const auto sum_path = (std::filesystem::path(a.out_dir) / "gp_summary.csv").string();
  std::ofstream est(est_path), sum(sum_path);
  if (!est || !sum) throw std::runtime_error("cannot write reports to '" + a.out_dir + "'");
  cfq::write_gp_estimates(study, est);
  cfq::write_gp_summary(study, sum);
  cfq::write_gp_summary(study, std::cout);
  for (const auto& f : study.failures) std::cerr << "skipped: " << f << '\n';
  std::cout << "wrote " << est_path << " and " << sum_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Control-functional quasi-Monte Carlo toolkit"};
  app.require_subcommand(1);

  PointsArgs points;
  auto* sp = app.add_subcommand("points", "generate a (randomized) point set as CSV");
  sp->add_option("--seq", points.seq, "halton | sobol | lattice | grid | mc")->capture_default_str();
  sp->add_option("--n", points.n, "number of points (grid: points per axis)")->required();
  sp->add_option("--dim", points.dim, "dimension")->capture_default_str();
  sp->add_flag("--scramble", points.scramble, "halton: reverse-radix digits; sobol: digital shift (needs --seed)");
  sp->add_option("--shift-seed", points.shift_seed, "apply a uniform random shift drawn from this seed");
  sp->add_option("--seed", points.seed, "seed for mc points or the sobol digital shift");
  sp->add_flag("--fold", points.fold, "apply the baker's transformation after the shift");
  sp->add_flag("--metrics", points.metrics, "print fill distance, separation radius and mesh ratio");
  sp->add_option("--resolution", points.resolution, "fill-distance grid cells per axis");
  sp->add_option("--directions", points.directions, "Joe-Kuo direction-number file");
  sp->add_option("--generator", points.generator, "lattice generating vector, comma-separated");
  sp->add_option("--out", points.out, "output CSV (default stdout)");

  WceArgs wce;
  auto* sw = app.add_subcommand("wce", "closed-form worst-case error of a point set");
  sw->add_option("--in", wce.in, "point CSV file");
  sw->add_option("--seq", wce.gen.seq, "generator when --in is absent")->capture_default_str();
  sw->add_option("--n", wce.gen.n, "number of generated points");
  sw->add_option("--dim", wce.gen.dim, "dimension of generated points")->capture_default_str();
  sw->add_flag("--scramble", wce.gen.scramble, "scramble generated points");
  sw->add_option("--shift-seed", wce.gen.shift_seed, "shift generated points");
  sw->add_option("--seed", wce.gen.seed, "seed for mc / sobol digital shift");
  sw->add_option("--kernel-k", wce.k, "Wendland smoothness 0, 1 or 2")->capture_default_str();
  sw->add_option("--support", wce.support, "support radius in (0,1]")->capture_default_str();

  IntegrateArgs integ;
  auto* si = app.add_subcommand("integrate", "integrate one random Genz instance");
  si->add_option("--family", integ.family, "Genz family")->required();
  si->add_option("--dim", integ.dim, "dimension")->capture_default_str();
  si->add_option("--method", integ.method, "MC | QMC | QMC+CF | QMC+CF-folded | MC+CF")->capture_default_str();
  si->add_option("--n", integ.n, "evaluation budget (power of two)")->required();
  si->add_option("--k", integ.k, "Wendland smoothness for CF")->capture_default_str();
  si->add_option("--seed", integ.seed, "seed for the instance and randomization")->required();
  si->add_option("--support", integ.support, "support radius")->capture_default_str();
  si->add_option("--difficulty", integ.difficulty, "sum of Genz difficulty parameters");
  si->add_option("--sequence", integ.sequence, "halton-rr-shift | sobol-dshift | lattice")->capture_default_str();
  si->add_option("--assumed-alpha", integ.assumed_alpha, "smoothness for the optimal M/N split");
  si->add_option("--directions", integ.directions, "Joe-Kuo direction-number file");
  si->add_option("--out", integ.out, "CSV report path");

  std::string config_path, out_dir = ".";
  auto* sb = app.add_subcommand("bench", "run a convergence campaign");
  sb->add_option("--config", config_path, "campaign config file")->required();
  sb->add_option("--out-dir", out_dir, "directory for convergence.csv / .svg")->capture_default_str();

  GpArgs gp;
  auto* sg = app.add_subcommand("gp", "GP hyper-parameter marginalization study");
  sg->add_option("--data", gp.data, "CSV: covariates then response");
  sg->add_flag("--synthetic", gp.synthetic, "use the built-in synthetic dataset");
  sg->add_option("--n-train", gp.n_train, "training rows")->capture_default_str();
  sg->add_option("--n-test", gp.n_test, "test points")->capture_default_str();
  sg->add_option("--n-subset", gp.n_subset, "subset-of-regressors size")->capture_default_str();
  sg->add_option("--methods", gp.methods, "comma-separated methods")->capture_default_str();
  sg->add_option("--budget", gp.budget, "evaluation budget N")->capture_default_str();
  sg->add_option("--seeds", gp.seeds, "number of independent replicates")->capture_default_str();
  sg->add_option("--seed-base", gp.seed_base, "base seed")->required();
  sg->add_option("--out-dir", gp.out_dir, "directory for report CSVs")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*sp) return cmd_points(points);
    if (*sw) return cmd_wce(wce);
    if (*si) return cmd_integrate(integ);
    if (*sb) return cmd_bench(config_path, out_dir);
    if (*sg) return cmd_gp(gp);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

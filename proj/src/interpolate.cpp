#include "cfqmc/interpolate.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "cfqmc/csv.hpp"

namespace cfq {

double default_jitter(std::size_t node_count) noexcept { return 1e-10 * static_cast<double>(node_count); }

Interpolant::Interpolant(KernelSpec spec, PointSet nodes, Eigen::VectorXd beta, double jitter,
                         double residual_norm, double fit_tolerance, std::optional<std::string> warning)
    : spec_(spec),
      nodes_(std::move(nodes)),
      beta_(std::move(beta)),
      jitter_(jitter),
      exact_integral_(0.0),
      residual_norm_(residual_norm),
      fit_tolerance_(fit_tolerance),
      warning_(std::move(warning)) {
  if (nodes_.dim() != spec_.dim())
    throw std::invalid_argument("Interpolant: node dimension differs from kernel dimension");
  if (static_cast<std::size_t>(beta_.size()) != nodes_.size())
    throw std::invalid_argument("Interpolant: coefficient count differs from node count");
  for (std::size_t n = 0; n < nodes_.size(); ++n)
    exact_integral_ += beta_[static_cast<Eigen::Index>(n)] * kernel_integral(spec_, nodes_[n]);

  order_.resize(nodes_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(),
                   [&](std::size_t a, std::size_t b) { return nodes_[a][0] < nodes_[b][0]; });
  first_coord_.resize(order_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) first_coord_[i] = nodes_[order_[i]][0];
}

double Interpolant::evaluate(PointView x) const {
  if (x.size() != spec_.dim())
    throw std::invalid_argument("Interpolant::evaluate: point dimension differs from kernel dimension");
  const double rho = spec_.support_radius();
  std::size_t lo = 0, hi = order_.size();
  if (rho < 1.0) {
    lo = static_cast<std::size_t>(
        std::upper_bound(first_coord_.begin(), first_coord_.end(), x[0] - rho) - first_coord_.begin());
    hi = static_cast<std::size_t>(
        std::lower_bound(first_coord_.begin(), first_coord_.end(), x[0] + rho) - first_coord_.begin());
  }
  double acc = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    const std::size_t n = order_[i];
    acc += beta_[static_cast<Eigen::Index>(n)] * kernel_eval(spec_, x, nodes_[n]);
  }
  return acc;
}

double Interpolant::control_functional(PointView x) const { return evaluate(x) - exact_integral_; }

Interpolant fit(const KernelSpec& spec, const PointSet& nodes, std::span<const double> values,
                double jitter) {
  if (values.size() != nodes.size())
    throw std::invalid_argument("fit: " + std::to_string(values.size()) + " values for " +
                                std::to_string(nodes.size()) + " nodes");
  if (!(jitter >= 0.0)) throw std::invalid_argument("fit: jitter must be >= 0");
  const Eigen::MatrixXd g = gram(spec, nodes, jitter);
  const Eigen::Map<const Eigen::VectorXd> rhs(values.data(), static_cast<Eigen::Index>(values.size()));

  std::optional<std::string> warning;
  Eigen::VectorXd beta;
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() == Eigen::Success) {
    beta = llt.solve(rhs);
  } else {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
    std::ostringstream msg;
    msg << "Cholesky factorization failed (reciprocal condition estimate "
        << csv::format_double(ldlt.rcond()) << "); used pivoted least squares";
    warning = msg.str();
    beta = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(g).solve(rhs);
  }
  if (!beta.allFinite()) throw std::runtime_error("fit: solve produced non-finite coefficients");

  // The nugget alone leaves a node residual of jitter*beta, which is large when
  // G is badly conditioned. Refine against the pure kernel system, using the
  // jittered factor as the preconditioner.
  const auto pure = [&](const Eigen::VectorXd& b) -> Eigen::VectorXd { return g * b - jitter * b; };
  const double scale = rhs.size() ? rhs.cwiseAbs().maxCoeff() : 0.0;
  const double target = 1e-8 * (1.0 + scale);
  Eigen::VectorXd r = rhs - pure(beta);
  double residual = r.cwiseAbs().maxCoeff();
  if (!warning && jitter > 0.0) {
    for (int it = 0; it < 50 && residual > 0.5 * target; ++it) {
      const Eigen::VectorXd next = beta + llt.solve(r);
      const Eigen::VectorXd r_next = rhs - pure(next);
      const double res_next = r_next.cwiseAbs().maxCoeff();
      if (!(res_next < residual)) break;
      beta = next;
      r = r_next;
      residual = res_next;
    }
  }
  const double tolerance = 1e-8 * (1.0 + scale) + jitter * beta.cwiseAbs().maxCoeff();
  if (residual > tolerance && !warning)
    warning = "node residual " + csv::format_double(residual) + " exceeds fit tolerance " +
              csv::format_double(tolerance);
  return Interpolant(spec, nodes, std::move(beta), jitter, residual, tolerance, std::move(warning));
}

void write_interpolant(const Interpolant& interp, std::ostream& out) {
  const auto& s = interp.spec();
  out << "k," << s.k() << '\n'
      << "dim," << s.dim() << '\n'
      << "support_radius," << csv::format_double(s.support_radius()) << '\n'
      << "jitter," << csv::format_double(interp.jitter()) << '\n'
      << "exact_integral," << csv::format_double(interp.exact_integral()) << '\n'
      << "residual_norm," << csv::format_double(interp.residual_norm()) << '\n'
      << "nodes," << interp.nodes().size() << '\n';
  for (std::size_t j = 1; j <= s.dim(); ++j) out << 'x' << j << ',';
  out << "beta\n";
  for (std::size_t n = 0; n < interp.nodes().size(); ++n) {
    for (double c : interp.nodes()[n]) out << csv::format_double(c) << ',';
    out << csv::format_double(interp.beta()[static_cast<Eigen::Index>(n)]) << '\n';
  }
}

Interpolant read_interpolant(std::istream& in) {
  std::map<std::string, std::string> header;
  std::string line;
  const char* keys[] = {"k", "dim", "support_radius", "jitter", "exact_integral", "residual_norm", "nodes"};
  for (const char* key : keys) {
    if (!std::getline(in, line)) throw std::invalid_argument("interpolant record truncated before '" + std::string(key) + "'");
    auto f = csv::split(line);
    if (f.size() != 2 || f[0] != key)
      throw std::invalid_argument("interpolant record: expected '" + std::string(key) + ",<value>'");
    header[key] = f[1];
  }
  const KernelSpec spec(static_cast<int>(csv::parse_int(header["k"], "k")),
                        static_cast<std::size_t>(csv::parse_int(header["dim"], "dim")),
                        csv::parse_double(header["support_radius"], "support_radius"));
  const auto m = static_cast<std::size_t>(csv::parse_int(header["nodes"], "nodes"));
  std::getline(in, line);  // column header
  std::vector<double> coords;
  Eigen::VectorXd beta(static_cast<Eigen::Index>(m));
  for (std::size_t n = 0; n < m; ++n) {
    if (!std::getline(in, line)) throw std::invalid_argument("interpolant record: missing node rows");
    auto f = csv::split(line);
    if (f.size() != spec.dim() + 1) throw std::invalid_argument("interpolant record: malformed node row " + std::to_string(n + 1));
    for (std::size_t j = 0; j < spec.dim(); ++j) coords.push_back(csv::parse_double(f[j], "coordinate"));
    beta[static_cast<Eigen::Index>(n)] = csv::parse_double(f.back(), "beta");
  }
  Interpolant interp(spec, PointSet(spec.dim(), std::move(coords), Provenance{"file", "none", std::nullopt, 0, m}),
                     std::move(beta), csv::parse_double(header["jitter"], "jitter"),
                     csv::parse_double(header["residual_norm"], "residual_norm"));
  const double stored = csv::parse_double(header["exact_integral"], "exact_integral");
  if (std::abs(stored - interp.exact_integral()) > 1e-12 * (1.0 + std::abs(stored)))
    throw std::invalid_argument("interpolant record: stored exact_integral " + csv::format_double(stored) +
                                " disagrees with recomputed " + csv::format_double(interp.exact_integral()));
  return interp;
}

}  // namespace cfq

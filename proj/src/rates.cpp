#include "tikreg/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tikreg/error.hpp"
#include "tikreg/random.hpp"

namespace tikreg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate_table(const std::vector<double>& t, const std::vector<double>& phi) {
  if (t.size() != phi.size()) throw DomainError("tabulated index function: grid sizes differ");
  if (t.size() < 2) throw DomainError("tabulated index function needs at least two nodes");
  if (t[0] != 0.0 || phi[0] != 0.0) throw DomainError("tabulated index function must start at (0, 0)");
  double prev_slope = kInf;
  for (std::size_t j = 1; j < t.size(); ++j) {
    if (!std::isfinite(t[j]) || !std::isfinite(phi[j])) {
      throw DomainError("tabulated index function: non-finite node");
    }
    if (!(t[j] > t[j - 1]) || !(phi[j] > phi[j - 1])) {
      throw DomainError("tabulated index function must be strictly increasing (node " +
                        std::to_string(j) + ")");
    }
    const double slope = (phi[j] - phi[j - 1]) / (t[j] - t[j - 1]);
    if (slope > prev_slope * (1.0 + 1e-9)) {
      throw DomainError("tabulated index function is not concave at node " + std::to_string(j));
    }
    prev_slope = slope;
  }
}

}  // namespace

IndexFn IndexFn::power(double c, double mu) {
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("index function constant must be positive");
  if (!(mu > 0.0 && mu <= 1.0)) throw DomainError("index function exponent must lie in (0, 1]");
  return IndexFn(Power{c, mu});
}

IndexFn IndexFn::tabulated(std::vector<double> t, std::vector<double> phi) {
  validate_table(t, phi);
  return IndexFn(Tabulated{std::move(t), std::move(phi)});
}

IndexFn IndexFn::tabulate(const IndexFn& phi, const std::vector<double>& nodes) {
  std::vector<double> t;
  std::vector<double> v;
  t.reserve(nodes.size() + 1);
  v.reserve(nodes.size() + 1);
  if (nodes.empty() || nodes.front() != 0.0) {
    t.push_back(0.0);
    v.push_back(0.0);
  }
  for (double s : nodes) {
    t.push_back(s);
    v.push_back(phi(s));
  }
  return tabulated(std::move(t), std::move(v));
}

double IndexFn::operator()(double t) const {
  if (!(t >= 0.0)) throw DomainError("index function evaluated at negative argument");
  if (const auto* pw = std::get_if<Power>(&kind_)) return pw->c * std::pow(t, pw->mu);
  const auto& tab = std::get<Tabulated>(kind_);
  const auto it = std::upper_bound(tab.t.begin(), tab.t.end(), t);
  const std::size_t hi =
      std::min<std::size_t>(std::max<std::ptrdiff_t>(it - tab.t.begin(), 1), tab.t.size() - 1);
  const std::size_t lo = hi - 1;
  const double w = (t - tab.t[lo]) / (tab.t[hi] - tab.t[lo]);
  return tab.phi[lo] + w * (tab.phi[hi] - tab.phi[lo]);
}

IndexFn IndexFn::scaled(double factor) const {
  if (!(factor > 0.0)) throw DomainError("index function scale must be positive");
  if (const auto* pw = std::get_if<Power>(&kind_)) return power(pw->c * factor, pw->mu);
  Tabulated tab = std::get<Tabulated>(kind_);
  for (double& v : tab.phi) v *= factor;
  return IndexFn(std::move(tab));
}

ScalarFn psi_conjugate(const IndexFn& phi) {
  if (const auto* pw = std::get_if<IndexFn::Power>(&phi.kind())) {
    const double c = pw->c;
    if (pw->mu == 1.0) {
      return [c](double s) { return s <= c ? 0.0 : kInf; };
    }
    const double qs = 1.0 / pw->mu;
    const double q = conjugate_exponent(qs);
    const double k = std::pow(c, q) * std::pow(qs, 1.0 - q) / q;
    return [k, q](double s) { return s <= 0.0 ? 0.0 : k * std::pow(s, q); };
  }
  // Phi^{-1} interpolates (Phi_j, t_j); a linear function peaks on a vertex.
  // Past the last node Phi^{-1} grows with slope 1/last_slope.
  const auto tab = std::get<IndexFn::Tabulated>(phi.kind());
  const std::size_t last = tab.t.size() - 1;
  const double inv_slope = (tab.t[last] - tab.t[last - 1]) / (tab.phi[last] - tab.phi[last - 1]);
  return [tab, inv_slope](double s) {
    if (s > 1.0 / inv_slope) return kInf;
    double best = 0.0;
    for (std::size_t j = 0; j < tab.t.size(); ++j) best = std::max(best, s * tab.phi[j] - tab.t[j]);
    return best;
  };
}

double theoretical_bound(double alpha, double delta, const IndexFn& phi, double p, double c) {
  if (!(alpha > 0.0)) throw DomainError("theoretical_bound: alpha must be positive");
  if (!(delta >= 0.0)) throw DomainError("theoretical_bound: delta must be >= 0");
  if (!(c > 0.0)) throw DomainError("theoretical_bound: convexity constant must be positive");
  const double ps = conjugate_exponent(p);
  const double psi = psi_conjugate(phi)(std::pow(alpha, ps - 1.0));
  const double d = 1.0 / (p * std::pow(ps, 1.0 / ps) * std::pow(c, p / ps));
  return psi + d * std::pow(delta, p) / alpha;
}

double choice_exponent(double p, double q) {
  const double ps = conjugate_exponent(p);
  if (!(q > 1.0)) throw DomainError("index exponent q must exceed 1");
  return p / ((ps - 1.0) * q + 1.0);
}

double choose_alpha(double delta, double p, double q, double c0) {
  if (!(delta > 0.0)) throw DomainError("choose_alpha: delta must be positive");
  if (!(c0 > 0.0)) throw DomainError("choose_alpha: c0 must be positive");
  return c0 * std::pow(delta, choice_exponent(p, q));
}

double predicted_exponent(double p, double q) {
  const double ps = conjugate_exponent(p);
  if (!(q > 1.0)) throw DomainError("index exponent q must exceed 1");
  return ps * q / ((ps - 1.0) * q + 1.0);
}

double calibrate_c0(double delta_ref, const IndexFn& phi, double p, double q, double c) {
  if (!(delta_ref > 0.0)) throw DomainError("calibrate_c0: reference delta must be positive");
  auto f = [&](double log_alpha) { return theoretical_bound(std::exp(log_alpha), delta_ref, phi, p, c); };
  // The bound is unimodal in ln(alpha): a coarse scan brackets the minimum.
  const double lo = std::log(1e-20);
  const double hi = std::log(1e6);
  const int steps = 520;
  int best = 0;
  double best_val = kInf;
  for (int i = 0; i <= steps; ++i) {
    const double v = f(lo + (hi - lo) * i / steps);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  double a = lo + (hi - lo) * std::max(best - 1, 0) / steps;
  double b = lo + (hi - lo) * std::min(best + 1, steps) / steps;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - g * (b - a);
  double x2 = a + g * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    }
  }
  return std::exp(0.5 * (a + b)) / std::pow(delta_ref, choice_exponent(p, q));
}

LogLogFit fit_loglog(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw DomainError("fit_loglog needs at least 3 points");
  const double n = static_cast<double>(points.size());
  double mx = 0.0;
  double my = 0.0;
  for (const auto& [d, e] : points) {
    if (!(d > 0.0) || !(e > 0.0) || !std::isfinite(d) || !std::isfinite(e)) {
      throw DomainError("fit_loglog needs positive finite values");
    }
    mx += std::log(d);
    my += std::log(e);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& [d, e] : points) {
    const double dx = std::log(d) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(e) - my);
  }
  if (!(sxx > 0.0)) throw DomainError("fit_loglog: all abscissae coincide");
  LogLogFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (const auto& [d, e] : points) {
    const double r = std::log(e) - fit.intercept - fit.slope * std::log(d);
    ssr += r * r;
  }
  fit.stderr_slope = std::sqrt(ssr / (n - 2.0) / sxx);
  return fit;
}

std::vector<double> default_radius_grid(double scale, int count) {
  if (!(scale > 0.0) || count < 2) throw DomainError("radius grid needs scale > 0 and count >= 2");
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = scale * std::pow(10.0, -4.0 + 4.0 * i / (count - 1));
  return out;
}

ProbeReport var_ineq_probe(const ProblemInstance& inst, const IndexFn& phi, int nsamples,
                           std::vector<double> radius_grid, std::uint64_t seed) {
  if (nsamples < 1) throw DomainError("var_ineq_probe needs nsamples >= 1");
  ProbeReport report;
  const SpaceSpec dual = inst.op.range().dual();
  const double scale = norm(inst.omega_dag, dual);
  if (scale == 0.0) {
    report.degenerate = true;
    return report;
  }
  if (radius_grid.empty()) radius_grid = default_radius_grid(scale);
  for (double t : radius_grid) {
    if (!(t > 0.0)) throw DomainError("var_ineq_probe: radii must be positive");
  }
  const double ps = conjugate_exponent(inst.p);
  const Vec target = duality_map(inst.omega_dag, dual, ps);
  const std::size_t per_dir = radius_grid.size();
  const std::size_t ndir = (static_cast<std::size_t>(nsamples) + per_dir - 1) / per_dir;

  double sxx = 0.0;
  double sxy = 0.0;
  int used = 0;
  for (std::size_t d = 0; d < ndir; ++d) {
    Rng rng(derive_seed(seed, d));
    Vec dir = gaussian_vector(inst.omega_dag.size(), rng);
    dir /= norm(dir, dual);
    std::vector<std::pair<double, double>> logs;
    for (double t : radius_grid) {
      if (used == nsamples) break;
      ++used;
      const Vec omega = inst.omega_dag + t * dir;
      const double lhs = pairing(omega - inst.omega_dag, target);
      const double dstar = dual_bregman(inst.reg, inst.op, omega, inst.omega_dag, inst.x_dag);
      const double rhs = phi(dstar);
      if (lhs <= 0.0 && rhs == 0.0) continue;
      ++report.samples;
      const double ratio = rhs > 0.0 ? lhs / rhs : kInf;
      report.max_ratio = std::max(report.max_ratio, ratio);
      if (lhs > 0.0 && dstar > 0.0) logs.emplace_back(std::log(dstar), std::log(lhs));
    }
    // Direction fixed effects: the constants of each direction drop out.
    if (logs.size() < 2) continue;
    double mx = 0.0;
    double my = 0.0;
    for (const auto& [x, y] : logs) {
      mx += x;
      my += y;
    }
    mx /= logs.size();
    my /= logs.size();
    for (const auto& [x, y] : logs) {
      sxx += (x - mx) * (x - mx);
      sxy += (x - mx) * (y - my);
    }
    report.positive_samples += static_cast<int>(logs.size());
  }
  report.fitted_mu = sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
  return report;
}

}  // namespace tikreg

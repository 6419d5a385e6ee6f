#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <variant>
#include <vector>

#include "tikreg/problem.hpp"

namespace tikreg {

/// Strictly increasing, continuous, concave Phi with Phi(0) = 0.
class IndexFn {
 public:
  /// Phi(t) = c t^mu, c > 0, 0 < mu <= 1.
  struct Power {
    double c;
    double mu;
  };
  /// Piecewise-linear interpolant through (t_j, Phi_j), starting at (0, 0).
  /// Extended past the last node with the last slope.
  struct Tabulated {
    std::vector<double> t;
    std::vector<double> phi;
  };

  static IndexFn power(double c, double mu);
  static IndexFn tabulated(std::vector<double> t, std::vector<double> phi);
  /// Samples Phi at the given nodes (prepending 0 if absent) and tabulates it.
  static IndexFn tabulate(const IndexFn& phi, const std::vector<double>& nodes);

  const std::variant<Power, Tabulated>& kind() const { return kind_; }

  double operator()(double t) const;

  /// Same function scaled by factor > 0.
  IndexFn scaled(double factor) const;

 private:
  explicit IndexFn(std::variant<Power, Tabulated> kind) : kind_(std::move(kind)) {}

  std::variant<Power, Tabulated> kind_;
};

using ScalarFn = std::function<double(double)>;

/// Psi(s) = sup_{u >= 0} (s u - Phi^{-1}(u)), the conjugate of Phi^{-1}.
/// For Phi = c t^{1/q*}: Psi(s) = c^q q*^{1-q} / q * s^q. For mu = 1 the
/// conjugate is 0 up to s = c and +inf beyond.
ScalarFn psi_conjugate(const IndexFn& phi);

/// Psi(alpha^{p*-1}) + delta^p / (p p*^{1/p*} C^{p/p*} alpha).
double theoretical_bound(double alpha, double delta, const IndexFn& phi, double p, double c);

/// Exponent p / ((p* - 1) q + 1) of the a-priori choice alpha ~ delta^{...}.
double choice_exponent(double p, double q);

/// c0 delta^{p/((p*-1)q+1)}.
double choose_alpha(double delta, double p, double q, double c0);

/// p* q / ((p* - 1) q + 1).
double predicted_exponent(double p, double q);

/// c0 for which choose_alpha(delta_ref) minimizes theoretical_bound(., delta_ref).
double calibrate_c0(double delta_ref, const IndexFn& phi, double p, double q, double c);

struct LogLogFit {
  double slope = 0.0;
  double stderr_slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares of ln(error) on ln(delta). Needs >= 3 positive points.
LogLogFit fit_loglog(const std::vector<std::pair<double, double>>& points);

struct ProbeReport {
  double max_ratio = 0.0;
  double fitted_mu = 0.0;
  bool degenerate = false;
  int samples = 0;           // pairs where at least one side is nonzero
  int positive_samples = 0;  // LHS > 0 and D* > 0, used by the exponent fit
};

/// Logarithmic radii over [1e-4, 1] * scale.
std::vector<double> default_radius_grid(double scale, int count = 20);

/// Samples omega = omega_dag + t v over random unit directions v and radii t,
/// and reports the largest <omega - omega_dag, J_{p*}(omega_dag)> / Phi(D*)
/// together with the per-direction log-log exponent of LHS against D*.
/// A falsification tool: max_ratio <= 1 only says no violation was found.
ProbeReport var_ineq_probe(const ProblemInstance& instance, const IndexFn& phi, int nsamples,
                           std::vector<double> radius_grid, std::uint64_t seed);

}  // namespace tikreg

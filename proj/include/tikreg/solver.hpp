#pragma once

#include <optional>
#include <vector>

#include "tikreg/banach.hpp"
#include "tikreg/linop.hpp"
#include "tikreg/problem.hpp"
#include "tikreg/regfun.hpp"

namespace tikreg {

struct SolveOptions {
  double kkt_tol = 1e-8;
  int max_iters = 50000;
  /// Factor applied to the step size when the sufficient-decrease test fails.
  double step_backtrack = 0.5;
  /// Reset momentum every this many iterations (in addition to adaptive restarts).
  std::optional<int> restart_period;
  /// Keep the objective value of every accepted iterate.
  bool record_trace = false;
  /// Solve coordinatewise when A is diagonal and both norms match their
  /// exponents (r_Y = p, r_X = q); the problem then separates exactly.
  bool separable = true;

  void validate() const;
};

struct KktResidual {
  double r1 = 0.0;  // ||A^*omega - subgradient(R, x)||_{X*}
  double r2 = 0.0;  // ||alpha omega + J_p(A x - y)||_{Y*}
};

struct PrimalDualSolution {
  Vec x;
  Vec omega;
  double objective = 0.0;
  double kkt_r1 = 0.0;
  double kkt_r2 = 0.0;
  int iters = 0;
  bool converged = false;
  std::vector<double> trace;
};

/// T_alpha(x; y) = (1/p)||A x - y||_Y^p + alpha R(x).
double tikhonov_objective(const OperatorSpec& op, const Vec& y, double alpha, double p,
                          const RegSpec& reg, const Vec& x);

/// Minimizes T_alpha(.; y). Returns the last accepted (hence best) iterate with
/// converged = false if the KKT residuals never reach tolerance.
PrimalDualSolution solve_primal(const OperatorSpec& op, const Vec& y, double alpha, double p,
                                const RegSpec& reg, const SolveOptions& opts = {});

/// omega = -(1/alpha) J_p(A x - y), computed in the range geometry.
Vec recover_dual(const Vec& x, const OperatorSpec& op, const Vec& y, double alpha, double p);

KktResidual kkt_residual(const Vec& x, const Vec& omega, const OperatorSpec& op, const RegSpec& reg,
                         const Vec& y, double alpha, double p);

/// Dual Tikhonov functional
///   T*_alpha(omega; y_obs) = D*_{x_dag}(A^*omega; A^*omega_dag)
///                          + alpha^{p*-1} (1/p*) ||omega||^{p*} - <omega - omega_dag, y_obs - y_dag>.
double dual_functional(const Vec& omega, const OperatorSpec& op, const RegSpec& reg,
                       const Vec& x_dag, const Vec& omega_dag, double alpha, double p,
                       const Vec& y_obs, const Vec& y_dag);

struct AlmostMinGap {
  double gap = 0.0;    // T*(omega_delta; y_dag) - T*(omega_exact; y_dag)
  double bound = 0.0;  // delta ||omega_delta - omega_dag||
  /// delta ||omega_delta - omega_exact||. Always dominates gap, since
  /// T*(.; y_delta) = T*(.; y_dag) - <. - omega_dag, y_delta - y_dag> and
  /// omega_delta minimizes it. `bound` can fall below gap when alpha omega_dag
  /// nearly cancels the noise.
  double sharp_bound = 0.0;
};

/// Solves with noisy and with exact data and compares the dual functional at
/// exact data. Throws ConvergenceError if either solve fails.
AlmostMinGap almost_min_gap(const ProblemInstance& instance, double alpha,
                            const SolveOptions& opts = {});

}  // namespace tikreg

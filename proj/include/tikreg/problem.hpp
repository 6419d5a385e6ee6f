#pragma once

#include <cstdint>

#include "tikreg/banach.hpp"
#include "tikreg/linop.hpp"
#include "tikreg/regfun.hpp"

namespace tikreg {

/// Test problem built backwards from a dual source element omega_dag, so that
/// xi_dag = A^*omega_dag lies in dR(x_dag) by construction.
struct ProblemInstance {
  OperatorSpec op;
  RegSpec reg;
  double p;
  Vec x_dag;
  Vec omega_dag;
  Vec xi_dag;
  Vec y_dag;
  double delta = 0.0;
  Vec y_delta;
  std::uint64_t seed = 0;

  /// Throws SourceConditionError / DomainError if an invariant is violated:
  /// xi_dag = A^*omega_dag, xi_dag in dR(x_dag), y_dag = A x_dag,
  /// ||y_delta - y_dag|| = delta.
  void check_invariants(const Tolerance& tol = {}) const;
};

/// x_dag is the canonical element of dR*(A^*omega_dag); y_dag = A x_dag; delta = 0.
ProblemInstance build_source_problem(const OperatorSpec& op, const RegSpec& reg, double p,
                                     const Vec& omega_dag);

/// y_dag plus a seeded Gaussian direction rescaled to range-norm exactly delta.
Vec make_noise(const Vec& y_dag, double delta, const SpaceSpec& range, std::uint64_t seed);

/// Copy of the instance with noisy data at level delta.
ProblemInstance with_noise(const ProblemInstance& instance, double delta, std::uint64_t seed);

/// omega_dag = J_p(A v) in Y, i.e. J_{p*}(omega_dag) = A v lies in range A.
Vec smooth_source(const OperatorSpec& op, double p, const Vec& v);

struct RangeDiagnostic {
  double residual = 0.0;  // ||A v - u||_2 / max(||u||_2, floor), u = J_{p*}(omega_dag)
  bool degenerate = false;
  Index numerical_rank = 0;
};

/// Default relative singular-value cutoff for the numerical range.
inline constexpr double kRangeRcond = 1e-2;

/// Least-squares test of J_{p*}(omega_dag) in range A, using a truncated SVD
/// that treats singular values below rcond * sigma_max as zero.
RangeDiagnostic range_diagnostic(const OperatorSpec& op, const Vec& omega_dag, double p,
                                 double rcond = kRangeRcond);

}  // namespace tikreg

#include "tikreg/problem.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "tikreg/error.hpp"
#include "tikreg/random.hpp"

namespace tikreg {

void ProblemInstance::check_invariants(const Tolerance& tol) const {
  if (!(p > 1.0)) throw DomainError("instance exponent p must exceed 1");
  const Vec xi = adjoint_apply(op, omega_dag);
  if ((xi - xi_dag).cwiseAbs().maxCoeff() > tol.abs + tol.rel * xi.cwiseAbs().maxCoeff()) {
    throw SourceConditionError("xi_dag differs from A^*omega_dag");
  }
  if (!is_subgradient(reg, x_dag, xi_dag)) {
    throw SourceConditionError("A^*omega_dag is not a subgradient of R at x_dag");
  }
  const Vec y = apply(op, x_dag);
  if ((y - y_dag).cwiseAbs().maxCoeff() > tol.abs + tol.rel * y.cwiseAbs().maxCoeff()) {
    throw SourceConditionError("y_dag differs from A x_dag");
  }
  if (y_delta.size() != y_dag.size()) throw DimensionError("y_delta and y_dag differ in size");
  const double dist = norm(y_delta - y_dag, op.range());
  if (std::abs(dist - delta) > 1e-12 + 1e-12 * delta) {
    throw DomainError("||y_delta - y_dag|| = " + std::to_string(dist) + " but delta = " +
                      std::to_string(delta));
  }
}

ProblemInstance build_source_problem(const OperatorSpec& op, const RegSpec& reg, double p,
                                     const Vec& omega_dag) {
  if (!(p > 1.0) || !std::isfinite(p)) throw DomainError("data exponent p must exceed 1");
  require_finite(omega_dag, "omega_dag");
  Vec xi = adjoint_apply(op, omega_dag);
  Vec x = conjugate_subgradient(reg, xi);
  if (!x.allFinite()) throw SourceConditionError("dR*(A^*omega_dag) is empty (overflow)");
  Vec y = apply(op, x);
  ProblemInstance inst{op, reg, p, std::move(x), omega_dag, std::move(xi), y, 0.0, y, 0};
  inst.check_invariants();
  return inst;
}

Vec make_noise(const Vec& y_dag, double delta, const SpaceSpec& range, std::uint64_t seed) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw DomainError("noise level delta must be >= 0");
  if (y_dag.size() != range.dim()) throw DimensionError("make_noise: data and range dimensions differ");
  if (delta == 0.0) return y_dag;
  Rng rng(seed);
  Vec dir = gaussian_vector(range.dim(), rng);
  while (norm(dir, range) == 0.0) dir = gaussian_vector(range.dim(), rng);
  dir *= delta / norm(dir, range);
  Vec out = y_dag + dir;
  // One correction step absorbs the rounding of y_dag + dir.
  const double achieved = norm(out - y_dag, range);
  if (achieved > 0.0) out = y_dag + (out - y_dag) * (delta / achieved);
  return out;
}

ProblemInstance with_noise(const ProblemInstance& instance, double delta, std::uint64_t seed) {
  ProblemInstance out = instance;
  out.delta = delta;
  out.seed = seed;
  out.y_delta = make_noise(instance.y_dag, delta, instance.op.range(), seed);
  return out;
}

Vec smooth_source(const OperatorSpec& op, double p, const Vec& v) {
  return duality_map(apply(op, v), op.range(), p);
}

RangeDiagnostic range_diagnostic(const OperatorSpec& op, const Vec& omega_dag, double p,
                                 double rcond) {
  if (omega_dag.size() != op.range().dim()) throw DimensionError("range_diagnostic: omega_dag size");
  if (!(rcond >= 0.0 && rcond < 1.0)) throw DomainError("range_diagnostic: rcond must lie in [0, 1)");
  RangeDiagnostic out;
  if (omega_dag.cwiseAbs().maxCoeff() == 0.0) {
    out.degenerate = true;
    return out;
  }
  const Vec u = duality_map(omega_dag, op.range().dual(), conjugate_exponent(p));
  Eigen::JacobiSVD<Matrix> svd(op.to_dense(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sigma = svd.singularValues();
  const double cutoff = rcond * (sigma.size() ? sigma[0] : 0.0);
  Index rank = 0;
  while (rank < sigma.size() && sigma[rank] > cutoff && sigma[rank] > 0.0) ++rank;
  // Projection of u onto the span of the retained left singular vectors.
  const Matrix basis = svd.matrixU().leftCols(rank);
  const Vec projected = basis * (basis.transpose() * u);
  const double floor = 1e-300;
  out.residual = (u - projected).norm() / std::max(u.norm(), floor);
  out.numerical_rank = rank;
  return out;
}

}  // namespace tikreg

#include "tikreg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <variant>
#include <string>

#include "tikreg/error.hpp"

namespace tikreg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Near the minimizer differences of T_alpha sink below rounding. By convexity
// T(c) <= T(x) + <grad T(c), c - x>, so a nonpositive pairing certifies
// T(c) <= T(x) without subtracting two nearly equal values.
template <class It>
bool not_worse(const It& cand, const It& cur) {
  if (!std::isfinite(cand.value)) return false;
  if (cand.value <= cur.value + 8.0 * kEps * std::abs(cur.value)) return true;
  return cand.grad.dot(cand.x - cur.x) <= 0.0;
}

void require_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw DomainError("regularization parameter alpha must be > 0, got " + std::to_string(alpha));
  }
}

void require_p(double p) {
  if (!(p > 1.0) || !std::isfinite(p)) throw DomainError("data exponent p must exceed 1");
}

// T_alpha together with its gradient, sharing the residual A x - y.
class Tikhonov {
 public:
  Tikhonov(const OperatorSpec& op, const Vec& y, double alpha, double p, const RegSpec& reg)
      : op_(op), y_(y), alpha_(alpha), p_(p), reg_(reg) {}

  double data_fit(const Vec& x) const { return std::pow(norm(apply(op_, x) - y_, op_.range()), p_) / p_; }

  double value(const Vec& x) const {
    const double rx = reg_eval(reg_, x);
    if (!std::isfinite(rx)) return kInf;
    return data_fit(x) + alpha_ * rx;
  }

  // Gradient of the data-fit term: A^* J_p(A x - y).
  Vec data_gradient(const Vec& x) const {
    return adjoint_apply(op_, duality_map(apply(op_, x) - y_, op_.range(), p_));
  }

  Vec gradient(const Vec& x) const { return data_gradient(x) + alpha_ * subgradient(reg_, x); }

  // r1 = ||grad T_alpha(x)||_{X*} / alpha, scale = 1 + ||A^*omega||_{X*}.
  bool kkt_converged(const Vec& grad, const Vec& data_grad, double tol) const {
    const SpaceSpec dual = op_.domain().dual();
    const double r1 = norm(grad, dual) / alpha_;
    const double scale = 1.0 + norm(data_grad, dual) / alpha_;
    return r1 <= tol * scale;
  }

  double alpha() const { return alpha_; }
  const OperatorSpec& op() const { return op_; }

 private:
  const OperatorSpec& op_;
  const Vec& y_;
  double alpha_;
  double p_;
  const RegSpec& reg_;
};

struct Iterate {
  Vec x;
  double value;
  Vec grad;
  Vec data_grad;
};

// Accelerated gradient descent with backtracking, adaptive momentum restart
// and a monotone acceptance rule.
struct SmoothResult {
  Iterate best;
  int iters = 0;
  bool converged = false;
  std::vector<double> trace;
};

SmoothResult accelerated_descent(const Tikhonov& tik, const RegSpec& reg, const SolveOptions& opts) {
  const Index n = tik.op().domain().dim();
  auto eval = [&](Vec x) {
    Iterate it;
    it.x = std::move(x);
    it.value = tik.value(it.x);
    it.data_grad = tik.data_gradient(it.x);
    it.grad = it.data_grad + tik.alpha() * subgradient(reg, it.x);
    return it;
  };

  SmoothResult res;
  Iterate x = eval(Vec::Zero(n));
  if (opts.record_trace) res.trace.push_back(x.value);
  if (tik.kkt_converged(x.grad, x.data_grad, opts.kkt_tol)) {
    res.best = std::move(x);
    res.converged = true;
    return res;
  }

  const double norm_a = operator_norm_estimate(tik.op(), 30);
  double lipschitz = std::max(norm_a * norm_a + tik.alpha(), 1e-12);
  const double grow = 1.0 / opts.step_backtrack;
  Iterate z = x;
  Vec x_prev = x.x;
  double momentum = 1.0;
  int since_restart = 0;

  for (int k = 1; k <= opts.max_iters; ++k) {
    res.iters = k;
    Iterate cand;
    bool accepted_step = false;
    for (int bt = 0; bt < 200; ++bt) {
      const Vec d = -z.grad / lipschitz;
      cand = eval(z.x + d);
      const double dd = d.squaredNorm();
      if (dd == 0.0) break;
      const bool quad_ok = cand.value <= z.value + z.grad.dot(d) + 0.5 * lipschitz * dd;
      const bool curv_ok = std::isfinite(cand.value) && (cand.grad - z.grad).dot(d) <= 0.5 * lipschitz * dd;
      if (quad_ok || curv_ok) {
        accepted_step = true;
        break;
      }
      lipschitz *= grow;
    }
    if (!accepted_step || !not_worse(cand, x)) {
      // Momentum overshot (or no representable progress): retry from x without it.
      const bool already_plain = (z.x - x.x).squaredNorm() == 0.0;
      momentum = 1.0;
      since_restart = 0;
      z = x;
      if (already_plain) break;
      continue;
    }
    const bool gradient_restart = z.grad.dot(cand.x - x.x) > 0.0;
    x_prev = x.x;
    x = std::move(cand);
    if (opts.record_trace) res.trace.push_back(x.value);
    if (tik.kkt_converged(x.grad, x.data_grad, opts.kkt_tol)) {
      res.converged = true;
      break;
    }
    ++since_restart;
    if (gradient_restart || (opts.restart_period && since_restart >= *opts.restart_period)) {
      // Backtracking only raises L; a restart is the moment to let it relax.
      lipschitz *= 0.9;
      momentum = 1.0;
      since_restart = 0;
      z = x;
      continue;
    }
    const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    z = eval(x.x + ((momentum - 1.0) / next) * (x.x - x_prev));
    momentum = next;
  }
  res.best = std::move(x);
  return res;
}

double kl_divergence(const Vec& u, const Vec& x) {
  double sum = 0.0;
  for (Index i = 0; i < u.size(); ++i) {
    const double t = (u[i] - x[i]) / x[i];
    sum += x[i] * ((1.0 + t) * std::log1p(t) - t);
  }
  return sum;
}

// Bregman proximal gradient for the negative entropy: the step
//   u = argmin <grad f(x), u> + alpha R(u) + KL(u, x)/t
// has the closed form ln u = (ln x - t grad f(x)) / (1 + t alpha).
SmoothResult entropic_descent(const Tikhonov& tik, const SolveOptions& opts) {
  const Index n = tik.op().domain().dim();
  const RegSpec reg = RegSpec::neg_entropy();
  auto eval = [&](Vec x) {
    Iterate it;
    it.x = std::move(x);
    it.value = tik.value(it.x);
    it.data_grad = tik.data_gradient(it.x);
    it.grad = it.data_grad + tik.alpha() * subgradient(reg, it.x);
    return it;
  };

  SmoothResult res;
  Iterate x = eval(Vec::Ones(n));
  if (opts.record_trace) res.trace.push_back(x.value);
  if (tik.kkt_converged(x.grad, x.data_grad, opts.kkt_tol)) {
    res.best = std::move(x);
    res.converged = true;
    return res;
  }
  const double norm_a = operator_norm_estimate(tik.op(), 30);
  double step = 1.0 / std::max(norm_a * norm_a, 1e-12);
  const double f_x0 = tik.data_fit(x.x);
  double f_x = f_x0;

  for (int k = 1; k <= opts.max_iters; ++k) {
    res.iters = k;
    step *= 1.25;
    Vec u;
    double f_u = kInf;
    bool accepted_step = false;
    for (int bt = 0; bt < 200; ++bt) {
      u = ((x.x.array().log() - step * x.data_grad.array()) / (1.0 + step * tik.alpha())).exp().matrix();
      if ((u.array() > 0.0).all() && u.allFinite()) {
        f_u = tik.data_fit(u);
        const Vec d = u - x.x;
        const double bound = kl_divergence(u, x.x) / step;
        // Either test certifies the descent-lemma bound; the second survives
        // cancellation once f_u and f_x agree to rounding.
        if (f_u <= f_x + x.data_grad.dot(d) + bound || (tik.data_gradient(u) - x.data_grad).dot(d) <= bound) {
          accepted_step = true;
          break;
        }
      }
      step *= opts.step_backtrack;
    }
    if (!accepted_step) break;
    Iterate cand = eval(std::move(u));
    if (!not_worse(cand, x)) break;
    x = std::move(cand);
    f_x = f_u;
    if (opts.record_trace) res.trace.push_back(x.value);
    if (tik.kkt_converged(x.grad, x.data_grad, opts.kkt_tol)) {
      res.converged = true;
      break;
    }
  }
  res.best = std::move(x);
  return res;
}

// With diagonal A, ||.||_Y^p summed coordinatewise (r_Y = p) and R =
// (1/q) sum |x_i|^q (r_X = q), T_alpha splits into scalar problems
//   (1/p)|s t - y|^p + (alpha/q)|t|^q
// whose derivative is strictly increasing; each is solved by bisection to the
// last representable bracket. First-order methods stall here for p < 2, where
// the curvature |s t - y|^{p-2} is unbounded near a zero residual.
std::optional<SmoothResult> separable_solve(const Tikhonov& tik, const Vec& y, double p,
                                            const RegSpec& reg, const SolveOptions& opts) {
  const OperatorSpec& op = tik.op();
  const auto* diag = std::get_if<OperatorSpec::Diagonal>(&op.kind());
  if (!opts.separable || !diag || reg.kind() != RegSpec::Kind::PowerNorm) return std::nullopt;
  if (op.range().r() != p || reg.r() != reg.q() || op.domain().r() != reg.r()) return std::nullopt;
  if (op.domain().dim() != op.range().dim()) return std::nullopt;

  const double q = reg.q();
  const double alpha = tik.alpha();
  const Vec& sigma = diag->values;
  Vec x = Vec::Zero(sigma.size());
  int steps = 0;
  for (Index i = 0; i < sigma.size(); ++i) {
    const double s = sigma[i];
    if (s == 0.0 || y[i] == 0.0) continue;
    auto slope = [&](double t) {
      const double r = s * t - y[i];
      return s * std::copysign(std::pow(std::abs(r), p - 1.0), r) +
             alpha * std::copysign(std::pow(std::abs(t), q - 1.0), t);
    };
    // The root lies between 0 (slope sign of -y s) and y/s (slope sign of y/s).
    double lo = std::min(0.0, y[i] / s);
    double hi = std::max(0.0, y[i] / s);
    int k = 0;
    for (; k < 2200; ++k) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (slope(mid) < 0.0 ? lo : hi) = mid;
    }
    steps = std::max(steps, k);
    x[i] = std::abs(slope(lo)) <= std::abs(slope(hi)) ? lo : hi;
  }

  SmoothResult res;
  res.best.x = std::move(x);
  res.best.value = tik.value(res.best.x);
  res.best.data_grad = tik.data_gradient(res.best.x);
  res.best.grad = res.best.data_grad + alpha * subgradient(reg, res.best.x);
  res.iters = steps;
  res.converged = tik.kkt_converged(res.best.grad, res.best.data_grad, opts.kkt_tol);
  if (opts.record_trace) res.trace.push_back(res.best.value);
  return res;
}

}  // namespace

void SolveOptions::validate() const {
  if (!(kkt_tol > 0.0)) throw DomainError("kkt_tol must be positive");
  if (max_iters < 1) throw DomainError("max_iters must be at least 1");
  if (!(step_backtrack > 0.0 && step_backtrack < 1.0)) throw DomainError("step_backtrack must lie in (0, 1)");
  if (restart_period && *restart_period < 1) throw DomainError("restart_period must be positive");
}

double tikhonov_objective(const OperatorSpec& op, const Vec& y, double alpha, double p,
                          const RegSpec& reg, const Vec& x) {
  require_alpha(alpha);
  require_p(p);
  return Tikhonov(op, y, alpha, p, reg).value(x);
}

PrimalDualSolution solve_primal(const OperatorSpec& op, const Vec& y, double alpha, double p,
                                const RegSpec& reg, const SolveOptions& opts) {
  require_alpha(alpha);
  require_p(p);
  opts.validate();
  if (y.size() != op.range().dim()) throw DimensionError("solve_primal: data size differs from range dimension");
  require_finite(y, "data y");

  const Tikhonov tik(op, y, alpha, p, reg);
  std::optional<SmoothResult> exact = separable_solve(tik, y, p, reg, opts);
  SmoothResult res = exact                                         ? std::move(*exact)
                     : reg.kind() == RegSpec::Kind::NegEntropy ? entropic_descent(tik, opts)
                                                               : accelerated_descent(tik, reg, opts);
  PrimalDualSolution sol;
  sol.x = std::move(res.best.x);
  sol.objective = res.best.value;
  sol.omega = recover_dual(sol.x, op, y, alpha, p);
  const KktResidual kkt = kkt_residual(sol.x, sol.omega, op, reg, y, alpha, p);
  sol.kkt_r1 = kkt.r1;
  sol.kkt_r2 = kkt.r2;
  sol.iters = res.iters;
  sol.converged = res.converged;
  sol.trace = std::move(res.trace);
  return sol;
}

Vec recover_dual(const Vec& x, const OperatorSpec& op, const Vec& y, double alpha, double p) {
  require_alpha(alpha);
  require_p(p);
  return -duality_map(apply(op, x) - y, op.range(), p) / alpha;
}

KktResidual kkt_residual(const Vec& x, const Vec& omega, const OperatorSpec& op, const RegSpec& reg,
                         const Vec& y, double alpha, double p) {
  require_p(p);
  if (omega.size() != op.range().dim()) throw DimensionError("kkt_residual: omega size");
  const Vec xi = adjoint_apply(op, omega);
  KktResidual out;
  if (reg.kind() == RegSpec::Kind::NegEntropy && (x.array() <= 0.0).any()) {
    out.r1 = fenchel_young_gap(reg, x, xi);
  } else {
    out.r1 = norm(xi - subgradient(reg, x), op.domain().dual());
  }
  out.r2 = norm(alpha * omega + duality_map(apply(op, x) - y, op.range(), p), op.range().dual());
  return out;
}

double dual_functional(const Vec& omega, const OperatorSpec& op, const RegSpec& reg,
                       const Vec& x_dag, const Vec& omega_dag, double alpha, double p,
                       const Vec& y_obs, const Vec& y_dag) {
  require_alpha(alpha);
  const double ps = conjugate_exponent(p);
  const double bregman = dual_bregman(reg, op, omega, omega_dag, x_dag);
  const double penalty = std::pow(alpha, ps - 1.0) * std::pow(norm(omega, op.range().dual()), ps) / ps;
  return bregman + penalty - pairing(omega - omega_dag, y_obs - y_dag);
}

AlmostMinGap almost_min_gap(const ProblemInstance& inst, double alpha, const SolveOptions& opts) {
  if (!(inst.delta >= 0.0)) throw DomainError("almost_min_gap: delta must be >= 0");
  const PrimalDualSolution noisy = solve_primal(inst.op, inst.y_delta, alpha, inst.p, inst.reg, opts);
  const PrimalDualSolution exact = solve_primal(inst.op, inst.y_dag, alpha, inst.p, inst.reg, opts);
  if (!noisy.converged || !exact.converged) {
    throw ConvergenceError("almost_min_gap: solve did not reach KKT tolerance");
  }
  auto dual_at_exact_data = [&](const Vec& omega) {
    return dual_functional(omega, inst.op, inst.reg, inst.x_dag, inst.omega_dag, alpha, inst.p,
                           inst.y_dag, inst.y_dag);
  };
  AlmostMinGap out;
  out.gap = dual_at_exact_data(noisy.omega) - dual_at_exact_data(exact.omega);
  out.bound = inst.delta * norm(noisy.omega - inst.omega_dag, inst.op.range().dual());
  out.sharp_bound = inst.delta * norm(noisy.omega - exact.omega, inst.op.range().dual());
  return out;
}

}  // namespace tikreg

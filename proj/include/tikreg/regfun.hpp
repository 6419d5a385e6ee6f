#pragma once

#include "tikreg/banach.hpp"
#include "tikreg/linop.hpp"

namespace tikreg {

/// Convex regularizer R: X -> [0, +inf].
///
/// PowerNorm(r, q): R(x) = (1/q)||x||_r^q, conjugate (1/q*)||xi||_{r*}^{q*}.
/// NegEntropy:      R(x) = sum x_i ln x_i - x_i + 1 on x >= 0 (0 ln 0 = 0),
///                  conjugate sum exp(xi_i) - 1.
class RegSpec {
 public:
  enum class Kind { PowerNorm, NegEntropy };

  static RegSpec power_norm(double r, double q);
  static RegSpec neg_entropy();

  Kind kind() const { return kind_; }
  /// Exponents of PowerNorm; meaningless for NegEntropy.
  double r() const { return r_; }
  double q() const { return q_; }

  bool operator==(const RegSpec&) const = default;

 private:
  RegSpec(Kind kind, double r, double q) : kind_(kind), r_(r), q_(q) {}

  Kind kind_;
  double r_;
  double q_;
};

/// Relative tolerance of the Fenchel-Young membership test xi in dR(x).
inline constexpr double kSubgradientTol = 1e-9;

double reg_eval(const RegSpec& reg, const Vec& x);
double reg_conjugate_eval(const RegSpec& reg, const Vec& xi);

/// Canonical element of dR(x). NegEntropy requires every x_i > 0.
Vec subgradient(const RegSpec& reg, const Vec& x);

/// Canonical element of dR*(xi), i.e. the x with xi in dR(x).
Vec conjugate_subgradient(const RegSpec& reg, const Vec& xi);

/// R(x) + R*(xi) - <xi, x>; nonnegative, zero exactly when xi in dR(x).
double fenchel_young_gap(const RegSpec& reg, const Vec& x, const Vec& xi);

bool is_subgradient(const RegSpec& reg, const Vec& x, const Vec& xi, double rel_tol = kSubgradientTol);

/// A point together with a verified subgradient.
struct SubgradientChoice {
  Vec x;
  Vec xi;
  RegSpec reg;

  /// Throws SubgradientError unless xi passes the Fenchel-Young test at x.
  static SubgradientChoice make(const RegSpec& reg, Vec x, Vec xi);
};

/// D_xi(x_tilde; x) = R(x_tilde) - R(x) - <xi, x_tilde - x>.
double primal_bregman(const RegSpec& reg, const Vec& x_tilde, const Vec& x, const Vec& xi);

/// <xi - xi_tilde, x - x_tilde> = D_xi(x_tilde; x) + D_xi_tilde(x; x_tilde).
double sym_bregman(const RegSpec& reg, const Vec& x, const Vec& x_tilde, const Vec& xi,
                   const Vec& xi_tilde);

/// D*_{x_dag}(A^*omega; A^*omega_dag) =
///   R*(A^*omega) - R*(A^*omega_dag) - <A^*omega - A^*omega_dag, x_dag>.
double dual_bregman(const RegSpec& reg, const OperatorSpec& op, const Vec& omega,
                    const Vec& omega_dag, const Vec& x_dag);

}  // namespace tikreg

#include "tikreg/regfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tikreg/error.hpp"

namespace tikreg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
using Kind = RegSpec::Kind;

SpaceSpec primal_space(const RegSpec& reg, Index dim) { return SpaceSpec(dim, reg.r()); }

void require_same_dim(const Vec& a, const Vec& b, const char* what) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(what) + ": dimensions " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()) + " differ");
  }
}

// x_t ln(x_t / x) - x_t + x for x > 0, written via log1p for x_t close to x.
double kl_term(double x_tilde, double x) {
  if (x_tilde < 0.0) return kInf;
  if (x_tilde == 0.0) return x;
  const double t = (x_tilde - x) / x;
  return x * ((1.0 + t) * std::log1p(t) - t);
}

// Bregman distance of R with the canonical subgradient at x.
double intrinsic_bregman(const RegSpec& reg, const Vec& x_tilde, const Vec& x) {
  switch (reg.kind()) {
    case RegSpec::Kind::PowerNorm:
      return bregman_power(x_tilde, x, primal_space(reg, x.size()), reg.q());
    case RegSpec::Kind::NegEntropy: {
      double sum = 0.0;
      for (Index i = 0; i < x.size(); ++i) sum += kl_term(x_tilde[i], x[i]);
      return sum;
    }
  }
  return kInf;
}

// Bregman distance of R* at xi0 with the canonical subgradient dR*(xi0).
double intrinsic_conjugate_bregman(const RegSpec& reg, const Vec& xi, const Vec& xi0) {
  switch (reg.kind()) {
    case RegSpec::Kind::PowerNorm:
      return bregman_power(xi, xi0, primal_space(reg, xi.size()).dual(), conjugate_exponent(reg.q()));
    case RegSpec::Kind::NegEntropy: {
      double sum = 0.0;
      for (Index i = 0; i < xi.size(); ++i) {
        const double d = xi[i] - xi0[i];
        sum += std::exp(xi0[i]) * (std::expm1(d) - d);
      }
      return sum;
    }
  }
  return kInf;
}

}  // namespace

RegSpec RegSpec::power_norm(double r, double q) {
  if (!(r > 1.0) || !std::isfinite(r)) throw DomainError("PowerNorm needs a space exponent r > 1");
  if (!(q > 1.0) || !std::isfinite(q)) throw DomainError("PowerNorm needs an exponent q > 1");
  return RegSpec(Kind::PowerNorm, r, q);
}

RegSpec RegSpec::neg_entropy() { return RegSpec(Kind::NegEntropy, 2.0, 2.0); }

double reg_eval(const RegSpec& reg, const Vec& x) {
  require_finite(x, "regularizer argument");
  switch (reg.kind()) {
    case Kind::PowerNorm:
      return std::pow(norm(x, primal_space(reg, x.size())), reg.q()) / reg.q();
    case Kind::NegEntropy: {
      double sum = 0.0;
      for (Index i = 0; i < x.size(); ++i) {
        if (x[i] < 0.0) return kInf;
        sum += x[i] == 0.0 ? 1.0 : x[i] * std::log(x[i]) - x[i] + 1.0;
      }
      return sum;
    }
  }
  return kInf;
}

double reg_conjugate_eval(const RegSpec& reg, const Vec& xi) {
  require_finite(xi, "conjugate argument");
  switch (reg.kind()) {
    case Kind::PowerNorm: {
      const double qs = conjugate_exponent(reg.q());
      return std::pow(norm(xi, primal_space(reg, xi.size()).dual()), qs) / qs;
    }
    case Kind::NegEntropy: {
      double sum = 0.0;
      for (Index i = 0; i < xi.size(); ++i) sum += std::expm1(xi[i]);
      return sum;
    }
  }
  return kInf;
}

Vec subgradient(const RegSpec& reg, const Vec& x) {
  require_finite(x, "subgradient argument");
  switch (reg.kind()) {
    case Kind::PowerNorm:
      return duality_map(x, primal_space(reg, x.size()), reg.q());
    case Kind::NegEntropy: {
      if ((x.array() <= 0.0).any()) {
        throw SubgradientError("negative entropy has no subgradient where a coordinate is <= 0");
      }
      return x.array().log().matrix();
    }
  }
  return x;
}

Vec conjugate_subgradient(const RegSpec& reg, const Vec& xi) {
  require_finite(xi, "conjugate subgradient argument");
  switch (reg.kind()) {
    case Kind::PowerNorm:
      return adjoint_duality_map(xi, primal_space(reg, xi.size()).dual(), conjugate_exponent(reg.q()));
    case Kind::NegEntropy:
      return xi.array().exp().matrix();
  }
  return xi;
}

double fenchel_young_gap(const RegSpec& reg, const Vec& x, const Vec& xi) {
  require_same_dim(x, xi, "fenchel_young_gap");
  const double rx = reg_eval(reg, x);
  if (!std::isfinite(rx)) return kInf;
  return rx + reg_conjugate_eval(reg, xi) - pairing(xi, x);
}

bool is_subgradient(const RegSpec& reg, const Vec& x, const Vec& xi, double rel_tol) {
  require_same_dim(x, xi, "is_subgradient");
  const double rx = reg_eval(reg, x);
  if (!std::isfinite(rx)) return false;
  const double rs = reg_conjugate_eval(reg, xi);
  const double pair = pairing(xi, x);
  const double scale = std::max(1.0, std::abs(rx) + std::abs(rs) + std::abs(pair));
  return std::abs(rx + rs - pair) <= rel_tol * scale;
}

SubgradientChoice SubgradientChoice::make(const RegSpec& reg, Vec x, Vec xi) {
  if (!is_subgradient(reg, x, xi)) throw SubgradientError("xi is not a subgradient of R at x");
  return SubgradientChoice{std::move(x), std::move(xi), reg};
}

double primal_bregman(const RegSpec& reg, const Vec& x_tilde, const Vec& x, const Vec& xi) {
  require_same_dim(x_tilde, x, "primal_bregman");
  if (!is_subgradient(reg, x, xi)) {
    throw SubgradientError("primal_bregman: xi is not a subgradient at the base point");
  }
  if (!std::isfinite(reg_eval(reg, x_tilde))) return kInf;
  // Exact rearrangement: D_xi = D_{grad R(x)} + <grad R(x) - xi, x_tilde - x>.
  const double value =
      intrinsic_bregman(reg, x_tilde, x) + pairing(subgradient(reg, x) - xi, x_tilde - x);
  return std::max(value, 0.0);
}

double sym_bregman(const RegSpec& reg, const Vec& x, const Vec& x_tilde, const Vec& xi,
                   const Vec& xi_tilde) {
  require_same_dim(x, x_tilde, "sym_bregman");
  if (!is_subgradient(reg, x, xi) || !is_subgradient(reg, x_tilde, xi_tilde)) {
    throw SubgradientError("sym_bregman: subgradient check failed");
  }
  return std::max(pairing(xi - xi_tilde, x - x_tilde), 0.0);
}

double dual_bregman(const RegSpec& reg, const OperatorSpec& op, const Vec& omega,
                    const Vec& omega_dag, const Vec& x_dag) {
  const Vec xi = adjoint_apply(op, omega);
  const Vec xi_dag = adjoint_apply(op, omega_dag);
  require_same_dim(xi_dag, x_dag, "dual_bregman");
  if (!is_subgradient(reg, x_dag, xi_dag)) {
    throw SourceConditionError("dual_bregman: A^*omega_dag is not a subgradient of R at x_dag");
  }
  const double value = intrinsic_conjugate_bregman(reg, xi, xi_dag) +
                       pairing(conjugate_subgradient(reg, xi_dag) - x_dag, xi - xi_dag);
  return std::max(value, 0.0);
}

}  // namespace tikreg

#pragma once

#include <iosfwd>
#include <string>
#include <variant>

#include <Eigen/Core>

#include "tikreg/banach.hpp"

namespace tikreg {

using Matrix = Eigen::MatrixXd;

/// Bounded linear operator A: X -> Y between two finite-dimensional l^r spaces.
class OperatorSpec {
 public:
  struct Dense {
    Matrix matrix;
  };
  struct Diagonal {
    Vec values;
  };
  /// Circular convolution (A x)_i = sum_j kernel[(i - j) mod n] x_j.
  struct Convolution {
    Vec kernel;
  };
  using Kind = std::variant<Dense, Diagonal, Convolution>;

  static OperatorSpec dense(Matrix matrix, double r_domain = 2.0, double r_range = 2.0);
  static OperatorSpec diagonal(Vec values, double r_domain = 2.0, double r_range = 2.0);
  static OperatorSpec convolution(Vec kernel, double r_domain = 2.0, double r_range = 2.0);

  const Kind& kind() const { return kind_; }
  const SpaceSpec& domain() const { return domain_; }
  const SpaceSpec& range() const { return range_; }

  /// Same operator, different exponents on domain and range.
  OperatorSpec with_exponents(double r_domain, double r_range) const;

  /// Explicit matrix of the operator (row i = coefficients of (A x)_i).
  Matrix to_dense() const;

 private:
  OperatorSpec(Kind kind, SpaceSpec domain, SpaceSpec range);

  Kind kind_;
  SpaceSpec domain_;
  SpaceSpec range_;
};

Vec apply(const OperatorSpec& op, const Vec& x);
Vec adjoint_apply(const OperatorSpec& op, const Vec& omega);

/// Euclidean operator norm by power iteration on A^*A.
double operator_norm_estimate(const OperatorSpec& op, int iterations = 100);

/// Plain-text matrix: first line "rows cols", then row-major whitespace-separated scalars.
Matrix read_matrix(std::istream& in);
Matrix load_matrix(const std::string& path);
void write_matrix(std::ostream& out, const Matrix& m);

}  // namespace tikreg

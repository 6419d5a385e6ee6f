#include "tikreg/linop.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "tikreg/error.hpp"

namespace tikreg {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

Index circ(Index i, Index n) { return ((i % n) + n) % n; }

}  // namespace

OperatorSpec::OperatorSpec(Kind kind, SpaceSpec domain, SpaceSpec range)
    : kind_(std::move(kind)), domain_(domain), range_(range) {}

OperatorSpec OperatorSpec::dense(Matrix matrix, double r_domain, double r_range) {
  if (matrix.rows() == 0 || matrix.cols() == 0) throw DimensionError("dense operator must be non-empty");
  if (!matrix.allFinite()) throw DomainError("dense operator has non-finite entries");
  const Index rows = matrix.rows(), cols = matrix.cols();
  return OperatorSpec(Dense{std::move(matrix)}, SpaceSpec(cols, r_domain), SpaceSpec(rows, r_range));
}

OperatorSpec OperatorSpec::diagonal(Vec values, double r_domain, double r_range) {
  require_finite(values, "diagonal operator");
  const Index n = values.size();
  return OperatorSpec(Diagonal{std::move(values)}, SpaceSpec(n, r_domain), SpaceSpec(n, r_range));
}

OperatorSpec OperatorSpec::convolution(Vec kernel, double r_domain, double r_range) {
  require_finite(kernel, "convolution kernel");
  const Index n = kernel.size();
  return OperatorSpec(Convolution{std::move(kernel)}, SpaceSpec(n, r_domain), SpaceSpec(n, r_range));
}

OperatorSpec OperatorSpec::with_exponents(double r_domain, double r_range) const {
  return OperatorSpec(kind_, SpaceSpec(domain_.dim(), r_domain), SpaceSpec(range_.dim(), r_range));
}

Matrix OperatorSpec::to_dense() const {
  return std::visit(
      overloaded{
          [](const Dense& d) -> Matrix { return d.matrix; },
          [](const Diagonal& d) -> Matrix { return d.values.asDiagonal(); },
          [](const Convolution& c) -> Matrix {
            const Index n = c.kernel.size();
            Matrix m(n, n);
            for (Index i = 0; i < n; ++i)
              for (Index j = 0; j < n; ++j) m(i, j) = c.kernel[circ(i - j, n)];
            return m;
          },
      },
      kind_);
}

Vec apply(const OperatorSpec& op, const Vec& x) {
  if (x.size() != op.domain().dim()) {
    throw DimensionError("apply: input has " + std::to_string(x.size()) + " coordinates, domain has " +
                         std::to_string(op.domain().dim()));
  }
  return std::visit(
      overloaded{
          [&](const OperatorSpec::Dense& d) -> Vec { return d.matrix * x; },
          [&](const OperatorSpec::Diagonal& d) -> Vec { return d.values.cwiseProduct(x); },
          [&](const OperatorSpec::Convolution& c) -> Vec {
            const Index n = c.kernel.size();
            Vec out = Vec::Zero(n);
            for (Index i = 0; i < n; ++i)
              for (Index j = 0; j < n; ++j) out[i] += c.kernel[circ(i - j, n)] * x[j];
            return out;
          },
      },
      op.kind());
}

Vec adjoint_apply(const OperatorSpec& op, const Vec& omega) {
  if (omega.size() != op.range().dim()) {
    throw DimensionError("adjoint_apply: input has " + std::to_string(omega.size()) +
                         " coordinates, range has " + std::to_string(op.range().dim()));
  }
  return std::visit(
      overloaded{
          [&](const OperatorSpec::Dense& d) -> Vec { return d.matrix.transpose() * omega; },
          [&](const OperatorSpec::Diagonal& d) -> Vec { return d.values.cwiseProduct(omega); },
          [&](const OperatorSpec::Convolution& c) -> Vec {
            const Index n = c.kernel.size();
            Vec out = Vec::Zero(n);
            for (Index j = 0; j < n; ++j)
              for (Index i = 0; i < n; ++i) out[j] += c.kernel[circ(i - j, n)] * omega[i];
            return out;
          },
      },
      op.kind());
}

double operator_norm_estimate(const OperatorSpec& op, int iterations) {
  if (const auto* d = std::get_if<OperatorSpec::Diagonal>(&op.kind())) return d->values.cwiseAbs().maxCoeff();
  Vec v = Vec::Ones(op.domain().dim()) / std::sqrt(static_cast<double>(op.domain().dim()));
  // Break symmetry so the start vector is not orthogonal to the top singular vector.
  for (Index i = 0; i < v.size(); ++i) v[i] += 1e-3 * static_cast<double>(i % 7);
  double estimate = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Vec w = adjoint_apply(op, apply(op, v));
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    estimate = std::sqrt(nw / v.norm());
    v = w / nw;
  }
  return estimate;
}

Matrix read_matrix(std::istream& in) {
  long rows = 0, cols = 0;
  std::string header;
  if (!std::getline(in, header)) throw ConfigError("matrix file: missing \"rows cols\" header");
  std::istringstream hs(header);
  if (!(hs >> rows >> cols) || rows <= 0 || cols <= 0) {
    throw ConfigError("matrix file: malformed header \"" + header + "\"");
  }
  Matrix m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    for (long j = 0; j < cols; ++j) {
      if (!(in >> m(i, j))) {
        throw ConfigError("matrix file: expected " + std::to_string(rows * cols) + " scalars, got " +
                          std::to_string(i * cols + j));
      }
    }
  }
  double extra;
  if (in >> extra) throw ConfigError("matrix file: trailing data after " + std::to_string(rows * cols) + " scalars");
  return m;
}

Matrix load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open matrix file " + path);
  return read_matrix(in);
}

void write_matrix(std::ostream& out, const Matrix& m) {
  out << m.rows() << ' ' << m.cols() << '\n' << std::setprecision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
    out << '\n';
  }
}

}  // namespace tikreg

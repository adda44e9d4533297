#include "fembench/tensor_basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fembench {

namespace {

// Legendre P_n and P_{n-1} at x by the three-term recurrence.
std::pair<double, double> legendre_pair(int n, double x) {
  double p_prev = 1.0;
  double p = x;
  if (n == 0) return {1.0, 0.0};
  for (int m = 1; m < n; ++m) {
    const double p_next = ((2.0 * m + 1.0) * x * p - m * p_prev) / (m + 1.0);
    p_prev = p;
    p = p_next;
  }
  return {p, p_prev};
}

// Enforces x[n-1-i] = -x[i] exactly.
void symmetrize(std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  for (int i = 0; i < n / 2; ++i) {
    const double v = 0.5 * (x[n - 1 - i] - x[i]);
    x[i] = -v;
    x[n - 1 - i] = v;
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
}

constexpr double newton_tolerance = 1e-15;
constexpr int newton_max_iterations = 100;

}  // namespace

QuadratureRule1D gauss_legendre_rule(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre_rule: need n >= 1, got " + std::to_string(n));
  QuadratureRule1D rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = -std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < newton_max_iterations; ++it) {
      const auto [p, pm1] = legendre_pair(n, x);
      const double dp = n * (x * p - pm1) / (x * x - 1.0);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < newton_tolerance) break;
    }
    rule.points[i] = x;
  }
  symmetrize(rule.points);
  for (int i = 0; i < n; ++i) {
    const double x = rule.points[i];
    const auto [p, pm1] = legendre_pair(n, x);
    const double dp = n * (x * p - pm1) / (x * x - 1.0);
    rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  for (int i = 0; i < n / 2; ++i) {
    const double w = 0.5 * (rule.weights[i] + rule.weights[n - 1 - i]);
    rule.weights[i] = rule.weights[n - 1 - i] = w;
  }
  return rule;
}

std::vector<double> gauss_lobatto_nodes(int k) {
  if (k < 1) throw std::invalid_argument("gauss_lobatto_nodes: need k >= 1, got " + std::to_string(k));
  std::vector<double> x(k + 1);
  x[0] = -1.0;
  x[k] = 1.0;
  for (int i = 1; i < k; ++i) {
    double xi = -std::cos(std::numbers::pi * i / k);
    // Newton on P_k'(x), with P_k'' from the Legendre ODE.
    for (int it = 0; it < newton_max_iterations; ++it) {
      const auto [p, pm1] = legendre_pair(k, xi);
      const double dp = k * (xi * p - pm1) / (xi * xi - 1.0);
      const double ddp = (2.0 * xi * dp - k * (k + 1.0) * p) / (1.0 - xi * xi);
      const double dx = dp / ddp;
      xi -= dx;
      if (std::abs(dx) < newton_tolerance) break;
    }
    x[i] = xi;
  }
  symmetrize(x);
  return x;
}

QuadratureRule1D gauss_lobatto_rule(int k) {
  QuadratureRule1D rule;
  rule.points = gauss_lobatto_nodes(k);
  rule.weights.resize(k + 1);
  for (int i = 0; i <= k; ++i) {
    const double p = legendre_pair(k, rule.points[i]).first;
    rule.weights[i] = 2.0 / (k * (k + 1.0) * p * p);
  }
  return rule;
}

Matrix1D Matrix1D::transposed() const {
  Matrix1D t(cols_, rows_);
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix1D lagrange_values(std::span<const double> nodes, std::span<const double> points) {
  const int n = static_cast<int>(nodes.size());
  Matrix1D m(static_cast<int>(points.size()), n);
  for (int q = 0; q < m.rows(); ++q)
    for (int j = 0; j < n; ++j) {
      double v = 1.0;
      for (int i = 0; i < n; ++i)
        if (i != j) v *= (points[q] - nodes[i]) / (nodes[j] - nodes[i]);
      m(q, j) = v;
    }
  return m;
}

Matrix1D lagrange_derivatives(std::span<const double> nodes, std::span<const double> points) {
  const int n = static_cast<int>(nodes.size());
  Matrix1D m(static_cast<int>(points.size()), n);
  for (int q = 0; q < m.rows(); ++q)
    for (int j = 0; j < n; ++j) {
      double sum = 0.0;
      for (int l = 0; l < n; ++l) {
        if (l == j) continue;
        double v = 1.0 / (nodes[j] - nodes[l]);
        for (int i = 0; i < n; ++i)
          if (i != j && i != l) v *= (points[q] - nodes[i]) / (nodes[j] - nodes[i]);
        sum += v;
      }
      m(q, j) = sum;
    }
  return m;
}

Basis1D build_basis(int k) {
  if (k < 1) throw std::invalid_argument("build_basis: need k >= 1, got " + std::to_string(k));
  Basis1D b;
  b.degree = k;
  b.nodes = gauss_lobatto_nodes(k);
  b.quadrature = gauss_legendre_rule(k + 1);
  b.shape_values = lagrange_values(b.nodes, b.quadrature.points);
  b.shape_gradients = lagrange_derivatives(b.nodes, b.quadrature.points);
  b.collocation_gradients = lagrange_derivatives(b.quadrature.points, b.quadrature.points);
  const std::array<double, 2> ends{-1.0, 1.0};
  const Matrix1D bv = lagrange_values(b.nodes, ends);
  const Matrix1D bg = lagrange_derivatives(b.nodes, ends);
  for (int s = 0; s < 2; ++s) {
    b.boundary_values[s].resize(k + 1);
    b.boundary_gradients[s].resize(k + 1);
    for (int j = 0; j <= k; ++j) {
      b.boundary_values[s][j] = bv(s, j);
      b.boundary_gradients[s][j] = bg(s, j);
    }
  }
  return b;
}

void contract_axis(const Matrix1D& matrix, bool transposed, const double* in, double* out, int stride, int n_hi,
                   bool add) {
  const int n_out = transposed ? matrix.cols() : matrix.rows();
  const int n_in = transposed ? matrix.rows() : matrix.cols();
  for (int hi = 0; hi < n_hi; ++hi) {
    const double* src = in + static_cast<std::size_t>(stride) * n_in * hi;
    double* dst = out + static_cast<std::size_t>(stride) * n_out * hi;
    for (int r = 0; r < n_out; ++r) {
      double* o = dst + static_cast<std::size_t>(stride) * r;
      if (!add) std::fill(o, o + stride, 0.0);
      for (int c = 0; c < n_in; ++c) {
        const double coef = transposed ? matrix(c, r) : matrix(r, c);
        const double* i = src + static_cast<std::size_t>(stride) * c;
        for (int lo = 0; lo < stride; ++lo) o[lo] += coef * i[lo];
      }
    }
  }
}

std::vector<double> apply_1d(const Matrix1D& matrix, std::span<const double> field, std::span<const int> extents,
                             int axis, bool transposed) {
  const int dim = static_cast<int>(extents.size());
  if (axis < 0 || axis >= dim) throw std::invalid_argument("apply_1d: axis out of range");
  const int n_in = transposed ? matrix.rows() : matrix.cols();
  const int n_out = transposed ? matrix.cols() : matrix.rows();
  if (extents[axis] != n_in)
    throw std::invalid_argument("apply_1d: extent " + std::to_string(extents[axis]) + " along axis " +
                                std::to_string(axis) + " does not match matrix size " + std::to_string(n_in));
  std::size_t total = 1;
  for (int e : extents) total *= e;
  if (field.size() != total) throw std::invalid_argument("apply_1d: field size does not match extents");
  int stride = 1, n_hi = 1;
  for (int b = 0; b < axis; ++b) stride *= extents[b];
  for (int b = axis + 1; b < dim; ++b) n_hi *= extents[b];
  std::vector<double> out(static_cast<std::size_t>(stride) * n_out * n_hi);
  contract_axis(matrix, transposed, field.data(), out.data(), stride, n_hi, false);
  return out;
}

EvenOddTables make_even_odd(const Matrix1D& matrix, Parity parity) {
  const int n = matrix.rows();
  if (matrix.cols() != n) throw std::invalid_argument("make_even_odd: matrix must be square");
  double scale = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(matrix(i, j)));
  const double sign = parity == Parity::even ? 1.0 : -1.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (std::abs(matrix(i, j) - sign * matrix(n - 1 - i, n - 1 - j)) > 1e-12 * std::max(scale, 1.0))
        throw std::invalid_argument("make_even_odd: matrix lacks the requested reflection symmetry");

  EvenOddTables t;
  t.n = n;
  t.half = (n + 1) / 2;
  t.parity = parity;
  const int h = n / 2;
  t.even_block.assign(static_cast<std::size_t>(t.half) * t.half, 0.0);
  t.odd_block.assign(static_cast<std::size_t>(t.half) * h, 0.0);
  for (int i = 0; i < t.half; ++i) {
    for (int j = 0; j < h; ++j) {
      t.even_block[i * t.half + j] = 0.5 * (matrix(i, j) + matrix(i, n - 1 - j));
      t.odd_block[i * h + j] = 0.5 * (matrix(i, j) - matrix(i, n - 1 - j));
    }
    if (n % 2 == 1) t.even_block[i * t.half + h] = matrix(i, h);
  }
  return t;
}

OpCount even_odd_cost(int n, Parity parity) {
  const int h = n / 2;
  const int half = (n + 1) / 2;
  OpCount c;
  c.adds += 2 * h;
  // rows i < h: dot products of length half and h, then two outputs
  c.mults += static_cast<std::uint64_t>(h) * (half + h);
  c.adds += static_cast<std::uint64_t>(h) * ((half - 1) + (h - 1) + 2);
  if (n % 2 == 1) {
    // middle row: only one block is nonzero
    const int len = parity == Parity::even ? half : h;
    c.mults += len;
    c.adds += len > 0 ? len - 1 : 0;
  }
  return c;
}

std::vector<double> even_odd_apply(const EvenOddTables& t, std::span<const double> v, Parity parity,
                                   OpCount* count) {
  if (parity != t.parity) throw std::invalid_argument("even_odd_apply: parity flag does not match tables");
  const int n = t.n;
  if (static_cast<int>(v.size()) != n) throw std::invalid_argument("even_odd_apply: vector size mismatch");
  const int h = n / 2;
  const int half = t.half;
  std::vector<double> xe(half), xo(std::max(h, 1)), y(n);
  for (int j = 0; j < h; ++j) {
    xe[j] = v[j] + v[n - 1 - j];
    xo[j] = v[j] - v[n - 1 - j];
  }
  if (n % 2 == 1) xe[h] = v[h];
  OpCount c;
  c.adds += 2 * h;
  for (int i = 0; i < h; ++i) {
    double a = t.even_block[i * half] * xe[0];
    for (int j = 1; j < half; ++j) a += t.even_block[i * half + j] * xe[j];
    double b = t.odd_block[i * h] * xo[0];
    for (int j = 1; j < h; ++j) b += t.odd_block[i * h + j] * xo[j];
    c.mults += half + h;
    c.adds += (half - 1) + (h - 1);
    y[i] = a + b;
    y[n - 1 - i] = parity == Parity::even ? a - b : b - a;
    c.adds += 2;
  }
  if (n % 2 == 1) {
    double m = 0.0;
    if (parity == Parity::even) {
      for (int j = 0; j < half; ++j) m += t.even_block[h * half + j] * xe[j];
      c.mults += half;
      c.adds += half - 1;
    } else {
      for (int j = 0; j < h; ++j) m += t.odd_block[h * h + j] * xo[j];
      c.mults += h;
      c.adds += h > 0 ? h - 1 : 0;
    }
    y[h] = m;
  }
  if (count) *count += c;
  return y;
}

std::vector<double> dense_apply(const Matrix1D& m, std::span<const double> v, OpCount* count) {
  std::vector<double> y(m.rows(), 0.0);
  for (int i = 0; i < m.rows(); ++i) {
    double s = m(i, 0) * v[0];
    for (int j = 1; j < m.cols(); ++j) s += m(i, j) * v[j];
    y[i] = s;
  }
  if (count) {
    count->mults += static_cast<std::uint64_t>(m.rows()) * m.cols();
    count->adds += static_cast<std::uint64_t>(m.rows()) * (m.cols() - 1);
  }
  return y;
}

void contract_axis_even_odd(const EvenOddTables& t, const double* in, double* out, int stride, int n_hi, bool add,
                            OpCount* count) {
  const int n = t.n;
  const int h = n / 2;
  const int half = t.half;
  const bool even = t.parity == Parity::even;
  thread_local std::vector<double> buffer;
  buffer.resize(static_cast<std::size_t>(half + h + 2) * stride);
  double* xe = buffer.data();
  double* xo = xe + static_cast<std::size_t>(half) * stride;
  double* a = xo + static_cast<std::size_t>(h) * stride;
  double* b = a + stride;
  for (int hi = 0; hi < n_hi; ++hi) {
    const double* src = in + static_cast<std::size_t>(stride) * n * hi;
    double* dst = out + static_cast<std::size_t>(stride) * n * hi;
    for (int j = 0; j < h; ++j) {
      const double* p = src + static_cast<std::size_t>(stride) * j;
      const double* m = src + static_cast<std::size_t>(stride) * (n - 1 - j);
      double* e = xe + static_cast<std::size_t>(stride) * j;
      double* o = xo + static_cast<std::size_t>(stride) * j;
      for (int lo = 0; lo < stride; ++lo) {
        e[lo] = p[lo] + m[lo];
        o[lo] = p[lo] - m[lo];
      }
    }
    if (n % 2 == 1) std::copy(src + static_cast<std::size_t>(stride) * h, src + static_cast<std::size_t>(stride) * (h + 1),
                              xe + static_cast<std::size_t>(stride) * h);
    for (int i = 0; i < h; ++i) {
      std::fill(a, a + stride, 0.0);
      std::fill(b, b + stride, 0.0);
      for (int j = 0; j < half; ++j) {
        const double c = t.even_block[i * half + j];
        const double* e = xe + static_cast<std::size_t>(stride) * j;
        for (int lo = 0; lo < stride; ++lo) a[lo] += c * e[lo];
      }
      for (int j = 0; j < h; ++j) {
        const double c = t.odd_block[i * h + j];
        const double* o = xo + static_cast<std::size_t>(stride) * j;
        for (int lo = 0; lo < stride; ++lo) b[lo] += c * o[lo];
      }
      double* y0 = dst + static_cast<std::size_t>(stride) * i;
      double* y1 = dst + static_cast<std::size_t>(stride) * (n - 1 - i);
      if (add) {
        for (int lo = 0; lo < stride; ++lo) {
          y0[lo] += a[lo] + b[lo];
          y1[lo] += even ? a[lo] - b[lo] : b[lo] - a[lo];
        }
      } else {
        for (int lo = 0; lo < stride; ++lo) {
          y0[lo] = a[lo] + b[lo];
          y1[lo] = even ? a[lo] - b[lo] : b[lo] - a[lo];
        }
      }
    }
    if (n % 2 == 1) {
      std::fill(a, a + stride, 0.0);
      if (even) {
        for (int j = 0; j < half; ++j) {
          const double c = t.even_block[h * half + j];
          const double* e = xe + static_cast<std::size_t>(stride) * j;
          for (int lo = 0; lo < stride; ++lo) a[lo] += c * e[lo];
        }
      } else {
        for (int j = 0; j < h; ++j) {
          const double c = t.odd_block[h * h + j];
          const double* o = xo + static_cast<std::size_t>(stride) * j;
          for (int lo = 0; lo < stride; ++lo) a[lo] += c * o[lo];
        }
      }
      double* y = dst + static_cast<std::size_t>(stride) * h;
      if (add)
        for (int lo = 0; lo < stride; ++lo) y[lo] += a[lo];
      else
        std::copy(a, a + stride, y);
    }
  }
  if (count) {
    const std::uint64_t lines = static_cast<std::uint64_t>(stride) * n_hi;
    const OpCount per_line = even_odd_cost(n, t.parity);
    count->mults += lines * per_line.mults;
    count->adds += lines * (per_line.adds + (add ? n : 0));
  }
}

}  // namespace fembench

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace fembench {

/// Points and weights of a 1D rule on [-1,1].
struct QuadratureRule1D {
  std::vector<double> points;
  std::vector<double> weights;

  int size() const { return static_cast<int>(points.size()); }
};

/// n-point Gauss-Legendre rule, exact for polynomials up to degree 2n-1.
QuadratureRule1D gauss_legendre_rule(int n);

/// The k+1 Gauss-Lobatto points on [-1,1], i.e. +-1 and the roots of P'_k.
std::vector<double> gauss_lobatto_nodes(int k);

/// k+1 point Gauss-Lobatto rule (nodes and weights).
QuadratureRule1D gauss_lobatto_rule(int k);

/// Dense row-major matrix used for the 1D factors of tensor-product kernels.
/// Row index addresses the output point, column index the input coefficient.
class Matrix1D {
 public:
  Matrix1D() = default;
  Matrix1D(int rows, int cols) : rows_(rows), cols_(cols), values_(static_cast<std::size_t>(rows) * cols, 0.0) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int r, int c) { return values_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return values_[static_cast<std::size_t>(r) * cols_ + c]; }
  const double* data() const { return values_.data(); }
  double* data() { return values_.data(); }

  Matrix1D transposed() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> values_;
};

/// values(q, j) = l_j(points[q]) for the Lagrange polynomials l_j through `nodes`.
Matrix1D lagrange_values(std::span<const double> nodes, std::span<const double> points);
/// derivatives(q, j) = l_j'(points[q]).
Matrix1D lagrange_derivatives(std::span<const double> nodes, std::span<const double> points);

/// Degree-k nodal basis on Gauss-Lobatto points, tabulated at the (k+1)-point
/// Gauss-Legendre rule. Matrices are stored quadrature-point major.
struct Basis1D {
  int degree = 0;
  std::vector<double> nodes;
  QuadratureRule1D quadrature;
  Matrix1D shape_values;           // N(q, j)
  Matrix1D shape_gradients;        // D(q, j)
  Matrix1D collocation_gradients;  // derivative of the interpolant through the quadrature points
  std::array<std::vector<double>, 2> boundary_values;     // basis at xi = -1 / +1
  std::array<std::vector<double>, 2> boundary_gradients;  // derivative at xi = -1 / +1

  int n_dofs() const { return degree + 1; }
  int n_points() const { return quadrature.size(); }
};

Basis1D build_basis(int k);

/// Contracts `axis` of the tensor `field` (extents listed x-fastest) with
/// `matrix`, or with its transpose. Other axes are left untouched.
std::vector<double> apply_1d(const Matrix1D& matrix, std::span<const double> field, std::span<const int> extents,
                             int axis, bool transposed);

/// Raw strided kernel behind apply_1d: out[lo, r, hi] (+)= sum_c M(r, c) in[lo, c, hi].
void contract_axis(const Matrix1D& matrix, bool transposed, const double* in, double* out, int stride, int n_hi,
                   bool add);

enum class Parity { even, odd };

/// Half-size blocks of a 1D matrix with M(i,j) = +-M(n-1-i, n-1-j).
struct EvenOddTables {
  int n = 0;
  int half = 0;  // ceil(n/2)
  Parity parity = Parity::even;
  std::vector<double> even_block;  // half x half
  std::vector<double> odd_block;   // half x (n/2)
};

struct OpCount {
  std::uint64_t mults = 0;
  std::uint64_t adds = 0;
  std::uint64_t total() const { return mults + adds; }
  OpCount& operator+=(const OpCount& other) {
    mults += other.mults;
    adds += other.adds;
    return *this;
  }
};

/// Throws std::invalid_argument if the matrix lacks the requested reflection symmetry.
EvenOddTables make_even_odd(const Matrix1D& matrix, Parity parity);

/// Matrix-vector product through the even-odd blocks. `parity` must match
/// the tables. Counts arithmetic into `count` when given.
std::vector<double> even_odd_apply(const EvenOddTables& tables, std::span<const double> vector, Parity parity,
                                   OpCount* count = nullptr);

/// Plain dense product with the same counting convention, used as reference.
std::vector<double> dense_apply(const Matrix1D& matrix, std::span<const double> vector, OpCount* count = nullptr);

/// Arithmetic of one even_odd_apply call of size n (matches the counter).
OpCount even_odd_cost(int n, Parity parity = Parity::even);

/// Strided even-odd contraction over one tensor axis, the workhorse of the
/// cell kernels. Square matrices only. Adds the executed arithmetic to `count` when given.
void contract_axis_even_odd(const EvenOddTables& tables, const double* in, double* out, int stride, int n_hi,
                            bool add, OpCount* count = nullptr);

}  // namespace fembench

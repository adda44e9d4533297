#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fembench {

struct Triplet {
  int row;
  int col;
  double value;
};

/// Compressed row storage with sorted, unique column indices per row.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(int rows, int cols) : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

  /// Sums duplicate entries; keeps explicit zeros that arise from the sum.
  static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> entries);
  /// Pattern from per-row sorted column lists, values zero.
  static SparseMatrix from_pattern(int cols, const std::vector<std::vector<int>>& row_columns);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::int64_t nnz() const { return row_ptr_.empty() ? 0 : row_ptr_.back(); }
  const std::vector<std::int64_t>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& col_idx() const { return col_; }
  const std::vector<double>& values() const { return val_; }
  std::vector<double>& values() { return val_; }
  std::vector<std::int64_t>& row_ptr() { return row_ptr_; }
  std::vector<int>& col_idx() { return col_; }

  /// Position of (i, j) in the value array, -1 if not stored.
  std::int64_t find(int i, int j) const;
  double operator()(int i, int j) const;
  /// Adds to an existing entry; throws if (i, j) is not in the pattern.
  void add(int i, int j, double v);

  /// y = M x, rows processed in order (bit-reproducible).
  void multiply(std::span<const double> x, std::span<double> y) const;
  /// Same product with OpenMP-parallel rows.
  void multiply_parallel(std::span<const double> x, std::span<double> y) const;
  std::vector<double> operator*(std::span<const double> x) const;

  SparseMatrix transpose() const;
  std::vector<double> diagonal() const;
  double max_abs() const;

  /// Bytes of the stored arrays (8-byte values, 4-byte columns, 8-byte offsets).
  std::size_t memory_bytes() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::int64_t> row_ptr_;
  std::vector<int> col_;
  std::vector<double> val_;
};

/// C = A * B.
SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b);

/// Explicit matrix of a linear operator, built column by column from unit
/// vectors. Entries below drop_tol * max|entry| are dropped.
SparseMatrix probe_assemble(const std::function<void(std::span<const double>, std::span<double>)>& apply, int n,
                            double drop_tol = 1e-14);

/// Incomplete LU with zero fill-in on the pattern of the input matrix.
/// L is unit lower triangular; both factors share one value array.
class ILU0 {
 public:
  ILU0() = default;
  explicit ILU0(const SparseMatrix& m);

  /// z = U^{-1} L^{-1} r.
  void solve(std::span<const double> r, std::span<double> z) const;
  const SparseMatrix& factors() const { return lu_; }

 private:
  SparseMatrix lu_;
  std::vector<std::int64_t> diag_;
};

/// Dense LU factorization with partial pivoting, row-major storage.
class DenseLU {
 public:
  DenseLU() = default;
  DenseLU(int n, std::vector<double> matrix);
  explicit DenseLU(const SparseMatrix& m);

  int size() const { return n_; }
  void solve(std::span<const double> b, std::span<double> x) const;
  std::vector<double> solve(std::span<const double> b) const;

 private:
  void factor();

  int n_ = 0;
  std::vector<double> lu_;
  std::vector<int> perm_;
};

std::vector<double> dense_lu_solve(int n, std::vector<double> matrix, std::span<const double> b);

void write_matrix_market(const SparseMatrix& m, const std::string& path);

}  // namespace fembench

#include "fembench/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace fembench {

SparseMatrix SparseMatrix::from_triplets(int rows, int cols, std::vector<Triplet> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
  SparseMatrix m(rows, cols);
  m.col_.reserve(entries.size());
  m.val_.reserve(entries.size());
  std::size_t i = 0;
  while (i < entries.size()) {
    const Triplet& t = entries[i];
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      throw std::out_of_range("SparseMatrix::from_triplets: entry outside the matrix");
    double v = 0.0;
    std::size_t j = i;
    while (j < entries.size() && entries[j].row == t.row && entries[j].col == t.col) v += entries[j++].value;
    m.col_.push_back(t.col);
    m.val_.push_back(v);
    ++m.row_ptr_[t.row + 1];
    i = j;
  }
  for (int r = 0; r < rows; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
  return m;
}

SparseMatrix SparseMatrix::from_pattern(int cols, const std::vector<std::vector<int>>& row_columns) {
  SparseMatrix m(static_cast<int>(row_columns.size()), cols);
  for (std::size_t r = 0; r < row_columns.size(); ++r)
    m.row_ptr_[r + 1] = m.row_ptr_[r] + static_cast<std::int64_t>(row_columns[r].size());
  m.col_.reserve(m.row_ptr_.back());
  for (const auto& row : row_columns) m.col_.insert(m.col_.end(), row.begin(), row.end());
  m.val_.assign(m.col_.size(), 0.0);
  return m;
}

std::int64_t SparseMatrix::find(int i, int j) const {
  const auto begin = col_.begin() + row_ptr_[i];
  const auto end = col_.begin() + row_ptr_[i + 1];
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return -1;
  return it - col_.begin();
}

double SparseMatrix::operator()(int i, int j) const {
  const std::int64_t p = find(i, j);
  return p < 0 ? 0.0 : val_[p];
}

void SparseMatrix::add(int i, int j, double v) {
  const std::int64_t p = find(i, j);
  if (p < 0) throw std::out_of_range("SparseMatrix::add: entry not in sparsity pattern");
  val_[p] += v;
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (static_cast<int>(x.size()) != cols_ || static_cast<int>(y.size()) != rows_)
    throw std::invalid_argument("SparseMatrix::multiply: dimension mismatch");
  for (int i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (std::int64_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) s += val_[p] * x[col_[p]];
    y[i] = s;
  }
}

void SparseMatrix::multiply_parallel(std::span<const double> x, std::span<double> y) const {
  if (static_cast<int>(x.size()) != cols_ || static_cast<int>(y.size()) != rows_)
    throw std::invalid_argument("SparseMatrix::multiply: dimension mismatch");
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (std::int64_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) s += val_[p] * x[col_[p]];
    y[i] = s;
  }
}

std::vector<double> SparseMatrix::operator*(std::span<const double> x) const {
  std::vector<double> y(rows_);
  multiply(x, y);
  return y;
}

SparseMatrix SparseMatrix::transpose() const {
  SparseMatrix t(cols_, rows_);
  for (int c : col_) ++t.row_ptr_[c + 1];
  for (int r = 0; r < cols_; ++r) t.row_ptr_[r + 1] += t.row_ptr_[r];
  t.col_.resize(col_.size());
  t.val_.resize(val_.size());
  std::vector<std::int64_t> next(t.row_ptr_.begin(), t.row_ptr_.end() - 1);
  for (int i = 0; i < rows_; ++i)
    for (std::int64_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      const std::int64_t q = next[col_[p]]++;
      t.col_[q] = i;
      t.val_[q] = val_[p];
    }
  return t;
}

std::vector<double> SparseMatrix::diagonal() const {
  std::vector<double> d(std::min(rows_, cols_), 0.0);
  for (int i = 0; i < static_cast<int>(d.size()); ++i) d[i] = (*this)(i, i);
  return d;
}

double SparseMatrix::max_abs() const {
  double m = 0.0;
  for (double v : val_) m = std::max(m, std::abs(v));
  return m;
}

std::size_t SparseMatrix::memory_bytes() const {
  return 8 * val_.size() + 4 * col_.size() + 8 * row_ptr_.size();
}

SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("multiply: inner dimensions differ");
  const auto& ap = a.row_ptr();
  const auto& ac = a.col_idx();
  const auto& av = a.values();
  const auto& bp = b.row_ptr();
  const auto& bc = b.col_idx();
  const auto& bv = b.values();
  SparseMatrix c(a.rows(), b.cols());
  std::vector<double> acc(b.cols(), 0.0);
  std::vector<int> marker(b.cols(), -1);
  std::vector<int> cols;
  for (int i = 0; i < a.rows(); ++i) {
    cols.clear();
    for (std::int64_t p = ap[i]; p < ap[i + 1]; ++p) {
      const int k = ac[p];
      for (std::int64_t q = bp[k]; q < bp[k + 1]; ++q) {
        const int j = bc[q];
        if (marker[j] != i) {
          marker[j] = i;
          acc[j] = 0.0;
          cols.push_back(j);
        }
        acc[j] += av[p] * bv[q];
      }
    }
    std::sort(cols.begin(), cols.end());
    for (int j : cols) {
      c.col_idx().push_back(j);
      c.values().push_back(acc[j]);
    }
    c.row_ptr()[i + 1] = static_cast<std::int64_t>(c.col_idx().size());
  }
  return c;
}

SparseMatrix probe_assemble(const std::function<void(std::span<const double>, std::span<double>)>& apply, int n,
                            double drop_tol) {
  std::vector<double> e(n, 0.0), col(n);
  std::vector<Triplet> entries;
  double max_entry = 0.0;
  for (int j = 0; j < n; ++j) {
    e[j] = 1.0;
    apply(e, col);
    e[j] = 0.0;
    for (int i = 0; i < n; ++i)
      if (col[i] != 0.0) {
        entries.push_back({i, j, col[i]});
        max_entry = std::max(max_entry, std::abs(col[i]));
      }
  }
  std::erase_if(entries, [&](const Triplet& t) { return std::abs(t.value) < drop_tol * max_entry; });
  return SparseMatrix::from_triplets(n, n, std::move(entries));
}

ILU0::ILU0(const SparseMatrix& m) : lu_(m) {
  const int n = m.rows();
  if (m.cols() != n) throw std::invalid_argument("ILU0: matrix must be square");
  const auto& rp = lu_.row_ptr();
  const auto& ci = lu_.col_idx();
  auto& v = lu_.values();
  diag_.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    diag_[i] = lu_.find(i, i);
    if (diag_[i] < 0) throw std::runtime_error("ILU0: missing diagonal entry in row " + std::to_string(i));
  }
  std::vector<std::int64_t> position(n, -1);
  for (int i = 0; i < n; ++i) {
    for (std::int64_t p = rp[i]; p < rp[i + 1]; ++p) position[ci[p]] = p;
    for (std::int64_t p = rp[i]; p < rp[i + 1] && ci[p] < i; ++p) {
      const int k = ci[p];
      v[p] /= v[diag_[k]];
      const double lik = v[p];
      for (std::int64_t q = diag_[k] + 1; q < rp[k + 1]; ++q) {
        const std::int64_t target = position[ci[q]];
        if (target >= 0) v[target] -= lik * v[q];
      }
    }
    for (std::int64_t p = rp[i]; p < rp[i + 1]; ++p) position[ci[p]] = -1;
    if (v[diag_[i]] == 0.0 || !std::isfinite(v[diag_[i]]))
      throw std::runtime_error("ILU0: zero pivot in row " + std::to_string(i));
  }
}

void ILU0::solve(std::span<const double> r, std::span<double> z) const {
  const int n = lu_.rows();
  const auto& rp = lu_.row_ptr();
  const auto& ci = lu_.col_idx();
  const auto& v = lu_.values();
  for (int i = 0; i < n; ++i) {
    double s = r[i];
    for (std::int64_t p = rp[i]; p < diag_[i]; ++p) s -= v[p] * z[ci[p]];
    z[i] = s;
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = z[i];
    for (std::int64_t p = diag_[i] + 1; p < rp[i + 1]; ++p) s -= v[p] * z[ci[p]];
    z[i] = s / v[diag_[i]];
  }
}

DenseLU::DenseLU(int n, std::vector<double> matrix) : n_(n), lu_(std::move(matrix)) {
  if (static_cast<std::size_t>(n) * n != lu_.size()) throw std::invalid_argument("DenseLU: matrix size mismatch");
  factor();
}

DenseLU::DenseLU(const SparseMatrix& m) : n_(m.rows()) {
  if (m.cols() != n_) throw std::invalid_argument("DenseLU: matrix must be square");
  lu_.assign(static_cast<std::size_t>(n_) * n_, 0.0);
  for (int i = 0; i < n_; ++i)
    for (std::int64_t p = m.row_ptr()[i]; p < m.row_ptr()[i + 1]; ++p)
      lu_[static_cast<std::size_t>(i) * n_ + m.col_idx()[p]] = m.values()[p];
  factor();
}

void DenseLU::factor() {
  const int n = n_;
  perm_.resize(n);
  double scale = 0.0;
  for (double v : lu_) scale = std::max(scale, std::abs(v));
  if (scale == 0.0 && n > 0) throw std::runtime_error("DenseLU: singular matrix (all zero)");
  auto a = [&](int i, int j) -> double& { return lu_[static_cast<std::size_t>(i) * n + j]; };
  for (int i = 0; i < n; ++i) perm_[i] = i;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (std::abs(a(piv, k)) <= 1e-14 * scale)
      throw std::runtime_error("DenseLU: singular matrix at column " + std::to_string(k));
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      std::swap(perm_[k], perm_[piv]);
    }
    const double inv = 1.0 / a(k, k);
    for (int i = k + 1; i < n; ++i) {
      const double l = a(i, k) * inv;
      a(i, k) = l;
      if (l == 0.0) continue;
      double* ri = &a(i, 0);
      const double* rk = &a(k, 0);
      for (int j = k + 1; j < n; ++j) ri[j] -= l * rk[j];
    }
  }
}

void DenseLU::solve(std::span<const double> b, std::span<double> x) const {
  const int n = n_;
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) y[i] = b[perm_[i]];
  for (int i = 0; i < n; ++i) {
    const double* row = &lu_[static_cast<std::size_t>(i) * n];
    double s = y[i];
    for (int j = 0; j < i; ++j) s -= row[j] * y[j];
    y[i] = s;
  }
  for (int i = n - 1; i >= 0; --i) {
    const double* row = &lu_[static_cast<std::size_t>(i) * n];
    double s = y[i];
    for (int j = i + 1; j < n; ++j) s -= row[j] * y[j];
    y[i] = s / row[i];
  }
  std::copy(y.begin(), y.end(), x.begin());
}

std::vector<double> DenseLU::solve(std::span<const double> b) const {
  std::vector<double> x(n_);
  solve(b, x);
  return x;
}

std::vector<double> dense_lu_solve(int n, std::vector<double> matrix, std::span<const double> b) {
  return DenseLU(n, std::move(matrix)).solve(b);
}

void write_matrix_market(const SparseMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_matrix_market: cannot open " + path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << ' ' << m.cols() << ' ' << m.nnz() << '\n';
  out << std::setprecision(17);
  for (int i = 0; i < m.rows(); ++i)
    for (std::int64_t p = m.row_ptr()[i]; p < m.row_ptr()[i + 1]; ++p)
      out << i + 1 << ' ' << m.col_idx()[p] + 1 << ' ' << m.values()[p] << '\n';
}

}  // namespace fembench

#include "ksfem/sparse/csr.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace ksfem::sparse {
namespace {

// Splits [0, rows) into contiguous blocks, one per worker. Output rows are
// disjoint, so results do not depend on the worker count.
template <class Fn> void for_row_blocks(int rows, Fn &&fn) {
  const int workers = std::min(worker_count(), std::max(1, rows / 4096));
  if (workers <= 1) {
    fn(0, rows);
    return;
  }
  std::vector<std::jthread> pool;
  const int chunk = (rows + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int b = w * chunk, e = std::min(rows, b + chunk);
    if (b < e) pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
}

} // namespace

int worker_count() {
  static const int count = [] {
    int n = 0;
    if (const char *env = std::getenv("KSFEM_THREADS")) n = std::atoi(env);
    if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
    return std::max(1, n);
  }();
  return count;
}

CsrMatrix::CsrMatrix(int rows, int cols, std::vector<std::int64_t> row_ptr, std::vector<int> col_idx,
                     std::vector<double> values)
    : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
  if (row_ptr_.size() != static_cast<std::size_t>(rows_) + 1 || col_idx_.size() != values_.size() ||
      row_ptr_.back() != static_cast<std::int64_t>(values_.size()))
    throw std::invalid_argument("CsrMatrix: inconsistent CSR arrays");
  for (int i = 0; i < rows_; ++i)
    for (auto k = row_ptr_[i] + 1; k < row_ptr_[i + 1]; ++k)
      if (col_idx_[k] <= col_idx_[k - 1]) throw std::invalid_argument("CsrMatrix: column indices not increasing");
  for (int c : col_idx_)
    if (c < 0 || c >= cols_) throw std::invalid_argument("CsrMatrix: column index out of range");
}

CsrMatrix CsrMatrix::from_triplets(int rows, int cols, std::vector<Triplet> triplets) {
  std::stable_sort(triplets.begin(), triplets.end(),
                   [](const Triplet &a, const Triplet &b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
  std::vector<std::int64_t> ptr(static_cast<std::size_t>(rows) + 1, 0);
  std::vector<int> col;
  std::vector<double> val;
  col.reserve(triplets.size());
  val.reserve(triplets.size());
  for (std::size_t k = 0; k < triplets.size();) {
    const auto &t = triplets[k];
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      throw std::out_of_range("CsrMatrix::from_triplets: index out of range");
    double sum = 0.0;
    std::size_t e = k;
    while (e < triplets.size() && triplets[e].row == t.row && triplets[e].col == t.col) sum += triplets[e++].value;
    col.push_back(t.col);
    val.push_back(sum);
    ++ptr[static_cast<std::size_t>(t.row) + 1];
    k = e;
  }
  std::partial_sum(ptr.begin(), ptr.end(), ptr.begin());
  return CsrMatrix(rows, cols, std::move(ptr), std::move(col), std::move(val));
}

CsrMatrix CsrMatrix::identity(int n) { return diagonal(Vector::Ones(n)); }

CsrMatrix CsrMatrix::diagonal(const Vector &d) {
  const int n = static_cast<int>(d.size());
  std::vector<std::int64_t> ptr(static_cast<std::size_t>(n) + 1);
  std::vector<int> col(static_cast<std::size_t>(n));
  std::vector<double> val(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    ptr[i + 1] = i + 1;
    col[i] = i;
    val[i] = d[i];
  }
  return CsrMatrix(n, n, std::move(ptr), std::move(col), std::move(val));
}

std::int64_t CsrMatrix::find(int i, int j) const {
  const auto b = col_idx_.begin() + row_ptr_[i], e = col_idx_.begin() + row_ptr_[i + 1];
  const auto it = std::lower_bound(b, e, j);
  if (it == e || *it != j) return -1;
  return it - col_idx_.begin();
}

double CsrMatrix::coeff(int i, int j) const {
  const auto k = find(i, j);
  return k < 0 ? 0.0 : values_[k];
}

void CsrMatrix::multiply(const Vector &x, Vector &y) const {
  if (x.size() != cols_) throw std::invalid_argument("CsrMatrix::multiply: size mismatch");
  y.resize(rows_);
  for_row_blocks(rows_, [&](int b, int e) {
    for (int i = b; i < e; ++i) {
      double s = 0.0;
      for (auto k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += values_[k] * x[col_idx_[k]];
      y[i] = s;
    }
  });
}

Vector CsrMatrix::multiply(const Vector &x) const {
  Vector y;
  multiply(x, y);
  return y;
}

Matrix CsrMatrix::multiply(const Matrix &x) const {
  if (x.rows() != cols_) throw std::invalid_argument("CsrMatrix::multiply: size mismatch");
  Matrix y(rows_, x.cols());
  for_row_blocks(rows_, [&](int b, int e) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double *xc = x.col(c).data();
      double *yc = y.col(c).data();
      for (int i = b; i < e; ++i) {
        double s = 0.0;
        for (auto k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += values_[k] * xc[col_idx_[k]];
        yc[i] = s;
      }
    }
  });
  return y;
}

Vector CsrMatrix::diagonal() const {
  Vector d = Vector::Zero(std::min(rows_, cols_));
  for (int i = 0; i < d.size(); ++i) d[i] = coeff(i, i);
  return d;
}

double CsrMatrix::norm_inf() const {
  double m = 0.0;
  for (int i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (auto k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += std::abs(values_[k]);
    m = std::max(m, s);
  }
  return m;
}

Matrix CsrMatrix::to_dense() const {
  Matrix d = Matrix::Zero(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (auto k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) d(i, col_idx_[k]) = values_[k];
  return d;
}

bool CsrMatrix::same_pattern(const CsrMatrix &other) const {
  return rows_ == other.rows_ && cols_ == other.cols_ && row_ptr_ == other.row_ptr_ && col_idx_ == other.col_idx_;
}

CsrMatrix CsrMatrix::added(const CsrMatrix &other, double alpha) const {
  if (!same_pattern(other)) throw std::invalid_argument("CsrMatrix::added: sparsity patterns differ");
  CsrMatrix r = *this;
  for (std::size_t k = 0; k < values_.size(); ++k) r.values_[k] += alpha * other.values_[k];
  return r;
}

CsrMatrix CsrMatrix::scaled(double alpha) const {
  CsrMatrix r = *this;
  for (auto &v : r.values_) v *= alpha;
  return r;
}

double CsrMatrix::asymmetry() const {
  if (rows_ != cols_) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (int i = 0; i < rows_; ++i)
    for (auto k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const auto t = find(col_idx_[k], i);
      if (t < 0) return std::numeric_limits<double>::infinity();
      m = std::max(m, std::abs(values_[k] - values_[t]));
    }
  return m;
}

} // namespace ksfem::sparse

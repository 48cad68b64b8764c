#pragma once

#include "ksfem/common.hpp"

#include <cstdint>
#include <vector>

namespace ksfem::sparse {

struct Triplet {
  int row;
  int col;
  double value;
};

/// Compressed sparse row matrix. Column indices are strictly increasing
/// within each row.
class CsrMatrix {
public:
  CsrMatrix() = default;
  CsrMatrix(int rows, int cols, std::vector<std::int64_t> row_ptr, std::vector<int> col_idx,
            std::vector<double> values);

  /// Sums duplicate entries. Duplicates are added in input order, so two
  /// triplet lists that differ only in the position of (i,j) and (j,i)
  /// produce bitwise symmetric matrices.
  static CsrMatrix from_triplets(int rows, int cols, std::vector<Triplet> triplets);
  static CsrMatrix identity(int n);
  static CsrMatrix diagonal(const Vector &d);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  const std::vector<std::int64_t> &row_ptr() const noexcept { return row_ptr_; }
  const std::vector<int> &col_idx() const noexcept { return col_idx_; }
  const std::vector<double> &values() const noexcept { return values_; }
  std::vector<double> &values() noexcept { return values_; }

  /// Position of entry (i,j) in values(), or -1 if structurally zero.
  std::int64_t find(int i, int j) const;
  double coeff(int i, int j) const;

  Vector multiply(const Vector &x) const;
  Matrix multiply(const Matrix &x) const;
  void multiply(const Vector &x, Vector &y) const;

  Vector diagonal() const;
  /// Maximum absolute row sum.
  double norm_inf() const;
  Matrix to_dense() const;

  /// this + alpha * other; both must share the sparsity pattern.
  CsrMatrix added(const CsrMatrix &other, double alpha) const;
  CsrMatrix scaled(double alpha) const;

  bool same_pattern(const CsrMatrix &other) const;
  /// max |A_ij - A_ji| over stored entries; +inf if not structurally symmetric.
  double asymmetry() const;

private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::int64_t> row_ptr_{0};
  std::vector<int> col_idx_;
  std::vector<double> values_;
};

/// Worker count for row-parallel kernels: KSFEM_THREADS, 0 or unset = hardware.
int worker_count();

} // namespace ksfem::sparse

#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

namespace alo {

using Index = std::size_t;
using Vector = std::vector<double>;

// rows * cols, throwing SizeError if the product overflows.
Index checked_size(Index rows, Index cols);

/// Column-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(Index rows, Index cols, double fill = 0.0);
  DenseMatrix(Index rows, Index cols, std::vector<double> data);

  static DenseMatrix identity(Index n);

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  Index size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(Index i, Index j) noexcept { return data_[j * rows_ + i]; }
  double operator()(Index i, Index j) const noexcept { return data_[j * rows_ + i]; }

  std::span<double> col(Index j) noexcept { return {data_.data() + j * rows_, rows_}; }
  std::span<const double> col(Index j) const noexcept {
    return {data_.data() + j * rows_, rows_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  void set_zero() noexcept;
  DenseMatrix transposed() const;

  // The smallest entry, +inf for an empty matrix.
  double min_coeff() const noexcept;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<double> data_;
};

/// Read-only view of one compressed column.
struct SparseColumn {
  std::span<const Index> rows;
  std::span<const double> values;
};

/// Compressed sparse-column matrix. Stored values are strictly positive;
/// explicit zeros are rejected so nnz() is the true non-zero count.
class SparseMatrix {
 public:
  struct Triplet {
    Index row;
    Index col;
    double value;
  };

  SparseMatrix() = default;

  // Validates every structural invariant, throws SizeError / DomainError.
  SparseMatrix(Index rows, Index cols, std::vector<Index> col_ptr,
               std::vector<Index> row_idx, std::vector<double> values);

  // Duplicate (row, col) entries are summed; entries that are exactly zero
  // after summation are dropped. Negative / non-finite values throw.
  static SparseMatrix from_triplets(Index rows, Index cols, std::vector<Triplet> triplets);
  static SparseMatrix from_dense(const DenseMatrix& m);

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  Index nnz() const noexcept { return values_.size(); }

  SparseColumn col(Index j) const noexcept {
    const Index b = col_ptr_[j];
    const Index e = col_ptr_[j + 1];
    return {{row_idx_.data() + b, e - b}, {values_.data() + b, e - b}};
  }

  std::span<const Index> col_ptr() const noexcept { return col_ptr_; }
  std::span<const Index> row_idx() const noexcept { return row_idx_; }
  std::span<const double> values() const noexcept { return values_; }

  DenseMatrix to_dense() const;
  SparseMatrix transposed() const;

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Index> col_ptr_{0};
  std::vector<Index> row_idx_;
  std::vector<double> values_;
};

/// A data matrix V is either dense or sparse; every kernel below accepts both.
using DataMatrix = std::variant<DenseMatrix, SparseMatrix>;

Index rows_of(const DataMatrix& v) noexcept;
Index cols_of(const DataMatrix& v) noexcept;
Index nnz_of(const DataMatrix& v) noexcept;
double squared_norm(const DataMatrix& v) noexcept;
double squared_norm(std::span<const double> x) noexcept;
double mean_value(const DataMatrix& v) noexcept;

// Calls fn(row, value) for each stored entry of column j. Dense columns skip
// exact zeros, so both representations visit identical (row, value) pairs in
// identical order.
template <class Fn>
void for_each_nonzero(const DataMatrix& v, Index j, Fn&& fn) {
  if (const auto* d = std::get_if<DenseMatrix>(&v)) {
    const auto c = d->col(j);
    for (Index i = 0; i < c.size(); ++i) {
      if (c[i] != 0.0) fn(i, c[i]);
    }
  } else {
    const auto c = std::get<SparseMatrix>(v).col(j);
    for (Index k = 0; k < c.rows.size(); ++k) fn(c.rows[k], c.values[k]);
  }
}

/// MᵀM, cols(M) x cols(M). Only the upper triangle is computed; the lower
/// triangle is a bitwise mirror.
DenseMatrix gram(const DenseMatrix& m);

/// MMᵀ, rows(M) x rows(M), accumulated column by column. Used on the
/// transposed factor Gᵀ (r x n) whose columns are the rows of G.
DenseMatrix outer_gram(const DenseMatrix& m);

/// GᵀV_col for G (n x r). Cost is nnz(column) * r.
Vector sparse_col_times_dense(const SparseMatrix& v, Index col, const DenseMatrix& g);

/// Same product with the factor supplied transposed (Gᵀ, r x n), so each
/// stored entry touches one contiguous column of Gᵀ. Writes into out (size r).
void project_column(const DataMatrix& v, Index col, const DenseMatrix& gt,
                    std::span<double> out);

/// acc += u vᵀ.
void rank_one_accumulate(DenseMatrix& acc, std::span<const double> u,
                         std::span<const double> v);

/// Upper triangle only of acc += u uᵀ; call mirror_upper() once afterwards.
void symmetric_rank_one_accumulate(DenseMatrix& acc, std::span<const double> u);
void mirror_upper(DenseMatrix& m);

/// ½‖V − GF‖². The sparse path never forms GF:
/// ½(‖V‖² − 2 Σ_nnz Vᵢⱼ Gᵢ·Fⱼ + Σⱼ FⱼᵀQFⱼ), Q = GᵀG.
double frobenius_objective(const DenseMatrix& v, const DenseMatrix& g, const DenseMatrix& f);
double frobenius_objective(const SparseMatrix& v, const DenseMatrix& g, const DenseMatrix& f);
double frobenius_objective(const DataMatrix& v, const DenseMatrix& g, const DenseMatrix& f);

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);

double dot(std::span<const double> a, std::span<const double> b) noexcept;

}  // namespace alo

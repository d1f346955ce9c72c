#include "alo/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "alo/errors.hpp"

namespace alo {

namespace {

std::string dims(Index r, Index c) { return std::to_string(r) + "x" + std::to_string(c); }

}  // namespace

Index checked_size(Index rows, Index cols) {
  if (cols != 0 && rows > std::numeric_limits<Index>::max() / sizeof(double) / cols) {
    throw SizeError("matrix of " + dims(rows, cols) + " elements overflows");
  }
  return rows * cols;
}

DenseMatrix::DenseMatrix(Index rows, Index cols, double fill)
    : rows_(rows), cols_(cols), data_(checked_size(rows, cols), fill) {}

DenseMatrix::DenseMatrix(Index rows, Index cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != checked_size(rows, cols)) {
    throw SizeError("dense data length " + std::to_string(data_.size()) + " does not match " +
                    dims(rows, cols));
  }
}

DenseMatrix DenseMatrix::identity(Index n) {
  DenseMatrix m(n, n);
  for (Index i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void DenseMatrix::set_zero() noexcept { std::fill(data_.begin(), data_.end(), 0.0); }

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (Index j = 0; j < cols_; ++j) {
    for (Index i = 0; i < rows_; ++i) t(j, i) = (*this)(i, j);
  }
  return t;
}

double DenseMatrix::min_coeff() const noexcept {
  double m = std::numeric_limits<double>::infinity();
  for (double x : data_) m = std::min(m, x);
  return m;
}

SparseMatrix::SparseMatrix(Index rows, Index cols, std::vector<Index> col_ptr,
                           std::vector<Index> row_idx, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      col_ptr_(std::move(col_ptr)),
      row_idx_(std::move(row_idx)),
      values_(std::move(values)) {
  if (col_ptr_.size() != cols_ + 1 || col_ptr_.front() != 0) {
    throw SizeError("column pointer array must have cols+1 entries starting at 0");
  }
  if (row_idx_.size() != values_.size() || col_ptr_.back() != values_.size()) {
    throw SizeError("last column pointer must equal nnz");
  }
  for (Index j = 0; j < cols_; ++j) {
    if (col_ptr_[j + 1] < col_ptr_[j]) throw SizeError("column pointers must be non-decreasing");
    for (Index k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) {
      if (row_idx_[k] >= rows_) throw BoundsError("row index out of range");
      if (k > col_ptr_[j] && row_idx_[k] <= row_idx_[k - 1]) {
        throw SizeError("row indices must be strictly increasing within a column");
      }
      if (!(values_[k] > 0.0) || !std::isfinite(values_[k])) {
        throw DomainError("sparse values must be finite and strictly positive");
      }
    }
  }
}

SparseMatrix SparseMatrix::from_triplets(Index rows, Index cols, std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row >= rows || t.col >= cols) throw BoundsError("triplet index out of range");
    if (!std::isfinite(t.value) || t.value < 0.0) {
      throw DomainError("triplet values must be finite and non-negative");
    }
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.col != b.col ? a.col < b.col : a.row < b.row;
  });

  std::vector<Index> ptr(cols + 1, 0);
  std::vector<Index> idx;
  std::vector<double> val;
  idx.reserve(triplets.size());
  val.reserve(triplets.size());
  for (Index k = 0; k < triplets.size();) {
    const Triplet& t = triplets[k];
    double sum = 0.0;
    Index e = k;
    while (e < triplets.size() && triplets[e].row == t.row && triplets[e].col == t.col) {
      sum += triplets[e].value;
      ++e;
    }
    if (sum > 0.0) {
      idx.push_back(t.row);
      val.push_back(sum);
      ++ptr[t.col + 1];
    }
    k = e;
  }
  for (Index j = 0; j < cols; ++j) ptr[j + 1] += ptr[j];
  return SparseMatrix(rows, cols, std::move(ptr), std::move(idx), std::move(val));
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& m) {
  std::vector<Index> ptr(m.cols() + 1, 0);
  std::vector<Index> idx;
  std::vector<double> val;
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      if (m(i, j) != 0.0) {
        idx.push_back(i);
        val.push_back(m(i, j));
      }
    }
    ptr[j + 1] = idx.size();
  }
  return SparseMatrix(m.rows(), m.cols(), std::move(ptr), std::move(idx), std::move(val));
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d(rows_, cols_);
  for (Index j = 0; j < cols_; ++j) {
    for (Index k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) d(row_idx_[k], j) = values_[k];
  }
  return d;
}

SparseMatrix SparseMatrix::transposed() const {
  std::vector<Index> ptr(rows_ + 1, 0);
  for (Index r : row_idx_) ++ptr[r + 1];
  for (Index i = 0; i < rows_; ++i) ptr[i + 1] += ptr[i];
  std::vector<Index> next(ptr.begin(), ptr.end() - 1);
  std::vector<Index> idx(nnz());
  std::vector<double> val(nnz());
  // Visiting source columns in order keeps row indices sorted in the result.
  for (Index j = 0; j < cols_; ++j) {
    for (Index k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) {
      const Index dst = next[row_idx_[k]]++;
      idx[dst] = j;
      val[dst] = values_[k];
    }
  }
  return SparseMatrix(cols_, rows_, std::move(ptr), std::move(idx), std::move(val));
}

Index rows_of(const DataMatrix& v) noexcept {
  return std::visit([](const auto& m) { return m.rows(); }, v);
}

Index cols_of(const DataMatrix& v) noexcept {
  return std::visit([](const auto& m) { return m.cols(); }, v);
}

Index nnz_of(const DataMatrix& v) noexcept {
  if (const auto* s = std::get_if<SparseMatrix>(&v)) return s->nnz();
  const auto& d = std::get<DenseMatrix>(v);
  return static_cast<Index>(
      std::count_if(d.data().begin(), d.data().end(), [](double x) { return x != 0.0; }));
}

double squared_norm(std::span<const double> x) noexcept {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double squared_norm(const DataMatrix& v) noexcept {
  double s = 0.0;
  for (Index j = 0; j < cols_of(v); ++j) {
    for_each_nonzero(v, j, [&](Index, double x) { s += x * x; });
  }
  return s;
}

double mean_value(const DataMatrix& v) noexcept {
  const Index n = rows_of(v) * cols_of(v);
  if (n == 0) return 0.0;
  double s = 0.0;
  for (Index j = 0; j < cols_of(v); ++j) {
    for_each_nonzero(v, j, [&](Index, double x) { s += x; });
  }
  return s / static_cast<double>(n);
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (Index i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

DenseMatrix gram(const DenseMatrix& m) {
  const Index r = m.cols();
  DenseMatrix q(r, r);
  for (Index j = 0; j < r; ++j) {
    const auto cj = m.col(j);
    for (Index i = 0; i <= j; ++i) q(i, j) = dot(m.col(i), cj);
  }
  mirror_upper(q);
  return q;
}

DenseMatrix outer_gram(const DenseMatrix& m) {
  DenseMatrix q(m.rows(), m.rows());
  for (Index j = 0; j < m.cols(); ++j) symmetric_rank_one_accumulate(q, m.col(j));
  mirror_upper(q);
  return q;
}

Vector sparse_col_times_dense(const SparseMatrix& v, Index col, const DenseMatrix& g) {
  if (col >= v.cols()) throw BoundsError("column " + std::to_string(col) + " out of range");
  if (g.rows() != v.rows()) throw SizeError("G rows must equal V rows");
  Vector out(g.cols(), 0.0);
  const auto c = v.col(col);
  for (Index k = 0; k < g.cols(); ++k) {
    double s = 0.0;
    for (Index t = 0; t < c.rows.size(); ++t) s += c.values[t] * g(c.rows[t], k);
    out[k] = s;
  }
  return out;
}

void project_column(const DataMatrix& v, Index col, const DenseMatrix& gt,
                    std::span<double> out) {
  if (col >= cols_of(v)) throw BoundsError("column " + std::to_string(col) + " out of range");
  if (gt.cols() != rows_of(v) || out.size() != gt.rows()) {
    throw SizeError("projection dimensions do not match");
  }
  std::fill(out.begin(), out.end(), 0.0);
  const Index r = gt.rows();
  for_each_nonzero(v, col, [&](Index i, double x) {
    const auto g = gt.col(i);
    for (Index k = 0; k < r; ++k) out[k] += x * g[k];
  });
}

void rank_one_accumulate(DenseMatrix& acc, std::span<const double> u,
                         std::span<const double> v) {
  if (acc.rows() != u.size() || acc.cols() != v.size()) {
    throw SizeError("accumulator is " + dims(acc.rows(), acc.cols()) + ", update is " +
                    dims(u.size(), v.size()));
  }
  for (Index j = 0; j < v.size(); ++j) {
    const double vj = v[j];
    if (vj == 0.0) continue;
    auto c = acc.col(j);
    for (Index i = 0; i < u.size(); ++i) c[i] += u[i] * vj;
  }
}

void symmetric_rank_one_accumulate(DenseMatrix& acc, std::span<const double> u) {
  if (acc.rows() != u.size() || acc.cols() != u.size()) {
    throw SizeError("symmetric accumulator does not match vector length");
  }
  for (Index j = 0; j < u.size(); ++j) {
    const double uj = u[j];
    if (uj == 0.0) continue;
    auto c = acc.col(j);
    for (Index i = 0; i <= j; ++i) c[i] += u[i] * uj;
  }
}

void mirror_upper(DenseMatrix& m) {
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = j + 1; i < m.rows(); ++i) m(i, j) = m(j, i);
  }
}

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw SizeError("inner dimensions do not match");
  DenseMatrix c(a.rows(), b.cols());
  for (Index j = 0; j < b.cols(); ++j) {
    auto cj = c.col(j);
    for (Index k = 0; k < a.cols(); ++k) {
      const double bkj = b(k, j);
      if (bkj == 0.0) continue;
      const auto ak = a.col(k);
      for (Index i = 0; i < a.rows(); ++i) cj[i] += ak[i] * bkj;
    }
  }
  return c;
}

namespace {

void check_objective_dims(Index n, Index m, const DenseMatrix& g, const DenseMatrix& f) {
  if (g.rows() != n || f.cols() != m || g.cols() != f.rows()) {
    throw SizeError("objective expects V " + dims(n, m) + ", got G " + dims(g.rows(), g.cols()) +
                    " and F " + dims(f.rows(), f.cols()));
  }
}

}  // namespace

double frobenius_objective(const DenseMatrix& v, const DenseMatrix& g, const DenseMatrix& f) {
  check_objective_dims(v.rows(), v.cols(), g, f);
  const DenseMatrix gf = multiply(g, f);
  double s = 0.0;
  for (Index k = 0; k < v.size(); ++k) {
    const double d = v.data()[k] - gf.data()[k];
    s += d * d;
  }
  return 0.5 * s;
}

double frobenius_objective(const SparseMatrix& v, const DenseMatrix& g, const DenseMatrix& f) {
  check_objective_dims(v.rows(), v.cols(), g, f);
  const Index r = g.cols();
  const DenseMatrix q = gram(g);
  double norm_v = 0.0;
  double cross = 0.0;
  double quad = 0.0;
  Vector qf(r);
  for (Index j = 0; j < v.cols(); ++j) {
    const auto fj = f.col(j);
    const auto c = v.col(j);
    for (Index t = 0; t < c.rows.size(); ++t) {
      const Index i = c.rows[t];
      double gi_fj = 0.0;
      for (Index k = 0; k < r; ++k) gi_fj += g(i, k) * fj[k];
      cross += c.values[t] * gi_fj;
      norm_v += c.values[t] * c.values[t];
    }
    for (Index a = 0; a < r; ++a) qf[a] = dot(q.col(a), fj);
    quad += dot(qf, fj);
  }
  return 0.5 * (norm_v - 2.0 * cross + quad);
}

double frobenius_objective(const DataMatrix& v, const DenseMatrix& g, const DenseMatrix& f) {
  return std::visit([&](const auto& m) { return frobenius_objective(m, g, f); }, v);
}

}  // namespace alo

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace fimscore {

// Row-major dense matrix of doubles. Sized for FIM slices and small
// transforms (tens of rows), not a general BLAS replacement.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<const double> diag);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  std::vector<double> column(std::size_t c) const;
  DenseMatrix transpose() const;
  // Rows selected by index, in the given order.
  DenseMatrix select_rows(std::span<const std::size_t> indices) const;
  // Rows [begin, end).
  DenseMatrix slice_rows(std::size_t begin, std::size_t end) const;
  void append_row(std::span<const double> values);

  double trace() const;
  bool all_finite() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
std::vector<double> matvec(const DenseMatrix& a, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double max_abs(std::span<const double> v);
double max_abs_diff(std::span<const double> a, std::span<const double> b);

// LU factorisation with partial pivoting. Throws SingularMatrixError naming
// the first pivot whose magnitude is <= kPivotTolerance.
class LuDecomposition {
 public:
  static constexpr double kPivotTolerance = 1e-12;

  explicit LuDecomposition(DenseMatrix a);

  std::vector<double> solve(std::span<const double> b) const;
  double log_abs_det() const;
  int det_sign() const { return sign_; }

 private:
  DenseMatrix lu_;
  std::vector<std::size_t> perm_;
  int sign_ = 1;
};

std::vector<double> solve_dense(const DenseMatrix& a, std::span<const double> b);
double log_abs_det(const DenseMatrix& a);

// Eigenvalues of a symmetric matrix (cyclic Jacobi), ascending.
std::vector<double> symmetric_eigenvalues(const DenseMatrix& a);

}  // namespace fimscore

#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace fairexit {

// Dense row-major matrix of doubles. The only numeric container in the
// library; desk-scale problem sizes make sparsity and BLAS unnecessary.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // rows * cols, row-major

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0);

  static Matrix row_vector(std::vector<double> v);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rs);

  double& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

  long size() const { return static_cast<long>(rows) * cols; }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  bool all_finite() const;

  std::string shape_str() const;
};

bool bitwise_equal(const Matrix& a, const Matrix& b);

// Throws std::runtime_error naming `what` if any entry is non-finite.
void check_finite(const Matrix& m, const char* what);

// ---- plain (non-differentiating) kernels --------------------------------
// Used by inference, metrics and the test oracles. The differentiable
// counterparts live in autodiff.hpp.

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double c);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix relu(const Matrix& x);
Matrix add_rowvec(const Matrix& x, const Matrix& row);

// Row-wise softmax, stabilised by per-row max subtraction.
Matrix softmax_rows(const Matrix& logits);

// Mean negative log-softmax of the true class over the batch.
double cross_entropy(const Matrix& logits, const std::vector<int>& labels);

// K[i,j] = exp(-|x_i - x_j|^2 / (2 bw^2)); symmetric, unit diagonal.
Matrix gaussian_kernel_matrix(const Matrix& x, double bandwidth);
Matrix gaussian_cross_kernel_matrix(const Matrix& x, const Matrix& y, double bandwidth);

// Argmax per row; ties broken by the lowest column index.
std::vector<int> argmax_rows(const Matrix& m);
std::vector<double> rowmax(const Matrix& m);

double sum_all(const Matrix& m);
double mean_all(const Matrix& m);

// Median of pairwise Euclidean distances, the usual kernel bandwidth
// heuristic. Falls back to 1.0 when all rows coincide.
double median_pairwise_distance(const Matrix& x);

}  // namespace fairexit

#include "fairexit/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace fairexit {

Matrix::Matrix(int r, int c, double fill) : rows(r), cols(c) {
  if (r < 0 || c < 0) throw std::invalid_argument("Matrix: negative dimensions");
  data.assign(static_cast<std::size_t>(r) * c, fill);
}

Matrix Matrix::row_vector(std::vector<double> v) {
  Matrix m;
  m.rows = 1;
  m.cols = static_cast<int>(v.size());
  m.data = std::move(v);
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rs) {
  Matrix m(static_cast<int>(rs.size()), rs.size() ? static_cast<int>(rs.begin()->size()) : 0);
  int i = 0;
  for (const auto& r : rs) {
    if (static_cast<int>(r.size()) != m.cols)
      throw std::invalid_argument("Matrix::from_rows: ragged rows");
    int j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Matrix::shape_str() const {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) return false;
  if (a.data.empty()) return true;
  return std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0;
}

void check_finite(const Matrix& m, const char* what) {
  if (!m.all_finite())
    throw std::runtime_error(std::string(what) + ": non-finite value in " + m.shape_str() +
                             " matrix");
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows)
    throw std::invalid_argument("matmul: dimension mismatch " + a.shape_str() + " * " +
                                b.shape_str());
  Matrix c(a.rows, b.cols);
  // i-k-j order keeps the inner loop contiguous in both b and c.
  for (int i = 0; i < a.rows; ++i) {
    double* crow = &c.data[static_cast<std::size_t>(i) * c.cols];
    const double* arow = &a.data[static_cast<std::size_t>(i) * a.cols];
    for (int k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = &b.data[static_cast<std::size_t>(k) * b.cols];
      for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

static void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                                b.shape_str());
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix c = a;
  for (long i = 0; i < c.size(); ++i) c.data[i] += b.data[i];
  return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "sub");
  Matrix c = a;
  for (long i = 0; i < c.size(); ++i) c.data[i] -= b.data[i];
  return c;
}

Matrix scale(const Matrix& a, double c) {
  Matrix r = a;
  for (double& v : r.data) v *= c;
  return r;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix c = a;
  for (long i = 0; i < c.size(); ++i) c.data[i] *= b.data[i];
  return c;
}

Matrix relu(const Matrix& x) {
  Matrix r = x;
  for (double& v : r.data) v = v > 0.0 ? v : 0.0;
  return r;
}

Matrix add_rowvec(const Matrix& x, const Matrix& row) {
  if (row.rows != 1 || row.cols != x.cols)
    throw std::invalid_argument("add_rowvec: expected 1x" + std::to_string(x.cols) + ", got " +
                                row.shape_str());
  Matrix r = x;
  for (int i = 0; i < r.rows; ++i)
    for (int j = 0; j < r.cols; ++j) r(i, j) += row(0, j);
  return r;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows, logits.cols);
  for (int i = 0; i < logits.rows; ++i) {
    double m = -HUGE_VAL;
    for (int j = 0; j < logits.cols; ++j) m = std::max(m, logits(i, j));
    double z = 0.0;
    for (int j = 0; j < logits.cols; ++j) {
      const double e = std::exp(logits(i, j) - m);
      p(i, j) = e;
      z += e;
    }
    for (int j = 0; j < logits.cols; ++j) p(i, j) /= z;
  }
  return p;
}

double cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
  if (static_cast<int>(labels.size()) != logits.rows)
    throw std::invalid_argument("cross_entropy: " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(logits.rows) + " rows");
  double total = 0.0;
  for (int i = 0; i < logits.rows; ++i) {
    const int y = labels[i];
    if (y < 0 || y >= logits.cols)
      throw std::invalid_argument("cross_entropy: label " + std::to_string(y) + " at row " +
                                  std::to_string(i) + " outside [0," +
                                  std::to_string(logits.cols) + ")");
    double m = -HUGE_VAL;
    for (int j = 0; j < logits.cols; ++j) m = std::max(m, logits(i, j));
    double z = 0.0;
    for (int j = 0; j < logits.cols; ++j) z += std::exp(logits(i, j) - m);
    total += m + std::log(z) - logits(i, y);
  }
  return total / logits.rows;
}

static double squared_row_distance(const Matrix& a, int i, const Matrix& b, int j) {
  double d = 0.0;
  const double* pa = &a.data[static_cast<std::size_t>(i) * a.cols];
  const double* pb = &b.data[static_cast<std::size_t>(j) * b.cols];
  for (int k = 0; k < a.cols; ++k) {
    const double t = pa[k] - pb[k];
    d += t * t;
  }
  return d;
}

Matrix gaussian_kernel_matrix(const Matrix& x, double bandwidth) {
  if (!(bandwidth > 0.0))
    throw std::invalid_argument("gaussian_kernel_matrix: bandwidth must be positive");
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  Matrix k(x.rows, x.rows);
  for (int i = 0; i < x.rows; ++i) {
    k(i, i) = 1.0;
    for (int j = i + 1; j < x.rows; ++j) {
      const double v = std::exp(-squared_row_distance(x, i, x, j) * inv);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

Matrix gaussian_cross_kernel_matrix(const Matrix& x, const Matrix& y, double bandwidth) {
  if (!(bandwidth > 0.0))
    throw std::invalid_argument("gaussian_cross_kernel_matrix: bandwidth must be positive");
  if (x.cols != y.cols)
    throw std::invalid_argument("gaussian_cross_kernel_matrix: feature dims differ");
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  Matrix k(x.rows, y.rows);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < y.rows; ++j)
      k(i, j) = std::exp(-squared_row_distance(x, i, y, j) * inv);
  return k;
}

std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> out(m.rows, 0);
  for (int i = 0; i < m.rows; ++i) {
    int best = 0;
    for (int j = 1; j < m.cols; ++j)
      if (m(i, j) > m(i, best)) best = j;
    out[i] = best;
  }
  return out;
}

std::vector<double> rowmax(const Matrix& m) {
  std::vector<double> out(m.rows, -HUGE_VAL);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) out[i] = std::max(out[i], m(i, j));
  return out;
}

double sum_all(const Matrix& m) {
  double s = 0.0;
  for (double v : m.data) s += v;
  return s;
}

double mean_all(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return sum_all(m) / static_cast<double>(m.size());
}

double median_pairwise_distance(const Matrix& x) {
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(x.rows) * (x.rows - 1) / 2);
  for (int i = 0; i < x.rows; ++i)
    for (int j = i + 1; j < x.rows; ++j)
      d.push_back(std::sqrt(squared_row_distance(x, i, x, j)));
  if (d.empty()) return 1.0;
  std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
  const double med = d[d.size() / 2];
  return med > 0.0 ? med : 1.0;
}

}  // namespace fairexit

#include "rare/matrix.hpp"

#include <cmath>
#include <cstring>

#include "rare/common.hpp"

namespace rare {

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// i-k-j order: the inner loop streams rows of b and c
Matrix matmul(const Matrix& a, const Matrix& b) {
  require_input(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  int64_t n = a.rows(), k = a.cols(), m = b.cols();
  for (int64_t i = 0; i < n; ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (int64_t p = 0; p < k; ++p) {
      double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b.row(p);
      for (int64_t j = 0; j < m; ++j) ci[j] += av * bp[j];
    }
  }
  return c;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
  require_input(a.rows() == b.rows(), "matmul_at_b: row counts differ");
  Matrix c(a.cols(), b.cols());
  int64_t n = a.rows(), k = a.cols(), m = b.cols();
  for (int64_t i = 0; i < n; ++i) {
    const double* ai = a.row(i);
    const double* bi = b.row(i);
    for (int64_t p = 0; p < k; ++p) {
      double av = ai[p];
      if (av == 0.0) continue;
      double* cp = c.row(p);
      for (int64_t j = 0; j < m; ++j) cp[j] += av * bi[j];
    }
  }
  return c;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
  require_input(a.cols() == b.cols(), "matmul_a_bt: column counts differ");
  Matrix c(a.rows(), b.rows());
  int64_t n = a.rows(), k = a.cols(), m = b.rows();
  for (int64_t i = 0; i < n; ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (int64_t j = 0; j < m; ++j) {
      const double* bj = b.row(j);
      double acc = 0.0;
      for (int64_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] = acc;
    }
  }
  return c;
}

void add_scaled(Matrix& dst, const Matrix& src, double s) {
  require_input(dst.rows() == src.rows() && dst.cols() == src.cols(),
                "add_scaled: shape mismatch");
  double* d = dst.data().data();
  const double* x = src.data().data();
  int64_t n = dst.size();
  for (int64_t i = 0; i < n; ++i) d[i] += s * x[i];
}

Matrix hcat(const Matrix& a, const Matrix& b) {
  require_input(a.rows() == b.rows(), "hcat: row counts differ");
  Matrix c(a.rows(), a.cols() + b.cols());
  for (int64_t i = 0; i < a.rows(); ++i) {
    std::memcpy(c.row(i), a.row(i), static_cast<size_t>(a.cols()) * sizeof(double));
    std::memcpy(c.row(i) + a.cols(), b.row(i), static_cast<size_t>(b.cols()) * sizeof(double));
  }
  return c;
}

}  // namespace rare

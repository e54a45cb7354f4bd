#include "chafee/simd/kernels.hpp"

namespace chafee::simd {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double weighted_sum_squares(const double* w, const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * x[i] * x[i];
  return s;
}

void matvec(const double* a, std::size_t rows, std::size_t cols, std::size_t ld,
            const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(a + r * ld, x, cols);
}

void matmat(const double* a, std::size_t rows, std::size_t cols, std::size_t ld,
            const double* x, std::size_t ldx, std::size_t m, double* y, std::size_t ldy) {
  for (std::size_t j = 0; j < m; ++j) matvec(a, rows, cols, ld, x + j * ldx, y + j * ldy);
}

void cube(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] * x[i] * x[i];
}

void mul(const double* a, const double* b, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a[i] * b[i];
}

void scaled_square(const double* x, double s, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = s * (x[i] * x[i]);
}

void diagonal_step(const double* decay, const double* gain, const double* u,
                   const double* dw, const double* f, double* y, std::size_t n) {
  if (dw != nullptr) {
    for (std::size_t i = 0; i < n; ++i) y[i] = decay[i] * (u[i] + dw[i]) + gain[i] * f[i];
  } else {
    for (std::size_t i = 0; i < n; ++i) y[i] = decay[i] * u[i] + gain[i] * f[i];
  }
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{dot,  weighted_sum_squares, matvec, matmat, cube, mul, scaled_square,
                                 diagonal_step, axpy, scale};
  return table;
}

}  // namespace chafee::simd

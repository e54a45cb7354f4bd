// Compiled with -mavx2 -mfma. Nothing in this file may run unless
// isa_available(Isa::Avx2) returned true.

#include "chafee/simd/kernels.hpp"

#include <immintrin.h>

namespace chafee::simd {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double weighted_sum_squares(const double* w, const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xv = _mm256_loadu_pd(x + i);
    acc = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(w + i), xv), xv, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * x[i] * x[i];
  return s;
}

// Four rows of A against one vector: each load of x feeds four FMAs.
inline void rows4(const double* a0, std::size_t cols, std::size_t ld, const double* x, double* y) {
  const double* a1 = a0 + ld;
  const double* a2 = a1 + ld;
  const double* a3 = a2 + ld;
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  __m256d s2 = _mm256_setzero_pd();
  __m256d s3 = _mm256_setzero_pd();
  std::size_t c = 0;
  for (; c + 4 <= cols; c += 4) {
    __m256d xv = _mm256_loadu_pd(x + c);
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a0 + c), xv, s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a1 + c), xv, s1);
    s2 = _mm256_fmadd_pd(_mm256_loadu_pd(a2 + c), xv, s2);
    s3 = _mm256_fmadd_pd(_mm256_loadu_pd(a3 + c), xv, s3);
  }
  double t0 = hsum(s0), t1 = hsum(s1), t2 = hsum(s2), t3 = hsum(s3);
  for (; c < cols; ++c) {
    t0 += a0[c] * x[c];
    t1 += a1[c] * x[c];
    t2 += a2[c] * x[c];
    t3 += a3[c] * x[c];
  }
  y[0] = t0;
  y[1] = t1;
  y[2] = t2;
  y[3] = t3;
}

// Four rows against two vectors: eight independent FMA chains hide the FMA
// latency. Each output uses the same summation order as rows4.
inline void rows4x2(const double* a0, std::size_t cols, std::size_t ld, const double* x,
                    const double* x2, double* y, double* y2) {
  const double* a1 = a0 + ld;
  const double* a2 = a1 + ld;
  const double* a3 = a2 + ld;
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  __m256d s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
  __m256d r0 = _mm256_setzero_pd(), r1 = _mm256_setzero_pd();
  __m256d r2 = _mm256_setzero_pd(), r3 = _mm256_setzero_pd();
  std::size_t c = 0;
  for (; c + 4 <= cols; c += 4) {
    const __m256d xv = _mm256_loadu_pd(x + c);
    const __m256d xw = _mm256_loadu_pd(x2 + c);
    const __m256d v0 = _mm256_loadu_pd(a0 + c);
    const __m256d v1 = _mm256_loadu_pd(a1 + c);
    const __m256d v2 = _mm256_loadu_pd(a2 + c);
    const __m256d v3 = _mm256_loadu_pd(a3 + c);
    s0 = _mm256_fmadd_pd(v0, xv, s0);
    s1 = _mm256_fmadd_pd(v1, xv, s1);
    s2 = _mm256_fmadd_pd(v2, xv, s2);
    s3 = _mm256_fmadd_pd(v3, xv, s3);
    r0 = _mm256_fmadd_pd(v0, xw, r0);
    r1 = _mm256_fmadd_pd(v1, xw, r1);
    r2 = _mm256_fmadd_pd(v2, xw, r2);
    r3 = _mm256_fmadd_pd(v3, xw, r3);
  }
  double t0 = hsum(s0), t1 = hsum(s1), t2 = hsum(s2), t3 = hsum(s3);
  double q0 = hsum(r0), q1 = hsum(r1), q2 = hsum(r2), q3 = hsum(r3);
  for (; c < cols; ++c) {
    t0 += a0[c] * x[c];
    t1 += a1[c] * x[c];
    t2 += a2[c] * x[c];
    t3 += a3[c] * x[c];
    q0 += a0[c] * x2[c];
    q1 += a1[c] * x2[c];
    q2 += a2[c] * x2[c];
    q3 += a3[c] * x2[c];
  }
  y[0] = t0;
  y[1] = t1;
  y[2] = t2;
  y[3] = t3;
  y2[0] = q0;
  y2[1] = q1;
  y2[2] = q2;
  y2[3] = q3;
}

void matvec(const double* a, std::size_t rows, std::size_t cols, std::size_t ld,
            const double* x, double* y) {
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) rows4(a + r * ld, cols, ld, x, y + r);
  for (; r < rows; ++r) y[r] = dot(a + r * ld, x, cols);
}

void matmat(const double* a, std::size_t rows, std::size_t cols, std::size_t ld,
            const double* x, std::size_t ldx, std::size_t m, double* y, std::size_t ldy) {
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    std::size_t j = 0;
    for (; j + 2 <= m; j += 2) {
      rows4x2(a + r * ld, cols, ld, x + j * ldx, x + (j + 1) * ldx, y + j * ldy + r,
              y + (j + 1) * ldy + r);
    }
    if (j < m) rows4(a + r * ld, cols, ld, x + j * ldx, y + j * ldy + r);
  }
  for (; r < rows; ++r) {
    for (std::size_t j = 0; j < m; ++j) y[j * ldy + r] = dot(a + r * ld, x + j * ldx, cols);
  }
}

void cube(const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(y + i, _mm256_mul_pd(_mm256_mul_pd(v, v), v));
  }
  for (; i < n; ++i) y[i] = x[i] * x[i] * x[i];
}

void mul(const double* a, const double* b, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) y[i] = a[i] * b[i];
}

void scaled_square(const double* x, double s, double* y, std::size_t n) {
  const __m256d sv = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(y + i, _mm256_mul_pd(sv, _mm256_mul_pd(v, v)));
  }
  for (; i < n; ++i) y[i] = s * (x[i] * x[i]);
}

// Same association as the scalar kernel except that gain*f is fused into the
// final add.
void diagonal_step(const double* decay, const double* gain, const double* u,
                   const double* dw, const double* f, double* y, std::size_t n) {
  std::size_t i = 0;
  if (dw != nullptr) {
    for (; i + 4 <= n; i += 4) {
      __m256d base = _mm256_add_pd(_mm256_loadu_pd(u + i), _mm256_loadu_pd(dw + i));
      __m256d lin = _mm256_mul_pd(_mm256_loadu_pd(decay + i), base);
      _mm256_storeu_pd(y + i, _mm256_fmadd_pd(_mm256_loadu_pd(gain + i), _mm256_loadu_pd(f + i), lin));
    }
    for (; i < n; ++i) y[i] = __builtin_fma(gain[i], f[i], decay[i] * (u[i] + dw[i]));
  } else {
    for (; i + 4 <= n; i += 4) {
      __m256d lin = _mm256_mul_pd(_mm256_loadu_pd(decay + i), _mm256_loadu_pd(u + i));
      _mm256_storeu_pd(y + i, _mm256_fmadd_pd(_mm256_loadu_pd(gain + i), _mm256_loadu_pd(f + i), lin));
    }
    for (; i < n; ++i) y[i] = __builtin_fma(gain[i], f[i], decay[i] * u[i]);
  }
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] = __builtin_fma(a, x[i], y[i]);
}

void scale(double a, double* x, std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{dot,  weighted_sum_squares, matvec, matmat, cube, mul, scaled_square,
                                 diagonal_step, axpy, scale};
  return table;
}

}  // namespace chafee::simd

#pragma once

// Data-parallel inner loops used by the spectral transforms and the time
// steppers. Every kernel has a scalar reference implementation; an AVX2/FMA
// variant is selected at runtime when the CPU supports it. The two variants
// agree to rounding (they are not bit-identical: the vector code reassociates
// sums and fuses multiply-adds).

#include <cstddef>
#include <string_view>

namespace chafee::simd {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);

struct KernelTable {
  /// sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);

  /// sum_i w[i] * x[i]^2
  double (*weighted_sum_squares)(const double* w, const double* x, std::size_t n);

  /// y = A x for a row-major A with leading dimension `ld` (ld >= cols).
  void (*matvec)(const double* a, std::size_t rows, std::size_t cols, std::size_t ld,
                 const double* x, double* y);

  /// y_j = A x_j for j < m, with x_j = x + j * ldx and y_j = y + j * ldy.
  /// Each y_j is bit-identical to matvec on x_j; the batch only reuses the
  /// rows of A while they are in cache.
  void (*matmat)(const double* a, std::size_t rows, std::size_t cols, std::size_t ld,
                 const double* x, std::size_t ldx, std::size_t m, double* y, std::size_t ldy);

  /// y[i] = x[i]^3
  void (*cube)(const double* x, double* y, std::size_t n);

  /// y[i] = a[i] * b[i]
  void (*mul)(const double* a, const double* b, double* y, std::size_t n);

  /// y[i] = s * x[i]^2
  void (*scaled_square)(const double* x, double s, double* y, std::size_t n);

  /// y[i] = decay[i] * (u[i] + dw[i]) + gain[i] * f[i]; `dw` may be null.
  /// One kernel serves both the exponential and the semi-implicit Euler
  /// steps; only the coefficient arrays differ.
  void (*diagonal_step)(const double* decay, const double* gain, const double* u,
                        const double* dw, const double* f, double* y, std::size_t n);

  /// y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);

  /// x[i] *= a
  void (*scale)(double a, double* x, std::size_t n);
};

const KernelTable& scalar_kernels();
#if defined(CHAFEE_HAVE_AVX2_TU)
const KernelTable& avx2_kernels();
#endif

/// True when `isa` was compiled in and the running CPU supports it.
bool isa_available(Isa isa);

/// Best available ISA on this machine.
Isa detect_isa();

/// Currently selected ISA. Defaults to detect_isa(); the environment variable
/// CHAFEE_ISA=scalar forces the reference kernels.
Isa active_isa();

/// Select the kernel set used by kernels(). Not synchronized with running
/// computations; call it before starting work. Throws std::invalid_argument if
/// the ISA is not available.
void set_isa(Isa isa);

const KernelTable& kernels_for(Isa isa);

/// Kernel table for the active ISA.
const KernelTable& kernels();

}  // namespace chafee::simd

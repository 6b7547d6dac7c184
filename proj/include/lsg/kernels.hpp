#pragma once

#include <cstddef>
#include <string>

// Low-level numeric kernels on raw row-major double buffers.
//
// Every kernel has a scalar reference implementation; the hot ones
// (matmul, elementwise arithmetic, the Adam update) additionally have
// AVX2 variants selected at runtime. The AVX2 variants are written to
// preserve the scalar accumulation order (vectorized across independent
// outputs, mul followed by add, no FMA), so both backends produce
// bit-identical results; the equivalence tests assert exact equality.
// Kernels whose vectorization would reorder a running sum (sum, sumsq,
// row_sum) and the libm-backed transcendentals stay scalar in both
// backends.

namespace lsg::kernels {

enum class Backend {
    Scalar,
    Avx2,
};

// Highest backend this CPU supports.
Backend detect_backend();

// Active backend. Defaults to detect_backend(); honors LSG_SIMD=scalar|avx2
// if set at process start. set_backend with an unsupported backend throws.
Backend active_backend();
void set_backend(Backend b);
std::string backend_name(Backend b);

// c[m x n] = a[m x k] * b[k x n]; c is overwritten.
void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n);

// out[cols x rows] = transpose of a[rows x cols].
void transpose(const double* a, double* out, std::size_t rows, std::size_t cols);

// Elementwise binaries, out may alias a or b.
void add(const double* a, const double* b, double* out, std::size_t n);
void sub(const double* a, const double* b, double* out, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
void div(const double* a, const double* b, double* out, std::size_t n);

void add_scalar(const double* a, double s, double* out, std::size_t n);
void mul_scalar(const double* a, double s, double* out, std::size_t n);

// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);

void square(const double* a, double* out, std::size_t n);
void relu(const double* a, double* out, std::size_t n);
// out = g where x > 0, else 0 (ReLU backward).
void relu_mask(const double* x, const double* g, double* out, std::size_t n);

// Scalar-only transcendentals (libm).
void exp(const double* a, double* out, std::size_t n);
void log(const double* a, double* out, std::size_t n);
// Overflow-safe softplus: max(x,0) + log1p(exp(-|x|)).
void softplus(const double* a, double* out, std::size_t n);
void sigmoid(const double* a, double* out, std::size_t n);

// Sequential reductions (scalar-only, deterministic order).
double sum(const double* a, std::size_t n);
double sumsq(const double* a, std::size_t n);

// out[j] = sum_i a[i*cols + j] (reduce axis 0). Vectorized across columns.
void col_sum(const double* a, double* out, std::size_t rows, std::size_t cols);
// out[i] = sum_j a[i*cols + j] (reduce axis 1). Scalar-only.
void row_sum(const double* a, double* out, std::size_t rows, std::size_t cols);

// One Adam step on a flat parameter block. bc1/bc2 are the bias-correction
// factors 1 - beta^t for the current step.
void adam_update(double* p, double* m, double* v, const double* g, std::size_t n,
                 double lr, double beta1, double beta2, double eps,
                 double bc1, double bc2);

namespace detail {
// Scalar reference implementations, exposed for the equivalence tests.
void matmul_scalar(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n);
void add_scalar_impl(const double* a, const double* b, double* out, std::size_t n);
void sub_scalar_impl(const double* a, const double* b, double* out, std::size_t n);
void mul_scalar_impl(const double* a, const double* b, double* out, std::size_t n);
void div_scalar_impl(const double* a, const double* b, double* out, std::size_t n);
void adds_scalar_impl(const double* a, double s, double* out, std::size_t n);
void muls_scalar_impl(const double* a, double s, double* out, std::size_t n);
void axpy_scalar_impl(double alpha, const double* x, double* y, std::size_t n);
void square_scalar_impl(const double* a, double* out, std::size_t n);
void relu_scalar_impl(const double* a, double* out, std::size_t n);
void relu_mask_scalar_impl(const double* x, const double* g, double* out, std::size_t n);
void col_sum_scalar_impl(const double* a, double* out, std::size_t rows, std::size_t cols);
void adam_update_scalar_impl(double* p, double* m, double* v, const double* g, std::size_t n,
                             double lr, double beta1, double beta2, double eps,
                             double bc1, double bc2);

bool cpu_has_avx2();

// AVX2 variants (defined only on x86-64 builds; dispatch guards the calls).
void matmul_avx2(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n);
void add_avx2(const double* a, const double* b, double* out, std::size_t n);
void sub_avx2(const double* a, const double* b, double* out, std::size_t n);
void mul_avx2(const double* a, const double* b, double* out, std::size_t n);
void div_avx2(const double* a, const double* b, double* out, std::size_t n);
void adds_avx2(const double* a, double s, double* out, std::size_t n);
void muls_avx2(const double* a, double s, double* out, std::size_t n);
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n);
void square_avx2(const double* a, double* out, std::size_t n);
void relu_avx2(const double* a, double* out, std::size_t n);
void relu_mask_avx2(const double* x, const double* g, double* out, std::size_t n);
void col_sum_avx2(const double* a, double* out, std::size_t rows, std::size_t cols);
void adam_update_avx2(double* p, double* m, double* v, const double* g, std::size_t n,
                      double lr, double beta1, double beta2, double eps,
                      double bc1, double bc2);
} // namespace detail

} // namespace lsg::kernels

#include "lsg/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

#if defined(__x86_64__) || defined(_M_X64)
#define LSG_X86_64 1
#else
#define LSG_X86_64 0
#endif

namespace lsg::kernels {

namespace detail {

bool cpu_has_avx2() {
#if LSG_X86_64 && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

void matmul_scalar(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n) {
    // i-l-j order: streams rows of b and c, accumulates each c[i][j]
    // in ascending l. The AVX2 variant keeps this order.
    std::memset(c, 0, m * n * sizeof(double));
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            const double av = arow[l];
            const double* brow = b + l * n;
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
}

void add_scalar_impl(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}
void sub_scalar_impl(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}
void mul_scalar_impl(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}
void div_scalar_impl(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] / b[i];
}
void adds_scalar_impl(const double* a, double s, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + s;
}
void muls_scalar_impl(const double* a, double s, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * s;
}
void axpy_scalar_impl(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}
void square_scalar_impl(const double* a, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * a[i];
}
void relu_scalar_impl(const double* a, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
}
void relu_mask_scalar_impl(const double* x, const double* g, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? g[i] : 0.0;
}
void col_sum_scalar_impl(const double* a, double* out, std::size_t rows, std::size_t cols) {
    std::memset(out, 0, cols * sizeof(double));
    for (std::size_t i = 0; i < rows; ++i) {
        const double* arow = a + i * cols;
        for (std::size_t j = 0; j < cols; ++j) out[j] += arow[j];
    }
}
void adam_update_scalar_impl(double* p, double* m, double* v, const double* g, std::size_t n,
                             double lr, double beta1, double beta2, double eps,
                             double bc1, double bc2) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * (g[i] * g[i]);
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

} // namespace detail

namespace {

Backend pick_initial_backend() {
    if (const char* env = std::getenv("LSG_SIMD")) {
        const std::string v(env);
        if (v == "scalar") return Backend::Scalar;
        if (v == "avx2") {
            if (!detail::cpu_has_avx2())
                throw std::runtime_error("LSG_SIMD=avx2 but CPU lacks AVX2");
            return Backend::Avx2;
        }
        // anything else (including "auto") falls through to detection
    }
    return detect_backend();
}

std::atomic<Backend>& backend_state() {
    static std::atomic<Backend> state{pick_initial_backend()};
    return state;
}

inline bool use_avx2() { return backend_state().load(std::memory_order_relaxed) == Backend::Avx2; }

} // namespace

Backend detect_backend() {
    return detail::cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

Backend active_backend() { return backend_state().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
    if (b == Backend::Avx2 && !detail::cpu_has_avx2())
        throw std::runtime_error("AVX2 backend requested but CPU lacks AVX2");
    backend_state().store(b, std::memory_order_relaxed);
}

std::string backend_name(Backend b) {
    switch (b) {
        case Backend::Scalar: return "scalar";
        case Backend::Avx2: return "avx2";
    }
    return "unknown";
}

void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n) {
#if LSG_X86_64
    if (use_avx2()) { detail::matmul_avx2(a, b, c, m, k, n); return; }
#endif
    detail::matmul_scalar(a, b, c, m, k, n);
}

void transpose(const double* a, double* out, std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            out[j * rows + i] = a[i * cols + j];
}

#if LSG_X86_64
#define LSG_DISPATCH2(name, avx2name)                                          \
    void name(const double* a, const double* b, double* out, std::size_t n) {  \
        if (use_avx2()) { detail::avx2name(a, b, out, n); return; }            \
        detail::name##_scalar_impl(a, b, out, n);                              \
    }
#else
#define LSG_DISPATCH2(name, avx2name)                                          \
    void name(const double* a, const double* b, double* out, std::size_t n) {  \
        detail::name##_scalar_impl(a, b, out, n);                              \
    }
#endif

LSG_DISPATCH2(add, add_avx2)
LSG_DISPATCH2(sub, sub_avx2)
LSG_DISPATCH2(mul, mul_avx2)
LSG_DISPATCH2(div, div_avx2)
#undef LSG_DISPATCH2

void add_scalar(const double* a, double s, double* out, std::size_t n) {
#if LSG_X86_64
    if (use_avx2()) { detail::adds_avx2(a, s, out, n); return; }
#endif
    detail::adds_scalar_impl(a, s, out, n);
}

void mul_scalar(const double* a, double s, double* out, std::size_t n) {
#if LSG_X86_64
    if (use_avx2()) { detail::muls_avx2(a, s, out, n); return; }
#endif
    detail::muls_scalar_impl(a, s, out, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
#if LSG_X86_64
    if (use_avx2()) { detail::axpy_avx2(alpha, x, y, n); return; }
#endif
    detail::axpy_scalar_impl(alpha, x, y, n);
}

void square(const double* a, double* out, std::size_t n) {
#if LSG_X86_64
    if (use_avx2()) { detail::square_avx2(a, out, n); return; }
#endif
    detail::square_scalar_impl(a, out, n);
}

void relu(const double* a, double* out, std::size_t n) {
#if LSG_X86_64
    if (use_avx2()) { detail::relu_avx2(a, out, n); return; }
#endif
    detail::relu_scalar_impl(a, out, n);
}

void relu_mask(const double* x, const double* g, double* out, std::size_t n) {
#if LSG_X86_64
    if (use_avx2()) { detail::relu_mask_avx2(x, g, out, n); return; }
#endif
    detail::relu_mask_scalar_impl(x, g, out, n);
}

void exp(const double* a, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(a[i]);
}

void log(const double* a, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::log(a[i]);
}

void softplus(const double* a, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double x = a[i];
        out[i] = (x > 0.0 ? x : 0.0) + std::log1p(std::exp(-std::fabs(x)));
    }
}

void sigmoid(const double* a, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double x = a[i];
        if (x >= 0.0) {
            out[i] = 1.0 / (1.0 + std::exp(-x));
        } else {
            const double e = std::exp(x);
            out[i] = e / (1.0 + e);
        }
    }
}

double sum(const double* a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i];
    return s;
}

double sumsq(const double* a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * a[i];
    return s;
}

void col_sum(const double* a, double* out, std::size_t rows, std::size_t cols) {
#if LSG_X86_64
    if (use_avx2()) { detail::col_sum_avx2(a, out, rows, cols); return; }
#endif
    detail::col_sum_scalar_impl(a, out, rows, cols);
}

void row_sum(const double* a, double* out, std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) out[i] = sum(a + i * cols, cols);
}

void adam_update(double* p, double* m, double* v, const double* g, std::size_t n,
                 double lr, double beta1, double beta2, double eps,
                 double bc1, double bc2) {
#if LSG_X86_64
    if (use_avx2()) {
        detail::adam_update_avx2(p, m, v, g, n, lr, beta1, beta2, eps, bc1, bc2);
        return;
    }
#endif
    detail::adam_update_scalar_impl(p, m, v, g, n, lr, beta1, beta2, eps, bc1, bc2);
}

} // namespace lsg::kernels

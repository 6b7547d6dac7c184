// AVX2 kernel variants. Compiled with -mavx2 in its own TU; callers reach
// these only after the runtime CPU check. Each loop vectorizes across
// independent outputs and uses separate mul/add (no FMA), so every output
// element sees the exact rounding sequence of the scalar reference.

#include "lsg/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cstring>

namespace lsg::kernels::detail {

void matmul_avx2(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n) {
    std::memset(c, 0, m * n * sizeof(double));
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            const double av = arow[l];
            const __m256d va = _mm256_set1_pd(av);
            const double* brow = b + l * n;
            std::size_t j = 0;
            for (; j + 8 <= n; j += 8) {
                __m256d c0 = _mm256_loadu_pd(crow + j);
                __m256d c1 = _mm256_loadu_pd(crow + j + 4);
                c0 = _mm256_add_pd(c0, _mm256_mul_pd(va, _mm256_loadu_pd(brow + j)));
                c1 = _mm256_add_pd(c1, _mm256_mul_pd(va, _mm256_loadu_pd(brow + j + 4)));
                _mm256_storeu_pd(crow + j, c0);
                _mm256_storeu_pd(crow + j + 4, c1);
            }
            for (; j + 4 <= n; j += 4) {
                __m256d c0 = _mm256_loadu_pd(crow + j);
                c0 = _mm256_add_pd(c0, _mm256_mul_pd(va, _mm256_loadu_pd(brow + j)));
                _mm256_storeu_pd(crow + j, c0);
            }
            for (; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

namespace {

template <typename VecOp, typename ScalarOp>
inline void binary_loop(const double* a, const double* b, double* out, std::size_t n,
                        VecOp vop, ScalarOp sop) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, vop(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = sop(a[i], b[i]);
}

} // namespace

void add_avx2(const double* a, const double* b, double* out, std::size_t n) {
    binary_loop(a, b, out, n,
                [](__m256d x, __m256d y) { return _mm256_add_pd(x, y); },
                [](double x, double y) { return x + y; });
}
void sub_avx2(const double* a, const double* b, double* out, std::size_t n) {
    binary_loop(a, b, out, n,
                [](__m256d x, __m256d y) { return _mm256_sub_pd(x, y); },
                [](double x, double y) { return x - y; });
}
void mul_avx2(const double* a, const double* b, double* out, std::size_t n) {
    binary_loop(a, b, out, n,
                [](__m256d x, __m256d y) { return _mm256_mul_pd(x, y); },
                [](double x, double y) { return x * y; });
}
void div_avx2(const double* a, const double* b, double* out, std::size_t n) {
    binary_loop(a, b, out, n,
                [](__m256d x, __m256d y) { return _mm256_div_pd(x, y); },
                [](double x, double y) { return x / y; });
}

void adds_avx2(const double* a, double s, double* out, std::size_t n) {
    const __m256d vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), vs));
    for (; i < n; ++i) out[i] = a[i] + s;
}

void muls_avx2(const double* a, double s, double* out, std::size_t n) {
    const __m256d vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), vs));
    for (; i < n; ++i) out[i] = a[i] * s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_add_pd(vy, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void square_avx2(const double* a, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(a + i);
        _mm256_storeu_pd(out + i, _mm256_mul_pd(v, v));
    }
    for (; i < n; ++i) out[i] = a[i] * a[i];
}

void relu_avx2(const double* a, double* out, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(a + i);
        // a > 0 ? a : 0, matching the scalar comparison exactly
        const __m256d mask = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
        _mm256_storeu_pd(out + i, _mm256_and_pd(v, mask));
    }
    for (; i < n; ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
}

void relu_mask_avx2(const double* x, const double* g, double* out, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vx = _mm256_loadu_pd(x + i);
        const __m256d vg = _mm256_loadu_pd(g + i);
        const __m256d mask = _mm256_cmp_pd(vx, zero, _CMP_GT_OQ);
        _mm256_storeu_pd(out + i, _mm256_and_pd(vg, mask));
    }
    for (; i < n; ++i) out[i] = x[i] > 0.0 ? g[i] : 0.0;
}

void col_sum_avx2(const double* a, double* out, std::size_t rows, std::size_t cols) {
    std::memset(out, 0, cols * sizeof(double));
    for (std::size_t i = 0; i < rows; ++i) {
        const double* arow = a + i * cols;
        std::size_t j = 0;
        for (; j + 4 <= cols; j += 4) {
            __m256d acc = _mm256_loadu_pd(out + j);
            acc = _mm256_add_pd(acc, _mm256_loadu_pd(arow + j));
            _mm256_storeu_pd(out + j, acc);
        }
        for (; j < cols; ++j) out[j] += arow[j];
    }
}

void adam_update_avx2(double* p, double* m, double* v, const double* g, std::size_t n,
                      double lr, double beta1, double beta2, double eps,
                      double bc1, double bc2) {
    const __m256d vb1 = _mm256_set1_pd(beta1);
    const __m256d vb1c = _mm256_set1_pd(1.0 - beta1);
    const __m256d vb2 = _mm256_set1_pd(beta2);
    const __m256d vb2c = _mm256_set1_pd(1.0 - beta2);
    const __m256d vlr = _mm256_set1_pd(lr);
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d vbc1 = _mm256_set1_pd(bc1);
    const __m256d vbc2 = _mm256_set1_pd(bc2);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vg = _mm256_loadu_pd(g + i);
        __m256d vm = _mm256_loadu_pd(m + i);
        __m256d vv = _mm256_loadu_pd(v + i);
        vm = _mm256_add_pd(_mm256_mul_pd(vb1, vm), _mm256_mul_pd(vb1c, vg));
        vv = _mm256_add_pd(_mm256_mul_pd(vb2, vv),
                           _mm256_mul_pd(vb2c, _mm256_mul_pd(vg, vg)));
        _mm256_storeu_pd(m + i, vm);
        _mm256_storeu_pd(v + i, vv);
        const __m256d mhat = _mm256_div_pd(vm, vbc1);
        const __m256d vhat = _mm256_div_pd(vv, vbc2);
        const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
        __m256d vp = _mm256_loadu_pd(p + i);
        vp = _mm256_sub_pd(vp, _mm256_div_pd(_mm256_mul_pd(vlr, mhat), denom));
        _mm256_storeu_pd(p + i, vp);
    }
    adam_update_scalar_impl(p + i, m + i, v + i, g + i, n - i, lr, beta1, beta2, eps, bc1, bc2);
}

} // namespace lsg::kernels::detail

#endif // x86-64

// AVX2 variants of the f64 kernels. Compiled with -mavx2 -mfma
// -ffp-contract=off so the scalar tails stay bit-identical to the
// reference kernels. FMA is used only inside reductions, where the
// summation order already differs from scalar.

#if defined(__x86_64__) || defined(__i386__)

#include "kernels_table.hpp"

#include <immintrin.h>

namespace fedsim::kernels {
namespace {

double hsum(__m256d v) {
    // fixed combine order: (lo0+lo1) + (hi0+hi1)
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    __m128d s = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(s, s);
    return _mm_cvtsd_f64(_mm_add_sd(s, shuf));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum_sq_avx2(const double* a, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d v0 = _mm256_loadu_pd(a + i);
        __m256d v1 = _mm256_loadu_pd(a + i + 4);
        acc0 = _mm256_fmadd_pd(v0, v0, acc0);
        acc1 = _mm256_fmadd_pd(v1, v1, acc1);
    }
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(a + i);
        acc0 = _mm256_fmadd_pd(v, v, acc0);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * a[i];
    return acc;
}

double sum_avx2(const double* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i];
    return s;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    // mul+add, not fmadd: keeps results bit-identical to scalar
    __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void scale_avx2(double a, const double* x, double* y, std::size_t n) {
    __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) y[i] = a * x[i];
}

void add_avx2(const double* x, double* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) y[i] += x[i];
}

void sub_avx2(const double* x, double* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_sub_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) y[i] -= x[i];
}

void relu_avx2(const double* z, double* out, std::size_t n) {
    // mask-and instead of max: z>0 ? z : +0.0 exactly, matching scalar on -0.0
    __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(z + i);
        __m256d mask = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
        _mm256_storeu_pd(out + i, _mm256_and_pd(mask, v));
    }
    for (; i < n; ++i) out[i] = z[i] > 0.0 ? z[i] : 0.0;
}

void relu_backward_avx2(const double* z, const double* g, double* out, std::size_t n) {
    __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(z + i), zero, _CMP_GT_OQ);
        _mm256_storeu_pd(out + i, _mm256_and_pd(mask, _mm256_loadu_pd(g + i)));
    }
    for (; i < n; ++i) out[i] = z[i] > 0.0 ? g[i] : 0.0;
}

constexpr KernelTable kAvx2Table{
    dot_avx2, sum_sq_avx2, sum_avx2,  axpy_avx2,          scale_avx2,
    add_avx2, sub_avx2,    relu_avx2, relu_backward_avx2};

} // namespace

const KernelTable* avx2_table() {
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
        return &kAvx2Table;
    return nullptr;
}

} // namespace fedsim::kernels

#endif // x86

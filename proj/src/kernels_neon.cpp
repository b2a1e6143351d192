// NEON (aarch64) variants of the f64 kernels. Same contract as the AVX2
// file: elementwise ops bit-identical to scalar, reductions fused.

#if defined(__aarch64__)

#include "kernels_table.hpp"

#include <arm_neon.h>

namespace fedsim::kernels {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    for (; i + 2 <= n; i += 2)
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    float64x2_t acc = vaddq_f64(acc0, acc1);
    double s = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sum_sq_neon(const double* a, std::size_t n) { return dot_neon(a, a, n); }

double sum_neon(const double* a, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(a + i));
    double s = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (; i < n; ++i) s += a[i];
    return s;
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
    float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t prod = vmulq_f64(va, vld1q_f64(x + i));
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), prod));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void scale_neon(double a, const double* x, double* y, std::size_t n) {
    float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vmulq_f64(va, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] = a * x[i];
}

void add_neon(const double* x, double* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += x[i];
}

void sub_neon(const double* x, double* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vsubq_f64(vld1q_f64(y + i), vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] -= x[i];
}

void relu_neon(const double* z, double* out, std::size_t n) {
    float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t v = vld1q_f64(z + i);
        uint64x2_t mask = vcgtq_f64(v, zero);
        vst1q_f64(out + i, vreinterpretq_f64_u64(vandq_u64(mask, vreinterpretq_u64_f64(v))));
    }
    for (; i < n; ++i) out[i] = z[i] > 0.0 ? z[i] : 0.0;
}

void relu_backward_neon(const double* z, const double* g, double* out, std::size_t n) {
    float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        uint64x2_t mask = vcgtq_f64(vld1q_f64(z + i), zero);
        vst1q_f64(out + i, vreinterpretq_f64_u64(vandq_u64(mask, vreinterpretq_u64_f64(vld1q_f64(g + i)))));
    }
    for (; i < n; ++i) out[i] = z[i] > 0.0 ? g[i] : 0.0;
}

constexpr KernelTable kNeonTable{
    dot_neon, sum_sq_neon, sum_neon,  axpy_neon,          scale_neon,
    add_neon, sub_neon,    relu_neon, relu_backward_neon};

} // namespace

// NEON is architecturally guaranteed on aarch64.
const KernelTable* neon_table() { return &kNeonTable; }

} // namespace fedsim::kernels

#endif // aarch64

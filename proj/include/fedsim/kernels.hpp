#pragma once
#include <cstddef>
#include <span>

namespace fedsim::kernels {

// Data-parallel f64 primitives behind everything numeric in the simulator.
// A scalar reference implementation always exists; AVX2 (x86-64) and NEON
// (aarch64) variants are selected once at runtime from CPU capabilities,
// overridable with FEDSIM_KERNEL=scalar|avx2|neon|auto.
//
// Contract: elementwise ops (axpy, scale, add, sub, relu, relu_backward)
// are bit-identical across backends; reductions (dot, sum_sq, sum) may
// differ by reassociation and are equivalence-tested to tight relative
// tolerance. Backend choice never depends on thread count, so runs stay
// reproducible for any FEDSIM_THREADS.

enum class Backend { scalar, avx2, neon };

const char* backend_name(Backend b);
bool backend_supported(Backend b);
Backend active_backend();
// Force a specific backend (tests / reproduction across machines).
// Throws ConfigError if unsupported on this CPU. Not safe to call
// concurrently with kernel invocations.
void force_backend(Backend b);
void reset_backend(); // back to env/auto selection

double dot(const double* a, const double* b, std::size_t n);
double sum_sq(const double* a, std::size_t n);
double sum(const double* a, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n); // y += a*x
void scale(double a, const double* x, double* y, std::size_t n); // y = a*x
void add(const double* x, double* y, std::size_t n);             // y += x
void sub(const double* x, double* y, std::size_t n);             // y -= x
void relu(const double* z, double* out, std::size_t n);          // out = z>0 ? z : 0
void relu_backward(const double* z, const double* g, double* out, std::size_t n); // out = z>0 ? g : 0

inline double dot(std::span<const double> a, std::span<const double> b) {
    return dot(a.data(), b.data(), a.size());
}
inline double sum_sq(std::span<const double> a) { return sum_sq(a.data(), a.size()); }
double nrm2(const double* a, std::size_t n);
inline double nrm2(std::span<const double> a) { return nrm2(a.data(), a.size()); }

} // namespace fedsim::kernels

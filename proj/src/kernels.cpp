#include "fedsim/kernels.hpp"
#include "fedsim/errors.hpp"
#include "kernels_table.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <string>

namespace fedsim::kernels {

namespace {

// ---------------------------------------------------------------- scalar

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum_sq_scalar(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
    return acc;
}

double sum_scalar(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i];
}

void add_scalar(const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
}

void sub_scalar(const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] -= x[i];
}

void relu_scalar(const double* z, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = z[i] > 0.0 ? z[i] : 0.0;
}

void relu_backward_scalar(const double* z, const double* g, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = z[i] > 0.0 ? g[i] : 0.0;
}

} // namespace

namespace {

constexpr KernelTable kScalarTable{
    dot_scalar, sum_sq_scalar, sum_scalar,     axpy_scalar,         scale_scalar,
    add_scalar, sub_scalar,    relu_scalar,    relu_backward_scalar};

} // namespace

// avx2_table / neon_table live in kernels_avx2.cpp / kernels_neon.cpp when
// built for the arch; stubs here otherwise.
#if !defined(__x86_64__) && !defined(__i386__)
const KernelTable* avx2_table() { return nullptr; }
#endif
#if !defined(__aarch64__)
const KernelTable* neon_table() { return nullptr; }
#endif

namespace {

struct Dispatch {
    const KernelTable* table = &kScalarTable;
    Backend backend = Backend::scalar;
};

Backend detect_best() {
    if (neon_table()) return Backend::neon;
    if (avx2_table()) return Backend::avx2;
    return Backend::scalar;
}

Dispatch make_dispatch(Backend b) {
    switch (b) {
    case Backend::scalar: return {&kScalarTable, Backend::scalar};
    case Backend::avx2:
        if (const KernelTable* t = avx2_table()) return {t, Backend::avx2};
        throw ConfigError("kernel backend 'avx2' not supported on this CPU");
    case Backend::neon:
        if (const KernelTable* t = neon_table()) return {t, Backend::neon};
        throw ConfigError("kernel backend 'neon' not supported on this CPU");
    }
    throw ConfigError("unknown kernel backend");
}

Dispatch select_from_env() {
    const char* env = std::getenv("FEDSIM_KERNEL");
    if (env == nullptr || std::strcmp(env, "auto") == 0)
        return make_dispatch(detect_best());
    if (std::strcmp(env, "scalar") == 0) return make_dispatch(Backend::scalar);
    if (std::strcmp(env, "avx2") == 0) return make_dispatch(Backend::avx2);
    if (std::strcmp(env, "neon") == 0) return make_dispatch(Backend::neon);
    throw ConfigError(std::string("FEDSIM_KERNEL: unknown value '") + env +
                      "' (expected scalar|avx2|neon|auto)");
}

Dispatch& dispatch() {
    static Dispatch d = select_from_env();
    return d;
}

} // namespace

const char* backend_name(Backend b) {
    switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
    }
    return "?";
}

bool backend_supported(Backend b) {
    switch (b) {
    case Backend::scalar: return true;
    case Backend::avx2: return avx2_table() != nullptr;
    case Backend::neon: return neon_table() != nullptr;
    }
    return false;
}

Backend active_backend() { return dispatch().backend; }

void force_backend(Backend b) { dispatch() = make_dispatch(b); }

void reset_backend() { dispatch() = select_from_env(); }

double dot(const double* a, const double* b, std::size_t n) { return dispatch().table->dot(a, b, n); }
double sum_sq(const double* a, std::size_t n) { return dispatch().table->sum_sq(a, n); }
double sum(const double* a, std::size_t n) { return dispatch().table->sum(a, n); }
void axpy(double a, const double* x, double* y, std::size_t n) { dispatch().table->axpy(a, x, y, n); }
void scale(double a, const double* x, double* y, std::size_t n) { dispatch().table->scale(a, x, y, n); }
void add(const double* x, double* y, std::size_t n) { dispatch().table->add(x, y, n); }
void sub(const double* x, double* y, std::size_t n) { dispatch().table->sub(x, y, n); }
void relu(const double* z, double* out, std::size_t n) { dispatch().table->relu(z, out, n); }
void relu_backward(const double* z, const double* g, double* out, std::size_t n) {
    dispatch().table->relu_backward(z, g, out, n);
}

double nrm2(const double* a, std::size_t n) { return std::sqrt(sum_sq(a, n)); }

} // namespace fedsim::kernels

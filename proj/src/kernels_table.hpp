#pragma once
#include <cstddef>

namespace fedsim::kernels {

struct KernelTable {
    double (*dot)(const double*, const double*, std::size_t);
    double (*sum_sq)(const double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*scale)(double, const double*, double*, std::size_t);
    void (*add)(const double*, double*, std::size_t);
    void (*sub)(const double*, double*, std::size_t);
    void (*relu)(const double*, double*, std::size_t);
    void (*relu_backward)(const double*, const double*, double*, std::size_t);
};

const KernelTable* avx2_table();
const KernelTable* neon_table();

} // namespace fedsim::kernels

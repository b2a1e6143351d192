#pragma once
#include <cstddef>
#include <vector>

namespace fedsim {

// Dense row-major f64 matrix. Just storage plus indexing; all arithmetic
// goes through the kernels layer.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    const double& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }

    bool empty() const { return data.empty(); }
};

} // namespace fedsim

#pragma once

#include <cstddef>
#include <vector>

namespace sli {

// Dense row-major double matrix for intermediate math (stacked frames,
// beat-synchronous features, distance grids).
struct RealMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> v;

    RealMatrix() = default;
    RealMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}

    double* row(std::size_t i) { return v.data() + i * cols; }
    const double* row(std::size_t i) const { return v.data() + i * cols; }
    double& at(std::size_t i, std::size_t j) { return v[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return v[i * cols + j]; }
};

} // namespace sli

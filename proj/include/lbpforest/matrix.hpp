#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "lbpforest/errors.hpp"

namespace lbpf {

/// Row-major dense matrix of 32-bit floats. Feature matrices reach
/// ~81k columns, so everything downstream works on rows as spans.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0f) {}

    float* row(std::size_t i) { return data.data() + i * cols; }
    const float* row(std::size_t i) const { return data.data() + i * cols; }
    std::span<const float> row_span(std::size_t i) const { return {row(i), cols}; }
    float& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    float at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    bool operator==(const Matrix&) const = default;
};

/// New matrix holding the selected rows, in the given order.
inline Matrix take_rows(const Matrix& m, std::span<const std::size_t> indices) {
    Matrix out(indices.size(), m.cols);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= m.rows) throw bad_input("take_rows: index out of range");
        const float* src = m.row(indices[i]);
        std::copy(src, src + m.cols, out.row(i));
    }
    return out;
}

/// Column-wise concatenation [a | b]; row counts must match.
inline Matrix hconcat(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) throw bad_input("hconcat: row count mismatch");
    Matrix out(a.rows, a.cols + b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        std::copy(a.row(i), a.row(i) + a.cols, out.row(i));
        std::copy(b.row(i), b.row(i) + b.cols, out.row(i) + a.cols);
    }
    return out;
}

} // namespace lbpf

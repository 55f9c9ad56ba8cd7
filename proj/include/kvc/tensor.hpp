// Copyright (C) 2026 The kvc-workbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace kvc {

/// Dense row-major f32 matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, float fill = 0.0f)
        : m_rows(rows), m_cols(cols), m_data(rows * cols, fill) {}

    std::size_t rows() const { return m_rows; }
    std::size_t cols() const { return m_cols; }
    std::size_t size() const { return m_data.size(); }
    bool empty() const { return m_data.empty(); }

    float& operator()(std::size_t r, std::size_t c) { return m_data[r * m_cols + c]; }
    float operator()(std::size_t r, std::size_t c) const { return m_data[r * m_cols + c]; }

    std::span<float> row(std::size_t r) { return {m_data.data() + r * m_cols, m_cols}; }
    std::span<const float> row(std::size_t r) const { return {m_data.data() + r * m_cols, m_cols}; }

    std::span<float> data() { return m_data; }
    std::span<const float> data() const { return m_data; }

    void resize_rows(std::size_t rows) {
        m_rows = rows;
        m_data.resize(rows * m_cols);
    }

    void append_rows(const Matrix& other) {
        m_data.insert(m_data.end(), other.m_data.begin(), other.m_data.end());
        m_rows += other.m_rows;
    }

    /// New matrix made of the given rows, in order.
    Matrix gather_rows(std::span<const std::size_t> indices) const;

    bool operator==(const Matrix&) const = default;

private:
    std::size_t m_rows = 0;
    std::size_t m_cols = 0;
    std::vector<float> m_data;
};

inline Matrix Matrix::gather_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), m_cols);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        auto src = row(indices[i]);
        auto dst = out.row(i);
        for (std::size_t c = 0; c < m_cols; ++c) dst[c] = src[c];
    }
    return out;
}

/// y = W x, W is [out x in] row-major.
inline void matvec(const Matrix& w, std::span<const float> x, std::span<float> y) {
    const std::size_t in = w.cols();
    for (std::size_t o = 0; o < w.rows(); ++o) {
        const float* wr = w.data().data() + o * in;
        float acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
        std::size_t i = 0;
        for (; i + 8 <= in; i += 8) {
            for (std::size_t l = 0; l < 8; ++l) acc[l] += wr[i + l] * x[i + l];
        }
        float tail = 0.0f;
        for (; i < in; ++i) tail += wr[i] * x[i];
        y[o] = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
    }
}

}  // namespace kvc

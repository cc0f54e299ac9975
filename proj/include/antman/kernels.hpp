#pragma once

// Matrix-vector kernels shared by every operator. Each output element is a
// dot product accumulated in ascending column order, so a blocked, batched
// or parallel evaluation reproduces the plain loop bit for bit.

#include <cstddef>
#include <span>

#include "antman/parallel.hpp"

namespace antman::kernels {

/// y = A x for a row-major rows x cols matrix.
template <typename T>
void gemv(const T* a, std::size_t rows, std::size_t cols, const T* x, T* y) {
    std::size_t i = 0;
    // Four independent accumulators keep the FP pipeline busy without
    // reordering any single row's sum.
    for (; i + 4 <= rows; i += 4) {
        const T* a0 = a + i * cols;
        const T* a1 = a0 + cols;
        const T* a2 = a1 + cols;
        const T* a3 = a2 + cols;
        T s0{}, s1{}, s2{}, s3{};
        for (std::size_t j = 0; j < cols; ++j) {
            const T xj = x[j];
            s0 += a0[j] * xj;
            s1 += a1[j] * xj;
            s2 += a2[j] * xj;
            s3 += a3[j] * xj;
        }
        y[i] = s0;
        y[i + 1] = s1;
        y[i + 2] = s2;
        y[i + 3] = s3;
    }
    for (; i < rows; ++i) {
        const T* ai = a + i * cols;
        T s{};
        for (std::size_t j = 0; j < cols; ++j) s += ai[j] * x[j];
        y[i] = s;
    }
}

/// Applies A to `batch` vectors at once. Vector t starts at x + t*x_stride and
/// its result is written to y + t*y_stride. Each matrix row is streamed once
/// for the whole batch.
template <typename T>
void gemv_batch(const T* a, std::size_t rows, std::size_t cols, const T* x, std::size_t x_stride,
                T* y, std::size_t y_stride, std::size_t batch) {
    constexpr std::size_t kRowTile = 4;
    for (std::size_t i0 = 0; i0 < rows; i0 += kRowTile) {
        const std::size_t tile = rows - i0 < kRowTile ? rows - i0 : kRowTile;
        for (std::size_t t = 0; t < batch; ++t) {
            gemv(a + i0 * cols, tile, cols, x + t * x_stride, y + t * y_stride + i0);
        }
    }
}

/// Block-diagonal MV: block b (br x bc, row-major, blocks stored back to back)
/// maps input segment b to output segment b.
template <typename T>
void block_diagonal_mv(const T* blocks, std::size_t groups, std::size_t br, std::size_t bc,
                       const T* x, T* y) {
    const std::size_t block_size = br * bc;
    const int threads = num_threads();
    if (threads > 1 && groups > 1) {
#pragma omp parallel for num_threads(threads) schedule(static)
        for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(groups); ++b) {
            const auto ub = static_cast<std::size_t>(b);
            gemv(blocks + ub * block_size, br, bc, x + ub * bc, y + ub * br);
        }
        return;
    }
    for (std::size_t b = 0; b < groups; ++b) {
        gemv(blocks + b * block_size, br, bc, x + b * bc, y + b * br);
    }
}

template <typename T>
void block_diagonal_mv_batch(const T* blocks, std::size_t groups, std::size_t br, std::size_t bc,
                             const T* x, std::size_t x_stride, T* y, std::size_t y_stride,
                             std::size_t batch) {
    const std::size_t block_size = br * bc;
    const int threads = num_threads();
#pragma omp parallel for num_threads(threads) schedule(static) if (threads > 1 && groups > 1)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(groups); ++b) {
        const auto ub = static_cast<std::size_t>(b);
        gemv_batch(blocks + ub * block_size, br, bc, x + ub * bc, x_stride, y + ub * br, y_stride,
                   batch);
    }
}

/// Shuffle mix: views v as a [groups, length/groups] matrix and writes its
/// transpose, i.e. out[k*groups + b] = v[b*(length/groups) + k].
template <typename T>
void shuffle(const T* v, std::size_t length, std::size_t groups, T* out) {
    const std::size_t per_group = length / groups;
    for (std::size_t b = 0; b < groups; ++b) {
        const T* src = v + b * per_group;
        for (std::size_t k = 0; k < per_group; ++k) out[k * groups + b] = src[k];
    }
}

}  // namespace antman::kernels

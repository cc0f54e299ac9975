#pragma once

// Structured replacements for a dense m x n matrix-vector product:
//
//   Dense        A x
//   SVD          P Q x
//   LGPShuffle   S D_g x          (shuffle after the block-diagonal product)
//   LGPDense     M D_g x  or  D_g M x   (mix on the smaller side)
//   LowRankLGP   D_gout M_r D_gin x
//
// Every operator can be applied directly or materialized into the explicit
// dense matrix it represents. The materialized form is built from naive
// matrix products and serves as the correctness oracle for `apply`.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "antman/config.hpp"
#include "antman/errors.hpp"
#include "antman/kernels.hpp"

namespace antman {

template <std::floating_point T>
struct BasicMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> values;  // row-major

    BasicMatrix() = default;
    BasicMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, T{}) {}
    BasicMatrix(std::size_t r, std::size_t c, std::vector<T> v)
        : rows(r), cols(c), values(std::move(v)) {
        require_shape(values.size() == rows * cols, "matrix value count does not match rows*cols");
    }

    static BasicMatrix identity(std::size_t n) {
        BasicMatrix id(n, n);
        for (std::size_t i = 0; i < n; ++i) id(i, i) = T{1};
        return id;
    }

    T& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }

    std::span<const T> row(std::size_t i) const { return {values.data() + i * cols, cols}; }

    friend bool operator==(const BasicMatrix&, const BasicMatrix&) = default;
};

using DenseMatrix = BasicMatrix<double>;
using Vector = std::vector<double>;

/// Naive A*B with ascending inner index. Only used to build oracles.
template <std::floating_point T>
BasicMatrix<T> matmul(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
    require_shape(a.cols == b.rows, "matmul: inner dimensions differ");
    BasicMatrix<T> c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < b.cols; ++j) {
            T s{};
            for (std::size_t k = 0; k < a.cols; ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    }
    return c;
}

/// y = A x with ascending-j accumulation.
template <std::floating_point T>
std::vector<T> mv_dense(const BasicMatrix<T>& a, std::span<const T> x) {
    require_shape(x.size() == a.cols, "mv_dense: x length must equal A.cols");
    std::vector<T> y(a.rows);
    kernels::gemv(a.values.data(), a.rows, a.cols, x.data(), y.data());
    return y;
}

/// D_g: `groups` dense blocks of (out_dim/groups) x (in_dim/groups) on the
/// diagonal. Blocks are stored back to back, each row-major.
template <std::floating_point T>
class BasicBlockDiagonal {
public:
    BasicBlockDiagonal() = default;

    BasicBlockDiagonal(std::size_t out_dim, std::size_t in_dim, std::size_t groups)
        : BasicBlockDiagonal(out_dim, in_dim, groups,
                             std::vector<T>(groups == 0 ? 0 : out_dim * in_dim / groups)) {}

    BasicBlockDiagonal(std::size_t out_dim, std::size_t in_dim, std::size_t groups,
                       std::vector<T> values)
        : out_dim_(out_dim), in_dim_(in_dim), groups_(groups), values_(std::move(values)) {
        if (groups_ == 0 || out_dim_ % groups_ != 0) throw ConfigError("g must divide m");
        if (in_dim_ % groups_ != 0) throw ConfigError("g must divide n");
        require_shape(values_.size() == param_count(), "block-diagonal value count mismatch");
    }

    static BasicBlockDiagonal from_blocks(std::size_t out_dim, std::size_t in_dim,
                                          const std::vector<BasicMatrix<T>>& blocks) {
        const std::size_t g = blocks.size();
        BasicBlockDiagonal d(out_dim, in_dim, g);
        for (std::size_t b = 0; b < g; ++b) {
            require_shape(blocks[b].rows == d.block_rows() && blocks[b].cols == d.block_cols(),
                          "block shape must be (m/g) x (n/g)");
            std::copy(blocks[b].values.begin(), blocks[b].values.end(), d.block(b).begin());
        }
        return d;
    }

    std::size_t out_dim() const { return out_dim_; }
    std::size_t in_dim() const { return in_dim_; }
    std::size_t groups() const { return groups_; }
    std::size_t block_rows() const { return out_dim_ / groups_; }
    std::size_t block_cols() const { return in_dim_ / groups_; }
    std::size_t param_count() const { return out_dim_ * in_dim_ / groups_; }

    std::span<T> block(std::size_t b) {
        return {values_.data() + b * block_rows() * block_cols(), block_rows() * block_cols()};
    }
    std::span<const T> block(std::size_t b) const {
        return {values_.data() + b * block_rows() * block_cols(), block_rows() * block_cols()};
    }
    std::span<T> data() { return values_; }
    std::span<const T> data() const { return values_; }

    void apply(const T* x, T* y) const {
        kernels::block_diagonal_mv(values_.data(), groups_, block_rows(), block_cols(), x, y);
    }

    void apply_batch(const T* x, std::size_t x_stride, T* y, std::size_t y_stride,
                     std::size_t batch) const {
        kernels::block_diagonal_mv_batch(values_.data(), groups_, block_rows(), block_cols(), x,
                                         x_stride, y, y_stride, batch);
    }

    BasicMatrix<T> materialize() const {
        BasicMatrix<T> out(out_dim_, in_dim_);
        const std::size_t br = block_rows(), bc = block_cols();
        for (std::size_t b = 0; b < groups_; ++b) {
            auto blk = block(b);
            for (std::size_t i = 0; i < br; ++i)
                for (std::size_t j = 0; j < bc; ++j) out(b * br + i, b * bc + j) = blk[i * bc + j];
        }
        return out;
    }

    friend bool operator==(const BasicBlockDiagonal&, const BasicBlockDiagonal&) = default;

private:
    std::size_t out_dim_ = 0;
    std::size_t in_dim_ = 0;
    std::size_t groups_ = 1;
    std::vector<T> values_;
};

using BlockDiagonal = BasicBlockDiagonal<double>;

template <std::floating_point T>
std::vector<T> mv_block_diagonal(const BasicBlockDiagonal<T>& d, std::span<const T> x) {
    require_shape(x.size() == d.in_dim(), "mv_block_diagonal: x length must equal in_dim");
    std::vector<T> y(d.out_dim());
    d.apply(x.data(), y.data());
    return y;
}

/// Parameter-free permutation: reshape to [groups, length/groups], transpose.
/// Element i = b*(length/groups) + k lands at k*groups + b.
class ShuffleMix {
public:
    ShuffleMix() = default;
    ShuffleMix(std::size_t length, std::size_t groups) : length_(length), groups_(groups) {
        if (groups_ == 0 || length_ % groups_ != 0) throw ConfigError("g must divide m");
    }

    std::size_t length() const { return length_; }
    std::size_t groups() const { return groups_; }
    std::size_t param_count() const { return 0; }

    /// Output position of input element i.
    std::size_t target(std::size_t i) const {
        const std::size_t per_group = length_ / groups_;
        return (i % per_group) * groups_ + i / per_group;
    }

    /// The inverse permutation is the shuffle with length/groups groups.
    ShuffleMix inverse() const { return {length_, length_ / groups_}; }

    template <std::floating_point T>
    void apply(const T* v, T* out) const {
        kernels::shuffle(v, length_, groups_, out);
    }

    /// 0/1 matrix P with (P v)[target(i)] = v[i].
    DenseMatrix materialize() const {
        DenseMatrix p(length_, length_);
        for (std::size_t i = 0; i < length_; ++i) p(target(i), i) = 1.0;
        return p;
    }

    friend bool operator==(const ShuffleMix&, const ShuffleMix&) = default;

private:
    std::size_t length_ = 1;
    std::size_t groups_ = 1;
};

template <std::floating_point T>
std::vector<T> apply_shuffle(const ShuffleMix& s, std::span<const T> v) {
    require_shape(v.size() == s.length(), "apply_shuffle: vector length must equal shuffle length");
    std::vector<T> out(v.size());
    s.apply(v.data(), out.data());
    return out;
}

template <std::floating_point T>
std::vector<T> apply_shuffle_inverse(const ShuffleMix& s, std::span<const T> v) {
    require_shape(v.size() == s.length(),
                  "apply_shuffle_inverse: vector length must equal shuffle length");
    std::vector<T> out(v.size());
    s.inverse().apply(v.data(), out.data());
    return out;
}

template <std::floating_point T>
struct BasicSvdLinear {
    std::size_t rank_factor = 1;
    BasicMatrix<T> p;  // m x (n/r)
    BasicMatrix<T> q;  // (n/r) x n
};

template <std::floating_point T>
struct BasicLgpShuffle {
    BasicBlockDiagonal<T> lgp;
    ShuffleMix shuffle;
};

template <std::floating_point T>
struct BasicLgpDense {
    BasicBlockDiagonal<T> lgp;
    BasicMatrix<T> mix;  // square, min(m, n) wide unless overridden
    MixSide side = MixSide::After;
};

template <std::floating_point T>
struct BasicLowRankLgp {
    std::size_t rank_factor = 1;
    BasicBlockDiagonal<T> d_in;   // (n/r) x n, g_in blocks
    BasicMatrix<T> mix;           // M_r = M_out M_in, (n/r) x (n/r)
    BasicBlockDiagonal<T> d_out;  // m x (n/r), g_out blocks
};

/// One stored factor of a compressed operator, in serialization order.
struct FactorShape {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t groups = 1;  // > 1 only for block-diagonal factors

    std::size_t size() const { return rows * cols / groups; }
    /// Inputs feeding each output of this factor.
    std::size_t fan_in() const { return cols / groups; }

    friend bool operator==(const FactorShape&, const FactorShape&) = default;
};

/// Factor list for a valid config. Throws ConfigError otherwise.
std::vector<FactorShape> factor_layout(const CompressionConfig& cfg);

template <std::floating_point T>
class BasicCompressedLinear {
public:
    using Variant = std::variant<BasicMatrix<T>, BasicSvdLinear<T>, BasicLgpShuffle<T>,
                                 BasicLgpDense<T>, BasicLowRankLgp<T>>;

    /// Builds an operator from a config and its factor arrays (in
    /// `factor_layout` order). This is the single construction path used by
    /// initialization, deserialization and precision casts.
    static BasicCompressedLinear from_factors(const CompressionConfig& cfg,
                                              std::vector<std::vector<T>> factors) {
        validate(cfg);
        const auto layout = factor_layout(cfg);
        require_shape(factors.size() == layout.size(), "factor count does not match operator kind");
        for (std::size_t f = 0; f < layout.size(); ++f) {
            require_shape(factors[f].size() == layout[f].size(),
                          "factor size does not match operator shape");
        }
        auto take = [&](std::size_t f) -> std::vector<T>&& { return std::move(factors[f]); };
        auto dense = [&](std::size_t f) {
            return BasicMatrix<T>(layout[f].rows, layout[f].cols, take(f));
        };
        auto blocks = [&](std::size_t f) {
            return BasicBlockDiagonal<T>(layout[f].rows, layout[f].cols, layout[f].groups, take(f));
        };

        switch (cfg.kind) {
            case OperatorKind::Dense:
                return BasicCompressedLinear(cfg, Variant{dense(0)});
            case OperatorKind::SVD:
                return BasicCompressedLinear(cfg, Variant{BasicSvdLinear<T>{*cfg.r, dense(0), dense(1)}});
            case OperatorKind::LGPShuffle:
                return BasicCompressedLinear(
                    cfg, Variant{BasicLgpShuffle<T>{blocks(0), ShuffleMix(cfg.m, *cfg.g)}});
            case OperatorKind::LGPDense:
                return BasicCompressedLinear(
                    cfg, Variant{BasicLgpDense<T>{blocks(0), dense(1), cfg.effective_mix_side()}});
            case OperatorKind::LowRankLGP:
                return BasicCompressedLinear(
                    cfg, Variant{BasicLowRankLgp<T>{*cfg.r, blocks(0), dense(1), blocks(2)}});
        }
        throw ConfigError("unknown operator kind");
    }

    static BasicCompressedLinear dense(BasicMatrix<T> w) {
        const std::size_t m = w.rows, n = w.cols;
        std::vector<std::vector<T>> f;
        f.push_back(std::move(w.values));
        return from_factors(CompressionConfig::dense(m, n), std::move(f));
    }

    const CompressionConfig& config() const { return config_; }
    OperatorKind kind() const { return config_.kind; }
    std::size_t out_dim() const { return config_.m; }
    std::size_t in_dim() const { return config_.n; }
    const Variant& variant() const { return op_; }

    std::size_t param_count() const {
        std::size_t total = 0;
        for (auto f : factors()) total += f.size();
        return total;
    }

    /// Largest intermediate vector any composition needs.
    std::size_t scratch_size() const {
        switch (config_.kind) {
            case OperatorKind::Dense: return 0;
            case OperatorKind::SVD: return config_.n / *config_.r;
            case OperatorKind::LGPShuffle: return config_.m;
            case OperatorKind::LGPDense:
                return config_.effective_mix_side() == MixSide::After ? config_.m : config_.n;
            case OperatorKind::LowRankLGP: return 2 * (config_.n / *config_.r);
        }
        return 0;
    }

    /// y = op(x). `scratch` must hold at least scratch_size() elements.
    void apply_into(const T* x, T* y, T* scratch) const {
        std::visit(
            [&](const auto& op) {
                using Op = std::decay_t<decltype(op)>;
                if constexpr (std::is_same_v<Op, BasicMatrix<T>>) {
                    kernels::gemv(op.values.data(), op.rows, op.cols, x, y);
                } else if constexpr (std::is_same_v<Op, BasicSvdLinear<T>>) {
                    kernels::gemv(op.q.values.data(), op.q.rows, op.q.cols, x, scratch);
                    kernels::gemv(op.p.values.data(), op.p.rows, op.p.cols, scratch, y);
                } else if constexpr (std::is_same_v<Op, BasicLgpShuffle<T>>) {
                    op.lgp.apply(x, scratch);
                    op.shuffle.apply(scratch, y);
                } else if constexpr (std::is_same_v<Op, BasicLgpDense<T>>) {
                    if (op.side == MixSide::After) {
                        op.lgp.apply(x, scratch);
                        kernels::gemv(op.mix.values.data(), op.mix.rows, op.mix.cols, scratch, y);
                    } else {
                        kernels::gemv(op.mix.values.data(), op.mix.rows, op.mix.cols, x, scratch);
                        op.lgp.apply(scratch, y);
                    }
                } else {
                    T* inner = scratch;
                    T* mixed = scratch + op.mix.rows;
                    op.d_in.apply(x, inner);
                    kernels::gemv(op.mix.values.data(), op.mix.rows, op.mix.cols, inner, mixed);
                    op.d_out.apply(mixed, y);
                }
            },
            op_);
    }

    void apply(std::span<const T> x, std::span<T> y) const {
        require_shape(x.size() == in_dim(), "apply: x length must equal in_dim");
        require_shape(y.size() == out_dim(), "apply: y length must equal out_dim");
        std::vector<T> scratch(scratch_size());
        apply_into(x.data(), y.data(), scratch.data());
    }

    std::vector<T> apply(std::span<const T> x) const {
        std::vector<T> y(out_dim());
        apply(x, y);
        return y;
    }

    /// Applies the operator to `batch` stacked inputs (batch x in_dim,
    /// row-major) writing batch x out_dim outputs. Row t of the result is
    /// bit-identical to apply() on row t of the input.
    void apply_batch(std::span<const T> xs, std::span<T> ys, std::size_t batch) const {
        const std::size_t n = in_dim(), m = out_dim();
        require_shape(xs.size() == batch * n, "apply_batch: input must be batch x in_dim");
        require_shape(ys.size() == batch * m, "apply_batch: output must be batch x out_dim");
        if (batch == 0) return;
        std::visit(
            [&](const auto& op) {
                using Op = std::decay_t<decltype(op)>;
                const T* x = xs.data();
                T* y = ys.data();
                if constexpr (std::is_same_v<Op, BasicMatrix<T>>) {
                    kernels::gemv_batch(op.values.data(), op.rows, op.cols, x, n, y, m, batch);
                } else if constexpr (std::is_same_v<Op, BasicSvdLinear<T>>) {
                    const std::size_t k = op.q.rows;
                    std::vector<T> mid(batch * k);
                    kernels::gemv_batch(op.q.values.data(), k, n, x, n, mid.data(), k, batch);
                    kernels::gemv_batch(op.p.values.data(), m, k, mid.data(), k, y, m, batch);
                } else if constexpr (std::is_same_v<Op, BasicLgpShuffle<T>>) {
                    std::vector<T> mid(batch * m);
                    op.lgp.apply_batch(x, n, mid.data(), m, batch);
                    for (std::size_t t = 0; t < batch; ++t)
                        op.shuffle.apply(mid.data() + t * m, y + t * m);
                } else if constexpr (std::is_same_v<Op, BasicLgpDense<T>>) {
                    const std::size_t k = op.mix.rows;
                    std::vector<T> mid(batch * k);
                    if (op.side == MixSide::After) {
                        op.lgp.apply_batch(x, n, mid.data(), k, batch);
                        kernels::gemv_batch(op.mix.values.data(), k, k, mid.data(), k, y, m, batch);
                    } else {
                        kernels::gemv_batch(op.mix.values.data(), k, k, x, n, mid.data(), k, batch);
                        op.lgp.apply_batch(mid.data(), k, y, m, batch);
                    }
                } else {
                    const std::size_t k = op.mix.rows;
                    std::vector<T> inner(batch * k), mixed(batch * k);
                    op.d_in.apply_batch(x, n, inner.data(), k, batch);
                    kernels::gemv_batch(op.mix.values.data(), k, k, inner.data(), k, mixed.data(), k,
                                        batch);
                    op.d_out.apply_batch(mixed.data(), k, y, m, batch);
                }
            },
            op_);
    }

    /// Explicit m x n matrix, from naive products of the materialized factors.
    BasicMatrix<T> materialize() const {
        return std::visit(
            [&](const auto& op) -> BasicMatrix<T> {
                using Op = std::decay_t<decltype(op)>;
                if constexpr (std::is_same_v<Op, BasicMatrix<T>>) {
                    return op;
                } else if constexpr (std::is_same_v<Op, BasicSvdLinear<T>>) {
                    return matmul(op.p, op.q);
                } else if constexpr (std::is_same_v<Op, BasicLgpShuffle<T>>) {
                    return matmul(cast_matrix<T>(op.shuffle.materialize()), op.lgp.materialize());
                } else if constexpr (std::is_same_v<Op, BasicLgpDense<T>>) {
                    return op.side == MixSide::After ? matmul(op.mix, op.lgp.materialize())
                                                     : matmul(op.lgp.materialize(), op.mix);
                } else {
                    return matmul(op.d_out.materialize(), matmul(op.mix, op.d_in.materialize()));
                }
            },
            op_);
    }

    /// Flat factor arrays in factor_layout order.
    std::vector<std::span<const T>> factors() const {
        return std::visit(
            [](const auto& op) -> std::vector<std::span<const T>> {
                using Op = std::decay_t<decltype(op)>;
                if constexpr (std::is_same_v<Op, BasicMatrix<T>>) {
                    return {op.values};
                } else if constexpr (std::is_same_v<Op, BasicSvdLinear<T>>) {
                    return {op.p.values, op.q.values};
                } else if constexpr (std::is_same_v<Op, BasicLgpShuffle<T>>) {
                    return {op.lgp.data()};
                } else if constexpr (std::is_same_v<Op, BasicLgpDense<T>>) {
                    return {op.lgp.data(), op.mix.values};
                } else {
                    return {op.d_in.data(), op.mix.values, op.d_out.data()};
                }
            },
            op_);
    }

    /// Mutable views of the same arrays; used by the trainer to update weights in place.
    std::vector<std::span<T>> mutable_factors() {
        return std::visit(
            [](auto& op) -> std::vector<std::span<T>> {
                using Op = std::decay_t<decltype(op)>;
                if constexpr (std::is_same_v<Op, BasicMatrix<T>>) {
                    return {op.values};
                } else if constexpr (std::is_same_v<Op, BasicSvdLinear<T>>) {
                    return {op.p.values, op.q.values};
                } else if constexpr (std::is_same_v<Op, BasicLgpShuffle<T>>) {
                    return {op.lgp.data()};
                } else if constexpr (std::is_same_v<Op, BasicLgpDense<T>>) {
                    return {op.lgp.data(), op.mix.values};
                } else {
                    return {op.d_in.data(), op.mix.values, op.d_out.data()};
                }
            },
            op_);
    }

    bool all_finite() const {
        for (auto f : factors())
            for (T v : f)
                if (!std::isfinite(v)) return false;
        return true;
    }

    template <std::floating_point U>
    BasicCompressedLinear<U> cast() const {
        std::vector<std::vector<U>> out;
        for (auto f : factors()) out.emplace_back(f.begin(), f.end());
        return BasicCompressedLinear<U>::from_factors(config_, std::move(out));
    }

private:
    template <std::floating_point U>
    static BasicMatrix<U> cast_matrix(const DenseMatrix& m) {
        if constexpr (std::is_same_v<U, double>) {
            return m;
        } else {
            return BasicMatrix<U>(m.rows, m.cols, std::vector<U>(m.values.begin(), m.values.end()));
        }
    }

    BasicCompressedLinear(CompressionConfig cfg, Variant op) : config_(std::move(cfg)), op_(std::move(op)) {}

    CompressionConfig config_;
    Variant op_;
};

using CompressedLinear = BasicCompressedLinear<double>;

template <std::floating_point T>
std::vector<T> apply(const BasicCompressedLinear<T>& op, std::span<const T> x) {
    return op.apply(x);
}

template <std::floating_point T>
BasicMatrix<T> materialize(const BasicCompressedLinear<T>& op) {
    return op.materialize();
}

/// First violated divisibility rule, or a non-finite weight.
std::optional<ConfigError> check(const CompressedLinear& op);
void validate(const CompressedLinear& op);

/// Seeded initialization: every factor is filled i.i.d. uniform in
/// [-1/sqrt(fan_in), +1/sqrt(fan_in)] where fan_in is that factor's
/// per-output input width (block width for block-diagonal factors).
CompressedLinear init_weights(const CompressionConfig& cfg, std::uint64_t seed);

/// Bound used by init_weights for one factor.
double init_bound(const FactorShape& factor);

}  // namespace antman

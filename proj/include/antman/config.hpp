#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "antman/errors.hpp"

namespace antman {

enum class OperatorKind { Dense, SVD, LGPShuffle, LGPDense, LowRankLGP };

/// Which side of the block-diagonal product the dense mix sits on.
/// After: M * D * x.  Before: D * M * x.
enum class MixSide { Before, After };

std::string_view to_string(OperatorKind kind);
std::string_view to_string(MixSide side);
/// Accepts both "lgp-shuffle" and "LGPShuffle" spellings.
OperatorKind parse_kind(std::string_view text);
MixSide parse_mix_side(std::string_view text);

/// Shape and structure of one compressed m x n linear map.
struct CompressionConfig {
    OperatorKind kind = OperatorKind::Dense;
    std::size_t m = 0;  // out_dim
    std::size_t n = 0;  // in_dim
    std::optional<std::size_t> g;
    std::optional<std::size_t> r;
    std::optional<std::size_t> g_in;
    std::optional<std::size_t> g_out;
    // LGPDense only; unset means the min(m, n) rule.
    std::optional<MixSide> mix_side;

    static CompressionConfig dense(std::size_t m, std::size_t n);
    static CompressionConfig svd(std::size_t m, std::size_t n, std::size_t r);
    static CompressionConfig lgp_shuffle(std::size_t m, std::size_t n, std::size_t g);
    static CompressionConfig lgp_dense(std::size_t m, std::size_t n, std::size_t g,
                                       std::optional<MixSide> side = std::nullopt);
    static CompressionConfig lowrank_lgp(std::size_t m, std::size_t n, std::size_t r,
                                         std::size_t g_in, std::size_t g_out);

    /// Same structure, different dims. Used to stamp a per-dim template onto LSTM gates.
    CompressionConfig with_dims(std::size_t out_dim, std::size_t in_dim) const;

    /// Effective mix side for LGPDense: After when m <= n, Before otherwise,
    /// unless overridden.
    MixSide effective_mix_side() const;

    /// Number of stored factor matrices (the shuffle permutation is not one).
    int factor_count() const;

    std::string describe() const;

    friend bool operator==(const CompressionConfig&, const CompressionConfig&) = default;
};

/// First violated constraint, if any. Checks presence of the kind's required
/// fields and every divisibility rule.
std::optional<ConfigError> check(const CompressionConfig& cfg);

/// Throws ConfigError on the first violation.
void validate(const CompressionConfig& cfg);

}  // namespace antman

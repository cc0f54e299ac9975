#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "antman/config.hpp"

namespace antman {

/// Uniformly picks dims in [1, max_dim] and structural parameters among the
/// divisors that make the config valid.
CompressionConfig random_config(OperatorKind kind, std::size_t max_dim, std::mt19937_64& rng);

/// max_i |actual_i - expected_i| / max_j |expected_j|. Returns 0 for two zero vectors.
double max_relative_error(std::span<const double> actual, std::span<const double> expected);

struct VerifyOptions {
    std::uint64_t seed = 1;
    std::size_t cases_per_kind = 100;
    std::size_t vectors_per_case = 10;
    std::size_t max_dim = 64;
    double tolerance = 1e-12;
};

struct VerifyFailure {
    CompressionConfig config;
    double max_rel_err = 0.0;
};

struct VerifyReport {
    std::size_t cases = 0;
    double worst_rel_err = 0.0;
    std::vector<VerifyFailure> failures;

    bool ok() const { return failures.empty(); }
};

/// Checks apply() against mv_dense(materialize()) for random configs of every
/// kind. Cases are independent and may be sharded across threads; each case
/// is seeded from (seed, case index), so results do not depend on sharding.
VerifyReport verify_oracle(const VerifyOptions& options);

}  // namespace antman

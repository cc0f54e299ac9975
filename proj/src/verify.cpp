#include "antman/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "antman/costmodel.hpp"
#include "antman/operators.hpp"
#include "antman/parallel.hpp"

namespace antman {

namespace {

template <typename C>
auto pick(const C& items, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> dist(0, items.size() - 1);
    return items[dist(rng)];
}

constexpr OperatorKind kAllKinds[] = {OperatorKind::Dense, OperatorKind::SVD, OperatorKind::LGPShuffle,
                                      OperatorKind::LGPDense, OperatorKind::LowRankLGP};

}  // namespace

CompressionConfig random_config(OperatorKind kind, std::size_t max_dim, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> dim(1, max_dim);
    const std::size_t m = dim(rng), n = dim(rng);
    switch (kind) {
        case OperatorKind::Dense:
            return CompressionConfig::dense(m, n);
        case OperatorKind::SVD:
            return CompressionConfig::svd(m, n, pick(divisors(n), rng));
        case OperatorKind::LGPShuffle:
            return CompressionConfig::lgp_shuffle(m, n, pick(divisors(std::gcd(m, n)), rng));
        case OperatorKind::LGPDense: {
            auto cfg = CompressionConfig::lgp_dense(m, n, pick(divisors(std::gcd(m, n)), rng));
            // Occasionally exercise the per-layer mix-side override.
            if (std::uniform_int_distribution<int>(0, 3)(rng) == 0)
                cfg.mix_side = cfg.effective_mix_side() == MixSide::After ? MixSide::Before : MixSide::After;
            return cfg;
        }
        case OperatorKind::LowRankLGP: {
            const std::size_t r = pick(divisors(n), rng);
            const std::size_t rank = n / r;
            const std::size_t g_in = pick(divisors(rank), rng);
            const std::size_t g_out = pick(divisors(std::gcd(m, rank)), rng);
            return CompressionConfig::lowrank_lgp(m, n, r, g_in, g_out);
        }
    }
    throw ConfigError("unknown operator kind");
}

double max_relative_error(std::span<const double> actual, std::span<const double> expected) {
    require_shape(actual.size() == expected.size(), "max_relative_error: length mismatch");
    double scale = 0.0, worst = 0.0;
    for (double e : expected) scale = std::max(scale, std::abs(e));
    for (std::size_t i = 0; i < actual.size(); ++i) worst = std::max(worst, std::abs(actual[i] - expected[i]));
    if (worst == 0.0) return 0.0;
    return scale == 0.0 ? INFINITY : worst / scale;
}

VerifyReport verify_oracle(const VerifyOptions& options) {
    const std::size_t kinds = std::size(kAllKinds);
    const std::size_t total = options.cases_per_kind * kinds;
    std::vector<double> errors(total, 0.0);
    std::vector<CompressionConfig> configs(total);

    const int threads = num_threads();
#pragma omp parallel for num_threads(threads) schedule(dynamic) if (threads > 1)
    for (std::ptrdiff_t idx = 0; idx < static_cast<std::ptrdiff_t>(total); ++idx) {
        const auto c = static_cast<std::size_t>(idx);
        std::seed_seq seq{options.seed, static_cast<std::uint64_t>(c)};
        std::mt19937_64 rng(seq);
        const auto cfg = random_config(kAllKinds[c % kinds], options.max_dim, rng);
        const auto op = init_weights(cfg, rng());
        const auto dense = op.materialize();
        std::uniform_real_distribution<double> value(-1.0, 1.0);
        double worst = 0.0;
        for (std::size_t v = 0; v < options.vectors_per_case; ++v) {
            std::vector<double> x(cfg.n);
            for (double& xi : x) xi = value(rng);
            const auto got = op.apply(std::span<const double>(x));
            const auto want = mv_dense(dense, std::span<const double>(x));
            worst = std::max(worst, max_relative_error(got, want));
        }
        errors[c] = worst;
        configs[c] = cfg;
    }

    VerifyReport report;
    report.cases = total;
    for (std::size_t c = 0; c < total; ++c) {
        report.worst_rel_err = std::max(report.worst_rel_err, errors[c]);
        if (!(errors[c] < options.tolerance)) report.failures.push_back({configs[c], errors[c]});
    }
    return report;
}

}  // namespace antman

#include "antman/operators.hpp"

#include <random>

namespace antman {

std::vector<FactorShape> factor_layout(const CompressionConfig& cfg) {
    validate(cfg);
    const std::size_t m = cfg.m, n = cfg.n;
    switch (cfg.kind) {
        case OperatorKind::Dense:
            return {{"weight", m, n, 1}};
        case OperatorKind::SVD: {
            const std::size_t k = n / *cfg.r;
            return {{"p", m, k, 1}, {"q", k, n, 1}};
        }
        case OperatorKind::LGPShuffle:
            return {{"blocks", m, n, *cfg.g}};
        case OperatorKind::LGPDense: {
            const std::size_t k = cfg.effective_mix_side() == MixSide::After ? m : n;
            return {{"blocks", m, n, *cfg.g}, {"mix", k, k, 1}};
        }
        case OperatorKind::LowRankLGP: {
            const std::size_t k = n / *cfg.r;
            return {{"d_in", k, n, *cfg.g_in}, {"m_r", k, k, 1}, {"d_out", m, k, *cfg.g_out}};
        }
    }
    throw ConfigError("unknown operator kind");
}

std::optional<ConfigError> check(const CompressedLinear& op) {
    if (auto err = check(op.config())) return err;
    if (!op.all_finite()) return ConfigError("weights must be finite");
    return std::nullopt;
}

void validate(const CompressedLinear& op) {
    if (auto err = check(op)) throw *err;
}

double init_bound(const FactorShape& factor) {
    return 1.0 / std::sqrt(static_cast<double>(factor.fan_in()));
}

CompressedLinear init_weights(const CompressionConfig& cfg, std::uint64_t seed) {
    const auto layout = factor_layout(cfg);
    std::mt19937_64 rng(seed);
    std::vector<std::vector<double>> factors;
    factors.reserve(layout.size());
    for (const auto& shape : layout) {
        const double bound = init_bound(shape);
        std::uniform_real_distribution<double> dist(-bound, bound);
        std::vector<double> values(shape.size());
        for (double& v : values) v = dist(rng);
        factors.push_back(std::move(values));
    }
    return CompressedLinear::from_factors(cfg, std::move(factors));
}

}  // namespace antman

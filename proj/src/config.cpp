#include "antman/config.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace antman {

std::string_view to_string(OperatorKind kind) {
    switch (kind) {
        case OperatorKind::Dense: return "dense";
        case OperatorKind::SVD: return "svd";
        case OperatorKind::LGPShuffle: return "lgp-shuffle";
        case OperatorKind::LGPDense: return "lgp-dense";
        case OperatorKind::LowRankLGP: return "lowrank-lgp";
    }
    return "?";
}

std::string_view to_string(MixSide side) { return side == MixSide::Before ? "before" : "after"; }

namespace {

std::string normalize(std::string_view text) {
    std::string out;
    for (char c : text) {
        if (c == '-' || c == '_') continue;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

}  // namespace

OperatorKind parse_kind(std::string_view text) {
    const std::string key = normalize(text);
    if (key == "dense") return OperatorKind::Dense;
    if (key == "svd") return OperatorKind::SVD;
    if (key == "lgpshuffle") return OperatorKind::LGPShuffle;
    if (key == "lgpdense") return OperatorKind::LGPDense;
    if (key == "lowranklgp") return OperatorKind::LowRankLGP;
    throw ConfigError("unknown operator kind '" + std::string(text) + "'");
}

MixSide parse_mix_side(std::string_view text) {
    const std::string key = normalize(text);
    if (key == "before") return MixSide::Before;
    if (key == "after") return MixSide::After;
    throw ConfigError("unknown mix side '" + std::string(text) + "'");
}

CompressionConfig CompressionConfig::dense(std::size_t m, std::size_t n) {
    return {OperatorKind::Dense, m, n, {}, {}, {}, {}, {}};
}

CompressionConfig CompressionConfig::svd(std::size_t m, std::size_t n, std::size_t r) {
    return {OperatorKind::SVD, m, n, {}, r, {}, {}, {}};
}

CompressionConfig CompressionConfig::lgp_shuffle(std::size_t m, std::size_t n, std::size_t g) {
    return {OperatorKind::LGPShuffle, m, n, g, {}, {}, {}, {}};
}

CompressionConfig CompressionConfig::lgp_dense(std::size_t m, std::size_t n, std::size_t g,
                                               std::optional<MixSide> side) {
    return {OperatorKind::LGPDense, m, n, g, {}, {}, {}, side};
}

CompressionConfig CompressionConfig::lowrank_lgp(std::size_t m, std::size_t n, std::size_t r,
                                                 std::size_t g_in, std::size_t g_out) {
    return {OperatorKind::LowRankLGP, m, n, {}, r, g_in, g_out, {}};
}

CompressionConfig CompressionConfig::with_dims(std::size_t out_dim, std::size_t in_dim) const {
    CompressionConfig copy = *this;
    copy.m = out_dim;
    copy.n = in_dim;
    return copy;
}

MixSide CompressionConfig::effective_mix_side() const {
    if (mix_side) return *mix_side;
    return m <= n ? MixSide::After : MixSide::Before;
}

int CompressionConfig::factor_count() const {
    switch (kind) {
        case OperatorKind::Dense: return 1;
        case OperatorKind::SVD: return 2;
        case OperatorKind::LGPShuffle: return 1;
        case OperatorKind::LGPDense: return 2;
        case OperatorKind::LowRankLGP: return 3;
    }
    return 0;
}

std::string CompressionConfig::describe() const {
    std::ostringstream os;
    os << to_string(kind) << "(m=" << m << ",n=" << n;
    if (g) os << ",g=" << *g;
    if (r) os << ",r=" << *r;
    if (g_in) os << ",g_in=" << *g_in;
    if (g_out) os << ",g_out=" << *g_out;
    if (kind == OperatorKind::LGPDense) os << ",mix=" << to_string(effective_mix_side());
    os << ")";
    return os.str();
}

namespace {

bool divides(std::size_t d, std::size_t v) { return d != 0 && v % d == 0; }

}  // namespace

std::optional<ConfigError> check(const CompressionConfig& cfg) {
    if (cfg.m < 1) return ConfigError("m must be >= 1");
    if (cfg.n < 1) return ConfigError("n must be >= 1");

    switch (cfg.kind) {
        case OperatorKind::Dense:
            break;
        case OperatorKind::SVD:
            if (!cfg.r) return ConfigError("r is required for svd");
            if (*cfg.r < 1) return ConfigError("r must be >= 1");
            if (!divides(*cfg.r, cfg.n)) return ConfigError("r must divide n");
            break;
        case OperatorKind::LGPShuffle:
        case OperatorKind::LGPDense:
            if (!cfg.g) return ConfigError("g is required for " + std::string(to_string(cfg.kind)));
            if (*cfg.g < 1) return ConfigError("g must be >= 1");
            if (!divides(*cfg.g, cfg.m)) return ConfigError("g must divide m");
            if (!divides(*cfg.g, cfg.n)) return ConfigError("g must divide n");
            break;
        case OperatorKind::LowRankLGP: {
            if (!cfg.r) return ConfigError("r is required for lowrank-lgp");
            if (!cfg.g_in) return ConfigError("g_in is required for lowrank-lgp");
            if (!cfg.g_out) return ConfigError("g_out is required for lowrank-lgp");
            if (*cfg.r < 1) return ConfigError("r must be >= 1");
            if (*cfg.g_in < 1) return ConfigError("g_in must be >= 1");
            if (*cfg.g_out < 1) return ConfigError("g_out must be >= 1");
            if (!divides(*cfg.r, cfg.n)) return ConfigError("r must divide n");
            const std::size_t rank = cfg.n / *cfg.r;
            if (!divides(*cfg.g_in, cfg.n)) return ConfigError("g_in must divide n");
            if (!divides(*cfg.g_in, rank)) return ConfigError("g_in must divide n/r");
            if (!divides(*cfg.g_out, cfg.m)) return ConfigError("g_out must divide m");
            if (!divides(*cfg.g_out, rank)) return ConfigError("g_out must divide n/r");
            break;
        }
    }
    return std::nullopt;
}

void validate(const CompressionConfig& cfg) {
    if (auto err = check(cfg)) throw *err;
}

}  // namespace antman

#include "antman/costmodel.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <tuple>

namespace antman {

namespace {

std::int64_t as_i64(std::size_t v) { return static_cast<std::int64_t>(v); }

std::int64_t mix_width(const CompressionConfig& cfg) {
    return as_i64(cfg.effective_mix_side() == MixSide::After ? cfg.m : cfg.n);
}

std::int64_t param_count(const CompressionConfig& cfg) {
    const std::int64_t m = as_i64(cfg.m), n = as_i64(cfg.n);
    switch (cfg.kind) {
        case OperatorKind::Dense:
            return m * n;
        case OperatorKind::SVD: {
            const std::int64_t r = as_i64(*cfg.r);
            return m * n / r + n * n / r;
        }
        case OperatorKind::LGPShuffle:
            return m * n / as_i64(*cfg.g);
        case OperatorKind::LGPDense: {
            const std::int64_t k = mix_width(cfg);
            return m * n / as_i64(*cfg.g) + k * k;
        }
        case OperatorKind::LowRankLGP: {
            const std::int64_t r = as_i64(*cfg.r);
            const std::int64_t gi = as_i64(*cfg.g_in), go = as_i64(*cfg.g_out);
            return m * n / (r * go) + n * n / (r * gi) + (n / r) * (n / r);
        }
    }
    throw ConfigError("unknown operator kind");
}

}  // namespace

CostReport cost_of(const CompressionConfig& cfg) {
    validate(cfg);
    CostReport report;
    report.params = param_count(cfg);
    report.madds = report.params;
    report.reduction = Rational(as_i64(cfg.m) * as_i64(cfg.n), report.madds);
    report.below_one = report.reduction < Rational(1);
    return report;
}

Rational reduction_closed_form(const CompressionConfig& cfg) {
    validate(cfg);
    const std::int64_t m = as_i64(cfg.m), n = as_i64(cfg.n);
    switch (cfg.kind) {
        case OperatorKind::Dense:
            return Rational(1);
        case OperatorKind::SVD: {
            const std::int64_t r = as_i64(*cfg.r);
            return Rational(m * r, m + n);
        }
        case OperatorKind::LGPShuffle:
            return Rational(as_i64(*cfg.g));
        case OperatorKind::LGPDense: {
            const std::int64_t k = mix_width(cfg);
            return Rational(m * n) / (Rational(m * n, as_i64(*cfg.g)) + Rational(k * k));
        }
        case OperatorKind::LowRankLGP: {
            const std::int64_t r = as_i64(*cfg.r);
            const std::int64_t gi = as_i64(*cfg.g_in), go = as_i64(*cfg.g_out);
            return Rational(m * r * r * go * gi, m * gi * r + n * go * r + n * go * gi);
        }
    }
    throw ConfigError("unknown operator kind");
}

std::vector<std::size_t> divisors(std::size_t v) {
    std::vector<std::size_t> small, large;
    for (std::size_t d = 1; d * d <= v; ++d) {
        if (v % d != 0) continue;
        small.push_back(d);
        if (d != v / d) large.push_back(v / d);
    }
    small.insert(small.end(), large.rbegin(), large.rend());
    return small;
}

std::vector<PlanEntry> plan(std::size_t m, std::size_t n, Rational target,
                            const std::set<OperatorKind>& kinds) {
    if (m < 1 || n < 1) throw ConfigError("m and n must be >= 1");
    if (target < Rational(1)) throw ConfigError("target reduction must be >= 1");

    std::vector<CompressionConfig> candidates;
    const auto common = divisors(std::gcd(m, n));
    for (OperatorKind kind : kinds) {
        switch (kind) {
            case OperatorKind::Dense:
                candidates.push_back(CompressionConfig::dense(m, n));
                break;
            case OperatorKind::SVD:
                for (auto r : divisors(n)) candidates.push_back(CompressionConfig::svd(m, n, r));
                break;
            case OperatorKind::LGPShuffle:
                for (auto g : common) candidates.push_back(CompressionConfig::lgp_shuffle(m, n, g));
                break;
            case OperatorKind::LGPDense:
                for (auto g : common) candidates.push_back(CompressionConfig::lgp_dense(m, n, g));
                break;
            case OperatorKind::LowRankLGP:
                for (auto r : divisors(n)) {
                    const std::size_t rank = n / r;
                    for (auto g_in : divisors(rank))
                        for (auto g_out : divisors(std::gcd(m, rank)))
                            candidates.push_back(CompressionConfig::lowrank_lgp(m, n, r, g_in, g_out));
                }
                break;
        }
    }

    std::vector<PlanEntry> out;
    for (auto& cfg : candidates) {
        CostReport cost = cost_of(cfg);
        if (cost.reduction >= target) out.push_back({std::move(cfg), cost});
    }

    auto key = [](const PlanEntry& e) {
        const auto& c = e.config;
        return std::make_tuple(e.cost.params, c.factor_count(), static_cast<int>(c.kind),
                               c.g.value_or(0), c.r.value_or(0), c.g_in.value_or(0),
                               c.g_out.value_or(0));
    };
    std::sort(out.begin(), out.end(),
              [&](const PlanEntry& a, const PlanEntry& b) { return key(a) < key(b); });
    return out;
}

std::string to_string(const Rational& r) {
    if (r.denominator() == 1) return std::to_string(r.numerator());
    return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

double to_double(const Rational& r) { return boost::rational_cast<double>(r); }

Rational parse_rational(const std::string& text) {
    auto parse_int = [&](std::string_view s) {
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
            throw ConfigError("not a rational number: '" + text + "'");
        return v;
    };
    std::string_view sv = text;
    if (auto slash = sv.find('/'); slash != std::string_view::npos) {
        const std::int64_t den = parse_int(sv.substr(slash + 1));
        if (den == 0) throw ConfigError("zero denominator in '" + text + "'");
        return Rational(parse_int(sv.substr(0, slash)), den);
    }
    if (auto dot = sv.find('.'); dot != std::string_view::npos) {
        const auto frac = sv.substr(dot + 1);
        if (frac.size() > 12) throw ConfigError("too many decimals in '" + text + "'");
        std::int64_t scale = 1;
        for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
        const std::int64_t whole = sv.substr(0, dot).empty() ? 0 : parse_int(sv.substr(0, dot));
        const std::int64_t part = frac.empty() ? 0 : parse_int(frac);
        if (whole < 0 || sv.front() == '-') throw ConfigError("negative value '" + text + "'");
        return Rational(whole * scale + part, scale);
    }
    return Rational(parse_int(sv));
}

}  // namespace antman

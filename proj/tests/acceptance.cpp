// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "antman/bench.hpp"
#include "antman/costmodel.hpp"
#include "antman/experiment.hpp"
#include "antman/gradcheck.hpp"
#include "antman/kd.hpp"
#include "antman/lstm.hpp"
#include "antman/model_io.hpp"
#include "antman/verify.hpp"

using namespace antman;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(const char* name, double budget_s, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = elapsed < budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s  %-28s %8.2fs (budget %gs)  %s%s\n", pass ? "PASS" : "FAIL", name, elapsed, budget_s,
                o.detail.c_str(), in_time ? "" : "  [over time budget]");
    std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::vector<std::size_t> divs(std::size_t v) {
    std::vector<std::size_t> out;
    for (std::size_t d = 1; d <= v; ++d)
        if (v % d == 0) out.push_back(d);
    return out;
}

// Every valid config for an m x n map, enumerated from the divisibility rules.
std::vector<CompressionConfig> all_configs(std::size_t m, std::size_t n) {
    std::vector<CompressionConfig> out{CompressionConfig::dense(m, n)};
    for (auto r : divs(n)) out.push_back(CompressionConfig::svd(m, n, r));
    for (auto g : divs(n)) {
        if (m % g) continue;
        out.push_back(CompressionConfig::lgp_shuffle(m, n, g));
        out.push_back(CompressionConfig::lgp_dense(m, n, g));
        out.push_back(CompressionConfig::lgp_dense(m, n, g, MixSide::Before));
        out.push_back(CompressionConfig::lgp_dense(m, n, g, MixSide::After));
    }
    for (auto r : divs(n)) {
        const std::size_t rank = n / r;
        for (auto gi : divs(rank))
            for (auto go : divs(rank))
                if (m % go == 0) out.push_back(CompressionConfig::lowrank_lgp(m, n, r, gi, go));
    }
    return out;
}

double median3(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

Outcome cost_exactness() {
    const auto s = cost_of(CompressionConfig::lgp_shuffle(1000, 400, 10)).params;
    const auto d = cost_of(CompressionConfig::lgp_dense(1000, 400, 10)).params;
    const auto l = cost_of(CompressionConfig::lowrank_lgp(1000, 400, 4, 10, 10)).params;
    std::ostringstream os;
    os << "lgp-shuffle=" << s << " lgp-dense=" << d << " lowrank-lgp=" << l;
    return {s == 40000 && d == 200000 && l == 24000, os.str()};
}

Outcome closed_form_sweep() {
    std::size_t checked = 0, mismatched = 0;
    for (std::size_t m = 1; m <= 120; ++m) {
        for (std::size_t n = 1; n <= 120; ++n) {
            for (const auto& cfg : all_configs(m, n)) {
                validate(cfg);
                if (reduction_closed_form(cfg) != cost_of(cfg).reduction) ++mismatched;
                ++checked;
            }
        }
    }
    return {mismatched == 0 && checked > 0,
            std::to_string(checked) + " configs, " + std::to_string(mismatched) + " mismatches"};
}

Outcome oracle_equivalence() {
    VerifyOptions opt;
    opt.seed = 2024;
    opt.cases_per_kind = 100;
    opt.max_dim = 64;
    opt.tolerance = 1e-12;
    const auto r = verify_oracle(opt);
    return {r.ok() && r.cases >= 500, std::to_string(r.cases) + " cases, worst " + fmt("%.3e", r.worst_rel_err)};
}

Outcome gradients() {
    double worst = 0.0;
    std::size_t checks = 0;
    std::string worst_name;
    for (std::uint64_t seed : {1u, 2u}) {
        for (const auto& r : ad::gradient_suite(seed, 16)) {
            ++checks;
            if (r.worst_rel_err >= worst) {
                worst = r.worst_rel_err;
                worst_name = r.name;
            }
        }
    }
    return {worst < 1e-4 && checks > 0,
            std::to_string(checks) + " checks, worst " + fmt("%.3e", worst) + " (" + worst_name + ")"};
}

Outcome coefficients() {
    const auto c = decide_coefficients({4.110, 0.133, 0.004}, LossTerm::Target);
    std::ostringstream os;
    os << "(" << c.c_target << ", " << c.c_mse << ", " << c.c_kl << ")";
    return {c.c_target == 1.0 && c.c_mse == 30.0 && c.c_kl == 1000.0, os.str()};
}

Outcome kd_toy() {
    std::vector<double> target, mse, kl, combined;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto rep = run_kd_experiment(default_experiment(seed));
        target.push_back(rep.target_only.validation.target);
        mse.push_back(rep.mse_only.validation.target);
        kl.push_back(rep.kl_only.validation.target);
        combined.push_back(rep.combined.validation.target);
    }
    const double best_single = std::min({median3(target), median3(mse), median3(kl)});
    const double comb = median3(combined);
    return {comb <= 1.05 * best_single,
            "combined " + fmt("%.4f", comb) + " vs best single " + fmt("%.4f", best_single) + " (limit " +
                fmt("%.4f", 1.05 * best_single) + ")"};
}

Outcome fused_naive() {
    const CompressionConfig shapes[] = {
        CompressionConfig::dense(0, 0),
        CompressionConfig::svd(0, 0, 4),
        CompressionConfig::lgp_shuffle(0, 0, 4),
        CompressionConfig::lgp_dense(0, 0, 4),
        CompressionConfig::lowrank_lgp(0, 0, 2, 4, 4),
    };
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (const auto& shape : shapes) {
        const auto model = make_lstm_model({64, 64}, shape, rng());
        std::vector<std::vector<double>> xs(100, std::vector<double>(64));
        for (auto& x : xs)
            for (double& v : x) v = u(rng);
        const auto a = lstm_sequence(model, xs, SequenceMode::Fused);
        const auto b = lstm_sequence(model, xs, SequenceMode::Naive);
        if (a.size() != 100 || b.size() != 100) return {false, "wrong output length"};
        for (std::size_t t = 0; t < a.size(); ++t) worst = std::max(worst, max_relative_error(a[t], b[t]));
    }
    return {worst < 1e-12, "5 kinds x 100 steps, worst " + fmt("%.3e", worst)};
}

Outcome speedup() {
    const auto shape = CompressionConfig::lgp_shuffle(0, 0, 10);
    BenchConfig cfg;
    cfg.dims = {1600};
    cfg.configs = {shape};
    cfg.threads = 1;
    const auto rep = bench_run(cfg);
    const auto& r = rep.results.at(0);
    const bool exact = r.theoretical_speedup == Rational(10);
    // The measured speedup depends on the host, so it is reported but does not fail the run.
    const std::string advisory = r.actual_speedup >= 5.0 ? "meets >= 5x" : "ADVISORY: below 5x on this host";
    return {exact, "theoretical " + to_string(r.theoretical_speedup) + ", actual " + fmt("%.2fx", r.actual_speedup) +
                       " (" + advisory + ")"};
}

FormatErrorKind kind_of(const std::vector<std::uint8_t>& bytes) {
    try {
        deserialize_model(bytes);
    } catch (const FormatError& e) {
        return e.kind();
    }
    throw std::runtime_error("corrupted bytes were accepted");
}

Outcome model_format() {
    auto model = make_lstm_model({16, 32, 16}, CompressionConfig::lowrank_lgp(0, 0, 2, 2, 4), 99, "acceptance");
    const auto bytes = serialize_model(model);
    const auto again = serialize_model(deserialize_model(bytes));
    if (bytes != again) return {false, "re-serialized bytes differ"};

    std::size_t covered = 0;
    auto expect = [&](std::vector<std::uint8_t> b, FormatErrorKind k) {
        if (kind_of(b) != k) throw std::runtime_error("expected " + std::string(to_string(k)));
        ++covered;
    };
    auto magic = bytes;
    magic[0] ^= 0xff;
    expect(magic, FormatErrorKind::BadMagic);
    auto version = bytes;
    version[4] = 9;
    expect(version, FormatErrorKind::VersionMismatch);
    expect({bytes.begin(), bytes.end() - 1}, FormatErrorKind::Truncated);
    auto trailing = bytes;
    trailing.push_back(0);
    expect(trailing, FormatErrorKind::ManifestMismatch);
    auto meta = bytes;
    meta[16] = '!';
    expect(meta, FormatErrorKind::MalformedMetadata);
    try {
        load_model("/nonexistent/acceptance.antm");
        return {false, "missing file was accepted"};
    } catch (const FormatError& e) {
        if (e.kind() != FormatErrorKind::Io) return {false, "missing file gave the wrong error"};
        ++covered;
    }
    return {true, std::to_string(bytes.size()) + " bytes bit-exact, " + std::to_string(covered) + " error kinds"};
}

}  // namespace

int main() {
    criterion("cost-model exactness", 1, cost_exactness);
    criterion("closed form vs cost_of sweep", 10, closed_form_sweep);
    criterion("oracle equivalence", 30, oracle_equivalence);
    criterion("gradient correctness", 120, gradients);
    criterion("coefficient procedure", 1, coefficients);
    criterion("kd toy experiment", 900, kd_toy);
    criterion("fused/naive equivalence", 30, fused_naive);
    criterion("speedup reporting", 600, speedup);
    criterion("model format", 5, model_format);
    std::printf("%d failure(s)\n", failures);
    return failures == 0 ? 0 : 1;
}

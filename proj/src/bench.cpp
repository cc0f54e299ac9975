#include "antman/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ostream>
#include <random>

#include "antman/errors.hpp"
#include "antman/json_io.hpp"
#include "antman/lstm.hpp"
#include "antman/parallel.hpp"

namespace antman {

std::string_view to_string(Precision p) { return p == Precision::F32 ? "f32" : "f64"; }

Precision parse_precision(std::string_view text) {
    if (text == "f32" || text == "float") return Precision::F32;
    if (text == "f64" || text == "double") return Precision::F64;
    throw ConfigError("unknown precision '" + std::string(text) + "' (expected f32 or f64)");
}

void validate(const BenchConfig& cfg) {
    if (cfg.dims.empty()) throw ConfigError("dims must not be empty");
    if (cfg.seq_len < 1) throw ConfigError("seq_len must be >= 1");
    if (cfg.repetitions < 3 || cfg.repetitions % 2 == 0) throw ConfigError("repetitions must be odd and >= 3");
    if (cfg.threads && *cfg.threads < 1) throw ConfigError("threads must be >= 1");
    for (std::size_t d : cfg.dims) {
        if (d < 1) throw ConfigError("dims must be >= 1");
        for (const auto& shape : cfg.configs) {
            const auto sized = shape.with_dims(4 * d, d);
            if (auto err = check(sized)) throw ConfigError(sized.describe() + ": " + err->what());
        }
    }
}

Rational lstm_theoretical_speedup(const CompressionConfig& shape, std::size_t dim) {
    const auto d = static_cast<std::int64_t>(dim);
    const auto cfg = shape.with_dims(4 * dim, dim);
    // Input and hidden transforms have the same 4d x d shape here.
    return Rational(8 * d * d, 2 * cost_of(cfg).madds);
}

std::size_t lstm_model_bytes(const CompressionConfig& shape, std::size_t dim) {
    const auto params = static_cast<std::size_t>(cost_of(shape.with_dims(4 * dim, dim)).params);
    return 4 * (2 * params + 4 * dim);
}

double clock_granularity_ns() {
    using clock = std::chrono::steady_clock;
    double best = 1e18;
    for (int i = 0; i < 200; ++i) {
        const auto a = clock::now();
        auto b = clock::now();
        while (b == a) b = clock::now();
        best = std::min(best, std::chrono::duration<double, std::nano>(b - a).count());
    }
    return best;
}

double median(std::vector<double> samples) {
    if (samples.empty()) throw ConfigError("median of an empty sample");
    const auto mid = samples.begin() + static_cast<std::ptrdiff_t>(samples.size() / 2);
    std::nth_element(samples.begin(), mid, samples.end());
    return *mid;
}

namespace {

template <typename T>
double time_model(const BasicLstmModel<T>& model, const std::vector<std::vector<T>>& xs, const BenchConfig& cfg) {
    using clock = std::chrono::steady_clock;
    volatile T sink = 0;
    for (std::size_t i = 0; i < cfg.warmup; ++i) sink = lstm_sequence(model, xs).back()[0];
    std::vector<double> samples;
    for (std::size_t i = 0; i < cfg.repetitions; ++i) {
        const auto start = clock::now();
        const auto out = lstm_sequence(model, xs, SequenceMode::Fused);
        const auto stop = clock::now();
        sink = out.back()[0];
        samples.push_back(std::chrono::duration<double, std::nano>(stop - start).count());
    }
    (void)sink;
    return median(std::move(samples));
}

template <typename T>
double measure(const CompressionConfig& shape, std::size_t dim, const BenchConfig& cfg) {
    const auto model = make_lstm_model({dim, dim}, shape, cfg.seed ^ dim, "bench").template cast<T>();
    std::mt19937_64 rng(cfg.seed + dim);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::vector<std::vector<T>> xs(cfg.seq_len, std::vector<T>(dim));
    for (auto& x : xs)
        for (auto& v : x) v = static_cast<T>(d(rng));
    return time_model(model, xs, cfg);
}

double measure(const CompressionConfig& shape, std::size_t dim, const BenchConfig& cfg) {
    return cfg.precision == Precision::F32 ? measure<float>(shape, dim, cfg) : measure<double>(shape, dim, cfg);
}

std::string label(const CompressionConfig& shape) {
    std::string out(to_string(shape.kind));
    if (shape.r) out += " r=" + std::to_string(*shape.r);
    if (shape.g) out += " g=" + std::to_string(*shape.g);
    if (shape.g_in && shape.g_out && *shape.g_in == *shape.g_out) out += " g=" + std::to_string(*shape.g_in);
    else {
        if (shape.g_in) out += " g_in=" + std::to_string(*shape.g_in);
        if (shape.g_out) out += " g_out=" + std::to_string(*shape.g_out);
    }
    if (shape.mix_side) out += std::string(" mix=") + std::string(to_string(*shape.mix_side));
    return out;
}

struct ThreadScope {
    explicit ThreadScope(int threads) : saved(num_threads()) { set_num_threads(threads); }
    ~ThreadScope() { set_num_threads(saved); }
    int saved;
};

}  // namespace

BenchReport bench_run(const BenchConfig& cfg) {
    validate(cfg);
    BenchReport report;
    report.threads = cfg.threads.value_or(num_threads());
    const ThreadScope scope(report.threads);
    report.clock_granularity_ns = clock_granularity_ns();

    const auto dense = CompressionConfig::dense(0, 0);
    for (std::size_t dim : cfg.dims) {
        const double baseline = measure(dense, dim, cfg);
        report.dense_median_ns.push_back(baseline);
        for (const auto& shape : cfg.configs) {
            BenchResult r;
            r.dim = dim;
            r.config = label(shape);
            r.median_ns = measure(shape, dim, cfg);
            r.theoretical_speedup = lstm_theoretical_speedup(shape, dim);
            r.actual_speedup = baseline / r.median_ns;
            r.model_bytes = lstm_model_bytes(shape, dim);
            if (r.median_ns < 100.0 * report.clock_granularity_ns) {
                report.warnings.push_back("dim " + std::to_string(dim) + " " + r.config + ": median " +
                                          std::to_string(r.median_ns) + " ns is below 100x the clock granularity (" +
                                          std::to_string(report.clock_granularity_ns) + " ns)");
            }
            report.results.push_back(std::move(r));
        }
    }
    return report;
}

void write_csv(std::ostream& out, const BenchReport& report) {
    out << kBenchCsvHeader << '\n';
    char buf[64];
    for (const auto& r : report.results) {
        std::snprintf(buf, sizeof buf, "%.0f", r.median_ns);
        out << r.dim << ',' << r.config << ',' << buf << ',' << to_string(r.theoretical_speedup) << ',';
        std::snprintf(buf, sizeof buf, "%.4f", r.actual_speedup);
        out << buf << ',' << r.model_bytes << '\n';
    }
}

void to_json(nlohmann::json& j, const BenchConfig& c) {
    j = {{"dims", c.dims},
         {"seq_len", c.seq_len},
         {"configs", c.configs},
         {"repetitions", c.repetitions},
         {"warmup", c.warmup},
         {"precision", std::string(to_string(c.precision))},
         {"seed", c.seed}};
    j["threads"] = c.threads ? nlohmann::json(*c.threads) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, BenchConfig& c) {
    if (!j.is_object()) throw ConfigError("bench config must be a JSON object");
    c = BenchConfig{};
    if (j.contains("dims")) c.dims = j.at("dims").get<std::vector<std::size_t>>();
    c.seq_len = j.value("seq_len", c.seq_len);
    if (j.contains("configs")) c.configs = j.at("configs").get<std::vector<CompressionConfig>>();
    c.repetitions = j.value("repetitions", c.repetitions);
    c.warmup = j.value("warmup", c.warmup);
    if (j.contains("precision")) c.precision = parse_precision(j.at("precision").get<std::string>());
    if (j.contains("threads") && !j.at("threads").is_null()) c.threads = j.at("threads").get<int>();
    c.seed = j.value("seed", c.seed);
}

void to_json(nlohmann::json& j, const BenchResult& r) {
    j = {{"dim", r.dim},
         {"config", r.config},
         {"median_ns", r.median_ns},
         {"theoretical_speedup", to_string(r.theoretical_speedup)},
         {"theoretical_speedup_value", to_double(r.theoretical_speedup)},
         {"actual_speedup", r.actual_speedup},
         {"model_bytes", r.model_bytes}};
}

nlohmann::json report_json(const BenchConfig& cfg, const BenchReport& report) {
    nlohmann::json baseline = nlohmann::json::array();
    for (std::size_t i = 0; i < cfg.dims.size() && i < report.dense_median_ns.size(); ++i)
        baseline.push_back({{"dim", cfg.dims[i]}, {"median_ns", report.dense_median_ns[i]}});
    return {{"schema", "antman.bench_report"},
            {"version", BenchReport::kSchemaVersion},
            {"config", cfg},
            {"threads", report.threads},
            {"clock_granularity_ns", report.clock_granularity_ns},
            {"dense_baseline", baseline},
            {"results", report.results},
            {"warnings", report.warnings}};
}

}  // namespace antman

#pragma once

// Latency harness: single-batch LSTM sequence evaluation, dense against
// compressed, median of k timed runs after w warmup runs.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "antman/config.hpp"
#include "antman/costmodel.hpp"

namespace antman {

enum class Precision { F32, F64 };

std::string_view to_string(Precision p);
Precision parse_precision(std::string_view text);

struct BenchConfig {
    std::vector<std::size_t> dims{100, 200, 400, 800, 1600};  // input = hidden
    std::size_t seq_len = 100;
    /// Shapes applied to both transforms; dims are filled in per row.
    std::vector<CompressionConfig> configs{CompressionConfig::lgp_shuffle(0, 0, 2),
                                           CompressionConfig::lgp_shuffle(0, 0, 10),
                                           CompressionConfig::lowrank_lgp(0, 0, 2, 2, 2),
                                           CompressionConfig::lowrank_lgp(0, 0, 2, 10, 10)};
    std::size_t repetitions = 9;  // k, odd and >= 3
    std::size_t warmup = 3;
    std::optional<int> threads;   // unset: ANTMAN_THREADS or 1
    Precision precision = Precision::F32;
    std::uint64_t seed = 1;
};

/// Throws ConfigError on bad settings or a shape that is invalid at some dim.
void validate(const BenchConfig& cfg);

struct BenchResult {
    std::size_t dim = 0;
    std::string config;              // e.g. "lgp-shuffle g=10"
    double median_ns = 0.0;
    Rational theoretical_speedup{1};
    double actual_speedup = 0.0;     // dense median / this median
    std::size_t model_bytes = 0;     // 32-bit weights and bias
};

struct BenchReport {
    static constexpr int kSchemaVersion = 1;
    std::vector<BenchResult> results;
    std::vector<double> dense_median_ns;  // baseline per dim, same order as cfg.dims
    std::vector<std::string> warnings;
    double clock_granularity_ns = 0.0;
    int threads = 1;
};

/// Dense LSTM madds over the sum of both transforms' madds, exactly.
Rational lstm_theoretical_speedup(const CompressionConfig& shape, std::size_t dim);

/// 4 * (W_input + W_hidden params + 4d bias).
std::size_t lstm_model_bytes(const CompressionConfig& shape, std::size_t dim);

/// Smallest positive step observed on the steady clock.
double clock_granularity_ns();

/// Median of an odd-length sample.
double median(std::vector<double> samples);

BenchReport bench_run(const BenchConfig& cfg);

inline constexpr const char* kBenchCsvHeader = "dim,config,median_ns,theoretical_speedup,actual_speedup,model_bytes";

void write_csv(std::ostream& out, const BenchReport& report);

void to_json(nlohmann::json& j, const BenchConfig& c);
void from_json(const nlohmann::json& j, BenchConfig& c);
void to_json(nlohmann::json& j, const BenchResult& r);
nlohmann::json report_json(const BenchConfig& cfg, const BenchReport& report);

}  // namespace antman

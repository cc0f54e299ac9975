#include <gtest/gtest.h>

#include <sstream>

#include "antman/bench.hpp"
#include "antman/parallel.hpp"

using namespace antman;

namespace {

BenchConfig small_config() {
    BenchConfig cfg;
    cfg.dims = {16, 32};
    cfg.seq_len = 5;
    cfg.configs = {CompressionConfig::dense(0, 0), CompressionConfig::lgp_shuffle(0, 0, 4)};
    cfg.repetitions = 3;
    cfg.warmup = 1;
    return cfg;
}

}  // namespace

TEST(TheoreticalSpeedup, PublishedValues) {
    for (std::size_t d : {100u, 200u, 400u, 800u, 1600u}) {
        EXPECT_EQ(lstm_theoretical_speedup(CompressionConfig::lgp_shuffle(0, 0, 2), d), Rational(2));
        EXPECT_EQ(lstm_theoretical_speedup(CompressionConfig::lgp_shuffle(0, 0, 10), d), Rational(10));
        EXPECT_EQ(lstm_theoretical_speedup(CompressionConfig::lowrank_lgp(0, 0, 2, 2, 2), d), Rational(8, 3));
        EXPECT_EQ(lstm_theoretical_speedup(CompressionConfig::lowrank_lgp(0, 0, 2, 10, 10), d), Rational(8));
        EXPECT_EQ(lstm_theoretical_speedup(CompressionConfig::dense(0, 0), d), Rational(1));
    }
}

TEST(TheoreticalSpeedup, MatchesIndependentMaddCount) {
    // Dense: 2 * 4d * d. SVD r: 2 * (4d * d/r + d * d/r).
    for (std::size_t d : {8u, 24u, 96u}) {
        const auto dd = static_cast<std::int64_t>(d);
        for (std::int64_t r : {2, 4, 8}) {
            EXPECT_EQ(lstm_theoretical_speedup(CompressionConfig::svd(0, 0, static_cast<std::size_t>(r)), d),
                      Rational(8 * dd * dd, 2 * (4 * dd * dd / r + dd * dd / r)));
        }
    }
}

TEST(ModelBytes, DenseAndCompressed) {
    EXPECT_EQ(lstm_model_bytes(CompressionConfig::dense(0, 0), 400), 5126400u);  // 4 * (4d*d*2 + 4d)
    EXPECT_EQ(lstm_model_bytes(CompressionConfig::lgp_shuffle(0, 0, 10), 400), 4u * (2 * 64000 + 1600));
    EXPECT_EQ(lstm_model_bytes(CompressionConfig::dense(0, 0), 1600), 4u * (8 * 1600 * 1600 + 6400));
}

TEST(Median, OddSamples) {
    EXPECT_EQ(median({5.0, 1.0, 3.0}), 3.0);
    EXPECT_EQ(median({9.0, 2.0, 7.0, 4.0, 100.0}), 7.0);
    EXPECT_THROW(median({}), ConfigError);
}

TEST(BenchRun, RowsAreOrderedAndConsistent) {
    const auto cfg = small_config();
    const auto report = bench_run(cfg);
    ASSERT_EQ(report.results.size(), 4u);
    ASSERT_EQ(report.dense_median_ns.size(), 2u);
    const char* labels[] = {"dense", "lgp-shuffle g=4"};
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& r = report.results[i];
        EXPECT_EQ(r.dim, cfg.dims[i / 2]);
        EXPECT_EQ(r.config, labels[i % 2]);
        EXPECT_GT(r.median_ns, 0.0);
        EXPECT_GT(r.actual_speedup, 0.0);
        EXPECT_EQ(r.theoretical_speedup, lstm_theoretical_speedup(cfg.configs[i % 2], r.dim));
        EXPECT_EQ(r.model_bytes, lstm_model_bytes(cfg.configs[i % 2], r.dim));
        EXPECT_DOUBLE_EQ(r.actual_speedup, report.dense_median_ns[i / 2] / r.median_ns);
    }
}

TEST(BenchRun, DenseControlIsNearOne) {
    BenchConfig cfg;
    cfg.dims = {256};
    cfg.configs = {CompressionConfig::dense(0, 0)};
    cfg.threads = 1;
    const auto report = bench_run(cfg);
    ASSERT_EQ(report.results.size(), 1u);
    EXPECT_GE(report.results[0].actual_speedup, 0.9);
    EXPECT_LE(report.results[0].actual_speedup, 1.1);
}

TEST(BenchRun, WarnsWhenTimingsApproachClockResolution) {
    BenchConfig cfg;
    cfg.dims = {1};
    cfg.seq_len = 1;
    cfg.configs = {CompressionConfig::dense(0, 0)};
    cfg.repetitions = 3;
    cfg.warmup = 0;
    const auto report = bench_run(cfg);
    EXPECT_GT(report.clock_granularity_ns, 0.0);
    ASSERT_FALSE(report.warnings.empty());
    EXPECT_NE(report.warnings[0].find("clock granularity"), std::string::npos);
}

TEST(BenchRun, ExplicitThreadsAreScoped) {
    const int before = num_threads();
    auto cfg = small_config();
    cfg.dims = {16};
    cfg.threads = 2;
    const auto report = bench_run(cfg);
    EXPECT_EQ(report.threads, 2);
    EXPECT_EQ(num_threads(), before);
}

TEST(BenchRun, RejectsBadConfig) {
    auto cfg = small_config();
    cfg.repetitions = 4;
    EXPECT_THROW(bench_run(cfg), ConfigError);
    cfg.repetitions = 1;
    EXPECT_THROW(bench_run(cfg), ConfigError);
    cfg = small_config();
    cfg.seq_len = 0;
    EXPECT_THROW(bench_run(cfg), ConfigError);
    cfg = small_config();
    cfg.dims = {};
    EXPECT_THROW(bench_run(cfg), ConfigError);
    cfg = small_config();
    cfg.configs = {CompressionConfig::lgp_shuffle(0, 0, 3)};  // 3 does not divide 16
    EXPECT_THROW(bench_run(cfg), ConfigError);
    cfg = small_config();
    cfg.threads = 0;
    EXPECT_THROW(bench_run(cfg), ConfigError);
}

TEST(BenchOutput, CsvHeaderAndRows) {
    BenchReport report;
    report.results.push_back({400, "lowrank-lgp r=2 g=2", 1234567.4, Rational(8, 3), 2.5, 1941600});
    std::ostringstream out;
    write_csv(out, report);
    EXPECT_EQ(out.str(),
              "dim,config,median_ns,theoretical_speedup,actual_speedup,model_bytes\n"
              "400,lowrank-lgp r=2 g=2,1234567,8/3,2.5000,1941600\n");
}

TEST(BenchOutput, ConfigJsonRoundTrip) {
    auto cfg = small_config();
    cfg.precision = Precision::F64;
    cfg.threads = 3;
    const auto back = nlohmann::json(cfg).get<BenchConfig>();
    EXPECT_EQ(back.dims, cfg.dims);
    EXPECT_EQ(back.configs, cfg.configs);
    EXPECT_EQ(back.precision, Precision::F64);
    EXPECT_EQ(back.threads, std::optional<int>(3));
    EXPECT_EQ(back.repetitions, 3u);
    const auto defaults = nlohmann::json::parse("{}").get<BenchConfig>();
    EXPECT_EQ(defaults.repetitions, 9u);
    EXPECT_EQ(defaults.warmup, 3u);
    EXPECT_EQ(defaults.seq_len, 100u);
    EXPECT_FALSE(defaults.threads);
    EXPECT_THROW(nlohmann::json::parse(R"({"precision": "f16"})").get<BenchConfig>(), ConfigError);
}

TEST(BenchOutput, ReportJsonSchema) {
    const auto cfg = small_config();
    const auto j = report_json(cfg, bench_run(cfg));
    EXPECT_EQ(j.at("schema"), "antman.bench_report");
    EXPECT_EQ(j.at("version"), 1);
    EXPECT_EQ(j.at("results").size(), 4u);
    EXPECT_EQ(j.at("results")[1].at("theoretical_speedup"), "4");
    EXPECT_EQ(j.at("dense_baseline").size(), 2u);
}

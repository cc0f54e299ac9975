#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "antman/lstm.hpp"
#include "antman/verify.hpp"

using namespace antman;

namespace {

using CSpan = std::span<const double>;

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> d(-scale, scale);
    std::vector<double> v(n);
    for (double& x : v) x = d(rng);
    return v;
}

std::vector<std::vector<double>> random_sequence(std::size_t steps, std::size_t dim, std::mt19937_64& rng) {
    std::vector<std::vector<double>> xs;
    for (std::size_t t = 0; t < steps; ++t) xs.push_back(random_vector(dim, rng));
    return xs;
}

double sequence_rel_err(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
    EXPECT_EQ(a.size(), b.size());
    double worst = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) worst = std::max(worst, max_relative_error(a[t], b[t]));
    return worst;
}

// Straight-line recurrence over explicit dense matrices, written without any
// library kernel.
LstmState reference_step(const DenseMatrix& w_in, const DenseMatrix& w_h, const std::vector<double>& bias,
                         const std::vector<double>& x, const LstmState& s) {
    const std::size_t h = s.h.size();
    std::vector<double> z(4 * h);
    for (std::size_t r = 0; r < 4 * h; ++r) {
        double a = 0.0, b = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) a += w_in(r, j) * x[j];
        for (std::size_t j = 0; j < h; ++j) b += w_h(r, j) * s.h[j];
        z[r] = a + b + bias[r];
    }
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    LstmState out{std::vector<double>(h), std::vector<double>(h)};
    for (std::size_t k = 0; k < h; ++k) {
        const double i = sig(z[k]), f = sig(z[h + k]), g = std::tanh(z[2 * h + k]), o = sig(z[3 * h + k]);
        out.c[k] = f * s.c[k] + i * g;
        out.h[k] = o * std::tanh(out.c[k]);
    }
    return out;
}

const CompressionConfig kShapes[] = {
    CompressionConfig::dense(0, 0),
    CompressionConfig::svd(0, 0, 2),
    CompressionConfig::lgp_shuffle(0, 0, 4),
    CompressionConfig::lgp_dense(0, 0, 4),
    CompressionConfig::lowrank_lgp(0, 0, 2, 4, 4),
};

}  // namespace

TEST(LstmStep, ZeroWeightsForceHalfGates) {
    const std::size_t h = 3, i = 2;
    LstmCell cell(CompressedLinear::dense(DenseMatrix(4 * h, i)), CompressedLinear::dense(DenseMatrix(4 * h, h)),
                  std::vector<double>(4 * h, 0.0));
    const LstmState s{{0.1, -0.2, 0.3}, {1.0, -2.0, 0.5}};
    const std::vector<double> x{0.7, -0.4};
    const auto next = lstm_step(cell, CSpan(x), s);
    for (std::size_t k = 0; k < h; ++k) {
        // sigmoid(0) = 0.5 and tanh(0) = 0, so c' = 0.5 c and h' = 0.5 tanh(c').
        EXPECT_DOUBLE_EQ(next.c[k], 0.5 * s.c[k]);
        EXPECT_DOUBLE_EQ(next.h[k], 0.5 * std::tanh(0.5 * s.c[k]));
    }
}

TEST(LstmStep, DenseAndSingleGroupShuffleAgree) {
    std::mt19937_64 rng(3);
    const std::size_t h = 6, i = 5;
    const auto w_in = random_vector(4 * h * i, rng), w_h = random_vector(4 * h * h, rng), bias = random_vector(4 * h, rng);
    LstmCell dense(CompressedLinear::dense(DenseMatrix(4 * h, i, w_in)),
                   CompressedLinear::dense(DenseMatrix(4 * h, h, w_h)), bias);
    LstmCell shuffled(CompressedLinear::from_factors(CompressionConfig::lgp_shuffle(4 * h, i, 1), {w_in}),
                      CompressedLinear::from_factors(CompressionConfig::lgp_shuffle(4 * h, h, 1), {w_h}), bias);
    const LstmState s{random_vector(h, rng), random_vector(h, rng)};
    const auto x = random_vector(i, rng);
    const auto a = lstm_step(dense, CSpan(x), s), b = lstm_step(shuffled, CSpan(x), s);
    EXPECT_LT(max_relative_error(a.h, b.h), 1e-12);
    EXPECT_LT(max_relative_error(a.c, b.c), 1e-12);
}

TEST(LstmStep, MatchesStraightLineReference) {
    std::mt19937_64 rng(8);
    for (const auto& shape : kShapes) {
        const auto model = make_lstm_model({8, 8}, shape, rng());
        const auto& cell = model.layers[0];
        const LstmState s{random_vector(8, rng), random_vector(8, rng)};
        const auto x = random_vector(8, rng);
        const auto got = lstm_step(cell, CSpan(x), s);
        const auto want = reference_step(cell.w_input.materialize(), cell.w_hidden.materialize(), cell.bias, x, s);
        EXPECT_LT(max_relative_error(got.h, want.h), 1e-12) << shape.describe();
        EXPECT_LT(max_relative_error(got.c, want.c), 1e-12) << shape.describe();
    }
}

TEST(LstmStep, ShapeErrors) {
    const auto model = make_lstm_model({4, 8}, CompressionConfig::dense(0, 0), 1);
    const std::vector<double> x(3);
    EXPECT_THROW(lstm_step(model.layers[0], CSpan(x), LstmState::zeros(8)), ShapeError);
    const std::vector<double> ok(4);
    EXPECT_THROW(lstm_step(model.layers[0], CSpan(ok), LstmState::zeros(7)), ShapeError);
    EXPECT_THROW(LstmCell(init_weights(CompressionConfig::dense(16, 4), 1), init_weights(CompressionConfig::dense(12, 4), 1),
                          std::vector<double>(16)),
                 ShapeError);
}

TEST(LstmSequence, SingleStepFusedEqualsNaive) {
    std::mt19937_64 rng(2);
    const auto model = make_lstm_model({16, 16}, kShapes[2], 5);
    const auto xs = random_sequence(1, 16, rng);
    EXPECT_EQ(lstm_sequence(model, xs, SequenceMode::Fused), lstm_sequence(model, xs, SequenceMode::Naive));
}

TEST(LstmSequence, EmptyInputGivesEmptyOutput) {
    const auto model = make_lstm_model({16, 16}, kShapes[0], 5);
    EXPECT_TRUE(lstm_sequence(model, {}, SequenceMode::Fused).empty());
    EXPECT_TRUE(lstm_sequence(model, {}, SequenceMode::Naive).empty());
}

TEST(LstmSequence, FusedMatchesNaiveForEveryKind) {
    std::mt19937_64 rng(12);
    for (const auto& shape : kShapes) {
        const auto model = make_lstm_model({64, 64}, shape, rng());
        const auto xs = random_sequence(100, 64, rng);
        const auto fused = lstm_sequence(model, xs, SequenceMode::Fused);
        const auto naive = lstm_sequence(model, xs, SequenceMode::Naive);
        ASSERT_EQ(fused.size(), 100u);
        EXPECT_LT(sequence_rel_err(fused, naive), 1e-12) << shape.describe();
    }
}

TEST(LstmSequence, StackedLayersFusedMatchesNaive) {
    std::mt19937_64 rng(19);
    const auto model = make_lstm_model({16, 16, 8}, kShapes[4], 77);
    const auto xs = random_sequence(30, 16, rng);
    EXPECT_EQ(lstm_sequence(model, xs, SequenceMode::Fused), lstm_sequence(model, xs, SequenceMode::Naive));
}

TEST(LstmSequence, CompressedMatchesMaterialized) {
    std::mt19937_64 rng(23);
    for (const auto& shape : kShapes) {
        const auto model = make_lstm_model({32, 32, 32}, shape, rng());
        const auto dense = materialized(model);
        const auto xs = random_sequence(100, 32, rng);
        EXPECT_LT(sequence_rel_err(lstm_sequence(model, xs), lstm_sequence(dense, xs)), 1e-10) << shape.describe();
    }
}

TEST(LstmSequence, HiddenStateStaysInTanhRange) {
    std::mt19937_64 rng(29);
    for (const auto& shape : kShapes) {
        const auto model = make_lstm_model({16, 16}, shape, rng());
        const auto xs = random_sequence(100, 16, rng);
        for (const auto& h : lstm_sequence(model, xs, SequenceMode::Naive)) {
            for (double v : h) {
                ASSERT_TRUE(std::isfinite(v));
                ASSERT_GT(v, -1.0);
                ASSERT_LT(v, 1.0);
            }
        }
    }
}

TEST(LstmSequence, RejectsWrongInputLength) {
    const auto model = make_lstm_model({4, 8}, kShapes[0], 1);
    EXPECT_THROW(lstm_sequence(model, {std::vector<double>(5)}), ShapeError);
}

TEST(LstmSequence, FloatComputeTracksDouble) {
    std::mt19937_64 rng(31);
    const auto model = make_lstm_model({32, 32}, kShapes[2], 4);
    const auto xs = random_sequence(20, 32, rng);
    std::vector<std::vector<float>> xf;
    for (const auto& x : xs) xf.emplace_back(x.begin(), x.end());
    const auto yd = lstm_sequence(model, xs);
    const auto yf = lstm_sequence(model.cast<float>(), xf);
    for (std::size_t t = 0; t < xs.size(); ++t)
        for (std::size_t k = 0; k < 32; ++k) EXPECT_NEAR(yf[t][k], yd[t][k], 1e-4);
}

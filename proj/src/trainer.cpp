#include "antman/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "antman/errors.hpp"

namespace antman {

void validate(const TrainConfig& cfg) {
    if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate))
        throw ConfigError("learning_rate must be finite and >= 0");
    if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
    if (!(cfg.clip_norm >= 0.0)) throw ConfigError("clip_norm must be >= 0");
    if (cfg.patience < 1) throw ConfigError("patience must be >= 1");
    if (!(cfg.min_delta >= 0.0)) throw ConfigError("min_delta must be >= 0");
}

namespace {

std::vector<std::vector<double>> snapshot(const std::vector<std::span<double>>& values) {
    std::vector<std::vector<double>> out;
    out.reserve(values.size());
    for (const auto& v : values) out.emplace_back(v.begin(), v.end());
    return out;
}

void restore(const std::vector<std::span<double>>& values, const std::vector<std::vector<double>>& saved) {
    for (std::size_t i = 0; i < values.size(); ++i) std::copy(saved[i].begin(), saved[i].end(), values[i].begin());
}

}  // namespace

TrainTrace train(const TrainableParams& params, std::size_t train_size, const BatchObjective& objective,
                 const ValidationObjective& validation, const TrainConfig& cfg) {
    validate(cfg);
    if (params.values.size() != params.grads.size()) throw ShapeError("one gradient buffer per parameter array");
    for (std::size_t i = 0; i < params.values.size(); ++i)
        require_shape(params.values[i].size() == params.grads[i].size(), "gradient buffer size mismatch");
    if (train_size == 0) throw ConfigError("training set is empty");

    std::vector<std::vector<double>> velocity;
    for (const auto& v : params.values) velocity.emplace_back(v.size(), 0.0);

    TrainTrace trace;
    trace.initial_val = validation();
    trace.best_val = trace.initial_val;
    if (!std::isfinite(trace.initial_val)) {
        trace.diverged = true;
        trace.stop_reason = "diverged";
        return trace;
    }
    auto best = snapshot(params.values);

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(train_size);
    std::iota(order.begin(), order.end(), 0);
    std::size_t stall = 0;
    trace.stop_reason = "max_epochs";

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double weighted = 0.0;
        for (std::size_t start = 0; start < train_size; start += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, train_size - start);
            for (const auto& g : params.grads) std::fill(g.begin(), g.end(), 0.0);
            const double loss = objective(std::span<const std::size_t>(order.data() + start, count));
            if (!std::isfinite(loss)) {
                trace.diverged = true;
                break;
            }
            weighted += loss * static_cast<double>(count);

            double sq = 0.0;
            for (const auto& g : params.grads)
                for (double x : g) sq += x * x;
            const double norm = std::sqrt(sq);
            if (!std::isfinite(norm)) {
                trace.diverged = true;
                break;
            }
            const double clip = cfg.clip_norm > 0.0 && norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;
            for (std::size_t i = 0; i < params.values.size(); ++i) {
                auto& vel = velocity[i];
                const auto g = params.grads[i];
                const auto p = params.values[i];
                for (std::size_t k = 0; k < p.size(); ++k) {
                    vel[k] = cfg.momentum * vel[k] + clip * g[k];
                    p[k] -= cfg.learning_rate * vel[k];
                }
            }
        }
        if (trace.diverged) break;
        trace.train_loss.push_back(weighted / static_cast<double>(train_size));

        const double val = validation();
        trace.val_loss.push_back(val);
        if (!std::isfinite(val)) {
            trace.diverged = true;
            break;
        }
        if (val < trace.best_val - cfg.min_delta) {
            trace.best_val = val;
            trace.best_epoch = epoch;
            best = snapshot(params.values);
            stall = 0;
        } else if (++stall >= cfg.patience) {
            trace.stop_reason = "patience";
            break;
        }
    }
    if (trace.diverged) trace.stop_reason = "diverged";
    restore(params.values, best);
    return trace;
}

}  // namespace antman

#pragma once

// Minibatch SGD with momentum, gradient-norm clipping and early stopping.
// The loop is agnostic of the model: callers supply a batch objective that
// accumulates gradients into the buffers they registered.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace antman {

struct TrainConfig {
    std::size_t max_epochs = 40;
    std::size_t batch_size = 16;
    double learning_rate = 0.1;
    double momentum = 0.9;
    double clip_norm = 5.0;        // 0 disables clipping
    std::size_t patience = 4;      // epochs without improvement before stopping
    double min_delta = 0.0;        // improvement must exceed this
    std::uint64_t seed = 1;        // batch order

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Throws ConfigError on an unusable configuration.
void validate(const TrainConfig& cfg);

struct TrainTrace {
    std::vector<double> train_loss;  // mean batch loss per epoch
    std::vector<double> val_loss;    // validation objective after each epoch
    double initial_val = 0.0;        // before the first update
    double best_val = 0.0;
    std::size_t best_epoch = 0;      // 0 means no epoch improved on the initial parameters
    bool diverged = false;
    std::string stop_reason;         // "max_epochs", "patience", "diverged"

    friend bool operator==(const TrainTrace&, const TrainTrace&) = default;
};

struct TrainableParams {
    std::vector<std::span<double>> values;
    std::vector<std::span<double>> grads;  // same shapes as values
};

/// Adds d loss / d params for the given example indices into the gradient
/// buffers and returns the batch loss.
using BatchObjective = std::function<double(std::span<const std::size_t> batch)>;
using ValidationObjective = std::function<double()>;

/// Runs the loop. On return the parameters hold the best validation point.
/// A non-finite batch or validation loss aborts the run and is reported
/// through `diverged`; the parameters are still restored.
TrainTrace train(const TrainableParams& params, std::size_t train_size, const BatchObjective& objective,
                 const ValidationObjective& validation, const TrainConfig& cfg);

}  // namespace antman

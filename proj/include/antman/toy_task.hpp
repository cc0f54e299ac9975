#pragma once

// Synthetic next-token task. Tokens follow a first-order Markov chain whose
// rows concentrate most of their mass on a few seeded successors, so a model
// that reads the current token can do far better than the unigram rate.

#include <cstddef>
#include <cstdint>
#include <vector>

namespace antman {

struct ToyTaskConfig {
    std::size_t vocab = 20;
    std::size_t seq_len = 32;      // predictions per sequence
    std::size_t train_size = 256;
    std::size_t val_size = 64;
    std::size_t branching = 3;     // favoured successors per token
    double floor_mass = 0.05;      // spread uniformly over the whole vocabulary
    std::uint64_t seed = 1;

    friend bool operator==(const ToyTaskConfig&, const ToyTaskConfig&) = default;
};

/// Throws ConfigError on an unusable configuration.
void validate(const ToyTaskConfig& cfg);

using TokenSequence = std::vector<std::size_t>;  // seq_len + 1 tokens

struct ToyTask {
    ToyTaskConfig config;
    std::vector<std::vector<double>> transitions;  // vocab x vocab, rows sum to 1
    std::vector<TokenSequence> train;
    std::vector<TokenSequence> validation;
};

ToyTask make_toy_task(const ToyTaskConfig& cfg);

/// Mean -log P(next | current) under the true chain: the best achievable CE.
double chain_cross_entropy(const ToyTask& task, const std::vector<TokenSequence>& data);

/// CE of the token frequencies of `task.train` scored on `data`.
double unigram_cross_entropy(const ToyTask& task, const std::vector<TokenSequence>& data);

}  // namespace antman

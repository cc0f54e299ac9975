#include "antman/toy_task.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "antman/errors.hpp"

namespace antman {

void validate(const ToyTaskConfig& cfg) {
    if (cfg.vocab < 2) throw ConfigError("vocab must be >= 2");
    if (cfg.seq_len < 1) throw ConfigError("seq_len must be >= 1");
    if (cfg.train_size < 1 || cfg.val_size < 1) throw ConfigError("train_size and val_size must be >= 1");
    if (cfg.branching < 1 || cfg.branching > cfg.vocab) throw ConfigError("branching must be in [1, vocab]");
    if (!(cfg.floor_mass > 0.0 && cfg.floor_mass < 1.0)) throw ConfigError("floor_mass must be in (0, 1)");
}

ToyTask make_toy_task(const ToyTaskConfig& cfg) {
    validate(cfg);
    std::mt19937_64 rng(cfg.seed);
    ToyTask task;
    task.config = cfg;

    const double v = static_cast<double>(cfg.vocab);
    std::vector<std::size_t> order(cfg.vocab);
    std::gamma_distribution<double> weight(1.0, 1.0);
    for (std::size_t s = 0; s < cfg.vocab; ++s) {
        std::vector<double> row(cfg.vocab, cfg.floor_mass / v);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<double> w(cfg.branching);
        for (double& x : w) x = weight(rng) + 0.1;
        const double total = std::accumulate(w.begin(), w.end(), 0.0);
        for (std::size_t k = 0; k < cfg.branching; ++k) row[order[k]] += (1.0 - cfg.floor_mass) * w[k] / total;
        task.transitions.push_back(std::move(row));
    }

    std::uniform_int_distribution<std::size_t> start(0, cfg.vocab - 1);
    auto draw = [&](std::size_t count) {
        std::vector<TokenSequence> out;
        for (std::size_t i = 0; i < count; ++i) {
            TokenSequence seq{start(rng)};
            for (std::size_t t = 0; t < cfg.seq_len; ++t) {
                const auto& row = task.transitions[seq.back()];
                std::discrete_distribution<std::size_t> next(row.begin(), row.end());
                seq.push_back(next(rng));
            }
            out.push_back(std::move(seq));
        }
        return out;
    };
    task.train = draw(cfg.train_size);
    task.validation = draw(cfg.val_size);
    return task;
}

double chain_cross_entropy(const ToyTask& task, const std::vector<TokenSequence>& data) {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& seq : data) {
        for (std::size_t t = 0; t + 1 < seq.size(); ++t, ++count)
            total -= std::log(task.transitions[seq[t]][seq[t + 1]]);
    }
    return total / static_cast<double>(count);
}

double unigram_cross_entropy(const ToyTask& task, const std::vector<TokenSequence>& data) {
    // Add-one smoothing keeps unseen tokens finite.
    std::vector<double> freq(task.config.vocab, 1.0);
    for (const auto& seq : task.train)
        for (std::size_t t = 1; t < seq.size(); ++t) freq[seq[t]] += 1.0;
    const double total = std::accumulate(freq.begin(), freq.end(), 0.0);
    double ce = 0.0;
    std::size_t count = 0;
    for (const auto& seq : data) {
        for (std::size_t t = 1; t < seq.size(); ++t, ++count) ce -= std::log(freq[seq[t]] / total);
    }
    return ce / static_cast<double>(count);
}

}  // namespace antman

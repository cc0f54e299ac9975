#include "antman/lstm.hpp"

#include <random>

#include "antman/json_io.hpp"

namespace antman {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

LstmModel make_lstm_model(const std::vector<std::size_t>& dims, const CompressionConfig& shape,
                          std::uint64_t seed, std::string name) {
    require_shape(dims.size() >= 2, "make_lstm_model: need an input dim and at least one hidden dim");
    LstmModel model;
    model.metadata.name = std::move(name);
    model.metadata.seed = seed;
    model.metadata.creation = {{"dims", dims}, {"shape", shape}};

    for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
        const std::size_t in = dims[k], h = dims[k + 1];
        const std::uint64_t base = splitmix64(seed ^ splitmix64(k));
        auto w_in = init_weights(shape.with_dims(4 * h, in), splitmix64(base + 1));
        auto w_h = init_weights(shape.with_dims(4 * h, h), splitmix64(base + 2));

        std::mt19937_64 rng(splitmix64(base + 3));
        const double bound = 1.0 / std::sqrt(static_cast<double>(h));
        std::uniform_real_distribution<double> dist(-bound, bound);
        std::vector<double> bias(4 * h);
        for (double& b : bias) b = dist(rng);

        model.layers.emplace_back(std::move(w_in), std::move(w_h), std::move(bias));
    }
    return model;
}

LstmModel materialized(const LstmModel& model) {
    LstmModel out;
    out.metadata = model.metadata;
    for (const auto& cell : model.layers) {
        out.layers.emplace_back(CompressedLinear::dense(cell.w_input.materialize()),
                                CompressedLinear::dense(cell.w_hidden.materialize()), cell.bias);
    }
    return out;
}

}  // namespace antman

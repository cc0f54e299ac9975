#pragma once

// Stacked LSTM whose input and hidden transforms are compressed operators.
//
// Gate layout inside the 4h pre-activation vector is fixed:
//   [input gate | forget gate | cell candidate | output gate]
// and one step computes
//   z  = W_input x + W_hidden h + bias
//   c' = sigmoid(z_f) * c + sigmoid(z_i) * tanh(z_g)
//   h' = sigmoid(z_o) * tanh(c')

#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "antman/operators.hpp"

namespace antman {

inline constexpr const char* kGateOrder[4] = {"input", "forget", "cell", "output"};

template <std::floating_point T>
struct BasicLstmCell {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    BasicCompressedLinear<T> w_input;   // 4h x i
    BasicCompressedLinear<T> w_hidden;  // 4h x h
    std::vector<T> bias;                // 4h

    BasicLstmCell(BasicCompressedLinear<T> w_in, BasicCompressedLinear<T> w_h, std::vector<T> b)
        : input_dim(w_in.in_dim()),
          hidden_dim(w_h.in_dim()),
          w_input(std::move(w_in)),
          w_hidden(std::move(w_h)),
          bias(std::move(b)) {
        require_shape(w_hidden.out_dim() == 4 * hidden_dim, "W_hidden must be 4h x h");
        require_shape(w_input.out_dim() == 4 * hidden_dim, "W_input must be 4h x i");
        require_shape(bias.size() == 4 * hidden_dim, "bias must have length 4h");
    }

    std::size_t param_count() const {
        return w_input.param_count() + w_hidden.param_count() + bias.size();
    }

    template <std::floating_point U>
    BasicLstmCell<U> cast() const {
        return {w_input.template cast<U>(), w_hidden.template cast<U>(),
                std::vector<U>(bias.begin(), bias.end())};
    }
};

template <std::floating_point T>
struct BasicLstmState {
    std::vector<T> h;
    std::vector<T> c;

    static BasicLstmState zeros(std::size_t hidden) {
        return {std::vector<T>(hidden, T{}), std::vector<T>(hidden, T{})};
    }
};

struct ModelMetadata {
    std::string name;
    std::uint64_t seed = 0;
    nlohmann::json creation = nlohmann::json::object();
};

template <std::floating_point T>
struct BasicLstmModel {
    std::vector<BasicLstmCell<T>> layers;
    ModelMetadata metadata;

    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().input_dim; }
    std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().hidden_dim; }

    std::size_t param_count() const {
        std::size_t total = 0;
        for (const auto& l : layers) total += l.param_count();
        return total;
    }

    /// Layer k+1 must consume layer k's hidden state.
    void validate() const {
        for (std::size_t k = 1; k < layers.size(); ++k) {
            require_shape(layers[k].input_dim == layers[k - 1].hidden_dim,
                          "layer input_dim must equal previous layer hidden_dim");
        }
    }

    template <std::floating_point U>
    BasicLstmModel<U> cast() const {
        BasicLstmModel<U> out;
        out.metadata = metadata;
        for (const auto& l : layers) out.layers.push_back(l.template cast<U>());
        return out;
    }
};

using LstmCell = BasicLstmCell<double>;
using LstmState = BasicLstmState<double>;
using LstmModel = BasicLstmModel<double>;

enum class SequenceMode { Fused, Naive };

namespace detail {

template <std::floating_point T>
T sigmoid(T v) {
    return T{1} / (T{1} + std::exp(-v));
}

/// Finishes a step given the already computed W_input x. `gates` is 4h scratch.
template <std::floating_point T>
void lstm_step_projected(const BasicLstmCell<T>& cell, const T* input_proj,
                         BasicLstmState<T>& state, T* gates, T* scratch) {
    const std::size_t h = cell.hidden_dim;
    cell.w_hidden.apply_into(state.h.data(), gates, scratch);
    for (std::size_t k = 0; k < 4 * h; ++k) gates[k] = input_proj[k] + gates[k] + cell.bias[k];
    for (std::size_t k = 0; k < h; ++k) {
        const T i = sigmoid(gates[k]);
        const T f = sigmoid(gates[h + k]);
        const T g = std::tanh(gates[2 * h + k]);
        const T o = sigmoid(gates[3 * h + k]);
        state.c[k] = f * state.c[k] + i * g;
        state.h[k] = o * std::tanh(state.c[k]);
    }
}

template <std::floating_point T>
std::size_t cell_scratch(const BasicLstmCell<T>& cell) {
    return std::max(cell.w_input.scratch_size(), cell.w_hidden.scratch_size());
}

}  // namespace detail

template <std::floating_point T>
BasicLstmState<T> lstm_step(const BasicLstmCell<T>& cell, std::span<const T> x,
                            const BasicLstmState<T>& state) {
    require_shape(x.size() == cell.input_dim, "lstm_step: x length must equal input_dim");
    require_shape(state.h.size() == cell.hidden_dim && state.c.size() == cell.hidden_dim,
                  "lstm_step: state must have hidden_dim entries");
    const std::size_t h4 = 4 * cell.hidden_dim;
    std::vector<T> proj(h4), gates(h4), scratch(detail::cell_scratch(cell));
    cell.w_input.apply_into(x.data(), proj.data(), scratch.data());
    BasicLstmState<T> next = state;
    detail::lstm_step_projected(cell, proj.data(), next, gates.data(), scratch.data());
    return next;
}

/// Runs the stack over `inputs` from a zero state and returns the top
/// layer's h after every step.
///
/// Fused evaluates one layer at a time over the whole sequence, applying
/// W_input to all timesteps as one batched product before the recurrence.
/// Naive walks time-major and applies every transform per step. Both give
/// bit-identical results.
template <std::floating_point T>
std::vector<std::vector<T>> lstm_sequence(const BasicLstmModel<T>& model,
                                          const std::vector<std::vector<T>>& inputs,
                                          SequenceMode mode = SequenceMode::Fused) {
    model.validate();
    if (inputs.empty()) return {};
    require_shape(!model.layers.empty(), "lstm_sequence: model has no layers");
    for (const auto& x : inputs)
        require_shape(x.size() == model.input_dim(), "lstm_sequence: input length must equal input_dim");

    const std::size_t steps = inputs.size();

    if (mode == SequenceMode::Naive) {
        std::vector<BasicLstmState<T>> states;
        for (const auto& l : model.layers) states.push_back(BasicLstmState<T>::zeros(l.hidden_dim));
        std::vector<std::vector<T>> outputs;
        outputs.reserve(steps);
        for (const auto& x : inputs) {
            const T* layer_in = x.data();
            for (std::size_t k = 0; k < model.layers.size(); ++k) {
                const auto& cell = model.layers[k];
                const std::size_t h4 = 4 * cell.hidden_dim;
                std::vector<T> proj(h4), gates(h4), scratch(detail::cell_scratch(cell));
                cell.w_input.apply_into(layer_in, proj.data(), scratch.data());
                detail::lstm_step_projected(cell, proj.data(), states[k], gates.data(), scratch.data());
                layer_in = states[k].h.data();
            }
            outputs.push_back(states.back().h);
        }
        return outputs;
    }

    // Fused: stacked [steps x dim] activations flow layer to layer.
    std::size_t in_dim = model.input_dim();
    std::vector<T> layer_in(steps * in_dim);
    for (std::size_t t = 0; t < steps; ++t)
        std::copy(inputs[t].begin(), inputs[t].end(), layer_in.begin() + t * in_dim);

    for (const auto& cell : model.layers) {
        const std::size_t h = cell.hidden_dim, h4 = 4 * h;
        std::vector<T> proj(steps * h4);
        cell.w_input.apply_batch(layer_in, proj, steps);

        std::vector<T> layer_out(steps * h);
        std::vector<T> gates(h4), scratch(detail::cell_scratch(cell));
        auto state = BasicLstmState<T>::zeros(h);
        for (std::size_t t = 0; t < steps; ++t) {
            detail::lstm_step_projected(cell, proj.data() + t * h4, state, gates.data(), scratch.data());
            std::copy(state.h.begin(), state.h.end(), layer_out.begin() + t * h);
        }
        layer_in = std::move(layer_out);
        in_dim = h;
    }

    std::vector<std::vector<T>> outputs(steps);
    for (std::size_t t = 0; t < steps; ++t)
        outputs[t].assign(layer_in.begin() + t * in_dim, layer_in.begin() + (t + 1) * in_dim);
    return outputs;
}

/// Seeded stack where every transform follows `shape` (its m/n are replaced
/// per layer). Layer k uses dims[k] -> dims[k+1].
LstmModel make_lstm_model(const std::vector<std::size_t>& dims, const CompressionConfig& shape,
                          std::uint64_t seed, std::string name = "lstm");

/// Same weights with every operator replaced by its dense materialization.
LstmModel materialized(const LstmModel& model);

}  // namespace antman

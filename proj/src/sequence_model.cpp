#include "antman/sequence_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace antman {

SequenceModel make_sequence_model(std::size_t vocab, std::size_t hidden, const CompressionConfig& shape,
                                  std::uint64_t seed) {
    const auto lstm = make_lstm_model({vocab, hidden}, shape, seed, "toy");
    std::mt19937_64 rng(seed ^ 0x6a09e667f3bcc908ULL);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    std::uniform_real_distribution<double> d(-bound, bound);
    DenseMatrix w_out(vocab, hidden);
    for (double& v : w_out.values) v = d(rng);
    std::vector<double> b_out(vocab);
    for (double& v : b_out) v = d(rng);
    return {lstm.layers.front(), std::move(w_out), std::move(b_out)};
}

std::vector<std::span<double>> parameters(SequenceModel& model) {
    std::vector<std::span<double>> out = model.cell.w_input.mutable_factors();
    for (auto f : model.cell.w_hidden.mutable_factors()) out.push_back(f);
    out.emplace_back(model.cell.bias);
    out.emplace_back(model.w_out.values);
    out.emplace_back(model.b_out);
    return out;
}

std::vector<Distribution> predict(const SequenceModel& model, std::span<const std::size_t> tokens) {
    const std::size_t v = model.vocab(), h = model.hidden();
    std::vector<Distribution> out;
    if (tokens.size() < 2) return out;
    auto state = LstmState::zeros(h);
    std::vector<double> x(v, 0.0), logits(v);
    for (std::size_t t = 0; t + 1 < tokens.size(); ++t) {
        require_shape(tokens[t] < v, "token out of range");
        std::fill(x.begin(), x.end(), 0.0);
        x[tokens[t]] = 1.0;
        state = lstm_step(model.cell, std::span<const double>(x), state);
        kernels::gemv(model.w_out.values.data(), v, h, state.h.data(), logits.data());
        double top = -INFINITY;
        for (std::size_t k = 0; k < v; ++k) {
            logits[k] += model.b_out[k];
            top = std::max(top, logits[k]);
        }
        Distribution p(v);
        double total = 0.0;
        for (std::size_t k = 0; k < v; ++k) total += p[k] = std::exp(logits[k] - top);
        for (double& q : p) q /= total;
        out.push_back(std::move(p));
    }
    return out;
}

namespace ad {

LstmVars lstm_step(Tape& tape, const CompressionConfig& input_cfg, const std::vector<Var>& w_input,
                   const CompressionConfig& hidden_cfg, const std::vector<Var>& w_hidden, Var bias, Var x,
                   LstmVars state, std::size_t hidden) {
    const std::size_t h = hidden;
    const Var zi = apply_operator(tape, input_cfg, w_input, x);
    const Var zh = apply_operator(tape, hidden_cfg, w_hidden, state.h);
    const Var z = tape.add(tape.add(zi, zh), bias);
    require_shape(tape.value(z).size() == 4 * h, "gate pre-activations must have length 4h");
    const Var i = tape.sigmoid(tape.slice(z, 0, h));
    const Var f = tape.sigmoid(tape.slice(z, h, h));
    const Var g = tape.tanh(tape.slice(z, 2 * h, h));
    const Var o = tape.sigmoid(tape.slice(z, 3 * h, h));
    const Var c = tape.add(tape.mul(f, state.c), tape.mul(i, g));
    return {tape.mul(o, tape.tanh(c)), c};
}

}  // namespace ad

TapeModel::TapeModel(ad::Tape& tape, SequenceModel& model, std::span<std::span<double>> grads)
    : tape_(tape), model_(model) {
    const auto values = parameters(model);
    require_shape(grads.size() == values.size(), "one gradient buffer per parameter array");
    std::size_t i = 0;
    auto next = [&] {
        const ad::Var v = tape.parameter({values[i], grads[i]});
        ++i;
        return v;
    };
    for (int f = 0; f < model.cell.w_input.config().factor_count(); ++f) w_in_.push_back(next());
    for (int f = 0; f < model.cell.w_hidden.config().factor_count(); ++f) w_h_.push_back(next());
    bias_ = next();
    w_out_ = next();
    b_out_ = next();
}

std::vector<ad::Var> TapeModel::outputs(std::span<const std::size_t> tokens) {
    const std::size_t v = model_.vocab(), h = model_.hidden();
    std::vector<ad::Var> out;
    if (tokens.size() < 2) return out;
    ad::LstmVars state{tape_.constant(std::vector<double>(h, 0.0)), tape_.constant(std::vector<double>(h, 0.0))};
    for (std::size_t t = 0; t + 1 < tokens.size(); ++t) {
        require_shape(tokens[t] < v, "token out of range");
        std::vector<double> onehot(v, 0.0);
        onehot[tokens[t]] = 1.0;
        const ad::Var x = tape_.constant(std::move(onehot));
        state = ad::lstm_step(tape_, model_.cell.w_input.config(), w_in_, model_.cell.w_hidden.config(), w_h_, bias_,
                              x, state, h);
        const ad::Var logits = tape_.add(tape_.matvec(w_out_, state.h, v, h), b_out_);
        out.push_back(tape_.softmax(logits));
    }
    return out;
}

ad::Var TapeModel::sequence_loss(std::span<const std::size_t> tokens, const std::vector<Distribution>& teacher,
                                 const KDCoefficients& coeffs, KlDirection direction) {
    const auto ps = outputs(tokens);
    require_shape(!ps.empty(), "sequence must hold at least two tokens");
    require_shape(teacher.empty() || teacher.size() == ps.size(), "teacher must have one distribution per step");
    std::optional<ad::Var> total;
    for (std::size_t t = 0; t < ps.size(); ++t) {
        const Distribution* q = teacher.empty() ? nullptr : &teacher[t];
        const ad::Var step = ad::kd_step_loss(tape_, ps[t], q, tokens[t + 1], coeffs, direction);
        total = total ? tape_.add(*total, step) : step;
    }
    return *total;
}

}  // namespace antman

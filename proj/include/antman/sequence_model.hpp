#pragma once

// Next-token model for the toy task: one LSTM layer over one-hot tokens and a
// dense softmax readout.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "antman/autodiff.hpp"
#include "antman/kd.hpp"
#include "antman/lstm.hpp"

namespace antman {

struct SequenceModel {
    LstmCell cell;              // W_input 4h x V, W_hidden 4h x h
    DenseMatrix w_out;          // V x h
    std::vector<double> b_out;  // V

    std::size_t vocab() const { return cell.input_dim; }
    std::size_t hidden() const { return cell.hidden_dim; }
    std::size_t param_count() const { return cell.param_count() + w_out.values.size() + b_out.size(); }
};

/// Both recurrent transforms use `shape` (dims filled in). Seeded init.
SequenceModel make_sequence_model(std::size_t vocab, std::size_t hidden, const CompressionConfig& shape,
                                  std::uint64_t seed);

/// Trainable arrays in a fixed order: input factors, hidden factors, bias, w_out, b_out.
std::vector<std::span<double>> parameters(SequenceModel& model);

/// Output distributions for predicting tokens[t + 1] from tokens[0..t].
std::vector<Distribution> predict(const SequenceModel& model, std::span<const std::size_t> tokens);

namespace ad {

struct LstmVars {
    Var h, c;
};

/// One recorded LSTM step; gate layout follows kGateOrder.
LstmVars lstm_step(Tape& tape, const CompressionConfig& input_cfg, const std::vector<Var>& w_input,
                   const CompressionConfig& hidden_cfg, const std::vector<Var>& w_hidden, Var bias, Var x,
                   LstmVars state, std::size_t hidden);

}  // namespace ad

/// Per-sequence loss recording on a tape. Parameter leaves are created once
/// and shared by every step and sequence recorded through this object.
class TapeModel {
public:
    TapeModel(ad::Tape& tape, SequenceModel& model, std::span<std::span<double>> grads);

    /// Sum over steps of the per-step objective. `teacher` holds one
    /// distribution per step, or is empty when only the target term is active.
    ad::Var sequence_loss(std::span<const std::size_t> tokens, const std::vector<Distribution>& teacher,
                          const KDCoefficients& coeffs, KlDirection direction);

    /// Output distribution nodes for each step.
    std::vector<ad::Var> outputs(std::span<const std::size_t> tokens);

private:
    ad::Tape& tape_;
    const SequenceModel& model_;
    std::vector<ad::Var> w_in_, w_h_;
    ad::Var bias_, w_out_, b_out_;
};

}  // namespace antman

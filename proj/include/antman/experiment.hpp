#pragma once

// Teacher/student distillation experiment on the toy task:
//   1. train the teacher on the target loss
//   2. train one student per loss term (target, MSE, KL)
//   3. balance the coefficients from the converged single-loss values
//   4. train a student on the combined objective
// All students start from the same initial weights and batch order.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "antman/config.hpp"
#include "antman/kd.hpp"
#include "antman/sequence_model.hpp"
#include "antman/toy_task.hpp"
#include "antman/trainer.hpp"

namespace antman {

struct ExperimentConfig {
    ToyTaskConfig task;
    std::size_t hidden = 32;
    CompressionConfig teacher_shape = CompressionConfig::dense(0, 0);
    CompressionConfig student_shape = CompressionConfig::lgp_shuffle(0, 0, 4);
    TrainConfig teacher_train;
    TrainConfig student_train;
    LossTerm anchor = LossTerm::Target;
    KlDirection kl_direction = KlDirection::StudentTeacher;
    std::uint64_t seed = 1;  // initial weights and batch order

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Defaults used by the acceptance run and the CLI for a given seed.
ExperimentConfig default_experiment(std::uint64_t seed);

struct RunSummary {
    std::string label;
    CompressionConfig shape;
    std::size_t params = 0;
    KDCoefficients coefficients;
    KdTerms validation;  // CE against targets; MSE and KL against the teacher when one exists
    TrainTrace trace;
};

struct TaskSummary {
    double chain_ce = 0.0;    // best achievable validation CE
    double unigram_ce = 0.0;  // frequency baseline
};

struct ExperimentReport {
    static constexpr int kSchemaVersion = 1;
    ExperimentConfig config;
    TaskSummary task;
    RunSummary teacher;
    RunSummary target_only, mse_only, kl_only;
    LossRecord loss_record;
    KDCoefficients coefficients;
    RunSummary combined;
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Validation CE/MSE/KL averaged over steps and sequences.
KdTerms evaluate(const SequenceModel& model, const std::vector<TokenSequence>& data,
                 const std::vector<std::vector<Distribution>>& teacher, KlDirection direction);

/// Trains `model` on `task.train` with the given objective. `teacher_train`
/// and `teacher_val` hold teacher distributions per sequence, or are empty.
RunSummary train_sequence_model(SequenceModel& model, const ToyTask& task, const KDCoefficients& coeffs,
                                const std::vector<std::vector<Distribution>>& teacher_train,
                                const std::vector<std::vector<Distribution>>& teacher_val, const TrainConfig& cfg,
                                KlDirection direction, std::string label);

/// Throws TrainingError if any run diverges, ConfigError on invalid configs.
ExperimentReport run_kd_experiment(const ExperimentConfig& cfg);

void to_json(nlohmann::json& j, const ToyTaskConfig& c);
void from_json(const nlohmann::json& j, ToyTaskConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const KDCoefficients& c);
void from_json(const nlohmann::json& j, KDCoefficients& c);
void to_json(nlohmann::json& j, const LossRecord& r);
void from_json(const nlohmann::json& j, LossRecord& r);
void to_json(nlohmann::json& j, const KdTerms& t);
void from_json(const nlohmann::json& j, KdTerms& t);
void to_json(nlohmann::json& j, const TrainTrace& t);
void from_json(const nlohmann::json& j, TrainTrace& t);
void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);
void to_json(nlohmann::json& j, const RunSummary& r);
void from_json(const nlohmann::json& j, RunSummary& r);
void to_json(nlohmann::json& j, const ExperimentReport& r);
void from_json(const nlohmann::json& j, ExperimentReport& r);

}  // namespace antman

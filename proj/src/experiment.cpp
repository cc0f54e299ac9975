#include "antman/experiment.hpp"

#include <cmath>

#include "antman/errors.hpp"
#include "antman/json_io.hpp"

namespace antman {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<std::vector<Distribution>> predict_all(const SequenceModel& model, const std::vector<TokenSequence>& data) {
    std::vector<std::vector<Distribution>> out;
    out.reserve(data.size());
    for (const auto& seq : data) out.push_back(predict(model, seq));
    return out;
}

double weighted(const KDCoefficients& c, const KdTerms& t) {
    return c.c_target * t.target + c.c_mse * t.mse + c.c_kl * t.kl;
}

const char* to_string(LossTerm t) {
    switch (t) {
        case LossTerm::Target: return "target";
        case LossTerm::Mse: return "mse";
        case LossTerm::Kl: return "kl";
    }
    return "target";
}

LossTerm parse_loss_term(const std::string& s) {
    if (s == "target") return LossTerm::Target;
    if (s == "mse") return LossTerm::Mse;
    if (s == "kl") return LossTerm::Kl;
    throw ConfigError("unknown loss term '" + s + "' (expected target, mse or kl)");
}

const char* to_string(KlDirection d) {
    return d == KlDirection::StudentTeacher ? "student_teacher" : "teacher_student";
}

KlDirection parse_direction(const std::string& s) {
    if (s == "student_teacher") return KlDirection::StudentTeacher;
    if (s == "teacher_student") return KlDirection::TeacherStudent;
    throw ConfigError("unknown kl_direction '" + s + "' (expected student_teacher or teacher_student)");
}

}  // namespace

ExperimentConfig default_experiment(std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.task.seed = seed;
    cfg.seed = seed;
    cfg.teacher_train.seed = mix_seed(seed, 10);
    cfg.student_train.seed = mix_seed(seed, 11);
    return cfg;
}

KdTerms evaluate(const SequenceModel& model, const std::vector<TokenSequence>& data,
                 const std::vector<std::vector<Distribution>>& teacher, KlDirection direction) {
    if (data.empty()) throw ConfigError("evaluation set is empty");
    if (!teacher.empty() && teacher.size() != data.size()) throw ShapeError("teacher must cover every sequence");
    KdTerms total;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto student = predict(model, data[i]);
        const std::vector<std::size_t> targets(data[i].begin() + 1, data[i].end());
        const auto t = kd_terms(student, teacher.empty() ? std::vector<Distribution>{} : teacher[i], targets, direction);
        total.target += t.target;
        total.mse += t.mse;
        total.kl += t.kl;
    }
    const double inv = 1.0 / static_cast<double>(data.size());
    return {total.target * inv, total.mse * inv, total.kl * inv};
}

RunSummary train_sequence_model(SequenceModel& model, const ToyTask& task, const KDCoefficients& coeffs,
                                const std::vector<std::vector<Distribution>>& teacher_train,
                                const std::vector<std::vector<Distribution>>& teacher_val, const TrainConfig& cfg,
                                KlDirection direction, std::string label) {
    validate(coeffs);
    if (coeffs.uses_teacher() && (teacher_train.empty() || teacher_val.empty()))
        throw ConfigError("MSE/KL terms need a teacher");

    const auto values = parameters(model);
    std::vector<std::vector<double>> grad_store;
    std::vector<std::span<double>> grads;
    for (const auto& v : values) grad_store.emplace_back(v.size(), 0.0);
    for (auto& g : grad_store) grads.emplace_back(g);

    static const std::vector<Distribution> kNoTeacher;
    auto objective = [&](std::span<const std::size_t> batch) {
        ad::Tape tape;
        TapeModel tm(tape, model, grads);
        std::optional<ad::Var> total;
        std::size_t steps = 0;
        for (std::size_t idx : batch) {
            const auto& seq = task.train[idx];
            const auto& teacher = coeffs.uses_teacher() ? teacher_train[idx] : kNoTeacher;
            const ad::Var loss = tm.sequence_loss(seq, teacher, coeffs, direction);
            total = total ? tape.add(*total, loss) : loss;
            steps += seq.size() - 1;
        }
        const ad::Var mean = tape.scale(*total, 1.0 / static_cast<double>(steps));
        tape.backward(mean);
        return tape.scalar_value(mean);
    };
    const auto& val_teacher = coeffs.uses_teacher() ? teacher_val : std::vector<std::vector<Distribution>>{};
    auto validation = [&] { return weighted(coeffs, evaluate(model, task.validation, val_teacher, direction)); };

    RunSummary run;
    run.label = std::move(label);
    run.shape = model.cell.w_hidden.config();
    run.params = model.param_count();
    run.coefficients = coeffs;
    run.trace = train({values, grads}, task.train.size(), objective, validation, cfg);
    run.validation = evaluate(model, task.validation, teacher_val, direction);
    return run;
}

ExperimentReport run_kd_experiment(const ExperimentConfig& cfg) {
    validate(cfg.task);
    validate(cfg.teacher_train);
    validate(cfg.student_train);
    if (cfg.hidden < 1) throw ConfigError("hidden must be >= 1");
    for (const auto& shape : {cfg.teacher_shape, cfg.student_shape}) {
        for (std::size_t in : {cfg.task.vocab, cfg.hidden}) validate(shape.with_dims(4 * cfg.hidden, in));
    }

    ExperimentReport report;
    report.config = cfg;
    const auto task = make_toy_task(cfg.task);
    report.task = {chain_cross_entropy(task, task.validation), unigram_cross_entropy(task, task.validation)};

    auto check = [](const RunSummary& run) {
        if (run.trace.diverged) throw TrainingError("training diverged: " + run.label);
    };

    const std::vector<std::vector<Distribution>> none;
    auto teacher = make_sequence_model(cfg.task.vocab, cfg.hidden, cfg.teacher_shape, mix_seed(cfg.seed, 1));
    report.teacher = train_sequence_model(teacher, task, {1.0, 0.0, 0.0}, none, none, cfg.teacher_train,
                                          cfg.kl_direction, "teacher");
    check(report.teacher);
    const auto teacher_train = predict_all(teacher, task.train);
    const auto teacher_val = predict_all(teacher, task.validation);
    report.teacher.validation = evaluate(teacher, task.validation, teacher_val, cfg.kl_direction);

    const auto student_init = make_sequence_model(cfg.task.vocab, cfg.hidden, cfg.student_shape, mix_seed(cfg.seed, 2));
    auto student_run = [&](const KDCoefficients& c, const char* label) {
        auto student = student_init;
        auto run = train_sequence_model(student, task, c, teacher_train, teacher_val, cfg.student_train,
                                        cfg.kl_direction, label);
        check(run);
        return run;
    };
    report.target_only = student_run({1.0, 0.0, 0.0}, "target");
    report.mse_only = student_run({0.0, 1.0, 0.0}, "mse");
    report.kl_only = student_run({0.0, 0.0, 1.0}, "kl");

    report.loss_record = {report.target_only.validation.target, report.mse_only.validation.mse,
                          report.kl_only.validation.kl};
    report.coefficients = decide_coefficients(report.loss_record, cfg.anchor);
    report.combined = student_run(report.coefficients, "combined");
    return report;
}

// JSON. Readers fill missing keys from defaults so partial configs work.

void to_json(nlohmann::json& j, const ToyTaskConfig& c) {
    j = {{"vocab", c.vocab}, {"seq_len", c.seq_len}, {"train_size", c.train_size}, {"val_size", c.val_size},
         {"branching", c.branching}, {"floor_mass", c.floor_mass}, {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, ToyTaskConfig& c) {
    const ToyTaskConfig d;
    c.vocab = j.value("vocab", d.vocab);
    c.seq_len = j.value("seq_len", d.seq_len);
    c.train_size = j.value("train_size", d.train_size);
    c.val_size = j.value("val_size", d.val_size);
    c.branching = j.value("branching", d.branching);
    c.floor_mass = j.value("floor_mass", d.floor_mass);
    c.seed = j.value("seed", d.seed);
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = {{"max_epochs", c.max_epochs}, {"batch_size", c.batch_size}, {"learning_rate", c.learning_rate},
         {"momentum", c.momentum}, {"clip_norm", c.clip_norm}, {"patience", c.patience},
         {"min_delta", c.min_delta}, {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    const TrainConfig d;
    c.max_epochs = j.value("max_epochs", d.max_epochs);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.momentum = j.value("momentum", d.momentum);
    c.clip_norm = j.value("clip_norm", d.clip_norm);
    c.patience = j.value("patience", d.patience);
    c.min_delta = j.value("min_delta", d.min_delta);
    c.seed = j.value("seed", d.seed);
}

void to_json(nlohmann::json& j, const KDCoefficients& c) {
    j = {{"c_target", c.c_target}, {"c_mse", c.c_mse}, {"c_kl", c.c_kl}};
}

void from_json(const nlohmann::json& j, KDCoefficients& c) {
    c = {j.at("c_target").get<double>(), j.at("c_mse").get<double>(), j.at("c_kl").get<double>()};
}

void to_json(nlohmann::json& j, const LossRecord& r) {
    j = {{"target_loss", r.target_loss}, {"mse_loss", r.mse_loss}, {"kl_loss", r.kl_loss}};
}

void from_json(const nlohmann::json& j, LossRecord& r) {
    r = {j.at("target_loss").get<double>(), j.at("mse_loss").get<double>(), j.at("kl_loss").get<double>()};
}

void to_json(nlohmann::json& j, const KdTerms& t) {
    j = {{"cross_entropy", t.target}, {"mse", t.mse}, {"kl", t.kl}};
}

void from_json(const nlohmann::json& j, KdTerms& t) {
    t = {j.at("cross_entropy").get<double>(), j.at("mse").get<double>(), j.at("kl").get<double>()};
}

void to_json(nlohmann::json& j, const TrainTrace& t) {
    j = {{"train_loss", t.train_loss}, {"val_loss", t.val_loss}, {"initial_val", t.initial_val},
         {"best_val", t.best_val}, {"best_epoch", t.best_epoch}, {"diverged", t.diverged},
         {"stop_reason", t.stop_reason}};
}

void from_json(const nlohmann::json& j, TrainTrace& t) {
    t.train_loss = j.at("train_loss").get<std::vector<double>>();
    t.val_loss = j.at("val_loss").get<std::vector<double>>();
    t.initial_val = j.at("initial_val").get<double>();
    t.best_val = j.at("best_val").get<double>();
    t.best_epoch = j.at("best_epoch").get<std::size_t>();
    t.diverged = j.at("diverged").get<bool>();
    t.stop_reason = j.at("stop_reason").get<std::string>();
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    j = {{"task", c.task},
         {"hidden", c.hidden},
         {"teacher_shape", c.teacher_shape},
         {"student_shape", c.student_shape},
         {"teacher_train", c.teacher_train},
         {"student_train", c.student_train},
         {"anchor", to_string(c.anchor)},
         {"kl_direction", to_string(c.kl_direction)},
         {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
    if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
    c = default_experiment(j.value("seed", std::uint64_t{1}));
    if (j.contains("task")) c.task = j.at("task").get<ToyTaskConfig>();
    c.hidden = j.value("hidden", c.hidden);
    if (j.contains("teacher_shape")) c.teacher_shape = j.at("teacher_shape").get<CompressionConfig>();
    if (j.contains("student_shape")) c.student_shape = j.at("student_shape").get<CompressionConfig>();
    if (j.contains("teacher_train")) c.teacher_train = j.at("teacher_train").get<TrainConfig>();
    if (j.contains("student_train")) c.student_train = j.at("student_train").get<TrainConfig>();
    if (j.contains("anchor")) c.anchor = parse_loss_term(j.at("anchor").get<std::string>());
    if (j.contains("kl_direction")) c.kl_direction = parse_direction(j.at("kl_direction").get<std::string>());
}

void to_json(nlohmann::json& j, const RunSummary& r) {
    j = {{"label", r.label},           {"shape", r.shape},           {"params", r.params},
         {"coefficients", r.coefficients}, {"validation", r.validation}, {"trace", r.trace}};
}

void from_json(const nlohmann::json& j, RunSummary& r) {
    r.label = j.at("label").get<std::string>();
    r.shape = j.at("shape").get<CompressionConfig>();
    r.params = j.at("params").get<std::size_t>();
    r.coefficients = j.at("coefficients").get<KDCoefficients>();
    r.validation = j.at("validation").get<KdTerms>();
    r.trace = j.at("trace").get<TrainTrace>();
}

void to_json(nlohmann::json& j, const ExperimentReport& r) {
    j = {{"schema", "antman.kd_report"},
         {"version", ExperimentReport::kSchemaVersion},
         {"config", r.config},
         {"task", {{"chain_ce", r.task.chain_ce}, {"unigram_ce", r.task.unigram_ce}}},
         {"teacher", r.teacher},
         {"single", {{"target", r.target_only}, {"mse", r.mse_only}, {"kl", r.kl_only}}},
         {"loss_record", r.loss_record},
         {"coefficients", r.coefficients},
         {"combined", r.combined}};
}

void from_json(const nlohmann::json& j, ExperimentReport& r) {
    if (j.value("schema", std::string{}) != "antman.kd_report") throw ConfigError("not a kd report");
    if (j.value("version", 0) != ExperimentReport::kSchemaVersion) throw ConfigError("unsupported report version");
    r.config = j.at("config").get<ExperimentConfig>();
    r.task = {j.at("task").at("chain_ce").get<double>(), j.at("task").at("unigram_ce").get<double>()};
    r.teacher = j.at("teacher").get<RunSummary>();
    r.target_only = j.at("single").at("target").get<RunSummary>();
    r.mse_only = j.at("single").at("mse").get<RunSummary>();
    r.kl_only = j.at("single").at("kl").get<RunSummary>();
    r.loss_record = j.at("loss_record").get<LossRecord>();
    r.coefficients = j.at("coefficients").get<KDCoefficients>();
    r.combined = j.at("combined").get<RunSummary>();
}

}  // namespace antman

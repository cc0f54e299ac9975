#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "antman/bench.hpp"
#include "antman/costmodel.hpp"
#include "antman/experiment.hpp"
#include "antman/json_io.hpp"
#include "antman/model_io.hpp"
#include "antman/verify.hpp"

namespace antman::cli {

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::size_t parse_size(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(value, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != value.size() || value.empty() || value[0] == '-')
        throw ConfigError(key + " must be a nonnegative integer, got '" + value + "'");
    return static_cast<std::size_t>(v);
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void write_text(const std::string& path, const std::string& text, std::ostream& fallback) {
    if (path.empty() || path == "-") {
        fallback << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << text;
}

// --- plan -----------------------------------------------------------------

struct PlanArgs {
    std::size_t m = 0, n = 0;
    std::string target;
    std::string kinds;
    std::string format = "table";
    std::size_t limit = 0;
};

int cmd_plan(const PlanArgs& a, std::ostream& out) {
    std::set<OperatorKind> kinds;
    if (a.kinds.empty()) {
        kinds = {OperatorKind::Dense, OperatorKind::SVD, OperatorKind::LGPShuffle, OperatorKind::LGPDense,
                 OperatorKind::LowRankLGP};
    } else {
        for (const auto& k : split(a.kinds, ',')) kinds.insert(parse_kind(k));
    }
    const Rational target = parse_rational(a.target);
    auto entries = plan(a.m, a.n, target, kinds);
    if (a.limit > 0 && entries.size() > a.limit) entries.resize(a.limit);

    if (a.format == "json") {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& e : entries) {
            rows.push_back({{"config", e.config},
                            {"params", e.cost.params},
                            {"madds", e.cost.madds},
                            {"reduction", to_string(e.cost.reduction)},
                            {"reduction_value", to_double(e.cost.reduction)}});
        }
        const nlohmann::json j{{"m", a.m}, {"n", a.n}, {"target", to_string(target)}, {"entries", rows}};
        out << j.dump(2) << '\n';
        return kSuccess;
    }
    int width = 8;
    for (const auto& e : entries) width = std::max(width, static_cast<int>(e.config.describe().size()) + 2);
    out << std::left << std::setw(width) << "config" << std::right << std::setw(14) << "params" << std::setw(14)
        << "reduction" << '\n';
    for (const auto& e : entries) {
        out << std::left << std::setw(width) << e.config.describe() << std::right << std::setw(14) << e.cost.params
            << std::setw(14) << to_string(e.cost.reduction) << '\n';
    }
    out << entries.size() << " configs reach " << to_string(target) << "x for " << a.m << "x" << a.n << '\n';
    return kSuccess;
}

// --- verify ---------------------------------------------------------------

int cmd_verify(const VerifyOptions& opts, std::ostream& out) {
    if (opts.cases_per_kind == 0) {
        out << "0 cases requested; nothing verified\n";
        return kSuccess;
    }
    const auto report = verify_oracle(opts);
    out << "verified " << report.cases << " cases (seed " << opts.seed << ", dims <= " << opts.max_dim
        << "), worst relative error " << std::scientific << std::setprecision(3) << report.worst_rel_err
        << std::defaultfloat << ", tolerance " << opts.tolerance << '\n';
    for (const auto& f : report.failures)
        out << "FAIL " << f.config.describe() << " rel err " << f.max_rel_err << '\n';
    out << (report.ok() ? "ok" : "FAILED") << '\n';
    return report.ok() ? kSuccess : kValidationFailure;
}

// --- bench ----------------------------------------------------------------

struct BenchArgs {
    std::string config_path;
    std::string dims, shapes, precision;
    std::optional<std::size_t> seq_len, repetitions, warmup;
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;
    std::string csv_path = "-";
    std::string json_path;
};

int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
    BenchConfig cfg;
    if (!a.config_path.empty()) cfg = read_json_file(a.config_path).get<BenchConfig>();
    if (!a.dims.empty()) {
        cfg.dims.clear();
        for (const auto& d : split(a.dims, ',')) cfg.dims.push_back(parse_size("--dims", d));
    }
    if (!a.shapes.empty()) {
        cfg.configs.clear();
        for (const auto& s : split(a.shapes, ';')) cfg.configs.push_back(parse_shape(s));
    }
    if (!a.precision.empty()) cfg.precision = parse_precision(a.precision);
    if (a.seq_len) cfg.seq_len = *a.seq_len;
    if (a.repetitions) cfg.repetitions = *a.repetitions;
    if (a.warmup) cfg.warmup = *a.warmup;
    if (a.threads) cfg.threads = *a.threads;
    if (a.seed) cfg.seed = *a.seed;

    const auto report = bench_run(cfg);
    for (const auto& w : report.warnings) err << "warning: " << w << '\n';
    std::ostringstream csv;
    write_csv(csv, report);
    write_text(a.csv_path, csv.str(), out);
    if (!a.json_path.empty()) write_text(a.json_path, report_json(cfg, report).dump(2) + "\n", out);
    return kSuccess;
}

// --- train-kd -------------------------------------------------------------

int cmd_train_kd(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out_path,
                 std::ostream& out, std::ostream& err) {
    ExperimentConfig cfg = default_experiment(seed.value_or(1));
    if (!config_path.empty()) {
        auto j = read_json_file(config_path);
        if (seed) j["seed"] = *seed;
        cfg = j.get<ExperimentConfig>();
    }
    const auto report = run_kd_experiment(cfg);
    err << "teacher CE " << report.teacher.validation.target << ", combined student CE "
        << report.combined.validation.target << " with coefficients (" << report.coefficients.c_target << ", "
        << report.coefficients.c_mse << ", " << report.coefficients.c_kl << ")\n";
    write_text(out_path, nlohmann::json(report).dump(2) + "\n", out);
    return kSuccess;
}

}  // namespace

CompressionConfig parse_shape(const std::string& text) {
    const auto colon = text.find(':');
    CompressionConfig cfg;
    cfg.kind = parse_kind(text.substr(0, colon));
    if (colon == std::string::npos) return cfg;
    for (const auto& item : split(text.substr(colon + 1), ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key=value in shape, got '" + item + "'");
        const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
        if (key == "mix") {
            cfg.mix_side = parse_mix_side(value);
            continue;
        }
        const std::size_t v = parse_size(key, value);
        if (key == "g" && cfg.kind == OperatorKind::LowRankLGP) {
            cfg.g_in = v;
            cfg.g_out = v;
        } else if (key == "g") {
            cfg.g = v;
        } else if (key == "r") {
            cfg.r = v;
        } else if (key == "g_in") {
            cfg.g_in = v;
        } else if (key == "g_out") {
            cfg.g_out = v;
        } else {
            throw ConfigError("unknown shape key '" + key + "'");
        }
    }
    return cfg;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Structured-sparsity LSTM compression toolkit", "antman"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);
    app.set_version_flag("--version", "antman 1.0.0");

    PlanArgs plan_args;
    auto* plan_cmd = app.add_subcommand("plan", "List configs reaching a cost-reduction target");
    plan_cmd->add_option("--m", plan_args.m, "Output dimension")->required();
    plan_cmd->add_option("--n", plan_args.n, "Input dimension")->required();
    plan_cmd->add_option("--target", plan_args.target, "Reduction target, e.g. 10, 8/3 or 2.5")->required();
    plan_cmd->add_option("--kinds", plan_args.kinds, "Comma-separated kinds (default: all)");
    plan_cmd->add_option("--format", plan_args.format, "table or json")->check(CLI::IsMember({"table", "json"}));
    plan_cmd->add_option("--limit", plan_args.limit, "Keep only the first N rows");

    VerifyOptions verify_opts;
    auto* verify_cmd = app.add_subcommand("verify", "Check every kind against its materialized dense matrix");
    verify_cmd->add_option("--seed", verify_opts.seed, "Random seed");
    verify_cmd->add_option("--cases", verify_opts.cases_per_kind, "Random configs per operator kind");
    verify_cmd->add_option("--max-dim", verify_opts.max_dim, "Largest m or n")->check(CLI::PositiveNumber);
    verify_cmd->add_option("--tolerance", verify_opts.tolerance, "Max relative error")->check(CLI::PositiveNumber);

    BenchArgs bench_args;
    auto* bench_cmd = app.add_subcommand("bench", "Time dense against compressed LSTM sequence evaluation");
    bench_cmd->add_option("--config", bench_args.config_path, "Bench config JSON file");
    bench_cmd->add_option("--dims", bench_args.dims, "Comma-separated dims, e.g. 100,400,1600");
    bench_cmd->add_option("--shapes", bench_args.shapes, "Semicolon-separated shapes, e.g. 'lgp-shuffle:g=10'");
    bench_cmd->add_option("--seq-len", bench_args.seq_len, "Sequence length");
    bench_cmd->add_option("--k", bench_args.repetitions, "Timed repetitions (odd, >= 3)");
    bench_cmd->add_option("--warmup", bench_args.warmup, "Warmup runs");
    bench_cmd->add_option("--threads", bench_args.threads, "Worker threads (overrides ANTMAN_THREADS)");
    bench_cmd->add_option("--precision", bench_args.precision, "f32 or f64");
    bench_cmd->add_option("--seed", bench_args.seed, "Weight seed");
    bench_cmd->add_option("--csv", bench_args.csv_path, "CSV output path ('-' for stdout)");
    bench_cmd->add_option("--json", bench_args.json_path, "JSON report path");

    std::string kd_config, kd_out;
    std::optional<std::uint64_t> kd_seed;
    auto* kd_cmd = app.add_subcommand("train-kd", "Run the teacher/student distillation experiment");
    kd_cmd->add_option("--config", kd_config, "Experiment config JSON file (defaults if omitted)");
    kd_cmd->add_option("--seed", kd_seed, "Overrides the config seed");
    kd_cmd->add_option("--out", kd_out, "Report path (default stdout)");

    auto* convert_cmd = app.add_subcommand("convert", "Not supported: compressed models are trained, not projected");
    convert_cmd->allow_extras();

    // CLI11 wants a C-style argv.
    std::vector<std::string> owned{"antman"};
    owned.insert(owned.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : owned) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsageError;
    }

    try {
        if (*plan_cmd) return cmd_plan(plan_args, out);
        if (*verify_cmd) return cmd_verify(verify_opts, out);
        if (*bench_cmd) return cmd_bench(bench_args, out, err);
        if (*kd_cmd) return cmd_train_kd(kd_config, kd_seed, kd_out, out, err);
        if (*convert_cmd) {
            err << "error: convert is not supported. Projecting a trained dense model onto a structured operator is a "
                   "non-goal; train the compressed model with 'train-kd' instead.\n";
            return kUsageError;
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kValidationFailure;
    } catch (const std::invalid_argument& e) {  // ShapeError, KdError
        err << "error: " << e.what() << '\n';
        return kValidationFailure;
    } catch (const FormatError& e) {
        err << "error: " << e.what() << '\n';
        return kValidationFailure;
    } catch (const TrainingError& e) {
        err << "error: " << e.what() << '\n';
        return kValidationFailure;
    }
    return kUsageError;
}

}  // namespace antman::cli

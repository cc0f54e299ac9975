#include "antman/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "antman/sequence_model.hpp"
#include "antman/verify.hpp"

namespace antman::ad {

double fd_relative_error(double analytic, double numeric) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return std::abs(analytic - numeric) / scale;
}

GradCheckResult check_gradients(std::string name, const std::vector<std::span<double>>& values,
                                const LossBuilder& build, double eps) {
    std::vector<std::vector<double>> grads, scratch;
    std::vector<ParamRef> refs, scratch_refs;
    for (const auto& v : values) {
        grads.emplace_back(v.size(), 0.0);
        scratch.emplace_back(v.size(), 0.0);
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        refs.push_back({values[i], grads[i]});
        scratch_refs.push_back({values[i], scratch[i]});
    }
    {
        Tape tape;
        tape.backward(build(tape, refs));
    }
    auto eval = [&] {
        Tape tape;
        return tape.scalar_value(build(tape, scratch_refs));
    };

    GradCheckResult result{std::move(name), 0, 0.0};
    for (std::size_t i = 0; i < values.size(); ++i) {
        for (std::size_t k = 0; k < values[i].size(); ++k) {
            double& p = values[i][k];
            const double original = p;
            p = original + eps;
            const double up = eval();
            p = original - eps;
            const double down = eval();
            p = original;
            const double numeric = (up - down) / (2.0 * eps);
            result.worst_rel_err = std::max(result.worst_rel_err, fd_relative_error(grads[i][k], numeric));
            ++result.entries;
        }
    }
    return result;
}

namespace {

class Suite {
public:
    Suite(std::uint64_t seed, std::size_t max_dim) : rng_(seed), max_dim_(max_dim) {}

    std::vector<double> random(std::size_t n, double scale = 1.0) {
        std::uniform_real_distribution<double> d(-scale, scale);
        std::vector<double> v(n);
        for (double& x : v) x = d(rng_);
        return v;
    }

    std::size_t dim(std::size_t lo = 2) {
        return std::uniform_int_distribution<std::size_t>(lo, std::max(lo, max_dim_))(rng_);
    }

    /// Registers a check over freshly drawn parameter arrays of the given sizes.
    void run(std::string name, const std::vector<std::size_t>& sizes,
             const std::function<Var(Tape&, const std::vector<Var>&)>& body) {
        std::vector<std::vector<double>> storage;
        for (std::size_t n : sizes) storage.push_back(random(n));
        std::vector<std::span<double>> spans(storage.begin(), storage.end());
        results_.push_back(check_gradients(std::move(name), spans, [&](Tape& tape, const std::vector<ParamRef>& refs) {
            std::vector<Var> vars;
            for (const auto& r : refs) vars.push_back(tape.parameter(r));
            return body(tape, vars);
        }));
    }

    /// sum(c * y) with a fixed random c, so every output entry is weighted differently.
    Var project(Tape& tape, Var y, std::vector<double> c) { return tape.sum(tape.mul(y, tape.constant(std::move(c)))); }

    void add(GradCheckResult r) { results_.push_back(std::move(r)); }
    std::mt19937_64& rng() { return rng_; }
    std::size_t max_dim() const { return max_dim_; }
    std::vector<GradCheckResult> take() { return std::move(results_); }

private:
    std::mt19937_64 rng_;
    std::size_t max_dim_;
    std::vector<GradCheckResult> results_;
};

void elementwise_ops(Suite& s) {
    const std::size_t n = s.dim();
    const auto c = s.random(n);
    s.run("add", {n, n}, [&](Tape& t, const std::vector<Var>& p) { return t.sum(t.tanh(t.add(p[0], p[1]))); });
    s.run("sub", {n, n}, [&](Tape& t, const std::vector<Var>& p) { return t.sum(t.tanh(t.sub(p[0], p[1]))); });
    s.run("mul", {n, n}, [&](Tape& t, const std::vector<Var>& p) { return s.project(t, t.mul(p[0], p[1]), c); });
    s.run("scale", {n}, [&](Tape& t, const std::vector<Var>& p) { return t.sum(t.tanh(t.scale(p[0], -1.7))); });
    s.run("sigmoid", {n}, [&](Tape& t, const std::vector<Var>& p) { return s.project(t, t.sigmoid(p[0]), c); });
    s.run("tanh", {n}, [&](Tape& t, const std::vector<Var>& p) { return s.project(t, t.tanh(p[0]), c); });
    s.run("softmax", {n}, [&](Tape& t, const std::vector<Var>& p) { return s.project(t, t.softmax(p[0]), c); });
    s.run("log", {n}, [&](Tape& t, const std::vector<Var>& p) { return s.project(t, t.log(t.sigmoid(p[0])), c); });
    s.run("sum", {n}, [&](Tape& t, const std::vector<Var>& p) { return t.tanh(t.sum(p[0])); });
    s.run("slice", {n + 3}, [&](Tape& t, const std::vector<Var>& p) { return s.project(t, t.slice(p[0], 2, n), c); });
    s.run("mse", {n, n}, [&](Tape& t, const std::vector<Var>& p) { return t.mse(p[0], p[1]); });
    s.run("kl", {n, n}, [&](Tape& t, const std::vector<Var>& p) { return t.kl(t.softmax(p[0]), t.softmax(p[1])); });
    s.run("cross_entropy", {n},
          [&](Tape& t, const std::vector<Var>& p) { return t.cross_entropy(t.softmax(p[0]), n / 2); });
}

void linear_ops(Suite& s) {
    const std::size_t rows = s.dim(), cols = s.dim();
    const auto c = s.random(rows);
    s.run("matvec", {rows * cols, cols}, [&](Tape& t, const std::vector<Var>& p) {
        return s.project(t, t.tanh(t.matvec(p[0], p[1], rows, cols)), c);
    });

    const std::size_t g = 2 + s.rng()() % 3;
    const std::size_t br = std::max<std::size_t>(1, s.max_dim() / g / 2), bc = std::max<std::size_t>(1, s.max_dim() / g);
    const auto cb = s.random(g * br);
    s.run("block_diagonal", {g * br * bc, g * bc}, [&](Tape& t, const std::vector<Var>& p) {
        return s.project(t, t.tanh(t.block_diagonal(p[0], p[1], g * br, g * bc, g)), cb);
    });

    const std::size_t len = g * std::max<std::size_t>(1, s.max_dim() / g);
    s.run("shuffle", {len, len}, [&](Tape& t, const std::vector<Var>& p) {
        return t.sum(t.mul(t.shuffle(p[0], g), p[1]));
    });
}

void operator_kinds(Suite& s) {
    constexpr OperatorKind kinds[] = {OperatorKind::Dense, OperatorKind::SVD, OperatorKind::LGPShuffle,
                                      OperatorKind::LGPDense, OperatorKind::LowRankLGP};
    for (OperatorKind kind : kinds) {
        std::vector<CompressionConfig> configs;
        for (int i = 0; i < 3; ++i) configs.push_back(random_config(kind, s.max_dim(), s.rng()));
        if (kind == OperatorKind::LGPDense) {
            auto before = configs.back();
            before.mix_side = MixSide::Before;
            if (!check(before)) configs.push_back(before);
            auto after = configs.back();
            after.mix_side = MixSide::After;
            if (!check(after)) configs.push_back(after);
        }
        for (const auto& cfg : configs) {
            std::vector<std::size_t> sizes;
            for (const auto& f : factor_layout(cfg)) sizes.push_back(f.size());
            sizes.push_back(cfg.n);
            const auto c = s.random(cfg.m);
            s.run("operator " + cfg.describe(), sizes, [&](Tape& t, const std::vector<Var>& p) {
                const std::vector<Var> factors(p.begin(), p.end() - 1);
                return s.project(t, t.tanh(apply_operator(t, cfg, factors, p.back())), c);
            });
        }
    }
}

void recurrent(Suite& s) {
    const std::size_t h = 8, in = 8;
    const CompressionConfig shapes[] = {
        CompressionConfig::dense(0, 0),
        CompressionConfig::svd(0, 0, 2),
        CompressionConfig::lgp_shuffle(0, 0, 4),
        CompressionConfig::lgp_dense(0, 0, 4),
        CompressionConfig::lowrank_lgp(0, 0, 2, 2, 2),
    };
    for (const auto& shape : shapes) {
        const auto in_cfg = shape.with_dims(4 * h, in), h_cfg = shape.with_dims(4 * h, h);
        std::vector<std::size_t> sizes;
        for (const auto& f : factor_layout(in_cfg)) sizes.push_back(f.size());
        for (const auto& f : factor_layout(h_cfg)) sizes.push_back(f.size());
        const std::size_t n_in = in_cfg.factor_count(), n_h = h_cfg.factor_count();
        for (std::size_t n : {4 * h, in, h, h}) sizes.push_back(n);  // bias, x, h0, c0
        const auto ch = s.random(h), cc = s.random(h);
        s.run("lstm_step " + h_cfg.describe(), sizes, [&](Tape& t, const std::vector<Var>& p) {
            const std::vector<Var> w_in(p.begin(), p.begin() + n_in);
            const std::vector<Var> w_h(p.begin() + n_in, p.begin() + n_in + n_h);
            const Var* rest = p.data() + n_in + n_h;
            const auto next = lstm_step(t, in_cfg, w_in, h_cfg, w_h, rest[0], rest[1], {rest[2], rest[3]}, h);
            return t.add(s.project(t, next.h, ch), s.project(t, next.c, cc));
        });
    }

    // Whole distillation objective through the toy sequence model.
    auto model = make_sequence_model(8, 8, CompressionConfig::lgp_shuffle(0, 0, 2), s.rng()());
    const std::vector<std::size_t> tokens{3, 1, 7, 0, 5};
    std::vector<Distribution> teacher;
    for (std::size_t t = 0; t + 1 < tokens.size(); ++t) {
        auto logits = s.random(8, 2.0);
        double total = 0.0;
        for (double& v : logits) total += v = std::exp(v);
        for (double& v : logits) v /= total;
        teacher.push_back(logits);
    }
    for (const auto direction : {KlDirection::StudentTeacher, KlDirection::TeacherStudent}) {
        const std::string name = direction == KlDirection::StudentTeacher ? "kd_sequence kl(s,t)" : "kd_sequence kl(t,s)";
        s.add(check_gradients(name, parameters(model), [&](Tape& t, const std::vector<ParamRef>& refs) {
            std::vector<std::span<double>> grads;
            for (const auto& r : refs) grads.push_back(r.grad);
            TapeModel tm(t, model, grads);
            return tm.sequence_loss(tokens, teacher, {1.0, 3.0, 2.0}, direction);
        }));
    }
}

}  // namespace

std::vector<GradCheckResult> gradient_suite(std::uint64_t seed, std::size_t max_dim) {
    Suite s(seed, max_dim);
    elementwise_ops(s);
    linear_ops(s);
    operator_kinds(s);
    recurrent(s);
    return s.take();
}

}  // namespace antman::ad

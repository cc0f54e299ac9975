#include "antman/kd.hpp"

#include <cmath>
#include <string>

namespace antman {

void validate(const KDCoefficients& c) {
    if (!(c.c_target >= 0.0 && c.c_mse >= 0.0 && c.c_kl >= 0.0))
        throw KdError("coefficients must be nonnegative");
    if (!(c.c_target > 0.0 || c.c_mse > 0.0 || c.c_kl > 0.0))
        throw KdError("at least one coefficient must be positive");
}

void check_distribution(const Distribution& p, double tol) {
    if (p.empty()) throw KdError("empty distribution");
    double total = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw KdError("distribution entries must be finite and >= 0");
        total += v;
    }
    if (std::abs(total - 1.0) > tol) throw KdError("distribution is not normalized (sum " + std::to_string(total) + ")");
}

namespace {

double kl_divergence(const Distribution& p, const Distribution& q) {
    double total = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k)
        if (p[k] > 0.0) total += p[k] * std::log(p[k] / q[k]);
    return total;
}

}  // namespace

KdTerms kd_terms(const std::vector<Distribution>& student, const std::vector<Distribution>& teacher,
                 const std::vector<std::size_t>& targets, KlDirection direction) {
    const std::size_t steps = student.size();
    if (steps == 0) throw KdError("no steps to score");
    if (targets.size() != steps) throw KdError("targets must have one entry per step");
    const bool with_teacher = !teacher.empty();
    if (with_teacher && teacher.size() != steps) throw KdError("teacher must have one distribution per step");

    KdTerms terms;
    for (std::size_t t = 0; t < steps; ++t) {
        const auto& s = student[t];
        check_distribution(s);
        if (targets[t] >= s.size()) throw KdError("target index out of range");
        terms.target += -std::log(s[targets[t]]);
        if (!with_teacher) continue;
        const auto& q = teacher[t];
        if (q.size() != s.size()) throw KdError("student and teacher distributions differ in size");
        check_distribution(q);
        double sq = 0.0;
        for (std::size_t k = 0; k < s.size(); ++k) sq += (s[k] - q[k]) * (s[k] - q[k]);
        terms.mse += sq / static_cast<double>(s.size());
        terms.kl += direction == KlDirection::StudentTeacher ? kl_divergence(s, q) : kl_divergence(q, s);
    }
    const double inv = 1.0 / static_cast<double>(steps);
    terms.target *= inv;
    terms.mse *= inv;
    terms.kl *= inv;
    return terms;
}

double kd_loss(const std::vector<Distribution>& student, const std::vector<Distribution>& teacher,
               const std::vector<std::size_t>& targets, const KDCoefficients& coeffs, KlDirection direction) {
    validate(coeffs);
    if (coeffs.uses_teacher() && teacher.empty()) throw KdError("MSE/KL terms need teacher distributions");
    const auto terms = kd_terms(student, teacher, targets, direction);
    return coeffs.c_target * terms.target + coeffs.c_mse * terms.mse + coeffs.c_kl * terms.kl;
}

double round_one_significant(double value) {
    if (value == 0.0 || !std::isfinite(value)) return value;
    const double exponent = std::floor(std::log10(std::abs(value)));
    // Divide by 10^-e for negative exponents so 0.3 comes out as 3 / 10, not 3 * 0.1.
    if (exponent < 0) {
        const double scale = std::pow(10.0, -exponent);
        return std::round(value * scale) / scale;
    }
    const double unit = std::pow(10.0, exponent);
    return std::round(value / unit) * unit;
}

KDCoefficients decide_coefficients(const LossRecord& record, LossTerm anchor) {
    if (!(record.target_loss > 0.0 && record.mse_loss > 0.0 && record.kl_loss > 0.0))
        throw KdError("recorded losses must all be positive");
    const double reference = anchor == LossTerm::Target ? record.target_loss
                             : anchor == LossTerm::Mse  ? record.mse_loss
                                                        : record.kl_loss;
    auto coefficient = [&](LossTerm term, double loss) {
        return term == anchor ? 1.0 : round_one_significant(reference / loss);
    };
    return {coefficient(LossTerm::Target, record.target_loss), coefficient(LossTerm::Mse, record.mse_loss),
            coefficient(LossTerm::Kl, record.kl_loss)};
}

namespace ad {

Var kd_step_loss(Tape& tape, Var student, const Distribution* teacher, std::size_t target,
                 const KDCoefficients& coeffs, KlDirection direction) {
    std::optional<Var> total;
    auto accumulate = [&](Var term) { total = total ? tape.add(*total, term) : term; };
    if (coeffs.c_target > 0.0) accumulate(tape.scale(tape.cross_entropy(student, target), coeffs.c_target));
    if (coeffs.uses_teacher()) {
        if (teacher == nullptr) throw KdError("MSE/KL terms need teacher distributions");
        const Var t = tape.constant(*teacher);
        if (coeffs.c_mse > 0.0) accumulate(tape.scale(tape.mse(student, t), coeffs.c_mse));
        if (coeffs.c_kl > 0.0) {
            const Var kl = direction == KlDirection::StudentTeacher ? tape.kl(student, t) : tape.kl(t, student);
            accumulate(tape.scale(kl, coeffs.c_kl));
        }
    }
    if (!total) throw KdError("at least one coefficient must be positive");
    return *total;
}

}  // namespace ad

}  // namespace antman

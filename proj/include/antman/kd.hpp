#pragma once

// Three-term distillation objective and the coefficient balancing rule.
//
//   total = c_target * CE(S_o, target) + c_mse * MSE(S_o, T_o) + c_kl * KL(S_o, T_o)
//
// S_o and T_o are per-step output distributions of student and teacher.
// Each term is averaged over steps.

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "antman/autodiff.hpp"

namespace antman {

class KdError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct KDCoefficients {
    double c_target = 1.0;
    double c_mse = 0.0;
    double c_kl = 0.0;

    bool uses_teacher() const { return c_mse > 0.0 || c_kl > 0.0; }
    friend bool operator==(const KDCoefficients&, const KDCoefficients&) = default;
};

/// Throws KdError unless all coefficients are >= 0 and at least one is > 0.
void validate(const KDCoefficients& c);

/// Converged validation values of the three single-loss runs.
struct LossRecord {
    double target_loss = 0.0;
    double mse_loss = 0.0;
    double kl_loss = 0.0;

    friend bool operator==(const LossRecord&, const LossRecord&) = default;
};

/// KL(S || T) follows the argument order of the objective; Reversed gives KL(T || S).
enum class KlDirection { StudentTeacher, TeacherStudent };

enum class LossTerm { Target, Mse, Kl };

using Distribution = std::vector<double>;

/// Throws KdError unless every entry is >= 0 and the sum is within `tol` of 1.
void check_distribution(const Distribution& p, double tol = 1e-6);

struct KdTerms {
    double target = 0.0;
    double mse = 0.0;
    double kl = 0.0;
};

/// Step-averaged CE, MSE and KL for a sequence of distributions.
KdTerms kd_terms(const std::vector<Distribution>& student, const std::vector<Distribution>& teacher,
                 const std::vector<std::size_t>& targets, KlDirection direction = KlDirection::StudentTeacher);

/// Weighted total of kd_terms. `teacher` may be empty when only the target
/// term is active. Shapes and normalization are validated.
double kd_loss(const std::vector<Distribution>& student, const std::vector<Distribution>& teacher,
               const std::vector<std::size_t>& targets, const KDCoefficients& coeffs,
               KlDirection direction = KlDirection::StudentTeacher);

/// Rounds to one significant figure: 30.9 -> 30, 1027.5 -> 1000, 0.0372 -> 0.04.
double round_one_significant(double value);

/// Balances the terms: the anchor gets 1, every other coefficient becomes
/// anchor_loss / own_loss rounded to one significant figure.
KDCoefficients decide_coefficients(const LossRecord& record, LossTerm anchor = LossTerm::Target);

namespace ad {

/// One step of the objective on a tape. `teacher` is a constant distribution.
Var kd_step_loss(Tape& tape, Var student, const Distribution* teacher, std::size_t target,
                 const KDCoefficients& coeffs, KlDirection direction = KlDirection::StudentTeacher);

}  // namespace ad

}  // namespace antman

#pragma once

// Central finite-difference checks of tape gradients.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "antman/autodiff.hpp"

namespace antman::ad {

/// Builds a scalar loss over parameter leaves made from `refs`.
using LossBuilder = std::function<Var(Tape&, const std::vector<ParamRef>& refs)>;

struct GradCheckResult {
    std::string name;
    std::size_t entries = 0;
    double worst_rel_err = 0.0;
};

/// |a - f| / max(|a|, |f|, 1e-6). The floor keeps entries whose true
/// gradient is zero from dividing by rounding noise.
double fd_relative_error(double analytic, double numeric);

/// Compares backward() against (L(p + eps) - L(p - eps)) / 2 eps for every
/// entry of `values`. Values are perturbed in place and restored.
GradCheckResult check_gradients(std::string name, const std::vector<std::span<double>>& values,
                                const LossBuilder& build, double eps = 1e-5);

/// Every differentiable tape op, every operator kind through apply_operator,
/// an LSTM step and a distillation sequence loss. Dimensions stay <= max_dim.
std::vector<GradCheckResult> gradient_suite(std::uint64_t seed, std::size_t max_dim = 16);

}  // namespace antman::ad

#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "antman/config.hpp"

namespace antman {

using Rational = boost::rational<std::int64_t>;

/// Multiply-add and parameter counts for one application of an operator.
struct CostReport {
    std::int64_t madds = 0;
    std::int64_t params = 0;
    Rational reduction{1};  // mn / madds
    bool below_one = false; // the "compressed" form is bigger than dense

    friend bool operator==(const CostReport&, const CostReport&) = default;
};

/// Model size per kind:
///   Dense       mn
///   SVD         mn/r + n^2/r
///   LGPShuffle  mn/g
///   LGPDense    mn/g + k^2      (k = min(m, n) unless the mix side is overridden)
///   LowRankLGP  mn/(r g_out) + n^2/(r g_in) + (n/r)^2
/// Every kind is a chain of MVs, so madds == params.
CostReport cost_of(const CompressionConfig& cfg);

/// The cost-reduction column evaluated as its own closed form rather than as
/// mn / params. E.g. LowRankLGP: m r^2 g_out g_in / (m g_in r + n g_out r + n g_out g_in).
Rational reduction_closed_form(const CompressionConfig& cfg);

struct PlanEntry {
    CompressionConfig config;
    CostReport cost;
};

/// Every valid config of the requested kinds whose reduction reaches
/// `target`, sorted by params, then factor count, then kind and parameters.
std::vector<PlanEntry> plan(std::size_t m, std::size_t n, Rational target,
                            const std::set<OperatorKind>& kinds);

/// Ascending divisors of v.
std::vector<std::size_t> divisors(std::size_t v);

/// "num/den", or just "num" when den == 1.
std::string to_string(const Rational& r);
double to_double(const Rational& r);
/// Parses "10", "8/3" or a finite decimal like "2.5".
Rational parse_rational(const std::string& text);

}  // namespace antman

#include "antman/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace antman::ad {

Var Tape::push(Node n) {
    if (has_backward_) throw AutodiffError("tape already differentiated; record a new tape");
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

std::span<const double> Tape::val(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.op == Op::Parameter ? n.view : std::span<const double>(n.owned);
}

std::span<const double> Tape::value(Var v) const {
    (void)node(v);
    return val(v.id);
}

double Tape::scalar_value(Var v) const {
    const auto x = value(v);
    if (x.size() != 1) throw AutodiffError("node is not a scalar");
    return x[0];
}

void Tape::check_same_size(Var a, Var b, const char* what) const {
    if (value(a).size() != value(b).size()) throw ShapeError(what);
}

Var Tape::constant(std::vector<double> value) {
    Node n;
    n.op = Op::Constant;
    n.owned = std::move(value);
    return push(std::move(n));
}

Var Tape::parameter(ParamRef p) {
    if (p.grad.size() != p.value.size()) throw ShapeError("parameter gradient buffer size mismatch");
    Node n;
    n.op = Op::Parameter;
    n.view = p.value;
    n.grad_sink = p.grad;
    return push(std::move(n));
}

Var Tape::matvec(Var w, Var x, std::size_t rows, std::size_t cols) {
    const auto wv = value(w), xv = value(x);
    require_shape(wv.size() == rows * cols, "matvec: weight size must be rows*cols");
    require_shape(xv.size() == cols, "matvec: x length must equal cols");
    Node n;
    n.op = Op::MatVec;
    n.a = w.id;
    n.b = x.id;
    n.rows = rows;
    n.cols = cols;
    n.owned.resize(rows);
    kernels::gemv(wv.data(), rows, cols, xv.data(), n.owned.data());
    return push(std::move(n));
}

Var Tape::block_diagonal(Var w, Var x, std::size_t rows, std::size_t cols, std::size_t groups) {
    if (groups == 0 || rows % groups != 0 || cols % groups != 0) throw ConfigError("g must divide m and n");
    const auto wv = value(w), xv = value(x);
    require_shape(wv.size() == rows * cols / groups, "block_diagonal: weight size must be m*n/g");
    require_shape(xv.size() == cols, "block_diagonal: x length must equal cols");
    Node n;
    n.op = Op::BlockDiag;
    n.a = w.id;
    n.b = x.id;
    n.rows = rows;
    n.cols = cols;
    n.groups = groups;
    n.owned.resize(rows);
    kernels::block_diagonal_mv(wv.data(), groups, rows / groups, cols / groups, xv.data(), n.owned.data());
    return push(std::move(n));
}

Var Tape::shuffle(Var x, std::size_t groups) {
    const auto xv = value(x);
    const ShuffleMix s(xv.size(), groups);
    Node n;
    n.op = Op::Shuffle;
    n.a = x.id;
    n.groups = groups;
    n.owned.resize(xv.size());
    s.apply(xv.data(), n.owned.data());
    return push(std::move(n));
}

namespace {

template <typename F>
std::vector<double> map(std::span<const double> a, F f) {
    std::vector<double> out(a.size());
    std::transform(a.begin(), a.end(), out.begin(), f);
    return out;
}

template <typename F>
std::vector<double> zip(std::span<const double> a, std::span<const double> b, F f) {
    std::vector<double> out(a.size());
    std::transform(a.begin(), a.end(), b.begin(), out.begin(), f);
    return out;
}

}  // namespace

Var Tape::add(Var a, Var b) {
    check_same_size(a, b, "add: size mismatch");
    Node n;
    n.op = Op::Add;
    n.a = a.id;
    n.b = b.id;
    n.owned = zip(value(a), value(b), std::plus<>{});
    return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
    check_same_size(a, b, "sub: size mismatch");
    Node n;
    n.op = Op::Sub;
    n.a = a.id;
    n.b = b.id;
    n.owned = zip(value(a), value(b), std::minus<>{});
    return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
    check_same_size(a, b, "mul: size mismatch");
    Node n;
    n.op = Op::Mul;
    n.a = a.id;
    n.b = b.id;
    n.owned = zip(value(a), value(b), std::multiplies<>{});
    return push(std::move(n));
}

Var Tape::scale(Var a, double factor) {
    Node n;
    n.op = Op::Scale;
    n.a = a.id;
    n.factor = factor;
    n.owned = map(value(a), [factor](double v) { return factor * v; });
    return push(std::move(n));
}

Var Tape::sigmoid(Var a) {
    Node n;
    n.op = Op::Sigmoid;
    n.a = a.id;
    n.owned = map(value(a), [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    return push(std::move(n));
}

Var Tape::tanh(Var a) {
    Node n;
    n.op = Op::Tanh;
    n.a = a.id;
    n.owned = map(value(a), [](double v) { return std::tanh(v); });
    return push(std::move(n));
}

Var Tape::softmax(Var a) {
    const auto av = value(a);
    require_shape(!av.empty(), "softmax: empty input");
    const double top = *std::max_element(av.begin(), av.end());
    Node n;
    n.op = Op::Softmax;
    n.a = a.id;
    n.owned = map(av, [top](double v) { return std::exp(v - top); });
    double total = 0.0;
    for (double v : n.owned) total += v;
    for (double& v : n.owned) v /= total;
    return push(std::move(n));
}

Var Tape::log(Var a) {
    Node n;
    n.op = Op::Log;
    n.a = a.id;
    n.owned = map(value(a), [](double v) { return std::log(v); });
    return push(std::move(n));
}

Var Tape::sum(Var a) {
    double total = 0.0;
    for (double v : value(a)) total += v;
    Node n;
    n.op = Op::Sum;
    n.a = a.id;
    n.owned = {total};
    return push(std::move(n));
}

Var Tape::slice(Var a, std::size_t offset, std::size_t length) {
    const auto av = value(a);
    require_shape(offset + length <= av.size(), "slice: range out of bounds");
    Node n;
    n.op = Op::Slice;
    n.a = a.id;
    n.offset = offset;
    n.owned.assign(av.begin() + static_cast<std::ptrdiff_t>(offset),
                   av.begin() + static_cast<std::ptrdiff_t>(offset + length));
    return push(std::move(n));
}

Var Tape::mse(Var a, Var b) {
    check_same_size(a, b, "mse: size mismatch");
    const auto av = value(a), bv = value(b);
    double total = 0.0;
    for (std::size_t k = 0; k < av.size(); ++k) total += (av[k] - bv[k]) * (av[k] - bv[k]);
    Node n;
    n.op = Op::Mse;
    n.a = a.id;
    n.b = b.id;
    n.owned = {total / static_cast<double>(av.size())};
    return push(std::move(n));
}

Var Tape::kl(Var p, Var q) {
    check_same_size(p, q, "kl: size mismatch");
    const auto pv = value(p), qv = value(q);
    double total = 0.0;
    for (std::size_t k = 0; k < pv.size(); ++k)
        if (pv[k] > 0.0) total += pv[k] * std::log(pv[k] / qv[k]);
    Node n;
    n.op = Op::Kl;
    n.a = p.id;
    n.b = q.id;
    n.owned = {total};
    return push(std::move(n));
}

Var Tape::cross_entropy(Var p, std::size_t target) {
    const auto pv = value(p);
    require_shape(target < pv.size(), "cross_entropy: target index out of range");
    Node n;
    n.op = Op::CrossEntropy;
    n.a = p.id;
    n.offset = target;
    n.owned = {-std::log(pv[target])};
    return push(std::move(n));
}

void Tape::backward(Var loss) {
    if (value(loss).size() != 1) throw AutodiffError("backward: loss must be a scalar");
    if (has_backward_) throw AutodiffError("backward: tape already differentiated");
    has_backward_ = true;

    nodes_[loss.id].reached = true;
    nodes_[loss.id].adjoint = {1.0};

    auto grad_of = [this](std::size_t id) -> std::vector<double>& {
        Node& n = nodes_[id];
        if (!n.reached) {
            n.reached = true;
            n.adjoint.assign(val(id).size(), 0.0);
        }
        return n.adjoint;
    };

    for (std::size_t id = loss.id + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (!n.reached) continue;
        const std::vector<double> dy = n.adjoint;
        const auto y = std::span<const double>(n.owned);
        switch (n.op) {
            case Op::Constant:
                break;
            case Op::Parameter:
                for (std::size_t k = 0; k < dy.size(); ++k) n.grad_sink[k] += dy[k];
                break;
            case Op::MatVec: {
                const auto w = val(n.a), x = val(n.b);
                auto& dw = grad_of(n.a);
                auto& dx = grad_of(n.b);
                for (std::size_t i = 0; i < n.rows; ++i) {
                    const double g = dy[i];
                    const std::size_t row = i * n.cols;
                    for (std::size_t j = 0; j < n.cols; ++j) {
                        dw[row + j] += g * x[j];
                        dx[j] += w[row + j] * g;
                    }
                }
                break;
            }
            case Op::BlockDiag: {
                const auto w = val(n.a), x = val(n.b);
                auto& dw = grad_of(n.a);
                auto& dx = grad_of(n.b);
                const std::size_t br = n.rows / n.groups, bc = n.cols / n.groups;
                for (std::size_t b = 0; b < n.groups; ++b) {
                    for (std::size_t i = 0; i < br; ++i) {
                        const double g = dy[b * br + i];
                        const std::size_t row = b * br * bc + i * bc;
                        for (std::size_t j = 0; j < bc; ++j) {
                            dw[row + j] += g * x[b * bc + j];
                            dx[b * bc + j] += w[row + j] * g;
                        }
                    }
                }
                break;
            }
            case Op::Shuffle: {
                // The adjoint of a permutation is its inverse.
                auto& dx = grad_of(n.a);
                const ShuffleMix s(dy.size(), n.groups);
                std::vector<double> back(dy.size());
                s.inverse().apply(dy.data(), back.data());
                for (std::size_t k = 0; k < dy.size(); ++k) dx[k] += back[k];
                break;
            }
            case Op::Add: {
                auto& da = grad_of(n.a);
                for (std::size_t k = 0; k < dy.size(); ++k) da[k] += dy[k];
                auto& db = grad_of(n.b);
                for (std::size_t k = 0; k < dy.size(); ++k) db[k] += dy[k];
                break;
            }
            case Op::Sub: {
                auto& da = grad_of(n.a);
                for (std::size_t k = 0; k < dy.size(); ++k) da[k] += dy[k];
                auto& db = grad_of(n.b);
                for (std::size_t k = 0; k < dy.size(); ++k) db[k] -= dy[k];
                break;
            }
            case Op::Mul: {
                const auto a = val(n.a), b = val(n.b);
                auto& da = grad_of(n.a);
                for (std::size_t k = 0; k < dy.size(); ++k) da[k] += dy[k] * b[k];
                auto& db = grad_of(n.b);
                for (std::size_t k = 0; k < dy.size(); ++k) db[k] += dy[k] * a[k];
                break;
            }
            case Op::Scale: {
                auto& da = grad_of(n.a);
                for (std::size_t k = 0; k < dy.size(); ++k) da[k] += n.factor * dy[k];
                break;
            }
            case Op::Sigmoid: {
                auto& da = grad_of(n.a);
                for (std::size_t k = 0; k < dy.size(); ++k) da[k] += dy[k] * y[k] * (1.0 - y[k]);
                break;
            }
            case Op::Tanh: {
                auto& da = grad_of(n.a);
                for (std::size_t k = 0; k < dy.size(); ++k) da[k] += dy[k] * (1.0 - y[k] * y[k]);
                break;
            }
            case Op::Softmax: {
                double dot = 0.0;
                for (std::size_t k = 0; k < dy.size(); ++k) dot += dy[k] * y[k];
                auto& da = grad_of(n.a);
                for (std::size_t k = 0; k < dy.size(); ++k) da[k] += y[k] * (dy[k] - dot);
                break;
            }
            case Op::Log: {
                const auto a = val(n.a);
                auto& da = grad_of(n.a);
                for (std::size_t k = 0; k < dy.size(); ++k) da[k] += dy[k] / a[k];
                break;
            }
            case Op::Sum: {
                auto& da = grad_of(n.a);
                for (double& v : da) v += dy[0];
                break;
            }
            case Op::Slice: {
                auto& da = grad_of(n.a);
                for (std::size_t k = 0; k < dy.size(); ++k) da[n.offset + k] += dy[k];
                break;
            }
            case Op::Mse: {
                const auto a = val(n.a), b = val(n.b);
                const double c = 2.0 * dy[0] / static_cast<double>(a.size());
                auto& da = grad_of(n.a);
                for (std::size_t k = 0; k < a.size(); ++k) da[k] += c * (a[k] - b[k]);
                auto& db = grad_of(n.b);
                for (std::size_t k = 0; k < a.size(); ++k) db[k] -= c * (a[k] - b[k]);
                break;
            }
            case Op::Kl: {
                const auto p = val(n.a), q = val(n.b);
                auto& dp = grad_of(n.a);
                for (std::size_t k = 0; k < p.size(); ++k)
                    if (p[k] > 0.0) dp[k] += dy[0] * (std::log(p[k] / q[k]) + 1.0);
                auto& dq = grad_of(n.b);
                for (std::size_t k = 0; k < p.size(); ++k) dq[k] -= dy[0] * p[k] / q[k];
                break;
            }
            case Op::CrossEntropy: {
                const auto p = val(n.a);
                auto& dp = grad_of(n.a);
                dp[n.offset] -= dy[0] / p[n.offset];
                break;
            }
        }
    }
}

std::span<const double> Tape::gradient(Var v) const {
    if (!has_backward_) throw AutodiffError("gradient: call backward first");
    const Node& n = node(v);
    if (!n.reached) throw AutodiffError("gradient: node is detached from the loss");
    return n.adjoint;
}

Var apply_operator(Tape& tape, const CompressionConfig& cfg, const std::vector<Var>& factors, Var x) {
    const auto layout = factor_layout(cfg);
    require_shape(factors.size() == layout.size(), "apply_operator: wrong number of factor nodes");
    auto dense = [&](std::size_t f, Var in) { return tape.matvec(factors[f], in, layout[f].rows, layout[f].cols); };
    auto blocks = [&](std::size_t f, Var in) {
        return tape.block_diagonal(factors[f], in, layout[f].rows, layout[f].cols, layout[f].groups);
    };
    switch (cfg.kind) {
        case OperatorKind::Dense:
            return dense(0, x);
        case OperatorKind::SVD:
            return dense(0, dense(1, x));
        case OperatorKind::LGPShuffle:
            return tape.shuffle(blocks(0, x), *cfg.g);
        case OperatorKind::LGPDense:
            return cfg.effective_mix_side() == MixSide::After ? dense(1, blocks(0, x)) : blocks(0, dense(1, x));
        case OperatorKind::LowRankLGP:
            return blocks(2, dense(1, blocks(0, x)));
    }
    throw ConfigError("unknown operator kind");
}

}  // namespace antman::ad

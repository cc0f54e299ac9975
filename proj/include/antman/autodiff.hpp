#pragma once

// Reverse-mode differentiation over vector-valued nodes.
//
// A Tape records operations in creation order, which is a topological order
// of the graph. backward() walks it in reverse, accumulating adjoints, and
// finally adds the adjoints of parameter leaves into the caller's gradient
// buffers. Scalars are length-1 vectors.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "antman/operators.hpp"

namespace antman::ad {

class AutodiffError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct Var {
    std::size_t id = 0;
};

/// A trainable array and the buffer its gradient is accumulated into.
struct ParamRef {
    std::span<double> value;
    std::span<double> grad;
};

class Tape {
public:
    Var constant(std::vector<double> value);
    Var scalar(double value) { return constant({value}); }
    /// Leaf that reads `p.value` in place and adds into `p.grad` on backward.
    Var parameter(ParamRef p);

    /// y = W x, W row-major rows x cols.
    Var matvec(Var w, Var x, std::size_t rows, std::size_t cols);
    /// Block-diagonal product; w holds `groups` blocks of (rows/groups) x (cols/groups).
    Var block_diagonal(Var w, Var x, std::size_t rows, std::size_t cols, std::size_t groups);
    /// Shuffle mix with `groups` groups.
    Var shuffle(Var x, std::size_t groups);

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double factor);
    Var sigmoid(Var a);
    Var tanh(Var a);
    Var softmax(Var a);
    Var log(Var a);
    Var sum(Var a);
    Var slice(Var a, std::size_t offset, std::size_t length);

    /// mean_k (a_k - b_k)^2
    Var mse(Var a, Var b);
    /// sum_k p_k log(p_k / q_k)
    Var kl(Var p, Var q);
    /// -log p[target]
    Var cross_entropy(Var p, std::size_t target);

    std::span<const double> value(Var v) const;
    double scalar_value(Var v) const;
    std::size_t size() const { return nodes_.size(); }

    /// Populates adjoints for every node that `loss` depends on and adds
    /// parameter adjoints into their ParamRef::grad. Throws AutodiffError if
    /// `loss` is not a scalar.
    void backward(Var loss);

    /// d loss / d v after backward(). Throws AutodiffError if v is not
    /// reachable from the loss (a detached node).
    std::span<const double> gradient(Var v) const;

private:
    enum class Op {
        Constant, Parameter, MatVec, BlockDiag, Shuffle, Add, Sub, Mul, Scale,
        Sigmoid, Tanh, Softmax, Log, Sum, Slice, Mse, Kl, CrossEntropy
    };

    struct Node {
        Op op = Op::Constant;
        std::size_t a = 0, b = 0;           // input node ids
        std::size_t rows = 0, cols = 0, groups = 1, offset = 0;
        double factor = 0.0;
        std::vector<double> owned;           // forward value unless it is a parameter view
        std::span<const double> view;        // parameter leaves read weights in place
        std::span<double> grad_sink;         // parameter leaves only
        std::vector<double> adjoint;
        bool reached = false;
    };

    Var push(Node node);
    Node& node(Var v) { return nodes_.at(v.id); }
    const Node& node(Var v) const { return nodes_.at(v.id); }
    std::span<const double> val(std::size_t id) const;
    void check_same_size(Var a, Var b, const char* what) const;

    std::vector<Node> nodes_;
    bool has_backward_ = false;
};

/// Records `op` applied to x on the tape. `factors` are the parameter (or
/// constant) nodes of op's factor arrays, in factor_layout order.
Var apply_operator(Tape& tape, const CompressionConfig& cfg, const std::vector<Var>& factors, Var x);

}  // namespace antman::ad

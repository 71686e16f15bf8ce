#pragma once

#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace tsa {

/// A learnable tensor with its gradient slot. Vectors are single-column matrices.
struct Parameter {
    std::string name;
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;

    Parameter() = default;
    Parameter(std::string n, Eigen::Index rows, Eigen::Index cols)
        : name(std::move(n)), value(Eigen::MatrixXd::Zero(rows, cols)),
          grad(Eigen::MatrixXd::Zero(rows, cols)) {}

    Eigen::Index size() const { return value.size(); }
};

struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

/// Reverse-mode differentiation over dense vectors. Each op records its value
/// and a closure that pushes the node's gradient to its inputs; backward()
/// replays the closures newest-first. Parameter gradients accumulate into
/// Parameter::grad, so a tape must not outlive the parameters it references.
class Tape {
public:
    Var constant(Eigen::VectorXd value);
    Var lookup(Parameter& table, Eigen::Index column);
    Var affine(Parameter& weight, Var x, Parameter* bias = nullptr);
    /// weight.middleCols(col0, |x|) * x
    Var matvec_cols(Parameter& weight, Eigen::Index col0, Var x);
    /// u^T x as a length-1 vector; u is a single-column parameter.
    Var dot(Parameter& u, Var x);

    Var add(Var a, Var b);
    Var mul(Var a, Var b);
    Var sigmoid(Var x);
    Var tanh(Var x);
    Var relu(Var x);
    Var slice(Var x, Eigen::Index offset, Eigen::Index length);
    Var concat(std::span<const Var> parts);
    Var softmax(Var x);
    /// Σ_j weights[j] * items[j]
    Var weighted_sum(Var weights, std::span<const Var> items);
    /// Elementwise product with a fixed vector.
    Var scale(Var x, Eigen::VectorXd factors);
    /// Inverted dropout; identity when rate == 0.
    Var dropout(Var x, double rate, std::mt19937_64& rng);

    const Eigen::VectorXd& value(Var v) const { return nodes_[v.id].value; }
    double scalar(Var v) const { return nodes_[v.id].value(0); }
    /// Gradient slot, zero-initialised on first access.
    Eigen::VectorXd& grad(Var v);

    void backward();

    std::size_t size() const { return nodes_.size(); }

private:
    struct NodeData {
        Eigen::VectorXd value;
        Eigen::VectorXd grad;
        std::function<void(Tape&, const Eigen::VectorXd&)> back;
    };

    Var push(Eigen::VectorXd value, std::function<void(Tape&, const Eigen::VectorXd&)> back);
    void accumulate(Var v, const Eigen::VectorXd& g);
    template <class Derived>
    void accumulate(Var v, const Eigen::MatrixBase<Derived>& g) {
        accumulate(v, Eigen::VectorXd(g));
    }

    std::vector<NodeData> nodes_;
};

}  // namespace tsa

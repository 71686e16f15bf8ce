#include "tsa/tape.hpp"

#include <stdexcept>

namespace tsa {

Var Tape::push(Eigen::VectorXd value, std::function<void(Tape&, const Eigen::VectorXd&)> back) {
    nodes_.push_back({std::move(value), Eigen::VectorXd(), std::move(back)});
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Eigen::VectorXd& Tape::grad(Var v) {
    auto& node = nodes_.at(v.id);
    if (node.grad.size() != node.value.size()) node.grad = Eigen::VectorXd::Zero(node.value.size());
    return node.grad;
}

void Tape::accumulate(Var v, const Eigen::VectorXd& g) { grad(v) += g; }

void Tape::backward() {
    for (auto i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
        auto& node = nodes_[i];
        if (node.grad.size() == 0 || !node.back) continue;
        node.back(*this, node.grad);
    }
}

Var Tape::constant(Eigen::VectorXd value) { return push(std::move(value), nullptr); }

Var Tape::lookup(Parameter& table, Eigen::Index column) {
    return push(table.value.col(column), [&table, column](Tape&, const Eigen::VectorXd& g) {
        table.grad.col(column) += g;
    });
}

Var Tape::affine(Parameter& weight, Var x, Parameter* bias) {
    Eigen::VectorXd y = weight.value * value(x);
    if (bias) y += bias->value.col(0);
    return push(std::move(y), [&weight, x, bias](Tape& t, const Eigen::VectorXd& g) {
        const auto& xv = t.value(x);
        weight.grad.noalias() += g * xv.transpose();
        if (bias) bias->grad.col(0) += g;
        t.accumulate(x, weight.value.transpose() * g);
    });
}

Var Tape::matvec_cols(Parameter& weight, Eigen::Index col0, Var x) {
    const auto len = value(x).size();
    Eigen::VectorXd y = weight.value.middleCols(col0, len) * value(x);
    return push(std::move(y), [&weight, col0, len, x](Tape& t, const Eigen::VectorXd& g) {
        weight.grad.middleCols(col0, len).noalias() += g * t.value(x).transpose();
        t.accumulate(x, weight.value.middleCols(col0, len).transpose() * g);
    });
}

Var Tape::dot(Parameter& u, Var x) {
    Eigen::VectorXd y(1);
    y(0) = u.value.col(0).dot(value(x));
    return push(std::move(y), [&u, x](Tape& t, const Eigen::VectorXd& g) {
        u.grad.col(0) += g(0) * t.value(x);
        t.accumulate(x, g(0) * u.value.col(0));
    });
}

Var Tape::add(Var a, Var b) {
    return push(value(a) + value(b), [a, b](Tape& t, const Eigen::VectorXd& g) {
        t.accumulate(a, g);
        t.accumulate(b, g);
    });
}

Var Tape::mul(Var a, Var b) {
    return push(value(a).cwiseProduct(value(b)), [a, b](Tape& t, const Eigen::VectorXd& g) {
        t.accumulate(a, g.cwiseProduct(t.value(b)));
        t.accumulate(b, g.cwiseProduct(t.value(a)));
    });
}

Var Tape::sigmoid(Var x) {
    Eigen::VectorXd y = (1.0 + (-value(x).array()).exp()).inverse().matrix();
    const int self = static_cast<int>(nodes_.size());
    return push(std::move(y), [x, self](Tape& t, const Eigen::VectorXd& g) {
        const auto& yv = t.nodes_[self].value;
        t.accumulate(x, (g.array() * yv.array() * (1.0 - yv.array())).matrix());
    });
}

Var Tape::tanh(Var x) {
    Eigen::VectorXd y = value(x).array().tanh().matrix();
    const int self = static_cast<int>(nodes_.size());
    return push(std::move(y), [x, self](Tape& t, const Eigen::VectorXd& g) {
        const auto& yv = t.nodes_[self].value;
        t.accumulate(x, (g.array() * (1.0 - yv.array().square())).matrix());
    });
}

Var Tape::relu(Var x) {
    Eigen::VectorXd y = value(x).cwiseMax(0.0);
    return push(std::move(y), [x](Tape& t, const Eigen::VectorXd& g) {
        t.accumulate(x, (t.value(x).array() > 0.0).select(g, 0.0));
    });
}

Var Tape::slice(Var x, Eigen::Index offset, Eigen::Index length) {
    return push(value(x).segment(offset, length),
                [x, offset, length](Tape& t, const Eigen::VectorXd& g) {
                    t.grad(x).segment(offset, length) += g;
                });
}

Var Tape::concat(std::span<const Var> parts) {
    Eigen::Index total = 0;
    for (auto p : parts) total += value(p).size();
    Eigen::VectorXd y(total);
    Eigen::Index off = 0;
    for (auto p : parts) {
        y.segment(off, value(p).size()) = value(p);
        off += value(p).size();
    }
    std::vector<Var> inputs(parts.begin(), parts.end());
    return push(std::move(y), [inputs = std::move(inputs)](Tape& t, const Eigen::VectorXd& g) {
        Eigen::Index off = 0;
        for (auto p : inputs) {
            const auto len = t.value(p).size();
            t.grad(p) += g.segment(off, len);
            off += len;
        }
    });
}

Var Tape::softmax(Var x) {
    const auto& xv = value(x);
    Eigen::VectorXd y = (xv.array() - xv.maxCoeff()).exp().matrix();
    y /= y.sum();
    const int self = static_cast<int>(nodes_.size());
    return push(std::move(y), [x, self](Tape& t, const Eigen::VectorXd& g) {
        const auto& yv = t.nodes_[self].value;
        const double inner = g.dot(yv);
        t.accumulate(x, (yv.array() * (g.array() - inner)).matrix());
    });
}

Var Tape::weighted_sum(Var weights, std::span<const Var> items) {
    const auto& w = value(weights);
    if (w.size() != static_cast<Eigen::Index>(items.size()))
        throw std::invalid_argument("weighted_sum: weight count mismatch");
    Eigen::VectorXd y = Eigen::VectorXd::Zero(value(items.front()).size());
    for (std::size_t j = 0; j < items.size(); ++j) y += w(static_cast<Eigen::Index>(j)) * value(items[j]);
    std::vector<Var> inputs(items.begin(), items.end());
    return push(std::move(y),
                [weights, inputs = std::move(inputs)](Tape& t, const Eigen::VectorXd& g) {
                    Eigen::VectorXd gw(static_cast<Eigen::Index>(inputs.size()));
                    const Eigen::VectorXd wv = t.value(weights);
                    for (std::size_t j = 0; j < inputs.size(); ++j) {
                        const auto jj = static_cast<Eigen::Index>(j);
                        gw(jj) = g.dot(t.value(inputs[j]));
                        t.grad(inputs[j]) += wv(jj) * g;
                    }
                    t.accumulate(weights, gw);
                });
}

Var Tape::scale(Var x, Eigen::VectorXd factors) {
    Eigen::VectorXd y = value(x).cwiseProduct(factors);
    return push(std::move(y), [x, f = std::move(factors)](Tape& t, const Eigen::VectorXd& g) {
        t.accumulate(x, g.cwiseProduct(f));
    });
}

Var Tape::dropout(Var x, double rate, std::mt19937_64& rng) {
    if (rate <= 0.0) return x;
    std::bernoulli_distribution keep(1.0 - rate);
    Eigen::VectorXd mask(value(x).size());
    for (Eigen::Index i = 0; i < mask.size(); ++i) mask(i) = keep(rng) ? 1.0 / (1.0 - rate) : 0.0;
    return scale(x, std::move(mask));
}

}  // namespace tsa

#include "tsa/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tsa {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_scores(const Lattice& lattice, const EdgeScores& scores) {
    if (scores.values.size() != lattice.edges().size())
        throw ContractViolation("edge score count does not match the lattice");
}

std::vector<double> forward(const Lattice& lattice, const EdgeScores& scores) {
    std::vector<double> alpha(lattice.nodes().size(), kNegInf);
    for (int u = 0; u < static_cast<int>(alpha.size()); ++u) {
        double acc = lattice.is_start(u) ? 0.0 : kNegInf;
        const auto in = lattice.in_edges(u);
        const auto src = lattice.in_sources(u);
        for (std::size_t i = 0; i < in.size(); ++i)
            acc = log_sum_exp(acc, alpha[src[i]] + scores.values[in[i]]);
        alpha[u] = acc;
    }
    return alpha;
}

std::vector<double> backward(const Lattice& lattice, const EdgeScores& scores) {
    const auto& edges = lattice.edges();
    std::vector<double> beta(lattice.nodes().size(), kNegInf);
    for (int u = static_cast<int>(beta.size()) - 1; u >= 0; --u) {
        double acc = lattice.is_end(u) ? 0.0 : kNegInf;
        for (int e : lattice.out_edges(u))
            acc = log_sum_exp(acc, beta[edges[e].target] + scores.values[e]);
        beta[u] = acc;
    }
    return beta;
}

double total(const Lattice& lattice, const std::vector<double>& alpha) {
    double z = kNegInf;
    for (int u = 0; u < static_cast<int>(alpha.size()); ++u)
        if (lattice.is_end(u)) z = log_sum_exp(z, alpha[u]);
    return z;
}

}  // namespace

double log_sum_exp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

double path_score(const Lattice& lattice, const std::vector<int>& path, const EdgeScores& scores) {
    check_scores(lattice, scores);
    double s = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i) {
        int e = lattice.find_edge(path[i - 1], path[i]);
        if (e < 0) throw ContractViolation("path step is not a lattice edge");
        s += scores.values[e];
    }
    return s;
}

double path_score(const Lattice& lattice, const std::vector<Node>& path, const EdgeScores& scores) {
    std::vector<int> ids;
    ids.reserve(path.size());
    for (const auto& nd : path) {
        int u = lattice.find_node(nd);
        if (u < 0) throw ContractViolation("path node " + nd.tag.str() + "@" +
                                           std::to_string(nd.position) + " is not in the lattice");
        ids.push_back(u);
    }
    return path_score(lattice, ids, scores);
}

double log_partition(const Lattice& lattice, const EdgeScores& scores) {
    check_scores(lattice, scores);
    return total(lattice, forward(lattice, scores));
}

InferenceResult marginals(const Lattice& lattice, const EdgeScores& scores) {
    check_scores(lattice, scores);
    auto alpha = forward(lattice, scores);
    auto beta = backward(lattice, scores);
    InferenceResult r;
    r.log_partition = total(lattice, alpha);
    const auto& edges = lattice.edges();
    r.edge_marginals.resize(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e)
        r.edge_marginals[e] = std::exp(alpha[edges[e].source] + scores.values[e] +
                                       beta[edges[e].target] - r.log_partition);
    r.node_marginals.resize(alpha.size());
    for (std::size_t u = 0; u < alpha.size(); ++u)
        r.node_marginals[u] = std::exp(alpha[u] + beta[u] - r.log_partition);
    return r;
}

std::vector<double> edge_marginals(const Lattice& lattice, const EdgeScores& scores) {
    return marginals(lattice, scores).edge_marginals;
}

ViterbiResult viterbi(const Lattice& lattice, const EdgeScores& scores) {
    check_scores(lattice, scores);
    const auto& edges = lattice.edges();
    const auto nn = lattice.nodes().size();
    std::vector<double> best(nn, kNegInf);
    std::vector<int> back(nn, -1);
    for (int u = 0; u < static_cast<int>(nn); ++u) {
        // in_edges are ordered by source node, i.e. by (position, label).
        const auto in = lattice.in_edges(u);
        const auto src = lattice.in_sources(u);
        double top = lattice.is_start(u) ? 0.0 : kNegInf;
        int arg = -1;
        for (std::size_t i = 0; i < in.size(); ++i) {
            const double cand = best[src[i]] + scores.values[in[i]];
            if (arg < 0 || cand > top) {
                top = cand;
                arg = in[i];
            }
        }
        best[u] = top;
        back[u] = arg;
    }

    int end = -1;
    for (int u = 0; u < static_cast<int>(nn); ++u)
        if (lattice.is_end(u) && (end < 0 || best[u] > best[end])) end = u;

    ViterbiResult r;
    if (end < 0) return r;
    r.score = best[end];
    for (int u = end; u >= 0; u = back[u] < 0 ? -1 : edges[back[u]].source) r.path.push_back(u);
    std::reverse(r.path.begin(), r.path.end());
    return r;
}

}  // namespace tsa

#pragma once

#include <vector>

#include "tsa/lattice.hpp"

namespace tsa {

/// One natural-log score per lattice edge, indexed like Lattice::edges().
struct EdgeScores {
    std::vector<double> values;

    EdgeScores() = default;
    explicit EdgeScores(std::vector<double> v) : values(std::move(v)) {}
    static EdgeScores zeros(const Lattice& lattice) {
        return EdgeScores(std::vector<double>(lattice.edges().size(), 0.0));
    }
};

struct InferenceResult {
    double log_partition = 0.0;
    std::vector<double> edge_marginals;
    std::vector<double> node_marginals;
};

struct ViterbiResult {
    std::vector<int> path;   // node indices
    double score = 0.0;
};

double log_sum_exp(double a, double b);

/// Sum of edge scores along a node path; throws ContractViolation if a step
/// is not an edge of the lattice.
double path_score(const Lattice& lattice, const std::vector<Node>& path, const EdgeScores& scores);
double path_score(const Lattice& lattice, const std::vector<int>& path, const EdgeScores& scores);

double log_partition(const Lattice& lattice, const EdgeScores& scores);

/// Forward-backward: log-partition plus edge and node marginals.
InferenceResult marginals(const Lattice& lattice, const EdgeScores& scores);

std::vector<double> edge_marginals(const Lattice& lattice, const EdgeScores& scores);

/// MAP path. Among equal-scoring alternatives the earlier incoming edge (lower
/// source position, then lower label) and the lower end label win.
ViterbiResult viterbi(const Lattice& lattice, const EdgeScores& scores);

}  // namespace tsa

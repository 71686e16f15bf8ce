#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tsa/inference.hpp"
#include "tsa/lattice.hpp"

namespace tsa {

// Brute-force references built from span semantics alone (targets, their
// sentiment scopes and BMES sub-tags), never from the transition table.

/// Every nonempty sorted set of non-overlapping polarized spans over n tokens.
std::vector<std::vector<SpanLabel>> all_span_configurations(int n);

/// Node sequences whose scopes partition the sentence around `spans`: each
/// target is preceded by its B run and followed by its A run, and each scope
/// boundary between consecutive targets is free.
std::vector<std::vector<Node>> semantic_paths(int n, const std::vector<SpanLabel>& spans);
std::vector<std::vector<Node>> all_semantic_paths(int n);

struct OracleResult {
    std::size_t paths = 0;
    double log_partition = 0.0;
    double best_score = 0.0;
    std::vector<double> edge_marginals;
};

/// Exhaustive log-sum-exp, max and per-edge path mass over `paths`. Throws
/// ContractViolation if some path is not present in the lattice.
OracleResult enumerate(const Lattice& lattice, const EdgeScores& scores,
                       const std::vector<std::vector<Node>>& paths);

struct SelfCheckOptions {
    int lattice_cases = 200;
    int max_length = 5;
    std::uint64_t seed = 1;
    double delta = 1e-4;
    /// Negative control: builds unconstrained lattices with a table that drops
    /// polarity-changing SENT_AB edges.
    bool corrupt_transitions = false;
};

struct SelfCheckReport {
    bool passed = true;
    int cases = 0;
    double max_lattice_error = 0.0;
    double max_gradient_error = 0.0;
    std::vector<std::string> failures;
};

SelfCheckReport run_selfcheck(const SelfCheckOptions& options, std::ostream& log);

}  // namespace tsa

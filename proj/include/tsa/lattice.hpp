#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsa/corpus.hpp"

namespace tsa {

class ContractViolation : public std::logic_error {
    using std::logic_error::logic_error;
};

class UnsupportedOutput : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

enum class TagKind : std::uint8_t { Before, Target, After };   // B_p, E_{ε,p}, A_p
enum class SubTag : std::uint8_t { B = 0, M = 1, E = 2, S = 3 };

inline constexpr int kNumSubTags = 4;
inline constexpr int kNumLabels = 18;   // 3 B + 12 E + 3 A

/// A tag together with its slot in the fixed label order
///   B < E_B < E_M < E_E < E_S < A, polarity + < - < 0 within each kind.
/// The label order is topological for same-position edges and doubles as
/// the Viterbi tie-break preference.
struct Tag {
    TagKind kind = TagKind::Before;
    Polarity polarity = Polarity::Positive;
    SubTag sub = SubTag::S;   // meaningful only for TagKind::Target

    static Tag before(Polarity p) { return {TagKind::Before, p, SubTag::S}; }
    static Tag after(Polarity p) { return {TagKind::After, p, SubTag::S}; }
    static Tag target(SubTag s, Polarity p) { return {TagKind::Target, p, s}; }
    static Tag from_label(int label);

    int label() const;
    std::string str() const;

    bool operator==(const Tag& o) const { return label() == o.label(); }
};

struct Node {
    int position = 1;   // 1-based
    Tag tag;

    bool operator==(const Node& o) const { return position == o.position && tag == o.tag; }
};

enum class EdgeRule : std::uint8_t {
    TargetCont,   // E^k -> E^{k+1}
    TargetEnd,    // E^k -> A^k
    SentBB,       // B^k -> B^{k+1}
    SentAA,       // A^k -> A^{k+1}
    SentAB,       // A^k -> B'^{k+1}
    AttnBegin,    // B^k -> E^k
};

std::string_view rule_name(EdgeRule rule);

struct Edge {
    int source = 0;   // node indices into Lattice::nodes()
    int target = 0;
    EdgeRule rule = EdgeRule::SentBB;
};

/// Rule for an allowed transition between two tags, or nullopt if the pair is invalid.
/// `step` is target.position - source.position.
using TransitionTable = std::function<std::optional<EdgeRule>(const Tag&, const Tag&, int step)>;

std::optional<EdgeRule> standard_transition(const Tag& from, const Tag& to, int step);

/// Tag lattice over one sentence. Nodes are stored in topological order
/// (by position, then label); edges are grouped by source node.
class Lattice {
public:
    int length() const { return n_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }

    std::span<const int> out_edges(int node) const {
        return {out_order_.data() + out_begin_[node], out_order_.data() + out_begin_[node + 1]};
    }
    std::span<const int> in_edges(int node) const {
        return {in_order_.data() + in_begin_[node], in_order_.data() + in_begin_[node + 1]};
    }
    /// Source node of each entry of in_edges(node), in the same order.
    std::span<const int> in_sources(int node) const {
        return {in_source_.data() + in_begin_[node], in_source_.data() + in_begin_[node + 1]};
    }

    bool is_start(int node) const;
    bool is_end(int node) const;

    /// -1 if absent.
    int find_node(const Node& node) const;
    int find_edge(int source, int target) const;

    std::size_t nodes_at(int position) const;

    /// "k:tag -> k':tag' RULE" per edge.
    std::string dump() const;

    friend class LatticeBuilder;

private:
    int n_ = 0;
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::vector<int> index_;   // position * kNumLabels + label -> node or -1
    std::vector<int> out_begin_, out_order_;
    std::vector<int> in_begin_, in_order_, in_source_;
};

/// All label sequences valid under the transition table.
Lattice build_unconstrained(int n);
Lattice build_unconstrained(int n, const TransitionTable& table);

/// All label sequences whose decoded spans equal `spans`.
Lattice build_clamped(int n, const std::vector<SpanLabel>& spans);

/// Number of start-to-end paths, by DP. Exact while it fits in 64 bits.
std::uint64_t count_paths(const Lattice& lattice);

std::vector<SpanLabel> decode_spans(const std::vector<Node>& path);

/// Enumerates every start-to-end path as a node-index sequence. Exponential;
/// intended for small lattices.
void for_each_path(const Lattice& lattice, const std::function<void(const std::vector<int>&)>& fn);

std::vector<Node> path_nodes(const Lattice& lattice, const std::vector<int>& path);

}  // namespace tsa

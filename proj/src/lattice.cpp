#include "tsa/lattice.hpp"

#include <algorithm>
#include <sstream>

namespace tsa {

namespace {

int kind_rank(const Tag& t) {
    switch (t.kind) {
    case TagKind::Before: return 0;
    case TagKind::Target: return 1 + static_cast<int>(t.sub);
    case TagKind::After: return 5;
    }
    return 0;
}

const char* polarity_sign(Polarity p) {
    switch (p) {
    case Polarity::Positive: return "+";
    case Polarity::Negative: return "-";
    case Polarity::Neutral: return "0";
    }
    return "?";
}

}  // namespace

Tag Tag::from_label(int label) {
    if (label < 0 || label >= kNumLabels) throw ContractViolation("label out of range");
    const int rank = label / kNumPolarities;
    const auto p = static_cast<Polarity>(label % kNumPolarities);
    if (rank == 0) return before(p);
    if (rank == 5) return after(p);
    return target(static_cast<SubTag>(rank - 1), p);
}

int Tag::label() const { return kind_rank(*this) * kNumPolarities + static_cast<int>(polarity); }

std::string Tag::str() const {
    static constexpr const char* kSub = "BMES";
    switch (kind) {
    case TagKind::Before: return std::string("B") + polarity_sign(polarity);
    case TagKind::After: return std::string("A") + polarity_sign(polarity);
    case TagKind::Target:
        return std::string("E") + kSub[static_cast<int>(sub)] + polarity_sign(polarity);
    }
    return "?";
}

std::string_view rule_name(EdgeRule rule) {
    switch (rule) {
    case EdgeRule::TargetCont: return "TARGET_CONT";
    case EdgeRule::TargetEnd: return "TARGET_END";
    case EdgeRule::SentBB: return "SENT_BB";
    case EdgeRule::SentAA: return "SENT_AA";
    case EdgeRule::SentAB: return "SENT_AB";
    case EdgeRule::AttnBegin: return "ATTN_BEGIN";
    }
    return "?";
}

std::optional<EdgeRule> standard_transition(const Tag& from, const Tag& to, int step) {
    switch (from.kind) {
    case TagKind::Before:
        if (step == 1 && to.kind == TagKind::Before && to.polarity == from.polarity)
            return EdgeRule::SentBB;
        if (step == 0 && to.kind == TagKind::Target && to.polarity == from.polarity &&
            (to.sub == SubTag::B || to.sub == SubTag::S))
            return EdgeRule::AttnBegin;
        return std::nullopt;
    case TagKind::Target:
        if (to.polarity != from.polarity) return std::nullopt;
        if (step == 1 && (from.sub == SubTag::B || from.sub == SubTag::M) &&
            to.kind == TagKind::Target && (to.sub == SubTag::M || to.sub == SubTag::E))
            return EdgeRule::TargetCont;
        if (step == 0 && (from.sub == SubTag::E || from.sub == SubTag::S) &&
            to.kind == TagKind::After)
            return EdgeRule::TargetEnd;
        return std::nullopt;
    case TagKind::After:
        if (step != 1) return std::nullopt;
        if (to.kind == TagKind::After && to.polarity == from.polarity) return EdgeRule::SentAA;
        if (to.kind == TagKind::Before) return EdgeRule::SentAB;
        return std::nullopt;
    }
    return std::nullopt;
}

bool Lattice::is_start(int node) const {
    const auto& nd = nodes_[node];
    return nd.position == 1 && nd.tag.kind == TagKind::Before;
}

bool Lattice::is_end(int node) const {
    const auto& nd = nodes_[node];
    return nd.position == n_ && nd.tag.kind == TagKind::After;
}

int Lattice::find_node(const Node& node) const {
    if (node.position < 1 || node.position > n_) return -1;
    return index_[static_cast<std::size_t>(node.position - 1) * kNumLabels + node.tag.label()];
}

int Lattice::find_edge(int source, int target) const {
    for (int e : out_edges(source))
        if (edges_[e].target == target) return e;
    return -1;
}

std::size_t Lattice::nodes_at(int position) const {
    return static_cast<std::size_t>(std::count_if(
        nodes_.begin(), nodes_.end(), [&](const Node& nd) { return nd.position == position; }));
}

std::string Lattice::dump() const {
    std::ostringstream out;
    for (const auto& e : edges_) {
        const auto& s = nodes_[e.source];
        const auto& t = nodes_[e.target];
        out << s.position << ':' << s.tag.str() << " -> " << t.position << ':' << t.tag.str()
            << ' ' << rule_name(e.rule) << '\n';
    }
    return out.str();
}

/// Assembles a pruned lattice from per-position allowed labels. Each allowed
/// (position, label) carries a group id; `group_ok` filters edges by the
/// groups of their endpoints.
class LatticeBuilder {
public:
    using Allowed = std::vector<std::array<int, kNumLabels>>;   // group or -1
    using GroupCheck = std::function<bool(int from_group, int to_group, EdgeRule rule)>;

    static Lattice build(int n, const Allowed& allowed, const TransitionTable& table,
                         const GroupCheck& group_ok) {
        std::vector<Node> cand;
        std::vector<int> group;
        std::vector<int> cand_index(static_cast<std::size_t>(n) * kNumLabels, -1);
        for (int k = 1; k <= n; ++k)
            for (int l = 0; l < kNumLabels; ++l)
                if (allowed[k - 1][l] >= 0) {
                    cand_index[(k - 1) * kNumLabels + l] = static_cast<int>(cand.size());
                    cand.push_back({k, Tag::from_label(l)});
                    group.push_back(allowed[k - 1][l]);
                }

        std::vector<Edge> cand_edges;
        for (int u = 0; u < static_cast<int>(cand.size()); ++u) {
            const int k = cand[u].position;
            for (int step = 0; step <= 1; ++step) {
                const int kk = k + step;
                if (kk > n) break;
                // Same-position edges must point forward in label order.
                const int first = step == 0 ? cand[u].tag.label() + 1 : 0;
                for (int l = first; l < kNumLabels; ++l) {
                    int v = cand_index[(kk - 1) * kNumLabels + l];
                    if (v < 0) continue;
                    auto rule = table(cand[u].tag, cand[v].tag, step);
                    if (!rule || !group_ok(group[u], group[v], *rule)) continue;
                    cand_edges.push_back({u, v, *rule});
                }
            }
        }

        const auto m = cand.size();
        std::vector<char> fwd(m, 0), bwd(m, 0);
        for (std::size_t u = 0; u < m; ++u)
            if (cand[u].position == 1 && cand[u].tag.kind == TagKind::Before) fwd[u] = 1;
        for (const auto& e : cand_edges)   // edges are sorted by source
            if (fwd[e.source]) fwd[e.target] = 1;
        for (std::size_t u = 0; u < m; ++u)
            if (cand[u].position == n && cand[u].tag.kind == TagKind::After) bwd[u] = 1;
        for (auto it = cand_edges.rbegin(); it != cand_edges.rend(); ++it)
            if (bwd[it->target]) bwd[it->source] = 1;

        Lattice lat;
        lat.n_ = n;
        lat.index_.assign(static_cast<std::size_t>(n) * kNumLabels, -1);
        std::vector<int> remap(m, -1);
        for (std::size_t u = 0; u < m; ++u) {
            if (!fwd[u] || !bwd[u]) continue;
            remap[u] = static_cast<int>(lat.nodes_.size());
            lat.index_[(cand[u].position - 1) * kNumLabels + cand[u].tag.label()] = remap[u];
            lat.nodes_.push_back(cand[u]);
        }
        for (const auto& e : cand_edges)
            if (remap[e.source] >= 0 && remap[e.target] >= 0)
                lat.edges_.push_back({remap[e.source], remap[e.target], e.rule});

        finalize(lat);
        return lat;
    }

private:
    static void finalize(Lattice& lat) {
        const auto nn = lat.nodes_.size();
        const auto ne = lat.edges_.size();
        lat.out_begin_.assign(nn + 1, 0);
        lat.in_begin_.assign(nn + 1, 0);
        for (const auto& e : lat.edges_) {
            ++lat.out_begin_[e.source + 1];
            ++lat.in_begin_[e.target + 1];
        }
        for (std::size_t i = 0; i < nn; ++i) {
            lat.out_begin_[i + 1] += lat.out_begin_[i];
            lat.in_begin_[i + 1] += lat.in_begin_[i];
        }
        lat.out_order_.assign(ne, 0);
        lat.in_order_.assign(ne, 0);
        auto out_fill = lat.out_begin_;
        auto in_fill = lat.in_begin_;
        for (std::size_t e = 0; e < ne; ++e) {
            lat.out_order_[out_fill[lat.edges_[e].source]++] = static_cast<int>(e);
            lat.in_order_[in_fill[lat.edges_[e].target]++] = static_cast<int>(e);
        }
        lat.in_source_.resize(ne);
        for (std::size_t i = 0; i < ne; ++i) lat.in_source_[i] = lat.edges_[lat.in_order_[i]].source;
    }
};

Lattice build_unconstrained(int n, const TransitionTable& table) {
    if (n < 1) throw ArgumentError("lattice length must be at least 1");
    LatticeBuilder::Allowed allowed(n);
    for (auto& row : allowed) row.fill(0);
    return LatticeBuilder::build(n, allowed, table, [](int, int, EdgeRule) { return true; });
}

Lattice build_unconstrained(int n) { return build_unconstrained(n, standard_transition); }

Lattice build_clamped(int n, const std::vector<SpanLabel>& spans) {
    if (n < 1) throw ArgumentError("lattice length must be at least 1");
    if (spans.empty())
        throw UnsupportedOutput("every path contains a target; an empty span list has no path");
    validate_spans(spans, static_cast<std::size_t>(n));

    LatticeBuilder::Allowed allowed(n);
    for (auto& row : allowed) row.fill(-1);
    auto allow = [&](int k, const Tag& tag, int group) { allowed[k - 1][tag.label()] = group; };

    const int m = static_cast<int>(spans.size());
    for (int i = 0; i < m; ++i) {
        const auto& s = spans[i];
        const auto p = s.polarity;
        allow(s.start, Tag::before(p), i);
        allow(s.end, Tag::after(p), i);
        for (int k = s.start; k <= s.end; ++k) {
            SubTag sub = s.start == s.end ? SubTag::S
                         : k == s.start   ? SubTag::B
                         : k == s.end     ? SubTag::E
                                          : SubTag::M;
            allow(k, Tag::target(sub, p), i);
        }
        const int gap_begin = s.end + 1;
        const int gap_end = i + 1 < m ? spans[i + 1].start - 1 : n;
        for (int k = gap_begin; k <= gap_end; ++k) {
            allow(k, Tag::after(p), i);
            if (i + 1 < m) allow(k, Tag::before(spans[i + 1].polarity), i + 1);
        }
    }
    for (int k = 1; k < spans.front().start; ++k) allow(k, Tag::before(spans.front().polarity), 0);

    return LatticeBuilder::build(n, allowed, standard_transition,
                                 [](int from, int to, EdgeRule rule) {
                                     return rule == EdgeRule::SentAB ? to == from + 1 : to == from;
                                 });
}

std::uint64_t count_paths(const Lattice& lattice) {
    const auto& nodes = lattice.nodes();
    std::vector<std::uint64_t> ways(nodes.size(), 0);
    std::uint64_t total = 0;
    for (int u = 0; u < static_cast<int>(nodes.size()); ++u) {
        if (lattice.is_start(u)) ways[u] += 1;
        for (int e : lattice.in_edges(u)) ways[u] += ways[lattice.edges()[e].source];
        if (lattice.is_end(u)) total += ways[u];
    }
    return total;
}

std::vector<SpanLabel> decode_spans(const std::vector<Node>& path) {
    if (path.empty()) throw ContractViolation("empty path");
    if (path.front().position != 1 || path.front().tag.kind != TagKind::Before)
        throw ContractViolation("path must start at a B tag on position 1");
    if (path.back().tag.kind != TagKind::After)
        throw ContractViolation("path must end at an A tag");
    for (std::size_t i = 1; i < path.size(); ++i) {
        const int step = path[i].position - path[i - 1].position;
        if (!standard_transition(path[i - 1].tag, path[i].tag, step))
            throw ContractViolation("invalid transition " + path[i - 1].tag.str() + " -> " +
                                    path[i].tag.str() + " at position " +
                                    std::to_string(path[i].position));
    }

    std::vector<SpanLabel> spans;
    std::size_t i = 0;
    while (i < path.size()) {
        if (path[i].tag.kind != TagKind::Target) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < path.size() && path[j + 1].tag.kind == TagKind::Target) ++j;
        const std::size_t len = j - i + 1;
        for (std::size_t r = i; r <= j; ++r) {
            SubTag expected = len == 1 ? SubTag::S
                              : r == i ? SubTag::B
                              : r == j ? SubTag::E
                                       : SubTag::M;
            if (path[r].tag.sub != expected)
                throw ContractViolation("sub-tag inconsistent with its position in the target");
        }
        spans.push_back({path[i].position, path[j].position, path[i].tag.polarity});
        i = j + 1;
    }
    return spans;
}

void for_each_path(const Lattice& lattice,
                   const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> stack;
    std::function<void(int)> visit = [&](int u) {
        stack.push_back(u);
        if (lattice.is_end(u)) fn(stack);
        for (int e : lattice.out_edges(u)) visit(lattice.edges()[e].target);
        stack.pop_back();
    };
    for (int u = 0; u < static_cast<int>(lattice.nodes().size()); ++u)
        if (lattice.is_start(u)) visit(u);
}

std::vector<Node> path_nodes(const Lattice& lattice, const std::vector<int>& path) {
    std::vector<Node> out;
    out.reserve(path.size());
    for (int u : path) out.push_back(lattice.nodes().at(u));
    return out;
}

}  // namespace tsa

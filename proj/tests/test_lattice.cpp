#include <doctest.h>

#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "tsa/lattice.hpp"
#include "tsa/verify.hpp"

using namespace tsa;

namespace {

Polarity sign(char c) {
    return c == '+' ? Polarity::Positive : c == '-' ? Polarity::Negative : Polarity::Neutral;
}

/// "3:EB+" -> Node{3, E_{B,+}}
Node node(const std::string& s) {
    const auto colon = s.find(':');
    const int pos = std::stoi(s.substr(0, colon));
    const auto t = s.substr(colon + 1);
    if (t[0] == 'B') return {pos, Tag::before(sign(t[1]))};
    if (t[0] == 'A') return {pos, Tag::after(sign(t[1]))};
    const SubTag sub = t[1] == 'B' ? SubTag::B : t[1] == 'M' ? SubTag::M : t[1] == 'E' ? SubTag::E : SubTag::S;
    return {pos, Tag::target(sub, sign(t[2]))};
}

std::vector<Node> path(const std::string& text) {
    std::istringstream in(text);
    std::vector<Node> out;
    for (std::string tok; in >> tok;) out.push_back(node(tok));
    return out;
}

bool lattice_has_path(const Lattice& lat, const std::vector<Node>& p) {
    int prev = -1;
    for (const auto& n : p) {
        const int id = lat.find_node(n);
        if (id < 0) return false;
        if (prev >= 0 && lat.find_edge(prev, id) < 0) return false;
        prev = id;
    }
    return lat.is_start(lat.find_node(p.front())) && lat.is_end(prev);
}

std::set<std::string> path_set(const Lattice& lat) {
    std::set<std::string> out;
    for_each_path(lat, [&](const std::vector<int>& ids) {
        std::string s;
        for (const auto& n : path_nodes(lat, ids)) s += std::to_string(n.position) + ":" + n.tag.str() + " ";
        out.insert(s);
    });
    return out;
}

std::uint64_t gap_product(const std::vector<SpanLabel>& spans) {
    std::uint64_t p = 1;
    for (std::size_t i = 1; i < spans.size(); ++i)
        p *= static_cast<std::uint64_t>(spans[i].start - spans[i - 1].end - 1 + 1);
    return p;
}

const char* kFigure2 =
    "1:B+ 1:ES+ 1:A+ 2:B+ 3:B+ 3:EB+ 4:EE+ 4:A+ 5:A+ 6:A+ 7:A+ 8:B0 9:B0 9:ES0 9:A0 10:A0";
const char* kFigure3 =
    "1:B+ 1:ES+ 1:A+ 2:A+ 3:B+ 3:EB+ 4:EE+ 4:A+ 5:A+ 6:A+ 7:B0 8:B0 9:B0 9:ES0 9:A0 10:A0";

}  // namespace

TEST_CASE("label order: B, E_B, E_M, E_E, E_S, A with + - 0 inside") {
    CHECK(Tag::before(Polarity::Positive).label() == 0);
    CHECK(Tag::before(Polarity::Neutral).label() == 2);
    CHECK(Tag::target(SubTag::B, Polarity::Positive).label() == 3);
    CHECK(Tag::target(SubTag::S, Polarity::Neutral).label() == 14);
    CHECK(Tag::after(Polarity::Neutral).label() == 17);
    for (int l = 0; l < kNumLabels; ++l) CHECK(Tag::from_label(l).label() == l);
    CHECK(Tag::target(SubTag::M, Polarity::Negative).str() == "EM-");
}

TEST_CASE("unconstrained n=1 has exactly the three B E_S A paths") {
    const auto lat = build_unconstrained(1);
    CHECK(count_paths(lat) == 3);
    const std::set<std::string> expected = {"1:B+ 1:ES+ 1:A+ ", "1:B- 1:ES- 1:A- ", "1:B0 1:ES0 1:A0 "};
    CHECK(path_set(lat) == expected);
}

TEST_CASE("unconstrained path counts") {
    // n=2: nine single-target and nine two-target outputs, no latent freedom.
    const std::uint64_t expected[] = {3, 18, 99, 543, 2979};
    for (int n = 1; n <= 5; ++n) {
        CAPTURE(n);
        CHECK(count_paths(build_unconstrained(n)) == expected[n - 1]);
        CHECK(count_paths(build_unconstrained(n)) == all_semantic_paths(n).size());
    }
}

TEST_CASE("unconstrained lattice rejects n = 0 and has at most 18 labels per position") {
    CHECK_THROWS_AS(build_unconstrained(0), ArgumentError);
    const auto lat = build_unconstrained(7);
    for (int k = 1; k <= 7; ++k) CHECK(lat.nodes_at(k) <= 18);
    CHECK(lat.nodes_at(4) == 18);
}

TEST_CASE("n = 10 unconstrained lattice contains both illustrated paths") {
    const auto lat = build_unconstrained(10);
    CHECK(lattice_has_path(lat, path(kFigure2)));
    CHECK(lattice_has_path(lat, path(kFigure3)));
}

TEST_CASE("clamped lattice examples") {
    CHECK(count_paths(build_clamped(1, {{1, 1, Polarity::Positive}})) == 1);
    const auto fig = build_clamped(10, fixtures::magic_sentence().spans);
    CHECK(count_paths(fig) == 10);
    CHECK(lattice_has_path(fig, path(kFigure2)));
    CHECK(lattice_has_path(fig, path(kFigure3)));

    const auto two = build_clamped(3, {{1, 1, Polarity::Positive}, {3, 3, Polarity::Negative}});
    CHECK(path_set(two) == std::set<std::string>{
                               "1:B+ 1:ES+ 1:A+ 2:A+ 3:B- 3:ES- 3:A- ",
                               "1:B+ 1:ES+ 1:A+ 2:B- 3:B- 3:ES- 3:A- "});
    CHECK_THROWS_AS(build_clamped(3, {}), UnsupportedOutput);
    CHECK_THROWS_AS(build_clamped(3, {{2, 4, Polarity::Neutral}}), ArgumentError);
}

TEST_CASE("decode_spans on illustrated and hand-built paths") {
    const std::vector<SpanLabel> magic = fixtures::magic_sentence().spans;
    CHECK(decode_spans(path(kFigure2)) == magic);
    CHECK(decode_spans(path(kFigure3)) == magic);
    CHECK(decode_spans(path("1:B+ 1:EB+ 2:EM+ 3:EE+ 3:A+")) ==
          std::vector<SpanLabel>{{1, 3, Polarity::Positive}});
}

TEST_CASE("decode_spans rejects malformed paths") {
    CHECK_THROWS_AS(decode_spans({}), ContractViolation);
    CHECK_THROWS_AS(decode_spans(path("1:B+ 1:ES- 1:A-")), ContractViolation);
    CHECK_THROWS_AS(decode_spans(path("1:B+ 1:EB+ 1:A+")), ContractViolation);
    CHECK_THROWS_AS(decode_spans(path("1:B+ 1:ES+ 2:EE+ 2:A+")), ContractViolation);
    CHECK_THROWS_AS(decode_spans(path("2:B+ 2:ES+ 2:A+")), ContractViolation);
    CHECK_THROWS_AS(decode_spans(path("1:B+ 1:ES+")), ContractViolation);
}

TEST_CASE("edges obey the transition table and position steps") {
    const auto lat = build_unconstrained(6);
    for (const auto& e : lat.edges()) {
        const auto& a = lat.nodes()[e.source];
        const auto& b = lat.nodes()[e.target];
        const int step = b.position - a.position;
        CHECK((step == 0 || step == 1));
        const auto rule = standard_transition(a.tag, b.tag, step);
        REQUIRE(rule.has_value());
        CHECK(*rule == e.rule);
        if (step == 0) CHECK(a.tag.label() < b.tag.label());
        if (e.rule != EdgeRule::SentAB) CHECK(a.tag.polarity == b.tag.polarity);
    }
}

TEST_CASE("every node lies on a start-to-end path") {
    const auto lat = build_unconstrained(5);
    std::vector<char> seen(lat.nodes().size(), 0);
    for_each_path(lat, [&](const std::vector<int>& ids) {
        for (int id : ids) seen[id] = 1;
    });
    CHECK(std::count(seen.begin(), seen.end(), 0) == 0);
}

TEST_CASE("property: clamped paths decode to the clamping spans and sit inside the full lattice") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = std::uniform_int_distribution<int>(1, 5)(rng);
        const auto spans = fixtures::random_spans(n, rng);
        const auto clamped = build_clamped(n, spans);
        const auto full = build_unconstrained(n);
        for_each_path(clamped, [&](const std::vector<int>& ids) {
            const auto nodes = path_nodes(clamped, ids);
            REQUIRE(decode_spans(nodes) == spans);
            REQUIRE(lattice_has_path(full, nodes));
        });
    }
}

TEST_CASE("property: clamped path count is the product of gap + 1") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = std::uniform_int_distribution<int>(1, 8)(rng);
        const auto spans = fixtures::random_spans(n, rng);
        CAPTURE(n);
        REQUIRE(count_paths(build_clamped(n, spans)) == gap_product(spans));
        REQUIRE(count_paths(build_clamped(n, spans)) == semantic_paths(n, spans).size());
    }
}

TEST_CASE("debug dump lists one edge per line") {
    const auto lat = build_unconstrained(1);
    const auto text = lat.dump();
    CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(lat.edges().size()));
    CHECK(text.find("1:B+ -> 1:ES+ ATTN_BEGIN") != std::string::npos);
    CHECK(text.find("1:ES+ -> 1:A+ TARGET_END") != std::string::npos);
}

TEST_CASE("in_sources lines up with in_edges") {
    std::mt19937_64 rng(31);
    for (int n = 1; n <= 8; ++n) {
        for (const auto& lat : {build_unconstrained(n), build_clamped(n, fixtures::random_spans(n, rng))}) {
            for (int u = 0; u < static_cast<int>(lat.nodes().size()); ++u) {
                const auto in = lat.in_edges(u);
                const auto src = lat.in_sources(u);
                REQUIRE(in.size() == src.size());
                for (std::size_t i = 0; i < in.size(); ++i) CHECK(lat.edges()[in[i]].source == src[i]);
            }
        }
    }
}

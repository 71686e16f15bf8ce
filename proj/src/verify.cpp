#include "tsa/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "tsa/encoder.hpp"
#include "tsa/training.hpp"

namespace tsa {

namespace {

void extend_configs(int n, int pos, std::vector<SpanLabel>& cur,
                    std::vector<std::vector<SpanLabel>>& out) {
    if (pos > n) {
        if (!cur.empty()) out.push_back(cur);
        return;
    }
    extend_configs(n, pos + 1, cur, out);
    for (int end = pos; end <= n; ++end) {
        for (int p = 0; p < kNumPolarities; ++p) {
            cur.push_back({pos, end, static_cast<Polarity>(p)});
            extend_configs(n, end + 1, cur, out);
            cur.pop_back();
        }
    }
}

SubTag sub_tag(int k, const SpanLabel& s) {
    if (s.start == s.end) return SubTag::S;
    if (k == s.start) return SubTag::B;
    if (k == s.end) return SubTag::E;
    return SubTag::M;
}

void append_scope(std::vector<Node>& path, const SpanLabel& s, int left, int right) {
    for (int k = left; k <= s.start; ++k) path.push_back({k, Tag::before(s.polarity)});
    for (int k = s.start; k <= s.end; ++k) path.push_back({k, Tag::target(sub_tag(k, s), s.polarity)});
    for (int k = s.end; k <= right; ++k) path.push_back({k, Tag::after(s.polarity)});
}

}  // namespace

std::vector<std::vector<SpanLabel>> all_span_configurations(int n) {
    std::vector<std::vector<SpanLabel>> out;
    std::vector<SpanLabel> cur;
    extend_configs(n, 1, cur, out);
    return out;
}

std::vector<std::vector<Node>> semantic_paths(int n, const std::vector<SpanLabel>& spans) {
    validate_spans(spans, static_cast<std::size_t>(n));
    std::vector<std::vector<Node>> out;
    if (spans.empty()) return out;
    const auto m = spans.size();
    // rights[i] is the last token of span i's scope.
    std::vector<int> rights(m);
    auto recurse = [&](auto&& self, std::size_t i) -> void {
        if (i + 1 == m) {
            rights[i] = n;
            std::vector<Node> path;
            int left = 1;
            for (std::size_t j = 0; j < m; ++j) {
                append_scope(path, spans[j], left, rights[j]);
                left = rights[j] + 1;
            }
            out.push_back(std::move(path));
            return;
        }
        for (int r = spans[i].end; r < spans[i + 1].start; ++r) {
            rights[i] = r;
            self(self, i + 1);
        }
    };
    recurse(recurse, 0);
    return out;
}

std::vector<std::vector<Node>> all_semantic_paths(int n) {
    std::vector<std::vector<Node>> out;
    for (const auto& config : all_span_configurations(n)) {
        auto paths = semantic_paths(n, config);
        std::move(paths.begin(), paths.end(), std::back_inserter(out));
    }
    return out;
}

OracleResult enumerate(const Lattice& lattice, const EdgeScores& scores,
                       const std::vector<std::vector<Node>>& paths) {
    OracleResult r;
    r.paths = paths.size();
    r.edge_marginals.assign(lattice.edges().size(), 0.0);
    std::vector<std::vector<int>> edge_ids(paths.size());
    std::vector<double> path_scores(paths.size());
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < paths.size(); ++i) {
        double s = 0.0;
        int prev = -1;
        for (const auto& node : paths[i]) {
            const int id = lattice.find_node(node);
            if (id < 0)
                throw ContractViolation("oracle node " + std::to_string(node.position) + ":" +
                                        node.tag.str() + " missing from lattice");
            if (prev >= 0) {
                const int e = lattice.find_edge(prev, id);
                if (e < 0) throw ContractViolation("oracle edge missing from lattice");
                edge_ids[i].push_back(e);
                s += scores.values[e];
            }
            prev = id;
        }
        path_scores[i] = s;
        best = std::max(best, s);
    }
    r.best_score = best;
    double z = 0.0;
    for (double s : path_scores) z += std::exp(s - best);
    r.log_partition = best + std::log(z);
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const double p = std::exp(path_scores[i] - r.log_partition);
        for (int e : edge_ids[i]) r.edge_marginals[e] += p;
    }
    return r;
}

// ---------------------------------------------------------------- self-check

namespace {

std::optional<EdgeRule> corrupted_transition(const Tag& from, const Tag& to, int step) {
    const auto rule = standard_transition(from, to, step);
    if (rule == EdgeRule::SentAB && from.polarity != to.polarity) return std::nullopt;
    return rule;
}

std::vector<SpanLabel> random_config(int n, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> coin(0, 2);
    std::uniform_int_distribution<int> pol(0, kNumPolarities - 1);
    std::vector<SpanLabel> spans;
    while (spans.empty()) {
        for (int k = 1; k <= n;) {
            if (coin(rng) == 0) {
                std::uniform_int_distribution<int> len(0, std::min(2, n - k));
                const int end = k + len(rng);
                spans.push_back({k, end, static_cast<Polarity>(pol(rng))});
                k = end + 1;
            } else {
                ++k;
            }
        }
    }
    return spans;
}

struct Tracker {
    SelfCheckReport& report;
    std::ostream& log;

    void fail(const std::string& what) {
        report.passed = false;
        report.failures.push_back(what);
        log << "FAIL " << what << "\n";
    }
};

void check_lattices(const SelfCheckOptions& opt, Tracker& t) {
    std::mt19937_64 rng(opt.seed);
    std::uniform_int_distribution<int> len(1, opt.max_length);
    std::normal_distribution<double> gauss(0.0, 2.0);
    const TransitionTable table =
        opt.corrupt_transitions ? TransitionTable(corrupted_transition) : TransitionTable(standard_transition);

    for (int c = 0; c < opt.lattice_cases; ++c) {
        const int n = len(rng);
        const bool clamped = c % 2 == 1;
        const auto spans = clamped ? random_config(n, rng) : std::vector<SpanLabel>{};
        const auto lattice = clamped ? build_clamped(n, spans) : build_unconstrained(n, table);
        const auto paths = clamped ? semantic_paths(n, spans) : all_semantic_paths(n);
        ++t.report.cases;

        const auto count = count_paths(lattice);
        if (count != paths.size()) {
            t.fail("case " + std::to_string(c) + ": lattice has " + std::to_string(count) +
                   " paths, oracle " + std::to_string(paths.size()));
            continue;
        }
        EdgeScores scores;
        for (std::size_t e = 0; e < lattice.edges().size(); ++e) scores.values.push_back(gauss(rng));
        OracleResult oracle;
        try {
            oracle = enumerate(lattice, scores, paths);
        } catch (const ContractViolation& e) {
            t.fail("case " + std::to_string(c) + ": " + e.what());
            continue;
        }
        const auto fb = marginals(lattice, scores);
        const auto vit = viterbi(lattice, scores);
        double err = std::abs(fb.log_partition - oracle.log_partition);
        err = std::max(err, std::abs(vit.score - oracle.best_score));
        for (std::size_t e = 0; e < oracle.edge_marginals.size(); ++e)
            err = std::max(err, std::abs(fb.edge_marginals[e] - oracle.edge_marginals[e]));
        t.report.max_lattice_error = std::max(t.report.max_lattice_error, err);
        if (!(err <= 1e-8)) t.fail("case " + std::to_string(c) + ": error " + std::to_string(err));
    }
    t.log << "lattice cases " << t.report.cases << " max error " << t.report.max_lattice_error << "\n";
}

void check_gradients(const SelfCheckOptions& opt, Tracker& t) {
    const std::vector<std::string> words = {"Alice", "loves", "the", "Ritz", "hotel"};
    for (auto ablation : {Ablation::Full, Ablation::NoAttention, Ablation::NoBmes}) {
        std::mt19937_64 rng(opt.seed + static_cast<std::uint64_t>(ablation));
        const int n = 4;
        Instance inst;
        inst.sentence = Sentence(std::vector<std::string>(words.begin(), words.begin() + n));
        inst.spans = random_config(n, rng);
        Dataset ds;
        ds.instances.push_back(inst);

        ModelConfig mc;
        mc.word_dim = 3;
        mc.char_emb_dim = 2;
        mc.char_dim = 2;
        mc.hidden_dim = 2;
        mc.attention_dim = 3;
        mc.ablation = ablation;
        Model model(mc, Vocabulary::from_dataset(ds), rng);
        const auto r = gradient_check(model, inst, opt.delta);
        t.report.max_gradient_error = std::max(t.report.max_gradient_error, r.max_relative_error);
        t.log << "gradient " << ablation_name(ablation) << " params " << r.checked
              << " max relative error " << r.max_relative_error << " (" << r.worst_parameter << ")\n";
        if (!(r.max_relative_error <= 1e-4))
            t.fail(std::string("gradient check ") + std::string(ablation_name(ablation)));
    }
}

}  // namespace

SelfCheckReport run_selfcheck(const SelfCheckOptions& options, std::ostream& log) {
    SelfCheckReport report;
    Tracker t{report, log};
    check_lattices(options, t);
    check_gradients(options, t);
    log << (report.passed ? "selfcheck passed" : "selfcheck FAILED") << "\n";
    return report;
}

}  // namespace tsa

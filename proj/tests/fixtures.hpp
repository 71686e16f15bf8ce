#pragma once

// Shared test data and hand-rolled random generators.

#include <random>
#include <string>
#include <vector>

#include "tsa/corpus.hpp"
#include "tsa/encoder.hpp"
#include "tsa/inference.hpp"
#include "tsa/lattice.hpp"
#include "tsa/training.hpp"

namespace fixtures {

using tsa::Polarity;

inline const std::vector<std::string>& magic_words() {
    static const std::vector<std::string> w = {"OZ",      "and",   "Shin", "Lim", "perform",
                                               "amazing", "magic", "on",   "AGT", "2018"};
    return w;
}

inline tsa::Instance magic_sentence() {
    return {tsa::Sentence(magic_words()),
            {{1, 1, Polarity::Positive}, {3, 4, Polarity::Positive}, {9, 9, Polarity::Neutral}}};
}

inline tsa::Polarity random_polarity(std::mt19937_64& rng) {
    return static_cast<Polarity>(std::uniform_int_distribution<int>(0, 2)(rng));
}

/// Sorted non-overlapping spans over n tokens; nonempty unless allow_empty.
inline std::vector<tsa::SpanLabel> random_spans(int n, std::mt19937_64& rng, bool allow_empty = false,
                                                int max_len = 3) {
    std::uniform_int_distribution<int> coin(0, 2);
    std::vector<tsa::SpanLabel> spans;
    do {
        spans.clear();
        for (int k = 1; k <= n;) {
            if (coin(rng) == 0) {
                const int len = std::uniform_int_distribution<int>(1, std::min(max_len, n - k + 1))(rng);
                spans.push_back({k, k + len - 1, random_polarity(rng)});
                k += len;
            } else {
                ++k;
            }
        }
    } while (spans.empty() && !allow_empty);
    return spans;
}

inline std::string random_word(std::mt19937_64& rng) {
    static const std::vector<std::string> pieces = {"a", "b", "ö", "Z", "qu", "x1", "é", "-", "日", "n"};
    std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
    const int len = std::uniform_int_distribution<int>(1, 4)(rng);
    std::string w;
    for (int i = 0; i < len; ++i) w += pieces[pick(rng)];
    return w;
}

inline tsa::Dataset random_dataset(std::mt19937_64& rng, int max_sentences = 6, int max_len = 8) {
    tsa::Dataset ds;
    const int count = std::uniform_int_distribution<int>(0, max_sentences)(rng);
    for (int s = 0; s < count; ++s) {
        const int n = std::uniform_int_distribution<int>(1, max_len)(rng);
        std::vector<std::string> words;
        for (int i = 0; i < n; ++i) words.push_back(random_word(rng));
        ds.instances.push_back({tsa::Sentence(words), random_spans(n, rng, true)});
    }
    return ds;
}

inline tsa::EdgeScores random_scores(const tsa::Lattice& lattice, std::mt19937_64& rng,
                                     double stddev = 1.0) {
    std::normal_distribution<double> g(0.0, stddev);
    std::vector<double> v(lattice.edges().size());
    for (auto& x : v) x = g(rng);
    return tsa::EdgeScores(std::move(v));
}

inline tsa::ModelConfig tiny_model_config(tsa::Ablation ablation = tsa::Ablation::Full) {
    tsa::ModelConfig c;
    c.word_dim = 3;
    c.char_emb_dim = 2;
    c.char_dim = 2;
    c.hidden_dim = 2;
    c.attention_dim = 3;
    c.ablation = ablation;
    return c;
}

inline tsa::Model tiny_model(const tsa::Dataset& data, std::uint64_t seed,
                             tsa::Ablation ablation = tsa::Ablation::Full) {
    std::mt19937_64 rng(seed);
    return tsa::Model(tiny_model_config(ablation), tsa::Vocabulary::from_dataset(data), rng);
}

inline void zero_parameters(tsa::Model& model) {
    for (auto& p : model.params()) p.value.setZero();
}

/// 20 sentences whose polarity is fixed by a single cue word after the target.
inline tsa::Dataset overfit_corpus() {
    const std::vector<std::vector<std::string>> names = {
        {"Alice"}, {"Bob"}, {"New", "York"}, {"Red", "Sox"}, {"Carol"}, {"Acme", "Corp"}, {"Dave"}};
    const std::vector<std::pair<std::string, Polarity>> cues = {
        {"great", Polarity::Positive}, {"awful", Polarity::Negative}, {"here", Polarity::Neutral}};
    tsa::Dataset ds;
    for (int i = 0; i < 20; ++i) {
        const auto& name = names[i % names.size()];
        const auto& cue = cues[(i / 2 + i) % 3];
        std::vector<std::string> w;
        if (i % 4 == 3) w.push_back("today");
        const int s = static_cast<int>(w.size()) + 1;
        w.insert(w.end(), name.begin(), name.end());
        const int e = static_cast<int>(w.size());
        w.push_back("is");
        w.push_back(cue.first);
        std::vector<tsa::SpanLabel> spans = {{s, e, cue.second}};
        if (i % 5 == 4) {
            const auto& name2 = names[(i + 3) % names.size()];
            const auto& cue2 = cues[(i + 1) % 3];
            w.push_back("and");
            const int s2 = static_cast<int>(w.size()) + 1;
            w.insert(w.end(), name2.begin(), name2.end());
            const int e2 = static_cast<int>(w.size());
            w.push_back("is");
            w.push_back(cue2.first);
            spans.push_back({s2, e2, cue2.second});
        }
        ds.instances.push_back({tsa::Sentence(w), spans});
    }
    return ds;
}

inline tsa::TrainConfig overfit_config() {
    tsa::TrainConfig c;
    c.epochs = 50;
    c.learning_rate = 0.01;
    c.dropout = 0.0;
    c.seed = 7;
    c.model.word_dim = 8;
    c.model.char_emb_dim = 4;
    c.model.char_dim = 4;
    c.model.hidden_dim = 8;
    c.model.attention_dim = 8;
    return c;
}

/// Ten aligned sentences with hand-counted metrics (see test_evaluation.cpp).
struct MetricFixture {
    std::vector<std::vector<tsa::SpanLabel>> preds, golds;
};

inline MetricFixture metric_fixture() {
    constexpr auto P = Polarity::Positive, N = Polarity::Negative, O = Polarity::Neutral;
    MetricFixture f;
    f.golds = {{{1, 1, P}},
               {{3, 4, P}},
               {{1, 1, P}, {3, 4, P}},
               {{2, 3, N}},
               {{5, 5, O}},
               {{1, 4, N}},
               {{6, 7, O}},
               {{1, 2, P}},
               {{3, 3, N}, {5, 6, P}},
               {{2, 2, O}}};
    f.preds = {{{1, 1, P}},
               {{3, 3, P}},
               {{1, 1, O}, {3, 4, P}},
               {{2, 3, P}},
               {{5, 5, O}},
               {{2, 5, N}},
               {{8, 9, O}},
               {{1, 2, N}},
               {{3, 3, N}},
               {{2, 2, O}, {4, 4, P}}};
    return f;
}

}  // namespace fixtures

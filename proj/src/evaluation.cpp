#include "tsa/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

namespace tsa {

PRF PRF::from_counts(std::size_t matched, std::size_t predicted, std::size_t gold) {
    PRF r;
    r.matched = matched;
    r.predicted = predicted;
    r.gold = gold;
    r.precision = predicted ? 100.0 * static_cast<double>(matched) / static_cast<double>(predicted) : 0.0;
    r.recall = gold ? 100.0 * static_cast<double>(matched) / static_cast<double>(gold) : 0.0;
    r.f1 = r.precision + r.recall > 0.0
               ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;
    return r;
}

SpanCorpus gold_spans(const Dataset& dataset) {
    SpanCorpus out;
    out.reserve(dataset.size());
    for (const auto& inst : dataset.instances) out.push_back(inst.spans);
    return out;
}

namespace {

void check_aligned(const SpanCorpus& preds, const SpanCorpus& golds) {
    if (preds.size() != golds.size())
        throw ArgumentError("prediction and gold corpora differ in sentence count (" +
                            std::to_string(preds.size()) + " vs " + std::to_string(golds.size()) +
                            ")");
}

bool is_subjective(Polarity p) { return p != Polarity::Neutral; }

struct Counts {
    std::size_t matched = 0, predicted = 0, gold = 0;
};

/// Greedy one-to-one matching of predictions (in order) to the first
/// unconsumed gold span accepted by `match`.
template <class Match>
std::size_t greedy_match(const std::vector<SpanLabel>& preds, const std::vector<SpanLabel>& golds,
                         Match match) {
    std::vector<char> used(golds.size(), 0);
    std::size_t matched = 0;
    for (const auto& p : preds) {
        for (std::size_t g = 0; g < golds.size(); ++g) {
            if (used[g] || !match(p, golds[g])) continue;
            used[g] = 1;
            ++matched;
            break;
        }
    }
    return matched;
}

template <class Match>
PRF corpus_prf(const SpanCorpus& preds, const SpanCorpus& golds, Match match) {
    check_aligned(preds, golds);
    Counts c;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        c.predicted += preds[i].size();
        c.gold += golds[i].size();
        c.matched += greedy_match(preds[i], golds[i], match);
    }
    return PRF::from_counts(c.matched, c.predicted, c.gold);
}

bool same_boundary(const SpanLabel& a, const SpanLabel& b) {
    return a.start == b.start && a.end == b.end;
}

bool overlaps(const SpanLabel& a, const SpanLabel& b) {
    return a.start <= b.end && b.start <= a.end;
}

SpanCorpus filter(const SpanCorpus& corpus, bool (*keep)(const SpanLabel&)) {
    SpanCorpus out(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i)
        for (const auto& s : corpus[i])
            if (keep(s)) out[i].push_back(s);
    return out;
}

}  // namespace

PRF exact_prf(const SpanCorpus& preds, const SpanCorpus& golds, MatchMode mode) {
    if (mode == MatchMode::Target) return corpus_prf(preds, golds, same_boundary);
    return corpus_prf(preds, golds, [](const SpanLabel& a, const SpanLabel& b) {
        return same_boundary(a, b) && a.polarity == b.polarity;
    });
}

PRF partial_prf(const SpanCorpus& preds, const SpanCorpus& golds, MatchMode mode) {
    if (mode == MatchMode::Target) return corpus_prf(preds, golds, overlaps);
    return corpus_prf(preds, golds, [](const SpanLabel& a, const SpanLabel& b) {
        return overlaps(a, b) && a.polarity == b.polarity;
    });
}

PRF subjectivity_prf(const SpanCorpus& preds, const SpanCorpus& golds, SubjectivityMode mode) {
    check_aligned(preds, golds);
    if (mode == SubjectivityMode::Subjectivity) {
        return corpus_prf(preds, golds, [](const SpanLabel& a, const SpanLabel& b) {
            return same_boundary(a, b) && is_subjective(a.polarity) == is_subjective(b.polarity);
        });
    }
    auto keep = [](const SpanLabel& s) { return is_subjective(s.polarity); };
    return exact_prf(filter(preds, keep), filter(golds, keep), MatchMode::Targeted);
}

int length_bucket(const SpanLabel& span) { return std::min(span.length(), kLengthBuckets) - 1; }

std::string_view length_bucket_name(int bucket) {
    static constexpr std::string_view kNames[] = {"1", "2", "3", ">=4"};
    return kNames[bucket];
}

std::array<PRF, kLengthBuckets> length_breakdown(const SpanCorpus& preds, const SpanCorpus& golds) {
    check_aligned(preds, golds);
    std::array<PRF, kLengthBuckets> out;
    for (int b = 0; b < kLengthBuckets; ++b) {
        SpanCorpus p(preds.size()), g(golds.size());
        for (std::size_t i = 0; i < preds.size(); ++i) {
            for (const auto& s : preds[i])
                if (length_bucket(s) == b) p[i].push_back(s);
            for (const auto& s : golds[i])
                if (length_bucket(s) == b) g[i].push_back(s);
        }
        out[b] = exact_prf(p, g, MatchMode::Targeted);
    }
    return out;
}

double bootstrap_significance(const SpanCorpus& preds_a, const SpanCorpus& preds_b,
                              const SpanCorpus& golds, int resamples, std::uint64_t seed) {
    check_aligned(preds_a, golds);
    check_aligned(preds_b, golds);
    if (resamples < 100) throw ArgumentError("bootstrap needs at least 100 resamples");
    const auto n = golds.size();
    if (n == 0) throw ArgumentError("bootstrap over an empty corpus");

    auto exact_targeted = [](const std::vector<SpanLabel>& p, const std::vector<SpanLabel>& g) {
        return greedy_match(p, g, [](const SpanLabel& a, const SpanLabel& b) {
            return same_boundary(a, b) && a.polarity == b.polarity;
        });
    };
    // Per-sentence counts; a resample only re-weights them.
    std::vector<Counts> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = {exact_targeted(preds_a[i], golds[i]), preds_a[i].size(), golds[i].size()};
        b[i] = {exact_targeted(preds_b[i], golds[i]), preds_b[i].size(), golds[i].size()};
    }

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    int b_wins = 0;
    for (int r = 0; r < resamples; ++r) {
        Counts sa, sb;
        for (std::size_t i = 0; i < n; ++i) {
            const auto j = pick(rng);
            sa.matched += a[j].matched;
            sa.predicted += a[j].predicted;
            sa.gold += a[j].gold;
            sb.matched += b[j].matched;
            sb.predicted += b[j].predicted;
            sb.gold += b[j].gold;
        }
        const double fa = PRF::from_counts(sa.matched, sa.predicted, sa.gold).f1;
        const double fb = PRF::from_counts(sb.matched, sb.predicted, sb.gold).f1;
        if (fb >= fa) ++b_wins;
    }
    return static_cast<double>(b_wins) / resamples;
}

MetricsReport evaluate_all(const SpanCorpus& preds, const SpanCorpus& golds) {
    MetricsReport r;
    r.target = exact_prf(preds, golds, MatchMode::Target);
    r.targeted = exact_prf(preds, golds, MatchMode::Targeted);
    r.partial_target = partial_prf(preds, golds, MatchMode::Target);
    r.partial_targeted = partial_prf(preds, golds, MatchMode::Targeted);
    r.subjectivity = subjectivity_prf(preds, golds, SubjectivityMode::Subjectivity);
    r.nonneutral = subjectivity_prf(preds, golds, SubjectivityMode::NonNeutral);
    r.by_length = length_breakdown(preds, golds);
    return r;
}

namespace {

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

struct Row {
    std::string_view key;
    std::string_view label;
    const PRF* prf;
};

std::vector<Row> rows(const MetricsReport& r) {
    return {{"target", "Target (exact)", &r.target},
            {"targeted", "Targeted sentiment (exact)", &r.targeted},
            {"partial_target", "Target (partial)", &r.partial_target},
            {"partial_targeted", "Targeted sentiment (partial)", &r.partial_targeted},
            {"subjectivity", "Subjectivity (+/-, 0)", &r.subjectivity},
            {"nonneutral", "Non-neutral sentiment (+, -)", &r.nonneutral}};
}

}  // namespace

std::string MetricsReport::table() const {
    char line[160];
    std::string out;
    std::snprintf(line, sizeof(line), "%-30s %8s %8s %8s %8s %8s %8s\n", "metric", "P", "R", "F1",
                  "matched", "pred", "gold");
    out += line;
    auto emit = [&](std::string_view label, const PRF& p) {
        std::snprintf(line, sizeof(line), "%-30.*s %8.2f %8.2f %8.2f %8zu %8zu %8zu\n",
                      static_cast<int>(label.size()), label.data(), p.precision, p.recall, p.f1,
                      p.matched, p.predicted, p.gold);
        out += line;
    };
    for (const auto& row : rows(*this)) emit(row.label, *row.prf);
    for (int b = 0; b < kLengthBuckets; ++b)
        emit("Targeted, length " + std::string(length_bucket_name(b)), by_length[b]);
    return out;
}

std::string MetricsReport::porcelain() const {
    std::string out;
    auto emit = [&](const std::string& key, const PRF& p) {
        out += key + "_p=" + fmt2(p.precision) + "\n";
        out += key + "_r=" + fmt2(p.recall) + "\n";
        out += key + "_f1=" + fmt2(p.f1) + "\n";
        out += key + "_matched=" + std::to_string(p.matched) + "\n";
        out += key + "_predicted=" + std::to_string(p.predicted) + "\n";
        out += key + "_gold=" + std::to_string(p.gold) + "\n";
    };
    for (const auto& row : rows(*this)) emit(std::string(row.key), *row.prf);
    static constexpr const char* kBucketKeys[] = {"len1", "len2", "len3", "len4plus"};
    for (int b = 0; b < kLengthBuckets; ++b) emit(kBucketKeys[b], by_length[b]);
    return out;
}

std::string MetricsReport::length_csv() const {
    std::string out = "bucket,precision,recall,f1,matched,predicted,gold\n";
    for (int b = 0; b < kLengthBuckets; ++b) {
        const auto& p = by_length[b];
        out += std::string(length_bucket_name(b)) + "," + fmt2(p.precision) + "," + fmt2(p.recall) +
               "," + fmt2(p.f1) + "," + std::to_string(p.matched) + "," +
               std::to_string(p.predicted) + "," + std::to_string(p.gold) + "\n";
    }
    return out;
}

}  // namespace tsa

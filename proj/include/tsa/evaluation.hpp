#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tsa/corpus.hpp"

namespace tsa {

/// Percentages in [0, 100] plus the raw counts they came from.
struct PRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t matched = 0;
    std::size_t predicted = 0;
    std::size_t gold = 0;

    static PRF from_counts(std::size_t matched, std::size_t predicted, std::size_t gold);
};

enum class MatchMode {
    Target,     // boundaries only
    Targeted,   // boundaries and polarity
};

enum class SubjectivityMode {
    Subjectivity,   // polarity collapsed to {+/-, 0}
    NonNeutral,     // only + and - spans, exact polarity
};

using SpanCorpus = std::vector<std::vector<SpanLabel>>;

SpanCorpus gold_spans(const Dataset& dataset);

PRF exact_prf(const SpanCorpus& preds, const SpanCorpus& golds, MatchMode mode);
/// ≥1-token overlap, greedy one-to-one matching left to right.
PRF partial_prf(const SpanCorpus& preds, const SpanCorpus& golds, MatchMode mode);
PRF subjectivity_prf(const SpanCorpus& preds, const SpanCorpus& golds, SubjectivityMode mode);

inline constexpr int kLengthBuckets = 4;   // 1, 2, 3, >=4
int length_bucket(const SpanLabel& span);
std::string_view length_bucket_name(int bucket);

/// Exact targeted PRF per target-length bucket; a prediction is charged to
/// the bucket of its own length.
std::array<PRF, kLengthBuckets> length_breakdown(const SpanCorpus& preds, const SpanCorpus& golds);

/// Fraction of sentence-level bootstrap resamples in which B's targeted F1 is
/// at least A's.
double bootstrap_significance(const SpanCorpus& preds_a, const SpanCorpus& preds_b,
                              const SpanCorpus& golds, int resamples, std::uint64_t seed);

struct MetricsReport {
    PRF target, targeted;
    PRF partial_target, partial_targeted;
    PRF subjectivity, nonneutral;
    std::array<PRF, kLengthBuckets> by_length;

    /// Aligned human-readable table.
    std::string table() const;
    /// key=value lines, e.g. "target_f1=63.48".
    std::string porcelain() const;
    /// bucket,precision,recall,f1,matched,predicted,gold rows with a header.
    std::string length_csv() const;
};

MetricsReport evaluate_all(const SpanCorpus& preds, const SpanCorpus& golds);

}  // namespace tsa

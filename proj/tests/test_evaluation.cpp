#include <doctest.h>

#include <map>
#include <sstream>

#include "fixtures.hpp"
#include "tsa/evaluation.hpp"

using namespace tsa;

namespace {

constexpr auto P = Polarity::Positive, N = Polarity::Negative, O = Polarity::Neutral;

void check_prf(const PRF& r, std::size_t matched, std::size_t predicted, std::size_t gold) {
    CHECK(r.matched == matched);
    CHECK(r.predicted == predicted);
    CHECK(r.gold == gold);
    const double p = predicted ? 100.0 * matched / predicted : 0.0;
    const double rc = gold ? 100.0 * matched / gold : 0.0;
    CHECK(r.precision == doctest::Approx(p));
    CHECK(r.recall == doctest::Approx(rc));
    CHECK(r.f1 == doctest::Approx(p + rc > 0 ? 2 * p * rc / (p + rc) : 0.0));
}

SpanCorpus random_corpus(std::mt19937_64& rng, int sentences) {
    SpanCorpus c;
    for (int i = 0; i < sentences; ++i)
        c.push_back(fixtures::random_spans(std::uniform_int_distribution<int>(1, 10)(rng), rng, true, 5));
    return c;
}

}  // namespace

TEST_CASE("PRF from counts") {
    const auto r = PRF::from_counts(1, 2, 4);
    CHECK(r.precision == 50.0);
    CHECK(r.recall == 25.0);
    CHECK(r.f1 == doctest::Approx(100.0 / 3.0));
    CHECK(PRF::from_counts(0, 0, 0).f1 == 0.0);
    CHECK(PRF::from_counts(0, 3, 0).precision == 0.0);
}

TEST_CASE("exact match examples") {
    CHECK(exact_prf({{{3, 4, P}}}, {{{3, 4, P}}}, MatchMode::Targeted).f1 == 100.0);
    CHECK(exact_prf({{{3, 3, P}}}, {{{3, 4, P}}}, MatchMode::Target).f1 == 0.0);
    const SpanCorpus gold = {{{1, 1, P}, {3, 4, P}}};
    const SpanCorpus pred = {{{1, 1, O}, {3, 4, P}}};
    CHECK(exact_prf(pred, gold, MatchMode::Target).f1 == 100.0);
    check_prf(exact_prf(pred, gold, MatchMode::Targeted), 1, 2, 2);
}

TEST_CASE("misaligned corpora are argument errors") {
    const SpanCorpus one = {{}}, two = {{}, {}};
    CHECK_THROWS_AS(exact_prf(one, two, MatchMode::Target), ArgumentError);
    CHECK_THROWS_AS(partial_prf(one, two, MatchMode::Target), ArgumentError);
    CHECK_THROWS_AS(subjectivity_prf(one, two, SubjectivityMode::NonNeutral), ArgumentError);
    CHECK_THROWS_AS(length_breakdown(one, two), ArgumentError);
    CHECK_THROWS_AS(bootstrap_significance(one, one, two, 100, 1), ArgumentError);
}

TEST_CASE("partial match examples") {
    CHECK(partial_prf({{{4, 5, P}}}, {{{3, 4, P}}}, MatchMode::Target).f1 == 100.0);
    CHECK(exact_prf({{{4, 5, P}}}, {{{3, 4, P}}}, MatchMode::Target).f1 == 0.0);
    CHECK(partial_prf({{{1, 2, P}}}, {{{3, 4, P}}}, MatchMode::Target).f1 == 0.0);
    CHECK(partial_prf({{{4, 5, N}}}, {{{3, 4, P}}}, MatchMode::Targeted).f1 == 0.0);
}

TEST_CASE("partial matching is one-to-one") {
    // One long prediction covering two golds matches only one of them.
    check_prf(partial_prf({{{1, 5, P}}}, {{{1, 1, P}, {4, 4, P}}}, MatchMode::Target), 1, 1, 2);
}

TEST_CASE("subjectivity examples") {
    CHECK(subjectivity_prf({{{1, 2, N}}}, {{{1, 2, P}}}, SubjectivityMode::Subjectivity).f1 == 100.0);
    CHECK(subjectivity_prf({{{1, 2, N}}}, {{{1, 2, P}}}, SubjectivityMode::NonNeutral).f1 == 0.0);
    check_prf(subjectivity_prf({{{1, 1, O}}}, {{{1, 1, O}}}, SubjectivityMode::Subjectivity), 1, 1, 1);
    check_prf(subjectivity_prf({{{1, 1, O}}}, {{{1, 1, O}}}, SubjectivityMode::NonNeutral), 0, 0, 0);
    CHECK(subjectivity_prf({{{1, 1, O}}}, {{{1, 1, P}}}, SubjectivityMode::Subjectivity).f1 == 0.0);
}

TEST_CASE("hand-counted ten-sentence fixture") {
    const auto f = fixtures::metric_fixture();
    check_prf(exact_prf(f.preds, f.golds, MatchMode::Target), 8, 12, 12);
    check_prf(exact_prf(f.preds, f.golds, MatchMode::Targeted), 5, 12, 12);
    check_prf(partial_prf(f.preds, f.golds, MatchMode::Target), 10, 12, 12);
    check_prf(partial_prf(f.preds, f.golds, MatchMode::Targeted), 7, 12, 12);
    check_prf(subjectivity_prf(f.preds, f.golds, SubjectivityMode::Subjectivity), 7, 12, 12);
    const auto nn = subjectivity_prf(f.preds, f.golds, SubjectivityMode::NonNeutral);
    check_prf(nn, 3, 8, 9);
    CHECK(nn.f1 == doctest::Approx(600.0 / 17.0));

    const auto by_len = length_breakdown(f.preds, f.golds);
    check_prf(by_len[0], 4, 7, 5);
    CHECK(by_len[0].f1 == doctest::Approx(200.0 / 3.0));
    check_prf(by_len[1], 1, 4, 6);
    CHECK(by_len[1].f1 == doctest::Approx(20.0));
    check_prf(by_len[2], 0, 0, 0);
    check_prf(by_len[3], 0, 1, 1);
}

TEST_CASE("length buckets") {
    const SpanCorpus all_one = {{{1, 1, P}, {3, 3, N}}, {{2, 2, O}}};
    const SpanCorpus pred = {{{1, 1, P}, {3, 3, P}}, {{2, 2, O}}};
    const auto b = length_breakdown(pred, all_one);
    CHECK(b[0].f1 == exact_prf(pred, all_one, MatchMode::Targeted).f1);
    for (int i = 1; i < kLengthBuckets; ++i) CHECK(b[i].gold == 0);

    const SpanCorpus mixed = {{{1, 1, P}, {3, 4, N}, {6, 9, O}}};
    const auto m = length_breakdown(SpanCorpus{{}}, mixed);
    CHECK(m[0].gold == 1);
    CHECK(m[1].gold == 1);
    CHECK(m[2].gold == 0);
    CHECK(m[3].gold == 1);
    CHECK(length_bucket_name(3) == ">=4");
}

TEST_CASE("property: metric orderings and bounds over random corpora") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = std::uniform_int_distribution<int>(1, 8)(rng);
        const auto golds = random_corpus(rng, n);
        const auto preds = random_corpus(rng, n);
        const auto target = exact_prf(preds, golds, MatchMode::Target);
        const auto targeted = exact_prf(preds, golds, MatchMode::Targeted);
        const auto pt = partial_prf(preds, golds, MatchMode::Target);
        const auto pts = partial_prf(preds, golds, MatchMode::Targeted);
        REQUIRE(targeted.f1 <= target.f1 + 1e-12);
        REQUIRE(pt.f1 + 1e-12 >= target.f1);
        REQUIRE(pts.f1 + 1e-12 >= targeted.f1);
        for (const auto& r : {target, targeted, pt, pts}) {
            REQUIRE(r.matched <= std::min(r.predicted, r.gold));
            REQUIRE((r.f1 >= 0.0 && r.f1 <= 100.0));
            if (r.matched == 0) REQUIRE(r.f1 == 0.0);
        }
        const auto buckets = length_breakdown(preds, golds);
        std::size_t gold_sum = 0, pred_sum = 0;
        for (const auto& b : buckets) {
            gold_sum += b.gold;
            pred_sum += b.predicted;
        }
        REQUIRE(gold_sum == targeted.gold);
        REQUIRE(pred_sum == targeted.predicted);
    }
}

TEST_CASE("bootstrap significance") {
    std::mt19937_64 rng(23);
    const auto golds = random_corpus(rng, 30);
    const auto preds = random_corpus(rng, 30);
    CHECK(bootstrap_significance(preds, preds, golds, 500, 1) == 1.0);

    SpanCorpus wrong;
    for (const auto& g : golds) {
        std::vector<SpanLabel> w;
        for (auto s : g) {
            s.polarity = s.polarity == P ? N : P;
            w.push_back(s);
        }
        wrong.push_back(w);
    }
    bool any_gold = false;
    for (const auto& g : golds) any_gold |= !g.empty();
    REQUIRE(any_gold);
    // Resamples can draw only span-free sentences, where both F1 are zero and
    // the tie goes to B; with 30 sentences that has negligible probability.
    CHECK(bootstrap_significance(golds, wrong, golds, 1000, 2) == 0.0);

    CHECK(bootstrap_significance(preds, golds, golds, 300, 9) ==
          bootstrap_significance(preds, golds, golds, 300, 9));
    CHECK_THROWS_AS(bootstrap_significance(preds, preds, golds, 99, 1), ArgumentError);
}

TEST_CASE("report formats") {
    const auto f = fixtures::metric_fixture();
    const auto r = evaluate_all(f.preds, f.golds);
    std::istringstream in(r.porcelain());
    std::map<std::string, std::string> kv;
    for (std::string line; std::getline(in, line);) {
        const auto eq = line.find('=');
        REQUIRE(eq != std::string::npos);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    CHECK(kv.at("target_f1") == "66.67");
    CHECK(kv.at("targeted_f1") == "41.67");
    CHECK(kv.at("partial_target_f1") == "83.33");
    CHECK(kv.at("nonneutral_f1") == "35.29");
    CHECK(kv.at("len1_gold") == "5");

    const auto csv = r.length_csv();
    CHECK(csv.rfind("bucket,precision,recall,f1,matched,predicted,gold\n", 0) == 0);
    CHECK(csv.find("2,25.00,16.67,20.00,1,4,6\n") != std::string::npos);
    CHECK(r.table().find("Targeted sentiment (exact)") != std::string::npos);
}

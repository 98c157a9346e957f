#include <doctest.h>

#include <cmath>

#include "bwsq/error.hpp"
#include "bwsq/random.hpp"
#include "bwsq/scoring.hpp"
#include "test_support.hpp"

using namespace bwsq;

namespace {

Design two_tuples() {
    Design d;
    d.params.set_size = 4;
    d.params.repetitions = 1;
    d.tuples = {{"T1", {"a", "b", "c", "d"}, 0}, {"T2", {"c", "a", "d", "b"}, 1}};
    return d;
}

Judgment pick(const std::string& tuple, int best, int worst, const std::string& who = "m") {
    Judgment j;
    j.tuple_id = tuple;
    j.annotator = AnnotatorId::llm(who);
    j.best_index = best;
    j.worst_index = worst;
    j.valid = true;
    return j;
}

}  // namespace

TEST_CASE("counts follow the judgments") {
    const auto d = two_tuples();
    // T1: best a, worst d. T2: best a (pos 2), worst b (pos 4).
    const auto r = score({pick("T1", 1, 4), pick("T2", 2, 4)}, d);
    REQUIRE(r.scored.size() == 4);
    std::map<std::string, ScoreRecord> by_id;
    for (const auto& s : r.scored) by_id[s.record_id] = s;
    CHECK(by_id["a"].n_best == 2);
    CHECK(by_id["a"].raw_score == 1.0);
    CHECK(by_id["a"].norm_score == 1.0);
    CHECK(by_id["b"].n_worst == 1);
    CHECK(by_id["b"].raw_score == -0.5);
    CHECK(by_id["c"].raw_score == 0.0);
    CHECK(by_id["c"].norm_score == 0.5);
    CHECK(by_id["d"].raw_score == -0.5);
    CHECK(rank(r.scored) == std::vector<std::string>{"a", "c", "b", "d"});
}

TEST_CASE("invalid rows reduce n_overall and unjudged records are reported") {
    const auto d = two_tuples();
    Judgment bad = pick("T2", 0, 0);
    bad.valid = false;
    const auto r = score({pick("T1", 1, 4), bad}, d);
    for (const auto& s : r.scored) CHECK(s.n_overall == 1);
    CHECK(r.unscored.empty());

    Design wider = d;
    wider.tuples.push_back({"T3", {"e", "f", "g", "h"}, 1});
    CHECK(score({pick("T1", 1, 4)}, wider).unscored.size() == 4);
}

TEST_CASE("integrity errors") {
    const auto d = two_tuples();
    CHECK_THROWS_AS(score({pick("T9", 1, 2)}, d), IntegrityError);
    CHECK_THROWS_AS(score({pick("T1", 1, 2), pick("T1", 2, 1)}, d), IntegrityError);
    CHECK_THROWS_AS(score({pick("T1", 1, 2, "x"), pick("T2", 1, 2, "y")}, d), IntegrityError);
    ScoreOptions pooled;
    pooled.pool = true;
    const auto r = score({pick("T1", 1, 2, "x"), pick("T1", 1, 2, "y")}, d, pooled);
    CHECK(r.scored.front().n_overall == 2);
}

TEST_CASE("score_from_counts domain") {
    CHECK_THROWS_AS(score_from_counts("x", 0, 0, 0), InvalidArgument);
    CHECK_THROWS_AS(score_from_counts("x", 5, 4, 8), InvalidArgument);
    CHECK_THROWS_AS(score_from_counts("x", -1, 0, 8), InvalidArgument);
    const auto s = score_from_counts("x", 3, 1, 8);
    CHECK(s.raw_score == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(s.norm_score == doctest::Approx(0.625).epsilon(1e-15));
}

TEST_CASE("random judgments conserve best-minus-worst and stay in range") {
    Design d;
    d.params.set_size = 4;
    Rng rng(3);
    for (int t = 0; t < 300; ++t) {
        ComparisonTuple tup{"T" + std::to_string(t), {}, 0};
        for (int m = 0; m < 4; ++m) tup.member_ids.push_back("R" + std::to_string(rng.below(60)));
        std::sort(tup.member_ids.begin(), tup.member_ids.end());
        tup.member_ids.erase(std::unique(tup.member_ids.begin(), tup.member_ids.end()), tup.member_ids.end());
        if (tup.member_ids.size() == 4) d.tuples.push_back(tup);
    }
    std::vector<Judgment> js;
    for (const auto& t : d.tuples) {
        const int b = static_cast<int>(rng.below(4)) + 1;
        int w = static_cast<int>(rng.below(3)) + 1;
        if (w >= b) ++w;
        js.push_back(pick(t.tuple_id, b, w));
    }
    const auto r = score(js, d);
    long net = 0;
    for (const auto& s : r.scored) {
        net += s.n_best - s.n_worst;
        CHECK(s.raw_score >= -1.0);
        CHECK(s.raw_score <= 1.0);
        CHECK(s.norm_score == doctest::Approx((s.raw_score + 1) / 2));
    }
    CHECK(net == 0);
}

TEST_CASE("score csv round-trip and absent imputation") {
    const auto r = score({pick("T1", 1, 4), pick("T2", 2, 4)}, two_tuples());
    testing::TempDir dir;
    write_scores_csv(r.scored, dir.file("s.csv"));
    CHECK(read_scores_csv(dir.file("s.csv")) == r.scored);

    std::vector<SurveyRecord> rs;
    for (std::string id : {"a", "b", "c", "d", "z"}) rs.push_back({id, "s", "o", "t" + id, 1, 3, {}, {}});
    rs.back().binary_label = 0;
    rs.back().multi_label = 0;
    const auto imputed = impute_absent(Corpus(rs), r);
    REQUIRE(imputed.size() == 1);
    CHECK(imputed[0].record_id == "z");
    CHECK(imputed[0].norm_score == 0.0);
}

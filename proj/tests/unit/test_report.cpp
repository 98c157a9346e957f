#include <doctest.h>

#include <cmath>

#include "bwsq/error.hpp"
#include "bwsq/report.hpp"

using namespace bwsq;
using doctest::Approx;

namespace {

ScoreRecord scored(const std::string& id, double norm) {
    ScoreRecord s;
    s.record_id = id;
    s.n_overall = 8;
    s.norm_score = norm;
    s.raw_score = 2 * norm - 1;
    return s;
}

}  // namespace

TEST_CASE("equal-width binning sends edges to the upper bin") {
    const auto b = ClassBinning::equal_width();
    CHECK(b.classify(0.0) == 1);
    CHECK(b.classify(0.19) == 1);
    CHECK(b.classify(0.2) == 2);
    CHECK(b.classify(0.6) == 4);
    CHECK(b.classify(1.0) == 5);
    CHECK_THROWS_AS(b.classify(1.1), InvalidArgument);

    ClassBinning bad = b;
    bad.edges = {0.4, 0.2, 0.6, 0.8};
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("quantile binning balances the classes") {
    std::vector<double> scores;
    for (int i = 0; i < 100; ++i) scores.push_back(i / 100.0);
    const auto b = ClassBinning::quantile(scores);
    std::map<int, int> counts;
    for (double s : scores) counts[b.classify(s)]++;
    for (int c = 1; c <= 5; ++c) CHECK(counts[c] == 20);
}

TEST_CASE("flags override scores") {
    const std::vector<ScoreRecord> s{scored("a", 0.9), scored("b", 0.1)};
    const auto rows = bin_scores(s, ClassBinning::equal_width(), {{"b", -1}});
    CHECK(rows[0].frequency_class == 5);
    CHECK(rows[1].frequency_class == -1);
    CHECK(rows[1].from_flag);
}

TEST_CASE("histogram includes 1 in the last bin") {
    const auto h = histogram({0.0, 0.05, 0.5, 0.99, 1.0}, 10);
    REQUIRE(h.size() == 10);
    CHECK(h[0].count == 2);
    CHECK(h[5].count == 1);
    CHECK(h[9].count == 2);
    CHECK(h[9].right == 1.0);
}

TEST_CASE("species distribution summary") {
    std::vector<SurveyRecord> rs{{"a", "wolf", "F1", "x", {}, {}, {}, {}},
                                 {"b", "wolf", "F2", "y", {}, {}, {}, {}},
                                 {"c", "wolf", "F2", "z", {}, {}, {}, {}},
                                 {"d", "lynx", "F1", "w", {}, {}, {}, {}}};
    const Corpus c(rs);
    const std::vector<ScoreRecord> s{scored("a", 0.2), scored("b", 0.4), scored("c", 0.9), scored("d", 0.5)};
    const auto d = species_distribution(c, s, "wolf", 5);
    CHECK(d.n == 3);
    CHECK(d.mean == Approx(0.5));
    CHECK(d.median == Approx(0.4));
    CHECK(d.min == 0.2);
    CHECK(d.max == 0.9);
    CHECK(d.sd == Approx(std::sqrt(((0.3 * 0.3) + (0.1 * 0.1) + (0.4 * 0.4)) / 3)));
    CHECK(d.by_office.at("F2").size() == 2);
    CHECK_THROWS_AS(species_distribution(c, s, "bear"), InvalidArgument);
}

TEST_CASE("class table diagnoses planted overlap between adjacent classes") {
    const std::map<std::string, int> labels{{"a", 2}, {"b", 2}, {"c", 3}, {"d", 4}};
    const std::vector<ScoreRecord> s{scored("a", 0.5), scored("b", 0.7), scored("c", 0.4), scored("d", 0.9)};
    const auto t = class_vs_score_table(labels, s);
    REQUIRE(t.rows.size() == 3);
    CHECK(t.rows[0].mean == Approx(0.6));
    CHECK_FALSE(t.monotone());
    REQUIRE(t.violations.size() == 1);
    CHECK(t.violations[0] == std::pair<int, int>{2, 3});
    CHECK_THROWS_AS(class_vs_score_table({{"zz", 1}}, s), InvalidArgument);
}

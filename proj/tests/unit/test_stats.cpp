#include <doctest.h>

#include <cmath>

#include "bwsq/error.hpp"
#include "bwsq/random.hpp"
#include "bwsq/stats.hpp"

using namespace bwsq;
using doctest::Approx;

namespace {

// Kappa from an explicit confusion matrix, kept independent of the
// marginal-map implementation under test.
double kappa_from_confusion(const std::vector<std::vector<double>>& m) {
    const std::size_t k = m.size();
    double n = 0, diag = 0;
    std::vector<double> rows(k, 0), cols(k, 0);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            n += m[i][j];
            rows[i] += m[i][j];
            cols[j] += m[i][j];
        }
        diag += m[i][i];
    }
    double pe = 0;
    for (std::size_t i = 0; i < k; ++i) pe += rows[i] * cols[i] / (n * n);
    return (diag / n - pe) / (1 - pe);
}

}  // namespace

TEST_CASE("kappa fixtures") {
    CHECK(stats::cohen_kappa(std::vector<int>{1, 2, 3, 1}, std::vector<int>{1, 2, 3, 1}) == 1.0);
    CHECK(std::abs(stats::cohen_kappa(std::vector<int>{1, 1, 2, 2}, std::vector<int>{1, 2, 1, 2})) < 1e-12);
    // Complete disagreement with balanced marginals: p_o = 0, p_e = 0.5.
    CHECK(stats::cohen_kappa(std::vector<int>{1, 2}, std::vector<int>{2, 1}) == Approx(-1.0).epsilon(1e-12));
    CHECK(stats::cohen_kappa(std::vector<int>{7, 7, 7}, std::vector<int>{7, 7, 7}) == 1.0);
    CHECK_THROWS_AS(stats::cohen_kappa(std::vector<int>{1}, std::vector<int>{1, 2}), InvalidArgument);
    CHECK_THROWS_AS(stats::cohen_kappa(std::vector<int>{}, std::vector<int>{}), InvalidArgument);
}

TEST_CASE("kappa matches a confusion-matrix oracle") {
    // 3-label confusion: rows annotator a, columns annotator b.
    const std::vector<std::vector<double>> m{{20, 5, 1}, {3, 15, 4}, {2, 2, 8}};
    std::vector<int> a, b;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            for (int c = 0; c < static_cast<int>(m[i][j]); ++c) {
                a.push_back(i);
                b.push_back(j);
            }
        }
    }
    CHECK(std::abs(stats::cohen_kappa(a, b) - kappa_from_confusion(m)) < 1e-12);
}

TEST_CASE("bws agreement reports B, W and the joint label") {
    auto j = [](const std::string& t, int best, int worst, const std::string& who) {
        Judgment x;
        x.tuple_id = t;
        x.annotator = AnnotatorId::llm(who);
        x.best_index = best;
        x.worst_index = worst;
        x.valid = true;
        return x;
    };
    const std::vector<Judgment> a{j("T1", 1, 2, "a"), j("T2", 2, 3, "a"), j("T3", 3, 4, "a"), j("T4", 4, 1, "a")};
    std::vector<Judgment> b{j("T1", 1, 2, "b"), j("T2", 2, 3, "b"), j("T3", 3, 1, "b"), j("T4", 4, 1, "b"),
                            j("T9", 1, 2, "b")};
    const auto r = stats::bws_agreement(a, b);
    CHECK(r.n_items == 4);
    CHECK(r.kappa_best == 1.0);
    // worst: a = {2,3,4,1}, b = {2,3,1,1}; joint labels agree where both parts do
    CHECK(r.kappa_worst == Approx(stats::cohen_kappa(std::vector<int>{2, 3, 4, 1}, std::vector<int>{2, 3, 1, 1})));
    CHECK(r.kappa_both == Approx(stats::cohen_kappa(std::vector<int>{0, 1, 2, 3}, std::vector<int>{0, 1, 4, 3})));
    CHECK(r.annotator_b.str() == "llm:b");
    b[0].valid = b[1].valid = b[2].valid = b[3].valid = false;
    CHECK_THROWS_AS(stats::bws_agreement(a, b), InvalidArgument);
}

TEST_CASE("f1 fixture") {
    const std::vector<int> t{0, 0, 1, 1, 2, 2}, p{0, 1, 1, 1, 2, 0}, cls{0, 1, 2};
    const auto f = stats::f1_scores(t, p, cls);
    CHECK(f.per_class.at(0) == Approx(0.5).epsilon(1e-12));
    CHECK(f.per_class.at(1) == Approx(0.8).epsilon(1e-12));
    CHECK(f.per_class.at(2) == Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(std::abs(f.macro - (0.5 + 0.8 + 2.0 / 3.0) / 3.0) < 1e-12);
    CHECK(std::abs(f.micro - 4.0 / 6.0) < 1e-12);
    CHECK(stats::accuracy(t, p) == Approx(4.0 / 6.0));
}

TEST_CASE("f1 counts an absent class as zero and rejects unknown labels") {
    const std::vector<int> t{1, 1}, p{1, 1}, cls{0, 1};
    const auto f = stats::f1_scores(t, p, cls);
    CHECK(f.per_class.at(0) == 0.0);
    CHECK(f.macro == Approx(0.5));
    const std::vector<int> bad{1, 9};
    CHECK_THROWS_AS(stats::f1_scores(t, bad, cls), InvalidArgument);
}

TEST_CASE("micro f1 equals accuracy on single-label data") {
    Rng rng(4);
    const std::vector<int> cls{-1, 0, 1, 2, 3, 4, 5};
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<int> t(40), p(40);
        for (std::size_t i = 0; i < t.size(); ++i) {
            t[i] = static_cast<int>(rng.below(7)) - 1;
            p[i] = static_cast<int>(rng.below(7)) - 1;
        }
        CHECK(std::abs(stats::f1_scores(t, p, cls).micro - stats::accuracy(t, p)) < 1e-12);
    }
}

TEST_CASE("regression metrics fixture") {
    const std::vector<double> t{1, 2, 3, 4}, p{1.5, 2, 2, 5};
    const auto m = stats::regression_metrics(t, p);
    CHECK(std::abs(m.mae - 0.625) < 1e-12);
    CHECK(std::abs(m.r2 - 0.55) < 1e-12);
    REQUIRE(m.spearman.has_value());

    const auto perfect = stats::regression_metrics(t, t);
    CHECK(perfect.mae == 0.0);
    CHECK(perfect.r2 == 1.0);

    const std::vector<double> flat{2, 2, 2, 2};
    CHECK_FALSE(stats::regression_metrics(t, flat).spearman.has_value());
    CHECK_THROWS_AS(stats::regression_metrics(flat, t), InvalidArgument);
}

TEST_CASE("spearman uses average ranks for ties") {
    Eigen::VectorXd v(5);
    v << 3, 1, 3, 2, 5;
    Eigen::VectorXd r = stats::average_ranks(v);
    Eigen::VectorXd expect(5);
    expect << 3.5, 1, 3.5, 2, 5;
    CHECK((r - expect).norm() == 0.0);

    Eigen::VectorXd a(4), b(4);
    a << 1, 2, 3, 4;
    b << 10, 20, 30, 1000;
    CHECK(*stats::spearman(a, b) == Approx(1.0));
    b << 4, 3, 2, 1;
    CHECK(*stats::spearman(a, b) == Approx(-1.0));
}

TEST_CASE("exact permutation test matches brute force") {
    const std::vector<double> a{0.61, 0.55, 0.70, 0.48, 0.52, 0.66};
    const std::vector<double> b{0.64, 0.58, 0.69, 0.55, 0.57, 0.70};
    const auto r = stats::paired_permutation_test(a, b);
    CHECK(r.exact);
    CHECK(r.permutations == 64);

    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i) d.push_back(b[i] - a[i]);
    double obs = 0;
    for (double x : d) obs += x;
    int extreme = 0;
    for (int mask = 0; mask < 64; ++mask) {
        double s = 0;
        for (int i = 0; i < 6; ++i) s += ((mask >> i) & 1 ? -1 : 1) * d[static_cast<std::size_t>(i)];
        if (std::abs(s) >= std::abs(obs) - 1e-12) ++extreme;
    }
    CHECK(r.p_value == Approx(extreme / 64.0));
    CHECK(r.observed == Approx(obs / 6));
}

TEST_CASE("sampled permutation test is seeded and never returns zero") {
    std::vector<double> a(30), b(30);
    for (int i = 0; i < 30; ++i) {
        a[static_cast<std::size_t>(i)] = i;
        b[static_cast<std::size_t>(i)] = i + 1.0;
    }
    const auto r1 = stats::paired_permutation_test(a, b, 9, 2000);
    const auto r2 = stats::paired_permutation_test(a, b, 9, 2000);
    CHECK_FALSE(r1.exact);
    CHECK(r1.p_value == r2.p_value);
    CHECK(r1.p_value > 0.0);
    CHECK(r1.p_value < 0.01);
}

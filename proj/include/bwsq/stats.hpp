#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bwsq/error.hpp"
#include "bwsq/judgment.hpp"

namespace bwsq::stats {

// Chance-corrected agreement (p_o - p_e) / (1 - p_e), chance from each
// annotator's own marginals. When p_e = 1 both annotators used one label
// throughout: returns 1 if they agree everywhere, otherwise throws.
template <typename Label>
double cohen_kappa(std::span<const Label> a, std::span<const Label> b) {
    if (a.size() != b.size()) throw InvalidArgument("cohen_kappa: length mismatch");
    if (a.empty()) throw InvalidArgument("cohen_kappa: empty input");

    std::map<Label, std::pair<double, double>> marginals;
    double agree = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        marginals[a[i]].first += 1.0;
        marginals[b[i]].second += 1.0;
        if (a[i] == b[i]) agree += 1.0;
    }
    const double n = static_cast<double>(a.size());
    const double p_o = agree / n;
    double p_e = 0.0;
    for (const auto& [label, counts] : marginals) p_e += (counts.first / n) * (counts.second / n);

    if (p_e >= 1.0) {
        if (p_o >= 1.0) return 1.0;
        throw InvalidArgument("cohen_kappa: undefined (expected agreement is 1)");
    }
    return (p_o - p_e) / (1.0 - p_e);
}

template <typename Label>
double cohen_kappa(const std::vector<Label>& a, const std::vector<Label>& b) {
    return cohen_kappa(std::span<const Label>(a), std::span<const Label>(b));
}

struct AgreementReport {
    AnnotatorId annotator_a;
    AnnotatorId annotator_b;
    std::size_t n_items = 0;
    double kappa_best = 0.0;
    double kappa_worst = 0.0;
    // Joint (best, worst) pair as one categorical label.
    double kappa_both = 0.0;
};

// Agreement over tuples judged validly by both annotators. Annotator ids
// are taken from the first row of each list. Throws InvalidArgument when
// the intersection is empty.
AgreementReport bws_agreement(const std::vector<Judgment>& a, const std::vector<Judgment>& b);

// Table with columns annotator_a, annotator_b, n_items, B, W, B+W.
std::string agreement_to_csv(const std::vector<AgreementReport>& reports);

struct F1Report {
    double micro = 0.0;
    double macro = 0.0;
    std::map<int, double> per_class;
};

// Per-class F1 over the given class list; 0/0 counts as 0. Macro is the
// unweighted mean over `classes`, micro comes from pooled counts. Labels
// outside `classes` are rejected.
F1Report f1_scores(std::span<const int> y_true, std::span<const int> y_pred, std::span<const int> classes);

double accuracy(std::span<const int> y_true, std::span<const int> y_pred);

// Average ranks (1-based), ties share the mean of their positions.
template <typename Derived>
Eigen::VectorXd average_ranks(const Eigen::MatrixBase<Derived>& v) {
    const auto n = v.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return v(x) < v(y); });
    Eigen::VectorXd ranks(n);
    Eigen::Index i = 0;
    while (i < n) {
        Eigen::Index j = i;
        while (j + 1 < n && v(order[static_cast<std::size_t>(j + 1)]) == v(order[static_cast<std::size_t>(i)])) ++j;
        const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (Eigen::Index t = i; t <= j; ++t) ranks(order[static_cast<std::size_t>(t)]) = mean_rank;
        i = j + 1;
    }
    return ranks;
}

// Pearson correlation; nullopt when either side has zero variance.
template <typename DerivedA, typename DerivedB>
std::optional<double> pearson(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
    const Eigen::VectorXd x = a.template cast<double>().array() - a.template cast<double>().mean();
    const Eigen::VectorXd y = b.template cast<double>().array() - b.template cast<double>().mean();
    const double sxx = x.squaredNorm();
    const double syy = y.squaredNorm();
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return x.dot(y) / std::sqrt(sxx * syy);
}

template <typename DerivedA, typename DerivedB>
std::optional<double> spearman(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
    if (a.size() != b.size()) throw InvalidArgument("spearman: length mismatch");
    return pearson(average_ranks(a), average_ranks(b));
}

struct RegressionMetrics {
    double mae = 0.0;
    double r2 = 0.0;
    // Undefined (nullopt) when the predictions are constant.
    std::optional<double> spearman;
};

// mae = mean |y_true - y_pred|, r2 = 1 - SS_res / SS_tot. Needs at least
// two points and a non-constant y_true.
template <typename DerivedA, typename DerivedB>
RegressionMetrics regression_metrics(const Eigen::MatrixBase<DerivedA>& y_true,
                                     const Eigen::MatrixBase<DerivedB>& y_pred) {
    if (y_true.size() != y_pred.size()) throw InvalidArgument("regression_metrics: length mismatch");
    if (y_true.size() < 2) throw InvalidArgument("regression_metrics: need at least two points");
    const Eigen::VectorXd t = y_true.template cast<double>();
    const Eigen::VectorXd p = y_pred.template cast<double>();
    const double ss_tot = (t.array() - t.mean()).square().sum();
    if (ss_tot == 0.0) throw InvalidArgument("regression_metrics: constant y_true, r2 undefined");

    RegressionMetrics m;
    m.mae = (t - p).cwiseAbs().mean();
    m.r2 = 1.0 - (t - p).squaredNorm() / ss_tot;
    m.spearman = spearman(t, p);
    return m;
}

inline RegressionMetrics regression_metrics(std::span<const double> y_true, std::span<const double> y_pred) {
    using Map = Eigen::Map<const Eigen::VectorXd>;
    return regression_metrics(Map(y_true.data(), static_cast<Eigen::Index>(y_true.size())),
                              Map(y_pred.data(), static_cast<Eigen::Index>(y_pred.size())));
}

struct PermutationResult {
    double observed = 0.0;  // mean paired difference b - a
    double p_value = 1.0;
    std::size_t permutations = 0;
    bool exact = false;
};

// Two-sided paired sign-flip test on mean(b - a). Enumerates all 2^n sign
// patterns for n <= exact_limit, otherwise draws `samples` random patterns.
PermutationResult paired_permutation_test(std::span<const double> a, std::span<const double> b,
                                          std::uint64_t seed = 0, std::size_t samples = 100000,
                                          std::size_t exact_limit = 20);

}  // namespace bwsq::stats

#include "bwsq/stats.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_map>

#include "bwsq/csv.hpp"
#include "bwsq/random.hpp"

namespace bwsq::stats {

AgreementReport bws_agreement(const std::vector<Judgment>& a, const std::vector<Judgment>& b) {
    std::unordered_map<std::string, const Judgment*> by_tuple;
    for (const auto& j : b) {
        if (j.valid) by_tuple.emplace(j.tuple_id, &j);
    }

    std::vector<int> best_a, best_b, worst_a, worst_b, both_a, both_b;
    for (const auto& ja : a) {
        if (!ja.valid) continue;
        auto it = by_tuple.find(ja.tuple_id);
        if (it == by_tuple.end()) continue;
        const auto& jb = *it->second;
        best_a.push_back(ja.best_index);
        best_b.push_back(jb.best_index);
        worst_a.push_back(ja.worst_index);
        worst_b.push_back(jb.worst_index);
        // Indices are small positive ints, so this encoding is injective.
        both_a.push_back(ja.best_index * 1000 + ja.worst_index);
        both_b.push_back(jb.best_index * 1000 + jb.worst_index);
    }
    if (best_a.empty()) throw InvalidArgument("bws_agreement: no tuple judged validly by both annotators");

    AgreementReport report;
    if (!a.empty()) report.annotator_a = a.front().annotator;
    if (!b.empty()) report.annotator_b = b.front().annotator;
    report.n_items = best_a.size();
    report.kappa_best = cohen_kappa(best_a, best_b);
    report.kappa_worst = cohen_kappa(worst_a, worst_b);
    report.kappa_both = cohen_kappa(both_a, both_b);
    return report;
}

std::string agreement_to_csv(const std::vector<AgreementReport>& reports) {
    std::ostringstream out;
    csv::write_row(out, {"annotator_a", "annotator_b", "n_items", "B", "W", "B+W"});
    for (const auto& r : reports) {
        csv::write_row(out, {r.annotator_a.str(), r.annotator_b.str(), std::to_string(r.n_items),
                             csv::format_number(r.kappa_best), csv::format_number(r.kappa_worst),
                             csv::format_number(r.kappa_both)});
    }
    return out.str();
}

F1Report f1_scores(std::span<const int> y_true, std::span<const int> y_pred, std::span<const int> classes) {
    if (y_true.size() != y_pred.size()) throw InvalidArgument("f1_scores: length mismatch");
    if (classes.empty()) throw InvalidArgument("f1_scores: empty class list");
    const std::set<int> known(classes.begin(), classes.end());
    if (known.size() != classes.size()) throw InvalidArgument("f1_scores: repeated class in class list");

    std::map<int, std::size_t> tp, fp, fn;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (!known.contains(y_true[i]) || !known.contains(y_pred[i])) {
            throw InvalidArgument("f1_scores: label outside class list at position " + std::to_string(i));
        }
        if (y_true[i] == y_pred[i]) {
            ++tp[y_true[i]];
        } else {
            ++fp[y_pred[i]];
            ++fn[y_true[i]];
        }
    }

    F1Report report;
    std::size_t tp_all = 0, fp_all = 0, fn_all = 0;
    double macro_sum = 0.0;
    for (int c : classes) {
        const auto t = tp[c], f_p = fp[c], f_n = fn[c];
        tp_all += t;
        fp_all += f_p;
        fn_all += f_n;
        const auto denom = 2 * t + f_p + f_n;
        const double f1 = denom == 0 ? 0.0 : 2.0 * static_cast<double>(t) / static_cast<double>(denom);
        report.per_class[c] = f1;
        macro_sum += f1;
    }
    report.macro = macro_sum / static_cast<double>(classes.size());
    const auto denom = 2 * tp_all + fp_all + fn_all;
    report.micro = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp_all) / static_cast<double>(denom);
    return report;
}

double accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
    if (y_true.size() != y_pred.size()) throw InvalidArgument("accuracy: length mismatch");
    if (y_true.empty()) throw InvalidArgument("accuracy: empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) hits += y_true[i] == y_pred[i];
    return static_cast<double>(hits) / static_cast<double>(y_true.size());
}

PermutationResult paired_permutation_test(std::span<const double> a, std::span<const double> b,
                                          std::uint64_t seed, std::size_t samples, std::size_t exact_limit) {
    if (a.size() != b.size()) throw InvalidArgument("permutation test: length mismatch");
    if (a.empty()) throw InvalidArgument("permutation test: empty input");

    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = b[i] - a[i];
    const double n = static_cast<double>(diff.size());
    auto mean_with = [&](auto&& sign) {
        double s = 0.0;
        for (std::size_t i = 0; i < diff.size(); ++i) s += sign(i) * diff[i];
        return s / n;
    };

    PermutationResult result;
    result.observed = mean_with([](std::size_t) { return 1.0; });
    // Float noise must not push an equally extreme pattern below the
    // observed statistic.
    const double threshold = std::abs(result.observed) - 1e-12;

    std::size_t extreme = 0;
    if (diff.size() <= exact_limit) {
        const std::uint64_t total = std::uint64_t{1} << diff.size();
        for (std::uint64_t mask = 0; mask < total; ++mask) {
            const double stat = mean_with([&](std::size_t i) { return (mask >> i) & 1U ? -1.0 : 1.0; });
            if (std::abs(stat) >= threshold) ++extreme;
        }
        result.permutations = total;
        result.exact = true;
        result.p_value = static_cast<double>(extreme) / static_cast<double>(total);
        return result;
    }

    Rng rng(seed);
    std::vector<double> signs(diff.size());
    for (std::size_t s = 0; s < samples; ++s) {
        for (auto& sign : signs) sign = (rng.next() >> 63) ? -1.0 : 1.0;
        const double stat = mean_with([&](std::size_t i) { return signs[i]; });
        if (std::abs(stat) >= threshold) ++extreme;
    }
    result.permutations = samples;
    // Add-one estimate keeps a Monte Carlo p-value away from exactly zero.
    result.p_value = static_cast<double>(extreme + 1) / static_cast<double>(samples + 1);
    return result;
}

}  // namespace bwsq::stats

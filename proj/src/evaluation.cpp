#include "bwsq/evaluation.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "bwsq/csv.hpp"
#include "bwsq/error.hpp"
#include "bwsq/features.hpp"
#include "bwsq/log.hpp"
#include "bwsq/random.hpp"
#include "json.hpp"

namespace bwsq {

MetricsBundle MetricsBundle::classification(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                            const std::vector<int>& classes) {
    const auto f1 = stats::f1_scores(y_true, y_pred, classes);
    MetricsBundle m;
    m.n_items = y_true.size();
    m.f1_micro = f1.micro;
    m.f1_macro = f1.macro;
    m.per_class_f1 = f1.per_class;
    m.accuracy = stats::accuracy(y_true, y_pred);
    try {
        m.kappa = stats::cohen_kappa(y_true, y_pred);
    } catch (const InvalidArgument&) {
        // undefined for single-label runs; left empty
    }
    return m;
}

MetricsBundle MetricsBundle::regression(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
    const auto r = stats::regression_metrics(y_true, y_pred);
    MetricsBundle m;
    m.n_items = static_cast<std::size_t>(y_true.size());
    m.mae = r.mae;
    m.r2 = r.r2;
    m.spearman = r.spearman;
    return m;
}

MetricsBundle mean_metrics(const std::vector<MetricsBundle>& runs) {
    MetricsBundle out;
    auto average = [&](std::optional<double> MetricsBundle::*field) -> std::optional<double> {
        double sum = 0.0;
        int count = 0;
        for (const auto& r : runs) {
            if (!(r.*field)) continue;
            sum += *(r.*field);
            ++count;
        }
        if (count == 0) return std::nullopt;
        return sum / count;
    };
    out.f1_micro = average(&MetricsBundle::f1_micro);
    out.f1_macro = average(&MetricsBundle::f1_macro);
    out.accuracy = average(&MetricsBundle::accuracy);
    out.mae = average(&MetricsBundle::mae);
    out.r2 = average(&MetricsBundle::r2);
    out.spearman = average(&MetricsBundle::spearman);
    out.kappa = average(&MetricsBundle::kappa);

    std::map<int, std::pair<double, int>> per_class;
    for (const auto& r : runs) {
        out.n_items += r.n_items;
        for (const auto& [c, f] : r.per_class_f1) {
            per_class[c].first += f;
            per_class[c].second += 1;
        }
    }
    for (const auto& [c, acc] : per_class) out.per_class_f1[c] = acc.first / acc.second;
    return out;
}

namespace {

nlohmann::json bundle_json(const MetricsBundle& m) {
    nlohmann::json j;
    j["n_items"] = m.n_items;
    auto put = [&](const char* key, const std::optional<double>& v) {
        j[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    put("f1_micro", m.f1_micro);
    put("f1_macro", m.f1_macro);
    put("accuracy", m.accuracy);
    put("mae", m.mae);
    put("r2", m.r2);
    put("spearman", m.spearman);
    put("kappa", m.kappa);
    nlohmann::json per_class = nlohmann::json::object();
    for (const auto& [c, f] : m.per_class_f1) per_class[std::to_string(c)] = f;
    j["per_class_f1"] = per_class;
    return j;
}

std::string opt(const std::optional<double>& v) { return v ? csv::format_number(*v) : ""; }

}  // namespace

std::string metrics_to_json(const MetricsBundle& m, int indent) { return bundle_json(m).dump(indent); }

std::string crossval_to_csv(const std::vector<MetricsBundle>& folds, const MetricsBundle& mean) {
    std::ostringstream out;
    csv::write_row(out, {"fold", "n_items", "f1_micro", "f1_macro", "accuracy", "mae", "r2", "spearman", "kappa"});
    auto row = [&](const std::string& name, const MetricsBundle& m) {
        csv::write_row(out, {name, std::to_string(m.n_items), opt(m.f1_micro), opt(m.f1_macro), opt(m.accuracy),
                             opt(m.mae), opt(m.r2), opt(m.spearman), opt(m.kappa)});
    };
    for (std::size_t i = 0; i < folds.size(); ++i) row(std::to_string(i + 1), folds[i]);
    row("mean", mean);
    return out.str();
}

std::vector<int> fold_assignment(std::size_t n, int folds, std::uint64_t seed) {
    if (folds < 2) throw InvalidArgument("crossval needs at least 2 folds");
    if (static_cast<std::size_t>(folds) > n) {
        throw InvalidArgument("crossval: " + std::to_string(folds) + " folds for " + std::to_string(n) + " items");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<int> fold(n);
    for (std::size_t i = 0; i < n; ++i) fold[order[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
    return fold;
}

CrossValResult crossval(std::size_t n, int folds, std::uint64_t seed,
                        const std::function<MetricsBundle(const std::vector<std::size_t>&,
                                                          const std::vector<std::size_t>&)>& run_fold) {
    const auto assignment = fold_assignment(n, folds, seed);
    CrossValResult result;
    for (int f = 0; f < folds; ++f) {
        std::vector<std::size_t> train;
        std::vector<std::size_t> test;
        for (std::size_t i = 0; i < n; ++i) (assignment[i] == f ? test : train).push_back(i);
        result.folds.push_back(run_fold(train, test));
        log::debug("crossval.fold", {{"fold", std::to_string(f + 1)}, {"test", std::to_string(test.size())}});
    }
    result.mean = mean_metrics(result.folds);
    return result;
}

namespace {

std::vector<const SurveyRecord*> labelled_sorted(const Corpus& corpus, Task task) {
    std::vector<const SurveyRecord*> rows;
    for (const auto& r : corpus) {
        if (label_of(r, task)) rows.push_back(&r);
    }
    std::sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) { return a->record_id < b->record_id; });
    return rows;
}

Corpus pick(const std::vector<const SurveyRecord*>& rows, const std::vector<std::size_t>& idx) {
    std::vector<SurveyRecord> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(*rows[i]);
    return Corpus(std::move(out));
}

std::vector<int> labels(const Corpus& c, Task task) {
    std::vector<int> out;
    for (const auto& r : c) out.push_back(*label_of(r, task));
    return out;
}

std::vector<std::string> texts(const Corpus& c) {
    std::vector<std::string> out;
    for (const auto& r : c) out.push_back(r.text);
    return out;
}

}  // namespace

CrossValResult crossval_classifier(const Corpus& corpus, Task task, const LogisticConfig& cfg, int folds,
                                   std::uint64_t seed) {
    const auto rows = labelled_sorted(corpus, task);
    const auto classes = task_classes(task);
    return crossval(rows.size(), folds, seed, [&](const auto& train_idx, const auto& test_idx) {
        const auto train = pick(rows, train_idx);
        const auto test = pick(rows, test_idx);
        const auto clf = train_classifier(train, task, cfg);
        return MetricsBundle::classification(labels(test, task), clf.predict(texts(test)), classes);
    });
}

RegressionData regression_data(const Corpus& corpus, const std::vector<ScoreRecord>& scores) {
    std::vector<const ScoreRecord*> sorted;
    for (const auto& s : scores) sorted.push_back(&s);
    std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) { return a->record_id < b->record_id; });
    RegressionData d;
    d.targets.resize(static_cast<Eigen::Index>(sorted.size()));
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const auto& record = corpus.at(sorted[i]->record_id);
        d.ids.push_back(record.record_id);
        d.texts.push_back(record.text);
        d.targets(static_cast<Eigen::Index>(i)) = sorted[i]->norm_score;
    }
    return d;
}

namespace {

std::vector<Eigen::Index> as_index(const std::vector<std::size_t>& idx) {
    return {idx.begin(), idx.end()};
}

template <typename T>
std::vector<T> gather(const std::vector<T>& v, const std::vector<std::size_t>& idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(v[i]);
    return out;
}

KrrConfig fold_config(const KrrConfig& cfg, std::size_t fold_index) {
    KrrConfig c = cfg;
    c.seed = Rng::mix(cfg.seed + fold_index);
    return c;
}

}  // namespace

CrossValResult crossval_krr_text(const RegressionData& data, const KrrConfig& cfg, int min_doc_freq, int folds,
                                 std::uint64_t seed) {
    std::size_t fold_index = 0;
    return crossval(data.ids.size(), folds, seed, [&](const auto& train_idx, const auto& test_idx) {
        const auto train_texts = gather(data.texts, train_idx);
        const auto vocab = build_vocabulary(train_texts, min_doc_freq);
        const SparseRows X_train = feature_matrix(train_texts, vocab);
        const SparseRows X_test = feature_matrix(gather(data.texts, test_idx), vocab);
        const Eigen::VectorXd y_train = data.targets(as_index(train_idx));
        const Eigen::VectorXd y_test = data.targets(as_index(test_idx));
        const auto model = train_krr(X_train, y_train, fold_config(cfg, fold_index++));
        return MetricsBundle::regression(y_test, model.predict(X_test));
    });
}

CrossValResult crossval_krr_embeddings(const RegressionData& data, const EmbeddingTable& table,
                                       const KrrConfig& cfg, int folds, std::uint64_t seed) {
    const Eigen::MatrixXd X = table.rows(data.ids);
    std::size_t fold_index = 0;
    return crossval(data.ids.size(), folds, seed, [&](const auto& train_idx, const auto& test_idx) {
        const Eigen::MatrixXd X_train = X(as_index(train_idx), Eigen::all);
        const Eigen::MatrixXd X_test = X(as_index(test_idx), Eigen::all);
        const Eigen::VectorXd y_train = data.targets(as_index(train_idx));
        const Eigen::VectorXd y_test = data.targets(as_index(test_idx));
        const auto model = train_krr(X_train, y_train, fold_config(cfg, fold_index++));
        return MetricsBundle::regression(y_test, model.predict(X_test));
    });
}

std::vector<CurvePoint> training_curve(const Corpus& corpus, Task task, std::size_t step, const LogisticConfig& cfg,
                                       std::uint64_t seed) {
    if (step < 1) throw InvalidArgument("training curve step must be at least 1");
    const Corpus train_split = corpus.subset(Split::Train);
    const Corpus test_split = corpus.subset(Split::Test);
    auto train_rows = labelled_sorted(train_split, task);
    const auto test_rows = labelled_sorted(test_split, task);
    std::vector<std::size_t> all_test(test_rows.size());
    std::iota(all_test.begin(), all_test.end(), std::size_t{0});
    const auto test = pick(test_rows, all_test);
    if (step > train_rows.size()) {
        throw InvalidArgument("training curve step " + std::to_string(step) + " exceeds the " +
                              std::to_string(train_rows.size()) + " labelled training records");
    }
    if (test.empty()) throw InvalidArgument("training curve needs labelled test records");

    Rng rng(seed);
    rng.shuffle(std::span<const SurveyRecord*>(train_rows));

    const auto classes = task_classes(task);
    const auto y_test = labels(test, task);
    const auto x_test = texts(test);

    std::vector<std::size_t> sizes;
    for (std::size_t n = step; n <= train_rows.size(); n += step) sizes.push_back(n);
    if (sizes.back() != train_rows.size()) sizes.push_back(train_rows.size());

    std::vector<CurvePoint> curve;
    for (auto n : sizes) {
        std::vector<SurveyRecord> prefix;
        std::map<int, std::size_t> counts;
        for (std::size_t i = 0; i < n; ++i) {
            prefix.push_back(*train_rows[i]);
            ++counts[*label_of(*train_rows[i], task)];
        }
        CurvePoint p;
        p.n_train = n;
        std::vector<int> pred;
        if (counts.size() < 2) {
            p.majority_fallback = true;
            pred.assign(y_test.size(), counts.begin()->first);
        } else {
            pred = train_classifier(Corpus(std::move(prefix)), task, cfg).predict(x_test);
        }
        const auto f1 = stats::f1_scores(y_test, pred, classes);
        p.f1_macro = f1.macro;
        p.f1_micro = f1.micro;
        curve.push_back(p);
        log::info("curve.point", {{"n_train", std::to_string(n)}, {"f1_macro", csv::format_number(f1.macro)}});
    }
    return curve;
}

std::string curve_to_csv(const std::vector<CurvePoint>& curve) {
    std::ostringstream out;
    csv::write_row(out, {"n_train", "f1_macro", "f1_micro", "majority_fallback"});
    for (const auto& p : curve) {
        csv::write_row(out, {std::to_string(p.n_train), csv::format_number(p.f1_macro), csv::format_number(p.f1_micro),
                             p.majority_fallback ? "1" : "0"});
    }
    return out.str();
}

}  // namespace bwsq

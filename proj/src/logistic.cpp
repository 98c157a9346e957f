#include "bwsq/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "bwsq/error.hpp"
#include "bwsq/log.hpp"
#include "bwsq/random.hpp"

namespace bwsq {

std::string_view to_string(Task t) { return t == Task::Binary ? "binary" : "multiclass"; }

std::optional<int> label_of(const SurveyRecord& r, Task task) {
    return task == Task::Binary ? r.binary_label : r.multi_label;
}

std::vector<int> task_classes(Task task) { return task == Task::Binary ? std::vector<int>{0, 1} : all_classes(); }

namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

LogisticObjective::LogisticObjective(const SparseRows& X, Eigen::VectorXd targets, Eigen::VectorXd sample_weights,
                                     double l2)
    : X_(X), y_(std::move(targets)), s_(std::move(sample_weights)), l2_(l2) {
    if (y_.size() != X_.rows() || s_.size() != X_.rows()) throw InvalidArgument("logistic objective: size mismatch");
}

double LogisticObjective::operator()(const Eigen::VectorXd& params, Eigen::VectorXd& grad) const {
    const auto d = X_.cols();
    const auto w = params.head(d);
    const double b = params(d);
    const Eigen::VectorXd z = (X_ * w).array() + b;

    double loss = 0.0;
    Eigen::VectorXd residual(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        loss += s_(i) * (softplus(z(i)) - y_(i) * z(i));
        residual(i) = s_(i) * (sigmoid(z(i)) - y_(i));
    }
    loss += 0.5 * l2_ * w.squaredNorm();

    grad.resize(d + 1);
    grad.head(d) = X_.transpose() * residual + l2_ * w;
    grad(d) = residual.sum();
    return loss;
}

BinaryFit fit_logistic(const SparseRows& X, const Eigen::VectorXd& targets, const LogisticConfig& config,
                       const Eigen::VectorXd* sample_weights) {
    const double positives = targets.sum();
    if (positives <= 0.0 || positives >= static_cast<double>(targets.size())) {
        throw InvalidArgument("logistic regression needs both classes in the training data");
    }
    if (config.l2 < 0.0) throw InvalidArgument("l2 must be non-negative");

    Eigen::VectorXd weights = Eigen::VectorXd::Ones(targets.size());
    if (sample_weights) {
        weights = *sample_weights;
    } else if (config.inverse_frequency_weights) {
        const double n = static_cast<double>(targets.size());
        const double w_pos = n / (2.0 * positives);
        const double w_neg = n / (2.0 * (n - positives));
        for (Eigen::Index i = 0; i < targets.size(); ++i) weights(i) = targets(i) > 0.5 ? w_pos : w_neg;
    }

    LogisticObjective objective(X, targets, weights, config.l2);
    Eigen::VectorXd start = Eigen::VectorXd::Zero(objective.dimension());
    // Starting at the prior log-odds makes the strong-penalty limit exact.
    const double prior = positives / static_cast<double>(targets.size());
    start(X.cols()) = std::log(prior / (1.0 - prior));

    auto result = minimize_lbfgs<double>(objective, std::move(start), config.optimizer);
    BinaryFit fit;
    fit.weights = result.x.head(X.cols());
    fit.bias = result.x(X.cols());
    fit.iterations = result.iterations;
    fit.gradient_norm = result.gradient_norm;
    fit.converged = result.converged;
    if (!fit.converged) {
        log::warn("logistic.not_converged", {{"iterations", std::to_string(fit.iterations)},
                                             {"gradient_norm", std::to_string(fit.gradient_norm)}});
    }
    return fit;
}

Eigen::MatrixXd LinearModel::decision_function(const SparseRows& X) const {
    if (X.cols() != weights.cols()) throw InvalidArgument("feature dimension does not match the model");
    Eigen::MatrixXd scores = X * weights.transpose();
    scores.rowwise() += bias.transpose();
    return scores;
}

std::vector<int> LinearModel::predict(const SparseRows& X) const {
    const Eigen::MatrixXd scores = decision_function(X);
    std::vector<int> out(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        if (task == Task::Binary) {
            out[static_cast<std::size_t>(i)] = scores(i, 0) >= 0.0 ? 1 : 0;
            continue;
        }
        Eigen::Index best = -1;
        for (Eigen::Index c = 0; c < scores.cols(); ++c) {
            if (!trained[static_cast<std::size_t>(c)]) continue;
            if (best < 0 || scores(i, c) > scores(i, best)) best = c;
        }
        out[static_cast<std::size_t>(i)] = classes[static_cast<std::size_t>(best)];
    }
    return out;
}

SparseRows TextClassifier::features(const std::vector<std::string>& texts) const {
    return feature_matrix(texts, vocab, config.lexicon.get());
}

std::vector<int> TextClassifier::predict(const std::vector<std::string>& texts) const {
    return model.predict(features(texts));
}

namespace {

struct Labelled {
    std::vector<std::string> ids;
    std::vector<std::string> texts;
    std::vector<int> labels;
};

Labelled labelled_records(const Corpus& corpus, Task task) {
    std::vector<const SurveyRecord*> rows;
    for (const auto& r : corpus) {
        if (label_of(r, task)) rows.push_back(&r);
    }
    std::sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) { return a->record_id < b->record_id; });
    Labelled out;
    for (const auto* r : rows) {
        out.ids.push_back(r->record_id);
        out.texts.push_back(r->text);
        out.labels.push_back(*label_of(*r, task));
    }
    return out;
}

Labelled take(const Labelled& all, const std::vector<std::size_t>& idx) {
    Labelled out;
    for (auto i : idx) {
        out.ids.push_back(all.ids[i]);
        out.texts.push_back(all.texts[i]);
        out.labels.push_back(all.labels[i]);
    }
    return out;
}

TextClassifier fit_fixed(const Labelled& data, Task task, const std::vector<int>& classes, const LogisticConfig& config,
                         double l2) {
    const std::set<int> present(data.labels.begin(), data.labels.end());
    if (present.size() < 2) throw InvalidArgument("training data has fewer than two classes");
    for (int label : present) {
        if (std::find(classes.begin(), classes.end(), label) == classes.end()) {
            throw InvalidArgument("training label " + std::to_string(label) + " is not in the class list");
        }
    }

    TextClassifier clf;
    clf.config = config;
    clf.config.l2 = l2;
    clf.vocab = build_vocabulary(data.texts, config.min_doc_freq, config.excluded_tokens);
    const SparseRows X = clf.features(data.texts);

    LogisticConfig fit_config = config;
    fit_config.l2 = l2;

    auto& m = clf.model;
    m.task = task;
    m.l2 = l2;
    m.classes = task == Task::Binary ? std::vector<int>{0, 1} : classes;
    const Eigen::Index rows = task == Task::Binary ? 1 : static_cast<Eigen::Index>(classes.size());
    m.weights = Eigen::MatrixXd::Zero(rows, X.cols());
    m.bias = Eigen::VectorXd::Zero(rows);
    m.trained.assign(static_cast<std::size_t>(rows), false);

    for (Eigen::Index row = 0; row < rows; ++row) {
        const int positive = task == Task::Binary ? 1 : classes[static_cast<std::size_t>(row)];
        if (!present.contains(positive)) continue;
        Eigen::VectorXd y(static_cast<Eigen::Index>(data.labels.size()));
        for (std::size_t i = 0; i < data.labels.size(); ++i) {
            y(static_cast<Eigen::Index>(i)) = data.labels[i] == positive ? 1.0 : 0.0;
        }
        const auto fit = fit_logistic(X, y, fit_config);
        m.weights.row(row) = fit.weights.transpose();
        m.bias(row) = fit.bias;
        m.trained[static_cast<std::size_t>(row)] = true;
        m.converged = m.converged && fit.converged;
    }
    return clf;
}

double select_l2_labelled(const Labelled& data, Task task, const std::vector<int>& classes,
                          const LogisticConfig& config) {
    if (config.l2_grid.empty()) return config.l2;
    std::vector<std::size_t> order(data.ids.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(config.seed ^ 0x5eedULL);
    rng.shuffle(std::span<std::size_t>(order));
    const auto n_val = test_count(order.size(), config.validation_fraction);
    const std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> fit_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(fit_idx.begin(), fit_idx.end());

    const auto fit_part = take(data, fit_idx);
    const auto val_part = take(data, val_idx);
    if (val_part.labels.empty()) return config.l2;

    double best_l2 = config.l2;
    double best_f1 = -1.0;
    for (double l2 : config.l2_grid) {
        TextClassifier clf;
        try {
            clf = fit_fixed(fit_part, task, classes, config, l2);
        } catch (const InvalidArgument&) {
            continue;  // inner split lost a class
        }
        const auto pred = clf.predict(val_part.texts);
        const double f1 = stats::f1_scores(val_part.labels, pred, classes).macro;
        if (f1 > best_f1) {
            best_f1 = f1;
            best_l2 = l2;
        }
    }
    return best_l2;
}

TextClassifier train_labelled(const Labelled& data, Task task, const std::vector<int>& classes,
                              const LogisticConfig& config) {
    const double l2 = config.tune ? select_l2_labelled(data, task, classes, config) : config.l2;
    return fit_fixed(data, task, classes, config, l2);
}

}  // namespace

double select_l2(const Corpus& train, Task task, const LogisticConfig& config) {
    return select_l2_labelled(labelled_records(train, task), task, task_classes(task), config);
}

TextClassifier train_binary(const Corpus& train, const LogisticConfig& config) {
    return train_labelled(labelled_records(train, Task::Binary), Task::Binary, {0, 1}, config);
}

TextClassifier train_multiclass(const Corpus& train, const LogisticConfig& config, const std::vector<int>& classes) {
    return train_labelled(labelled_records(train, Task::Multiclass), Task::Multiclass, classes, config);
}

TextClassifier train_classifier(const Corpus& train, Task task, const LogisticConfig& config) {
    return task == Task::Binary ? train_binary(train, config) : train_multiclass(train, config);
}

stats::F1Report evaluate(const TextClassifier& classifier, const Corpus& test, Task task) {
    const auto data = labelled_records(test, task);
    if (data.labels.empty()) throw InvalidArgument("no labelled test records for the " + std::string(to_string(task)) + " task");
    const auto pred = classifier.predict(data.texts);
    return stats::f1_scores(data.labels, pred, classifier.model.classes);
}

std::vector<ClassAudit> audit_features(const TextClassifier& classifier, std::size_t top_n) {
    const auto& m = classifier.model;
    const auto n_features = static_cast<std::size_t>(m.weights.cols());
    if (top_n > n_features) {
        log::warn("audit.truncated", {{"requested", std::to_string(top_n)}, {"available", std::to_string(n_features)}});
        top_n = n_features;
    }
    auto feature_name = [&](Eigen::Index i) -> std::string {
        if (static_cast<std::size_t>(i) < classifier.vocab.size()) return classifier.vocab.token(i);
        return i == static_cast<Eigen::Index>(classifier.vocab.size()) ? "<lexicon:mean>" : "<lexicon:any>";
    };

    std::vector<ClassAudit> out;
    for (Eigen::Index row = 0; row < m.weights.rows(); ++row) {
        if (!m.trained[static_cast<std::size_t>(row)]) continue;
        std::vector<FeatureWeight> all;
        all.reserve(n_features);
        for (Eigen::Index i = 0; i < m.weights.cols(); ++i) all.push_back({feature_name(i), m.weights(row, i)});
        std::stable_sort(all.begin(), all.end(), [](const FeatureWeight& a, const FeatureWeight& b) {
            if (std::abs(a.weight) != std::abs(b.weight)) return std::abs(a.weight) > std::abs(b.weight);
            return a.token < b.token;
        });
        all.resize(top_n);
        ClassAudit audit;
        audit.frequency_class = m.task == Task::Binary ? 1 : m.classes[static_cast<std::size_t>(row)];
        audit.top = std::move(all);
        out.push_back(std::move(audit));
    }
    return out;
}

}  // namespace bwsq

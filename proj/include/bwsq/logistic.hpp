#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bwsq/corpus.hpp"
#include "bwsq/features.hpp"
#include "bwsq/lbfgs.hpp"
#include "bwsq/stats.hpp"

namespace bwsq {

enum class Task { Binary, Multiclass };

std::string_view to_string(Task t);

// Gold label of a record for the task, if annotated.
std::optional<int> label_of(const SurveyRecord& r, Task task);

// Classes scored for a task: {0, 1} or the seven frequency classes.
std::vector<int> task_classes(Task task);

struct LogisticConfig {
    // Penalty (l2 / 2) * ||w||^2 added to the summed log-loss; the bias is
    // not penalized.
    double l2 = 1.0;
    LbfgsOptions optimizer;
    bool inverse_frequency_weights = false;

    // Pick l2 from the grid on an inner validation split of the training
    // data (macro-F1), then refit on all of it.
    bool tune = false;
    std::vector<double> l2_grid{0.01, 0.1, 1.0, 10.0};
    double validation_fraction = 0.2;
    std::uint64_t seed = 0;

    int min_doc_freq = 1;
    std::set<std::string> excluded_tokens;
    std::shared_ptr<const QuantifierLexicon> lexicon;
};

// Summed (optionally weighted) binary log-loss with an L2 penalty over
// parameters laid out as [w; b].
class LogisticObjective {
public:
    LogisticObjective(const SparseRows& X, Eigen::VectorXd targets, Eigen::VectorXd sample_weights, double l2);

    double operator()(const Eigen::VectorXd& params, Eigen::VectorXd& grad) const;

    Eigen::Index dimension() const { return X_.cols() + 1; }

private:
    const SparseRows& X_;
    Eigen::VectorXd y_;
    Eigen::VectorXd s_;
    double l2_;
};

struct BinaryFit {
    Eigen::VectorXd weights;
    double bias = 0.0;
    int iterations = 0;
    double gradient_norm = 0.0;
    bool converged = false;
};

// targets are 0/1. Throws InvalidArgument when only one class is present.
BinaryFit fit_logistic(const SparseRows& X, const Eigen::VectorXd& targets, const LogisticConfig& config,
                       const Eigen::VectorXd* sample_weights = nullptr);

// Binary: one score row, class 1 when the score is >= 0. Multiclass:
// one-vs-rest rows, prediction is the argmax over rows of classes seen in
// training (ties to the earlier class).
struct LinearModel {
    Task task = Task::Binary;
    std::vector<int> classes;
    Eigen::MatrixXd weights;  // score rows x features
    Eigen::VectorXd bias;
    std::vector<bool> trained;
    double l2 = 0.0;
    bool converged = true;

    Eigen::MatrixXd decision_function(const SparseRows& X) const;
    std::vector<int> predict(const SparseRows& X) const;
};

struct TextClassifier {
    Vocabulary vocab;
    LinearModel model;
    LogisticConfig config;

    SparseRows features(const std::vector<std::string>& texts) const;
    std::vector<int> predict(const std::vector<std::string>& texts) const;
};

// Records carrying the task's label are used; training order is by
// record_id, so the fit does not depend on the corpus order. Throws
// InvalidArgument with fewer than two classes.
TextClassifier train_binary(const Corpus& train, const LogisticConfig& config);
TextClassifier train_multiclass(const Corpus& train, const LogisticConfig& config,
                                const std::vector<int>& classes = all_classes());
TextClassifier train_classifier(const Corpus& train, Task task, const LogisticConfig& config);

// Grid value with the best inner-validation macro-F1 (earliest on ties).
double select_l2(const Corpus& train, Task task, const LogisticConfig& config);

// F1 over labelled test records with the task's class list.
stats::F1Report evaluate(const TextClassifier& classifier, const Corpus& test, Task task);

struct FeatureWeight {
    std::string token;
    double weight = 0.0;
};

struct ClassAudit {
    int frequency_class = 0;  // binary: 1, weights positive toward presence
    std::vector<FeatureWeight> top;
};

// Top-n features by |weight| for each trained score row. n beyond the
// feature count is truncated with a warning.
std::vector<ClassAudit> audit_features(const TextClassifier& classifier, std::size_t top_n);

}  // namespace bwsq

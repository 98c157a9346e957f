#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bwsq/corpus.hpp"
#include "bwsq/embeddings.hpp"
#include "bwsq/krr.hpp"
#include "bwsq/logistic.hpp"
#include "bwsq/scoring.hpp"
#include "bwsq/stats.hpp"

namespace bwsq {

// Metrics of one evaluation run. Fields a run does not produce stay empty.
struct MetricsBundle {
    std::size_t n_items = 0;
    std::optional<double> f1_micro;
    std::optional<double> f1_macro;
    std::optional<double> accuracy;
    std::optional<double> mae;
    std::optional<double> r2;
    std::optional<double> spearman;
    std::optional<double> kappa;
    std::map<int, double> per_class_f1;

    static MetricsBundle classification(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                        const std::vector<int>& classes);
    static MetricsBundle regression(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred);
};

// Field-wise mean over the runs that carry the field; per-class F1 is
// averaged per class.
MetricsBundle mean_metrics(const std::vector<MetricsBundle>& runs);

std::string metrics_to_json(const MetricsBundle& m, int indent = 2);
// One row per fold plus a final "mean" row.
std::string crossval_to_csv(const std::vector<MetricsBundle>& folds, const MetricsBundle& mean);

// Balanced fold ids in [0, folds): a seeded shuffle dealt round-robin, so
// fold sizes differ by at most one. Throws for folds < 2 or folds > n.
std::vector<int> fold_assignment(std::size_t n, int folds, std::uint64_t seed);

struct CrossValResult {
    std::vector<MetricsBundle> folds;
    MetricsBundle mean;
};

// Runs `run_fold(train_indices, test_indices)` for each fold in order.
// Indices refer to positions 0..n-1 and are sorted ascending.
CrossValResult crossval(std::size_t n, int folds, std::uint64_t seed,
                        const std::function<MetricsBundle(const std::vector<std::size_t>&,
                                                          const std::vector<std::size_t>&)>& run_fold);

// Classifier CV over the labelled records (ordered by record_id).
CrossValResult crossval_classifier(const Corpus& corpus, Task task, const LogisticConfig& cfg, int folds,
                                   std::uint64_t seed);

struct RegressionData {
    std::vector<std::string> ids;
    std::vector<std::string> texts;
    Eigen::VectorXd targets;
};

// Scored records joined to corpus texts, ordered by record_id. Scores
// without a corpus record are an IntegrityError.
RegressionData regression_data(const Corpus& corpus, const std::vector<ScoreRecord>& scores);

// KRR on unigram features; the vocabulary is rebuilt from each training fold
// and tuning (when requested) runs inside each fold.
CrossValResult crossval_krr_text(const RegressionData& data, const KrrConfig& cfg, int min_doc_freq, int folds,
                                 std::uint64_t seed);
CrossValResult crossval_krr_embeddings(const RegressionData& data, const EmbeddingTable& table,
                                       const KrrConfig& cfg, int folds, std::uint64_t seed);

struct CurvePoint {
    std::size_t n_train = 0;
    double f1_macro = 0.0;
    double f1_micro = 0.0;
    // True when the prefix held a single class and the point comes from a
    // majority-class predictor.
    bool majority_fallback = false;
};

// Trains on cumulative prefixes step, 2*step, ... of a seeded ordering of
// the Train split (the full set is always the last point) and evaluates
// every point on the Test split. Throws when step < 1 or step exceeds the
// number of labelled training records.
std::vector<CurvePoint> training_curve(const Corpus& corpus, Task task, std::size_t step, const LogisticConfig& cfg,
                                       std::uint64_t seed);

std::string curve_to_csv(const std::vector<CurvePoint>& curve);

}  // namespace bwsq

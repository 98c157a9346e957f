#pragma once

#include <string>
#include <vector>

#include "bwsq/corpus.hpp"
#include "bwsq/design.hpp"
#include "bwsq/judgment.hpp"

namespace bwsq {

// Counting-based Best-Worst score of one text.
struct ScoreRecord {
    std::string record_id;
    int n_best = 0;
    int n_worst = 0;
    int n_overall = 0;  // appearances in valid judgments
    double raw_score = 0.0;   // (n_best - n_worst) / n_overall, in [-1, 1]
    double norm_score = 0.0;  // (raw_score + 1) / 2, in [0, 1]

    bool operator==(const ScoreRecord&) const = default;
};

// Builds a record from counts. Throws InvalidArgument unless
// n_overall >= 1, counts >= 0 and n_best + n_worst <= n_overall.
ScoreRecord score_from_counts(std::string record_id, int n_best, int n_worst, int n_overall);

inline double normalize_score(double raw) { return (raw + 1.0) / 2.0; }

struct ScoreResult {
    std::vector<ScoreRecord> scored;  // design order of first appearance
    // Design members without a single valid appearance.
    std::vector<std::string> unscored;
};

struct ScoreOptions {
    // Sum counts across annotators. Without it, judgments from more than one
    // annotator are rejected.
    bool pool = false;
};

// Folds valid judgments into per-record counts. Invalid rows are skipped and
// reduce n_overall. Throws IntegrityError for a judgment naming an unknown
// tuple, for a repeated (tuple, annotator) pair and for mixed annotators
// without pooling.
ScoreResult score(const std::vector<Judgment>& judgments, const Design& design, const ScoreOptions& options = {});

// Record ids by descending norm_score; ties by ascending record_id.
std::vector<std::string> rank(const std::vector<ScoreRecord>& scores);

// Absent-labelled texts are outside the scaled sample; they get a
// conventional normalized score of 0 and are reported as imputed.
struct ImputedScore {
    std::string record_id;
    double norm_score = 0.0;
};

std::vector<ImputedScore> impute_absent(const Corpus& corpus, const ScoreResult& result);

// Columns: record_id, n_best, n_worst, n_overall, raw_score, norm_score.
std::string scores_to_csv(const std::vector<ScoreRecord>& scores);
void write_scores_csv(const std::vector<ScoreRecord>& scores, const std::string& path);
std::vector<ScoreRecord> read_scores_csv(const std::string& path);

}  // namespace bwsq

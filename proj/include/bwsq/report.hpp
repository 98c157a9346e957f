#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bwsq/corpus.hpp"
#include "bwsq/scoring.hpp"

namespace bwsq {

enum class BinningPolicy { EqualWidth, Quantile };

std::string_view to_string(BinningPolicy p);

// Maps a normalized score in [0, 1] to a frequency class. `edges` are the
// interior cut points, strictly increasing inside (0, 1); bin i is
// [edges[i-1], edges[i]) and gets classes[i]. A score equal to an edge goes
// to the upper bin. Absent (0) and extinct (-1) never come out of a score.
struct ClassBinning {
    std::vector<double> edges;
    std::vector<int> classes;
    BinningPolicy policy = BinningPolicy::EqualWidth;

    // Edges {0.2, 0.4, 0.6, 0.8} over classes 1..5.
    static ClassBinning equal_width();
    // Edges at the empirical quantiles of `scores` so each of classes 1..5
    // gets about the same number of records.
    static ClassBinning quantile(const std::vector<double>& scores);

    // Throws InvalidArgument for an inconsistent binning.
    void validate() const;
    // Throws InvalidArgument for a score outside [0, 1].
    int classify(double score) const;
};

struct BinnedRecord {
    std::string record_id;
    double norm_score = 0.0;
    int frequency_class = 0;
    bool from_flag = false;
};

// `flags` maps record_id to an out-of-band class (0 absent, -1 extinct),
// which overrides the score.
std::vector<BinnedRecord> bin_scores(const std::vector<ScoreRecord>& scores, const ClassBinning& binning,
                                     const std::map<std::string, int>& flags = {});

// Flags taken from gold annotations: multi_label -1 or 0, or binary_label 0
// without a multi label (absent).
std::map<std::string, int> flags_from_labels(const Corpus& corpus);

std::string binned_to_csv(const std::vector<BinnedRecord>& rows);

struct HistogramBin {
    double left = 0.0;
    double right = 0.0;
    std::size_t count = 0;
};

// Fixed-width bins over [0, 1]; the last bin includes 1.
std::vector<HistogramBin> histogram(const std::vector<double>& values, int bins = 10);

struct SpeciesDistribution {
    std::string species_id;
    std::map<std::string, std::vector<double>> by_office;
    std::vector<HistogramBin> histogram;
    std::size_t n = 0;
    double mean = 0.0;
    double median = 0.0;
    double sd = 0.0;  // population standard deviation
    double min = 0.0;
    double max = 0.0;
};

// Scores of the species' records (records without a score are skipped).
// Throws InvalidArgument for a species absent from the corpus or without
// any scored record.
SpeciesDistribution species_distribution(const Corpus& corpus, const std::vector<ScoreRecord>& scores,
                                         const std::string& species_id, int bins = 10);

// Columns bin_left, bin_right, count.
std::string histogram_to_csv(const std::vector<HistogramBin>& bins);
std::string distribution_summary_json(const SpeciesDistribution& d);

struct ClassScoreSummary {
    int frequency_class = 0;
    std::size_t count = 0;
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct ClassScoreTable {
    std::vector<ClassScoreSummary> rows;  // ascending class order
    // Adjacent present classes whose mean score does not increase.
    std::vector<std::pair<int, int>> violations;
    bool monotone() const { return violations.empty(); }
};

// Joins labels (record_id -> class) with scores on record_id. Throws
// InvalidArgument when nothing joins.
ClassScoreTable class_vs_score_table(const std::map<std::string, int>& labels, const std::vector<ScoreRecord>& scores);
std::map<std::string, int> multi_labels(const Corpus& corpus);

// Columns class, count, mean, min, max; the diagnostic is left to the
// caller (see violations).
std::string class_table_to_csv(const ClassScoreTable& t);

}  // namespace bwsq

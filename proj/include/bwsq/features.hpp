#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "bwsq/corpus.hpp"

namespace bwsq {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Unigram index built from a training split. Tokens are ordered by
// document frequency (descending) then by token, and indexed densely.
class Vocabulary {
public:
    Vocabulary() = default;
    Vocabulary(std::vector<std::string> tokens, std::vector<int> doc_freq, int min_doc_freq);

    std::size_t size() const noexcept { return tokens_.size(); }
    bool empty() const noexcept { return tokens_.empty(); }
    int min_doc_freq() const noexcept { return min_doc_freq_; }

    std::optional<Eigen::Index> index_of(std::string_view token) const;
    const std::string& token(Eigen::Index i) const { return tokens_[static_cast<std::size_t>(i)]; }
    int doc_freq(Eigen::Index i) const { return doc_freq_[static_cast<std::size_t>(i)]; }
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }
    const std::vector<int>& doc_freqs() const noexcept { return doc_freq_; }

    // Same vocabulary minus the given tokens, re-indexed densely.
    Vocabulary without(const std::set<std::string>& excluded) const;

    bool operator==(const Vocabulary& other) const {
        return tokens_ == other.tokens_ && doc_freq_ == other.doc_freq_ && min_doc_freq_ == other.min_doc_freq_;
    }

private:
    std::vector<std::string> tokens_;
    std::vector<int> doc_freq_;
    int min_doc_freq_ = 1;
    std::unordered_map<std::string, Eigen::Index> index_;
};

// Throws InvalidArgument for an empty training corpus.
Vocabulary build_vocabulary(const Corpus& train, int min_doc_freq, const std::set<std::string>& excluded = {});
Vocabulary build_vocabulary(const std::vector<std::string>& texts, int min_doc_freq,
                            const std::set<std::string>& excluded = {});

// Sparse L2-normalized term-frequency vector; entries sorted by index.
struct FeatureVector {
    std::vector<std::pair<Eigen::Index, double>> entries;

    bool empty() const noexcept { return entries.empty(); }
    double norm() const;
};

// Out-of-vocabulary tokens are dropped; an all-OOV text yields an empty
// vector.
FeatureVector featurize(std::string_view text, const Vocabulary& vocab);
FeatureVector featurize(const SurveyRecord& record, const Vocabulary& vocab);

// Scored quantifier phrases (token sequences) used as auxiliary features:
// the mean score of the phrases found in a text and an any-match indicator.
struct QuantifierLexicon {
    std::vector<std::pair<std::vector<std::string>, double>> phrases;

    bool empty() const noexcept { return phrases.empty(); }
    // Reads a CSV with columns phrase, score.
    static QuantifierLexicon read_csv(const std::string& path);
    static QuantifierLexicon from_pairs(const std::vector<std::pair<std::string, double>>& pairs);

    // {mean matched score, 1 if any phrase matched}; zeros without a match.
    std::pair<double, double> features(const std::vector<std::string>& tokens) const;
};

inline constexpr Eigen::Index kLexiconFeatureCount = 2;

// One row per text. With a lexicon, two auxiliary columns follow the
// vocabulary columns.
SparseRows feature_matrix(const std::vector<std::string>& texts, const Vocabulary& vocab,
                          const QuantifierLexicon* lexicon = nullptr);

}  // namespace bwsq

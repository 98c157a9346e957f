#include "bwsq/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include "bwsq/csv.hpp"
#include "bwsq/error.hpp"
#include "bwsq/unicode.hpp"

namespace bwsq {

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::vector<int> doc_freq, int min_doc_freq)
    : tokens_(std::move(tokens)), doc_freq_(std::move(doc_freq)), min_doc_freq_(min_doc_freq) {
    if (tokens_.size() != doc_freq_.size()) throw InvalidArgument("vocabulary: token/frequency size mismatch");
    index_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (!index_.emplace(tokens_[i], static_cast<Eigen::Index>(i)).second) {
            throw InvalidArgument("vocabulary: repeated token '" + tokens_[i] + "'");
        }
    }
}

std::optional<Eigen::Index> Vocabulary::index_of(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

Vocabulary Vocabulary::without(const std::set<std::string>& excluded) const {
    std::vector<std::string> tokens;
    std::vector<int> df;
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (excluded.contains(tokens_[i])) continue;
        tokens.push_back(tokens_[i]);
        df.push_back(doc_freq_[i]);
    }
    return Vocabulary(std::move(tokens), std::move(df), min_doc_freq_);
}

Vocabulary build_vocabulary(const std::vector<std::string>& texts, int min_doc_freq,
                            const std::set<std::string>& excluded) {
    if (texts.empty()) throw InvalidArgument("cannot build a vocabulary from an empty corpus");
    std::map<std::string, int> df;
    for (const auto& text : texts) {
        auto tokens = unicode::tokenize(text);
        std::sort(tokens.begin(), tokens.end());
        tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
        for (auto& t : tokens) ++df[std::move(t)];
    }
    std::vector<std::pair<std::string, int>> kept;
    for (auto& [token, count] : df) {
        if (count >= min_doc_freq && !excluded.contains(token)) kept.emplace_back(token, count);
    }
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> tokens;
    std::vector<int> freqs;
    for (auto& [token, count] : kept) {
        tokens.push_back(std::move(token));
        freqs.push_back(count);
    }
    return Vocabulary(std::move(tokens), std::move(freqs), min_doc_freq);
}

Vocabulary build_vocabulary(const Corpus& train, int min_doc_freq, const std::set<std::string>& excluded) {
    std::vector<std::string> texts;
    texts.reserve(train.size());
    for (const auto& r : train) texts.push_back(r.text);
    return build_vocabulary(texts, min_doc_freq, excluded);
}

double FeatureVector::norm() const {
    double s = 0.0;
    for (const auto& [i, w] : entries) s += w * w;
    return std::sqrt(s);
}

namespace {

FeatureVector tf_vector(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
    std::map<Eigen::Index, double> counts;
    for (const auto& t : tokens) {
        if (auto i = vocab.index_of(t)) counts[*i] += 1.0;
    }
    FeatureVector v;
    v.entries.assign(counts.begin(), counts.end());
    const double n = v.norm();
    if (n > 0.0) {
        for (auto& [i, w] : v.entries) w /= n;
    }
    return v;
}

}  // namespace

FeatureVector featurize(std::string_view text, const Vocabulary& vocab) {
    return tf_vector(unicode::tokenize(text), vocab);
}

FeatureVector featurize(const SurveyRecord& record, const Vocabulary& vocab) { return featurize(record.text, vocab); }

QuantifierLexicon QuantifierLexicon::from_pairs(const std::vector<std::pair<std::string, double>>& pairs) {
    QuantifierLexicon lex;
    for (const auto& [phrase, score] : pairs) {
        auto tokens = unicode::tokenize(phrase);
        if (tokens.empty()) throw InvalidArgument("lexicon phrase '" + phrase + "' has no tokens");
        lex.phrases.emplace_back(std::move(tokens), score);
    }
    return lex;
}

QuantifierLexicon QuantifierLexicon::read_csv(const std::string& path) {
    const auto table = csv::read_file(path);
    if (table.empty()) throw SchemaError(path + ": empty lexicon");
    const auto& header = table.front();
    auto col = [&](const char* name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw SchemaError(path + ": missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const auto phrase_col = col("phrase");
    const auto score_col = col("score");
    std::vector<std::pair<std::string, double>> pairs;
    for (std::size_t i = 1; i < table.size(); ++i) {
        const auto& row = table[i];
        if (row.size() == 1 && row[0].empty()) continue;
        if (row.size() != header.size()) throw RowError({{i, "", "wrong field count"}});
        double score = 0.0;
        const auto& s = row[score_col];
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), score);
        if (ec != std::errc() || p != s.data() + s.size()) throw RowError({{i, "score", "not a number"}});
        pairs.emplace_back(row[phrase_col], score);
    }
    return from_pairs(pairs);
}

std::pair<double, double> QuantifierLexicon::features(const std::vector<std::string>& tokens) const {
    double sum = 0.0;
    int matched = 0;
    for (const auto& [phrase, score] : phrases) {
        if (phrase.size() > tokens.size()) continue;
        for (std::size_t start = 0; start + phrase.size() <= tokens.size(); ++start) {
            if (std::equal(phrase.begin(), phrase.end(), tokens.begin() + static_cast<std::ptrdiff_t>(start))) {
                sum += score;
                ++matched;
            }
        }
    }
    if (matched == 0) return {0.0, 0.0};
    return {sum / matched, 1.0};
}

SparseRows feature_matrix(const std::vector<std::string>& texts, const Vocabulary& vocab,
                          const QuantifierLexicon* lexicon) {
    const bool augment = lexicon && !lexicon->empty();
    const auto cols = static_cast<Eigen::Index>(vocab.size()) + (augment ? kLexiconFeatureCount : 0);
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t row = 0; row < texts.size(); ++row) {
        const auto tokens = unicode::tokenize(texts[row]);
        const auto r = static_cast<Eigen::Index>(row);
        for (const auto& [i, w] : tf_vector(tokens, vocab).entries) triplets.emplace_back(r, i, w);
        if (augment) {
            const auto [mean, any] = lexicon->features(tokens);
            const auto base = static_cast<Eigen::Index>(vocab.size());
            if (mean != 0.0) triplets.emplace_back(r, base, mean);
            if (any != 0.0) triplets.emplace_back(r, base + 1, any);
        }
    }
    SparseRows X(static_cast<Eigen::Index>(texts.size()), cols);
    X.setFromTriplets(triplets.begin(), triplets.end());
    return X;
}

}  // namespace bwsq

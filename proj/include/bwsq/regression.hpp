#pragma once

#include <string>
#include <vector>

#include "bwsq/embeddings.hpp"
#include "bwsq/evaluation.hpp"
#include "bwsq/features.hpp"
#include "bwsq/krr.hpp"

namespace bwsq {

// KRR on unigram features, fit on all given records.
struct TextRegressor {
    Vocabulary vocab;
    KrrModel<SparseRows> model;
    KrrConfig config;
    int min_doc_freq = 1;

    Eigen::VectorXd predict(const std::vector<std::string>& texts) const;
};

// KRR on precomputed embeddings.
struct EmbeddingRegressor {
    KrrModel<Eigen::MatrixXd> model;
    KrrConfig config;
    std::string embedding_source;

    Eigen::VectorXd predict(const EmbeddingTable& table, const std::vector<std::string>& ids) const;
};

TextRegressor train_text_regressor(const RegressionData& data, const KrrConfig& cfg, int min_doc_freq);
EmbeddingRegressor train_embedding_regressor(const RegressionData& data, const EmbeddingTable& table,
                                             const KrrConfig& cfg);

}  // namespace bwsq

#include "bwsq/regression.hpp"

namespace bwsq {

Eigen::VectorXd TextRegressor::predict(const std::vector<std::string>& texts) const {
    return model.predict(feature_matrix(texts, vocab));
}

Eigen::VectorXd EmbeddingRegressor::predict(const EmbeddingTable& table, const std::vector<std::string>& ids) const {
    if (table.dimension() != model.train_features.cols()) {
        throw InvalidArgument("embedding dimension " + std::to_string(table.dimension()) + " does not match the model's " +
                              std::to_string(model.train_features.cols()));
    }
    return model.predict(table.rows(ids));
}

TextRegressor train_text_regressor(const RegressionData& data, const KrrConfig& cfg, int min_doc_freq) {
    TextRegressor r;
    r.config = cfg;
    r.min_doc_freq = min_doc_freq;
    r.vocab = build_vocabulary(data.texts, min_doc_freq);
    r.model = train_krr(feature_matrix(data.texts, r.vocab), data.targets, cfg);
    return r;
}

EmbeddingRegressor train_embedding_regressor(const RegressionData& data, const EmbeddingTable& table,
                                             const KrrConfig& cfg) {
    EmbeddingRegressor r;
    r.config = cfg;
    r.embedding_source = table.source();
    r.model = train_krr(table.rows(data.ids), data.targets, cfg);
    return r;
}

}  // namespace bwsq

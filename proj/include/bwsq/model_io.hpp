#pragma once

#include <string>

#include "bwsq/logistic.hpp"
#include "bwsq/regression.hpp"

namespace bwsq {

// Models are stored as versioned JSON documents with their training config
// embedded: {"format": "bwsq-model", "version": 1, "type": ..., ...}.
inline constexpr int kModelFormatVersion = 1;

std::string classifier_to_json(const TextClassifier& clf);
TextClassifier classifier_from_json(const std::string& text);

std::string text_regressor_to_json(const TextRegressor& r);
TextRegressor text_regressor_from_json(const std::string& text);

std::string embedding_regressor_to_json(const EmbeddingRegressor& r);
EmbeddingRegressor embedding_regressor_from_json(const std::string& text);

// "logistic", "krr-text" or "krr-embedding"; throws SchemaError for
// anything that is not a model document of a supported version.
std::string model_type(const std::string& text);

std::string read_text_file(const std::string& path);
// Writes through a temporary file and rename.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace bwsq

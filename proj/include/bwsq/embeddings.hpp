#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace bwsq {

// Externally produced sentence embeddings keyed by record_id. All vectors
// share one dimension.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    // Throws InvalidArgument on ragged dimensions or a repeated id.
    EmbeddingTable(std::vector<std::string> ids, Eigen::MatrixXd vectors, std::string source = {});

    std::size_t size() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }
    Eigen::Index dimension() const noexcept { return vectors_.cols(); }
    const std::string& source() const noexcept { return source_; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    const Eigen::MatrixXd& vectors() const noexcept { return vectors_; }

    bool contains(std::string_view id) const { return index_.contains(std::string(id)); }
    Eigen::VectorXd at(std::string_view id) const;

    // Rows for the given ids in that order; throws IntegrityError naming
    // the first missing id.
    Eigen::MatrixXd rows(const std::vector<std::string>& ids) const;

private:
    std::vector<std::string> ids_;
    Eigen::MatrixXd vectors_;
    std::string source_;
    std::unordered_map<std::string, Eigen::Index> index_;
};

// JSONL rows {"record_id": ..., "vector": [numbers]}. Empty input and
// ragged rows are errors (the message names the line).
EmbeddingTable parse_embeddings(std::string_view content, const std::string& source = "<memory>");
EmbeddingTable ingest_embeddings(const std::string& path);

// Warns once per id that is not in `known_ids`; returns how many there were.
std::size_t warn_unknown_ids(const EmbeddingTable& table, const std::vector<std::string>& known_ids);

}  // namespace bwsq

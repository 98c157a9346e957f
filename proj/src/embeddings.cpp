#include "bwsq/embeddings.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "bwsq/error.hpp"
#include "bwsq/log.hpp"
#include "json.hpp"

namespace bwsq {

EmbeddingTable::EmbeddingTable(std::vector<std::string> ids, Eigen::MatrixXd vectors, std::string source)
    : ids_(std::move(ids)), vectors_(std::move(vectors)), source_(std::move(source)) {
    if (static_cast<Eigen::Index>(ids_.size()) != vectors_.rows()) {
        throw InvalidArgument("embedding table: id count and row count differ");
    }
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!index_.emplace(ids_[i], static_cast<Eigen::Index>(i)).second) {
            throw InvalidArgument("embedding table: repeated record_id '" + ids_[i] + "'");
        }
    }
}

Eigen::VectorXd EmbeddingTable::at(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) throw IntegrityError("no embedding for record '" + std::string(id) + "'");
    return vectors_.row(it->second).transpose();
}

Eigen::MatrixXd EmbeddingTable::rows(const std::vector<std::string>& ids) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(ids.size()), dimension());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto it = index_.find(ids[i]);
        if (it == index_.end()) throw IntegrityError("no embedding for record '" + ids[i] + "'");
        out.row(static_cast<Eigen::Index>(i)) = vectors_.row(it->second);
    }
    return out;
}

EmbeddingTable parse_embeddings(std::string_view content, const std::string& source) {
    using nlohmann::json;
    std::vector<std::string> ids;
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        auto end = content.find('\n', pos);
        if (end == std::string_view::npos) end = content.size();
        auto line = content.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

        auto where = source + ":" + std::to_string(line_no);
        json row;
        try {
            row = json::parse(line);
        } catch (const json::parse_error&) {
            throw RowError({{line_no, "", "invalid JSON"}});
        }
        if (!row.is_object() || !row.contains("record_id") || !row["record_id"].is_string()) {
            throw RowError({{line_no, "record_id", "missing or not a string"}});
        }
        if (!row.contains("vector") || !row["vector"].is_array() || row["vector"].empty()) {
            throw RowError({{line_no, "vector", "missing, empty or not an array"}});
        }
        std::vector<double> v;
        for (const auto& x : row["vector"]) {
            if (!x.is_number()) throw RowError({{line_no, "vector", "non-numeric entry"}});
            v.push_back(x.get<double>());
        }
        if (!rows.empty() && v.size() != rows.front().size()) {
            throw InvalidArgument(where + ": record '" + row["record_id"].get<std::string>() + "' has dimension " +
                                  std::to_string(v.size()) + ", expected " + std::to_string(rows.front().size()));
        }
        ids.push_back(row["record_id"].get<std::string>());
        rows.push_back(std::move(v));
    }
    if (rows.empty()) throw InvalidArgument(source + ": embedding table is empty");

    Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        M.row(static_cast<Eigen::Index>(i)) =
            Eigen::Map<const Eigen::RowVectorXd>(rows[i].data(), static_cast<Eigen::Index>(rows[i].size()));
    }
    return EmbeddingTable(std::move(ids), std::move(M), source);
}

EmbeddingTable ingest_embeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_embeddings(buffer.str(), path);
}

std::size_t warn_unknown_ids(const EmbeddingTable& table, const std::vector<std::string>& known_ids) {
    const std::set<std::string> known(known_ids.begin(), known_ids.end());
    std::size_t unknown = 0;
    for (const auto& id : table.ids()) {
        if (known.contains(id)) continue;
        ++unknown;
        log::warn("embeddings.unknown_record", {{"record_id", id}, {"source", table.source()}});
    }
    return unknown;
}

}  // namespace bwsq

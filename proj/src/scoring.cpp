#include "bwsq/scoring.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "bwsq/csv.hpp"
#include "bwsq/error.hpp"

namespace bwsq {

ScoreRecord score_from_counts(std::string record_id, int n_best, int n_worst, int n_overall) {
    if (n_overall < 1 || n_best < 0 || n_worst < 0 || n_best + n_worst > n_overall) {
        throw InvalidArgument("inconsistent counts for '" + record_id + "': best=" + std::to_string(n_best) +
                              " worst=" + std::to_string(n_worst) + " overall=" + std::to_string(n_overall));
    }
    ScoreRecord s;
    s.record_id = std::move(record_id);
    s.n_best = n_best;
    s.n_worst = n_worst;
    s.n_overall = n_overall;
    s.raw_score = static_cast<double>(n_best - n_worst) / static_cast<double>(n_overall);
    s.norm_score = normalize_score(s.raw_score);
    return s;
}

ScoreResult score(const std::vector<Judgment>& judgments, const Design& design, const ScoreOptions& options) {
    std::unordered_map<std::string, const ComparisonTuple*> tuples;
    tuples.reserve(design.tuples.size());
    for (const auto& t : design.tuples) tuples.emplace(t.tuple_id, &t);

    struct Counts {
        int best = 0, worst = 0, overall = 0;
    };
    std::unordered_map<std::string, Counts> counts;
    std::set<std::pair<std::string, std::string>> seen;
    std::optional<AnnotatorId> sole;

    for (const auto& j : judgments) {
        auto it = tuples.find(j.tuple_id);
        if (it == tuples.end()) throw IntegrityError("judgment references unknown tuple '" + j.tuple_id + "'");
        if (!seen.emplace(j.tuple_id, j.annotator.str()).second) {
            throw IntegrityError("more than one judgment for tuple '" + j.tuple_id + "' by " + j.annotator.str());
        }
        if (!options.pool) {
            if (!sole) {
                sole = j.annotator;
            } else if (*sole != j.annotator) {
                throw IntegrityError("judgments from " + sole->str() + " and " + j.annotator.str() +
                                     " mixed without pooling");
            }
        }
        if (!j.valid) continue;

        const auto& members = it->second->member_ids;
        const int k = static_cast<int>(members.size());
        if (!satisfies_validity(j, k)) {
            throw IntegrityError("judgment for tuple '" + j.tuple_id + "' marked valid but has indices " +
                                 std::to_string(j.best_index) + "/" + std::to_string(j.worst_index));
        }
        for (const auto& id : members) ++counts[id].overall;
        ++counts[members[static_cast<std::size_t>(j.best_index - 1)]].best;
        ++counts[members[static_cast<std::size_t>(j.worst_index - 1)]].worst;
    }

    ScoreResult result;
    std::set<std::string> emitted;
    for (const auto& t : design.tuples) {
        for (const auto& id : t.member_ids) {
            if (!emitted.insert(id).second) continue;
            auto c = counts.find(id);
            if (c == counts.end() || c->second.overall == 0) {
                result.unscored.push_back(id);
            } else {
                result.scored.push_back(score_from_counts(id, c->second.best, c->second.worst, c->second.overall));
            }
        }
    }
    return result;
}

std::vector<std::string> rank(const std::vector<ScoreRecord>& scores) {
    std::vector<const ScoreRecord*> order;
    order.reserve(scores.size());
    for (const auto& s : scores) order.push_back(&s);
    std::sort(order.begin(), order.end(), [](const ScoreRecord* a, const ScoreRecord* b) {
        if (a->norm_score != b->norm_score) return a->norm_score > b->norm_score;
        return a->record_id < b->record_id;
    });
    std::vector<std::string> ids;
    ids.reserve(order.size());
    for (const auto* s : order) ids.push_back(s->record_id);
    return ids;
}

std::vector<ImputedScore> impute_absent(const Corpus& corpus, const ScoreResult& result) {
    std::set<std::string> scored;
    for (const auto& s : result.scored) scored.insert(s.record_id);
    std::vector<ImputedScore> out;
    for (const auto& r : corpus) {
        const bool absent = r.binary_label == 0 || (r.multi_label && *r.multi_label <= 0);
        if (absent && !scored.contains(r.record_id)) out.push_back({r.record_id, 0.0});
    }
    return out;
}

std::string scores_to_csv(const std::vector<ScoreRecord>& scores) {
    std::ostringstream out;
    csv::write_row(out, {"record_id", "n_best", "n_worst", "n_overall", "raw_score", "norm_score"});
    for (const auto& s : scores) {
        csv::write_row(out, {s.record_id, std::to_string(s.n_best), std::to_string(s.n_worst),
                             std::to_string(s.n_overall), csv::format_number(s.raw_score),
                             csv::format_number(s.norm_score)});
    }
    return out.str();
}

void write_scores_csv(const std::vector<ScoreRecord>& scores, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << scores_to_csv(scores);
}

std::vector<ScoreRecord> read_scores_csv(const std::string& path) {
    const auto table = csv::read_file(path);
    if (table.empty()) throw SchemaError(path + ": empty scores file");
    const auto& header = table.front();
    auto column = [&](const char* name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw SchemaError(path + ": missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const auto id = column("record_id"), best = column("n_best"), worst = column("n_worst"),
               overall = column("n_overall");
    auto to_int = [&](const std::string& s, std::size_t row) {
        int v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size()) {
            throw RowError({{row, "", "not an integer: '" + s + "'"}});
        }
        return v;
    };
    std::vector<ScoreRecord> out;
    for (std::size_t i = 1; i < table.size(); ++i) {
        const auto& row = table[i];
        if (row.size() == 1 && row[0].empty()) continue;
        if (row.size() != header.size()) throw RowError({{i, "", "wrong field count"}});
        // Scores are recomputed from the counts so the file cannot drift from
        // the formula.
        out.push_back(score_from_counts(row[id], to_int(row[best], i), to_int(row[worst], i), to_int(row[overall], i)));
    }
    return out;
}

}  // namespace bwsq

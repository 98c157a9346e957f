#include "bwsq/design.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "bwsq/error.hpp"
#include "bwsq/log.hpp"
#include "bwsq/random.hpp"

namespace bwsq {

using nlohmann::json;

const ComparisonTuple* Design::find(const std::string& tuple_id) const {
    for (const auto& t : tuples) {
        if (t.tuple_id == tuple_id) return &t;
    }
    return nullptr;
}

namespace {

std::string make_tuple_id(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "T%06zu", index + 1);
    return buf;
}

std::vector<std::string> member_set(const std::vector<std::string>& members) {
    auto sorted = members;
    std::sort(sorted.begin(), sorted.end());
    return sorted;
}

}  // namespace

Design generate_design(const Corpus& corpus, const DesignParams& params) {
    std::vector<std::string> ids;
    ids.reserve(corpus.size());
    for (const auto& r : corpus) ids.push_back(r.record_id);
    return generate_design(std::move(ids), params);
}

Design generate_design(std::vector<std::string> ids, const DesignParams& params) {
    const auto k = static_cast<std::size_t>(params.set_size);
    if (params.set_size < 3) throw InvalidArgument("set size must be at least 3");
    if (params.repetitions < 1) throw InvalidArgument("repetitions must be at least 1");
    if (params.max_retries < 0) throw InvalidArgument("max_retries must be non-negative");
    if (std::set<std::string>(ids.begin(), ids.end()).size() != ids.size()) {
        throw IntegrityError("design input contains duplicate record ids");
    }

    Design design;
    design.params = params;

    if (ids.size() < 2 * k) {
        throw DesignError("corpus too small: " + std::to_string(ids.size()) + " records, need at least " +
                          std::to_string(2 * k));
    }
    if (const auto rest = ids.size() % k; rest != 0) {
        if (!params.truncate) {
            throw DesignError("corpus size " + std::to_string(ids.size()) + " is not a multiple of set size " +
                              std::to_string(k) + " (enable truncation to drop " + std::to_string(rest) +
                              " records)");
        }
        // A dedicated stream keeps the rounds identical to an untruncated
        // run over the surviving ids.
        auto rng = Rng::stream(params.seed, ~std::uint64_t{0});
        rng.shuffle(std::span<std::string>(ids));
        design.dropped_ids.assign(ids.end() - static_cast<std::ptrdiff_t>(rest), ids.end());
        ids.resize(ids.size() - rest);
        std::sort(design.dropped_ids.begin(), design.dropped_ids.end());
        log::warn("design.truncate", {{"dropped", std::to_string(rest)}, {"seed", std::to_string(params.seed)}});
        if (ids.size() < 2 * k) throw DesignError("corpus too small after truncation");
    }

    const int rounds = params.repetitions * params.set_size;
    std::set<std::vector<std::string>> seen;
    for (int round = 0; round < rounds; ++round) {
        bool placed = false;
        for (int attempt = 0; attempt <= params.max_retries && !placed; ++attempt) {
            auto rng = Rng::stream(params.seed, (static_cast<std::uint64_t>(round) << 32) | attempt);
            auto order = ids;
            rng.shuffle(std::span<std::string>(order));

            std::vector<ComparisonTuple> chunk;
            std::vector<std::vector<std::string>> keys;
            bool collision = false;
            for (std::size_t start = 0; start < order.size(); start += k) {
                ComparisonTuple t;
                t.round = round;
                t.member_ids.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                                    order.begin() + static_cast<std::ptrdiff_t>(start + k));
                auto key = member_set(t.member_ids);
                if (seen.contains(key)) {
                    collision = true;
                    break;
                }
                keys.push_back(std::move(key));
                chunk.push_back(std::move(t));
            }
            if (collision) continue;

            for (auto& t : chunk) {
                t.tuple_id = make_tuple_id(design.tuples.size());
                design.tuples.push_back(std::move(t));
            }
            seen.insert(keys.begin(), keys.end());
            placed = true;
        }
        if (!placed) {
            throw DesignError("round " + std::to_string(round) + " repeated an earlier tuple after " +
                              std::to_string(params.max_retries) + " reshuffles (seed " +
                              std::to_string(params.seed) + ")");
        }
    }
    return design;
}

DesignReport verify_design(const Design& design, int expected_appearances) {
    DesignReport report;
    report.expected_appearances =
        expected_appearances >= 0 ? expected_appearances : design.params.repetitions * design.params.set_size;

    std::map<std::vector<std::string>, std::string> first_with_set;
    for (const auto& t : design.tuples) {
        std::set<std::string> distinct(t.member_ids.begin(), t.member_ids.end());
        if (distinct.size() != t.member_ids.size()) report.within_tuple_duplicates.push_back(t.tuple_id);
        for (const auto& id : distinct) ++report.appearances[id];

        auto [it, inserted] = first_with_set.emplace(member_set(t.member_ids), t.tuple_id);
        if (!inserted) report.duplicate_tuples.emplace_back(it->second, t.tuple_id);
    }
    if (report.expected_appearances > 0) {
        for (const auto& [id, count] : report.appearances) {
            if (count != report.expected_appearances) report.uneven_records.push_back(id);
        }
    }
    return report;
}

std::string design_to_jsonl(const Design& design) {
    std::ostringstream out;
    for (const auto& t : design.tuples) {
        json obj = {{"tuple_id", t.tuple_id}, {"round", t.round}, {"member_ids", t.member_ids}};
        out << obj.dump() << '\n';
    }
    return out.str();
}

void write_design_jsonl(const Design& design, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << design_to_jsonl(design);
}

Design design_from_jsonl(const std::string& content) {
    Design design;
    std::istringstream in(content);
    std::string line;
    std::size_t line_no = 0;
    std::set<std::string> ids;
    std::set<std::string> tuple_ids;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto obj = json::parse(line);
            ComparisonTuple t;
            t.tuple_id = obj.at("tuple_id").get<std::string>();
            t.round = obj.value("round", 0);
            t.member_ids = obj.at("member_ids").get<std::vector<std::string>>();
            if (!tuple_ids.insert(t.tuple_id).second) {
                throw IntegrityError("duplicate tuple_id '" + t.tuple_id + "'");
            }
            ids.insert(t.member_ids.begin(), t.member_ids.end());
            design.tuples.push_back(std::move(t));
        } catch (const json::exception& e) {
            throw SchemaError("design line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!design.tuples.empty()) {
        design.params.set_size = static_cast<int>(design.tuples.front().member_ids.size());
        design.params.repetitions = ids.empty() ? 0 : static_cast<int>(design.tuples.size() / ids.size());
    }
    return design;
}

Design read_design_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return design_from_jsonl(buffer.str());
}

}  // namespace bwsq

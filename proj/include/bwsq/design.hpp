#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bwsq/corpus.hpp"

namespace bwsq {

struct DesignParams {
    int set_size = 4;     // k, texts per tuple
    int repetitions = 2;  // N; each text appears in N * k tuples
    std::uint64_t seed = 0;
    // Drop n mod k randomly chosen records instead of failing.
    bool truncate = false;
    // Reshuffles allowed per round when a tuple repeats an earlier member set.
    int max_retries = 100;
};

struct ComparisonTuple {
    std::string tuple_id;
    std::vector<std::string> member_ids;  // presentation order, positions 1..k
    int round = 0;

    bool operator==(const ComparisonTuple&) const = default;
};

struct Design {
    DesignParams params;
    std::vector<ComparisonTuple> tuples;
    // Records dropped by truncation, if any.
    std::vector<std::string> dropped_ids;

    const ComparisonTuple* find(const std::string& tuple_id) const;
};

// N * k shuffle-and-chunk rounds over the corpus. Every record lands in
// exactly one tuple per round, so each appears N * k times and the design
// holds N * n tuples. Throws DesignError when n < 2k, when n is not a
// multiple of k (unless truncating) or when a round cannot avoid repeating
// a member set within the retry budget.
Design generate_design(const Corpus& corpus, const DesignParams& params);

// Same construction over bare ids.
Design generate_design(std::vector<std::string> record_ids, const DesignParams& params);

struct DesignReport {
    std::map<std::string, int> appearances;
    int expected_appearances = 0;  // N * k, or 0 when unknown
    // Pairs of tuple ids with the same member set.
    std::vector<std::pair<std::string, std::string>> duplicate_tuples;
    // Tuples listing some record more than once.
    std::vector<std::string> within_tuple_duplicates;
    // Record ids whose count differs from expected_appearances.
    std::vector<std::string> uneven_records;

    bool passed() const {
        return duplicate_tuples.empty() && within_tuple_duplicates.empty() && uneven_records.empty();
    }
};

// Checks the count and distinctness invariants. The expected count comes from
// the design's params; pass expected_appearances to override (e.g. for a
// design read back from disk).
DesignReport verify_design(const Design& design, int expected_appearances = -1);

// One tuple per line: {"tuple_id", "round", "member_ids"}.
void write_design_jsonl(const Design& design, const std::string& path);
std::string design_to_jsonl(const Design& design);

// k is taken from the first tuple; N from the tuple count over distinct ids.
Design read_design_jsonl(const std::string& path);
Design design_from_jsonl(const std::string& content);

}  // namespace bwsq

#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bwsq/journal.hpp"

namespace bwsq {

struct AnnotatorId {
    enum class Kind { Llm, Human };

    Kind kind = Kind::Llm;
    std::string name;

    // "llm:gpt-4", "human:AR"
    std::string str() const;
    // Accepts "kind:name"; a bare name is read as an LLM.
    static AnnotatorId parse(std::string_view text);

    static AnnotatorId llm(std::string name) { return {Kind::Llm, std::move(name)}; }
    static AnnotatorId human(std::string name) { return {Kind::Human, std::move(name)}; }

    auto operator<=>(const AnnotatorId&) const = default;
};

struct Judgment {
    std::string tuple_id;
    AnnotatorId annotator;
    int best_index = 0;   // 1-based position in the tuple, 0 when invalid
    int worst_index = 0;
    std::string raw_response;
    std::string timestamp;
    bool valid = false;
    // Why an invalid row is invalid (parse failure, transport error).
    std::string failure;

    bool operator==(const Judgment&) const = default;
};

// valid => distinct indices within 1..k.
bool satisfies_validity(const Judgment& j, int set_size);

std::string judgment_to_json_line(const Judgment& j);
// Throws SchemaError on malformed input.
Judgment judgment_from_json_line(std::string_view line);

std::vector<Judgment> read_judgments_jsonl(const std::string& path);
void write_judgments_jsonl(const std::vector<Judgment>& judgments, const std::string& path);

struct JudgmentCodec {
    using Row = Judgment;
    static std::string key_for(const std::string& tuple_id, const AnnotatorId& a) {
        return tuple_id + '\x1f' + a.str();
    }
    static std::string key(const Judgment& j) { return key_for(j.tuple_id, j.annotator); }
    static std::string encode(const Judgment& j) { return judgment_to_json_line(j); }
    static Judgment decode(std::string_view line) { return judgment_from_json_line(line); }
};

// Keyed by (tuple_id, annotator); see Journal for replay semantics.
class JudgmentStore : public Journal<JudgmentCodec> {
public:
    using Journal::Journal;

    std::optional<Judgment> find(const std::string& tuple_id, const AnnotatorId& annotator) const {
        return get(JudgmentCodec::key_for(tuple_id, annotator));
    }
    bool has_valid(const std::string& tuple_id, const AnnotatorId& annotator) const {
        auto j = find(tuple_id, annotator);
        return j && j->valid;
    }
};

}  // namespace bwsq

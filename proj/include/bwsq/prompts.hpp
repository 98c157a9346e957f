#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bwsq/corpus.hpp"
#include "bwsq/design.hpp"

namespace bwsq {

struct ChatPrompt {
    std::string system;
    std::string user;

    bool operator==(const ChatPrompt&) const = default;
};

// Best-Worst prompt over the tuple's texts in stored order. The numbered list
// has one line per member, so k != 4 keeps the wording and changes only the
// list. Throws IntegrityError when a member id is not in the corpus.
ChatPrompt render_bws_prompt(const ComparisonTuple& tuple, const Corpus& corpus);
ChatPrompt render_bws_prompt(const std::vector<std::string>& texts);

// Zero-shot 7-class prompt with the record text appended. Throws
// InvalidArgument for an empty text.
ChatPrompt render_multiclass_prompt(const SurveyRecord& record);
ChatPrompt render_multiclass_prompt(std::string_view text);

enum class ParseStatus {
    Ok,
    NoJson,       // no JSON object in the response
    MissingKeys,  // objects found, none with both "Best" and "Worst"
    BadValue,     // a value is not an integer or one-element integer list
    OutOfRange,   // index outside 1..k
    Tie,          // best == worst
};

std::string_view to_string(ParseStatus s);

struct BwsPick {
    ParseStatus status = ParseStatus::NoJson;
    int best_index = 0;
    int worst_index = 0;

    bool ok() const { return status == ParseStatus::Ok; }
};

// Reads the first JSON object carrying both "Best" and "Worst" (key match is
// case-insensitive). Values may be integers, integral numbers, numeric
// strings or single-element lists of those.
BwsPick parse_bws_response(std::string_view raw, int set_size);

// Class from a zero-shot reply: the last class token in the text wins, where
// a token is a class name from the scheme or a signed integer in [-1, 5].
std::optional<int> parse_class_response(std::string_view raw);

}  // namespace bwsq

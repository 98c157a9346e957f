#include "bwsq/prompts.hpp"

#include <array>
#include <cctype>
#include <cmath>

#include "json.hpp"

#include "bwsq/error.hpp"
#include "bwsq/unicode.hpp"

namespace bwsq {

using nlohmann::json;

namespace {

constexpr std::string_view kBwsSystem =
    "You are an expert annotator specializing in Best-Worst Scaling of German texts based on quantity "
    "information about animal occurrences.";

constexpr std::string_view kBwsTask =
    "Task: From the following German texts about animal occurrence, identify:\n"
    "Best: The text conveying the highest quantity (e.g., presence, frequency, population size)\n"
    "Worst: The text conveying the lowest quantity.\n";

constexpr std::string_view kBwsAnswerShape =
    "JSON format for your answer:\n"
    "{ \"Best\": [Text Number],\n"
    "  \"Worst\": [Text Number]}";

constexpr std::string_view kMulticlassSystem =
    "You are a German native expert in text classification. Use the provided classification scheme to "
    "classify German texts based on species frequency descriptions.";

constexpr std::string_view kMulticlassUser =
    "You are a classification model. Classify the given German text into one of the following categories:\n"
    "- Abundant (5): Species is very frequently observed or present.\n"
    "- Common (4): Species is commonly found in the area.\n"
    "- Common to Rare (3): Species is observed, but not very frequently.\n"
    "- Rare (2): Species is rarely seen in the area.\n"
    "- Very Rare (1): Species is seen only in exceptional circumstances.\n"
    "- Absent (0): Species is not observed in the area.\n"
    "- Extinct (-1): Species no longer exists in the area.\n"
    "Read the provided text and classify it according to this scheme.\n"
    "Here is the text to classify:\n";

// Longest names first so "common to rare" wins over "common" and "rare".
constexpr std::array<std::pair<std::string_view, int>, 7> kClassNames{{
    {"common to rare", 3},
    {"very rare", 1},
    {"abundant", 5},
    {"extinct", -1},
    {"common", 4},
    {"absent", 0},
    {"rare", 2},
}};

std::optional<int> as_index(const json& v) {
    if (v.is_array()) {
        if (v.size() != 1) return std::nullopt;
        return as_index(v.front());
    }
    if (v.is_number_integer()) return static_cast<int>(v.get<long long>());
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (std::floor(d) == d && std::abs(d) < 1e6) return static_cast<int>(d);
        return std::nullopt;
    }
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s.empty() || s.size() > 6) return std::nullopt;
        std::size_t used = 0;
        try {
            const int parsed = std::stoi(s, &used);
            if (used == s.size()) return parsed;
        } catch (const std::exception&) {
        }
    }
    return std::nullopt;
}

const json* find_key(const json& obj, std::string_view key) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const auto& k = it.key();
        if (k.size() != key.size()) continue;
        bool same = true;
        for (std::size_t i = 0; i < k.size() && same; ++i) {
            same = std::tolower(static_cast<unsigned char>(k[i])) == std::tolower(static_cast<unsigned char>(key[i]));
        }
        if (same) return &it.value();
    }
    return nullptr;
}

// End of the balanced {...} starting at `open`, honouring JSON strings.
std::optional<std::size_t> matching_brace(std::string_view s, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = open; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0) return i;
        }
    }
    return std::nullopt;
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

ChatPrompt render_bws_prompt(const std::vector<std::string>& texts) {
    std::string user(kBwsTask);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        user += std::to_string(i + 1) + ". " + texts[i] + "\n";
    }
    user += kBwsAnswerShape;
    return {std::string(kBwsSystem), std::move(user)};
}

ChatPrompt render_bws_prompt(const ComparisonTuple& tuple, const Corpus& corpus) {
    std::vector<std::string> texts;
    texts.reserve(tuple.member_ids.size());
    for (const auto& id : tuple.member_ids) {
        const auto* r = corpus.find(id);
        if (!r) throw IntegrityError("tuple '" + tuple.tuple_id + "' references unknown record '" + id + "'");
        texts.push_back(r->text);
    }
    return render_bws_prompt(texts);
}

ChatPrompt render_multiclass_prompt(std::string_view text) {
    if (unicode::trim(text).empty()) throw InvalidArgument("cannot classify an empty text");
    return {std::string(kMulticlassSystem), std::string(kMulticlassUser) + std::string(text)};
}

ChatPrompt render_multiclass_prompt(const SurveyRecord& record) { return render_multiclass_prompt(record.text); }

std::string_view to_string(ParseStatus s) {
    switch (s) {
        case ParseStatus::Ok: return "ok";
        case ParseStatus::NoJson: return "no_json";
        case ParseStatus::MissingKeys: return "missing_keys";
        case ParseStatus::BadValue: return "bad_value";
        case ParseStatus::OutOfRange: return "out_of_range";
        case ParseStatus::Tie: return "tie";
    }
    return "unknown";
}

BwsPick parse_bws_response(std::string_view raw, int set_size) {
    bool saw_json = false;
    for (std::size_t open = raw.find('{'); open != std::string_view::npos; open = raw.find('{', open + 1)) {
        const auto close = matching_brace(raw, open);
        if (!close) continue;
        const auto obj = json::parse(raw.substr(open, *close - open + 1), nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) continue;
        saw_json = true;

        const json* best = find_key(obj, "Best");
        const json* worst = find_key(obj, "Worst");
        if (!best || !worst) continue;

        BwsPick pick;
        const auto b = as_index(*best);
        const auto w = as_index(*worst);
        if (!b || !w) {
            pick.status = ParseStatus::BadValue;
            return pick;
        }
        pick.best_index = *b;
        pick.worst_index = *w;
        if (*b < 1 || *b > set_size || *w < 1 || *w > set_size) {
            pick.status = ParseStatus::OutOfRange;
        } else if (*b == *w) {
            pick.status = ParseStatus::Tie;
        } else {
            pick.status = ParseStatus::Ok;
        }
        return pick;
    }
    return BwsPick{saw_json ? ParseStatus::MissingKeys : ParseStatus::NoJson, 0, 0};
}

std::optional<int> parse_class_response(std::string_view raw) {
    std::string lowered(raw);
    for (auto& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    const std::string_view s(lowered);

    std::optional<int> last;
    std::size_t i = 0;
    while (i < s.size()) {
        const bool boundary_before = i == 0 || !is_word_char(s[i - 1]);
        bool matched = false;
        if (boundary_before) {
            for (const auto& [name, cls] : kClassNames) {
                if (s.substr(i, name.size()) != name) continue;
                const auto end = i + name.size();
                if (end < s.size() && is_word_char(s[end])) continue;
                last = cls;
                i = end;
                matched = true;
                break;
            }
        }
        if (matched) continue;

        const bool minus = s[i] == '-' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1]));
        if ((minus || std::isdigit(static_cast<unsigned char>(s[i]))) && boundary_before &&
            (i == 0 || s[i - 1] != '.')) {
            std::size_t j = i + (minus ? 1 : 0);
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            const bool decimal = j + 1 < s.size() && s[j] == '.' && std::isdigit(static_cast<unsigned char>(s[j + 1]));
            const bool glued = j < s.size() && is_word_char(s[j]);
            if (!decimal && !glued && j - i <= 3) {
                const int value = std::stoi(std::string(s.substr(i, j - i)));
                if (is_valid_class(value)) last = value;
            }
            i = j;
            continue;
        }
        ++i;
    }
    return last;
}

}  // namespace bwsq

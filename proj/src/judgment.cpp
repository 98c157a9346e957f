#include "bwsq/judgment.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "bwsq/error.hpp"

namespace bwsq {

using nlohmann::json;

std::string AnnotatorId::str() const { return (kind == Kind::Llm ? "llm:" : "human:") + name; }

AnnotatorId AnnotatorId::parse(std::string_view text) {
    AnnotatorId id;
    if (text.starts_with("llm:")) {
        id = llm(std::string(text.substr(4)));
    } else if (text.starts_with("human:")) {
        id = human(std::string(text.substr(6)));
    } else {
        id = llm(std::string(text));
    }
    if (id.name.empty()) throw InvalidArgument("annotator name must be non-empty");
    return id;
}

bool satisfies_validity(const Judgment& j, int set_size) {
    if (!j.valid) return true;
    return j.best_index != j.worst_index && j.best_index >= 1 && j.best_index <= set_size && j.worst_index >= 1 &&
           j.worst_index <= set_size;
}

std::string judgment_to_json_line(const Judgment& j) {
    json obj = {{"tuple_id", j.tuple_id},
                {"annotator", j.annotator.str()},
                {"best_index", j.valid ? json(j.best_index) : json(nullptr)},
                {"worst_index", j.valid ? json(j.worst_index) : json(nullptr)},
                {"valid", j.valid},
                {"raw_response", j.raw_response},
                {"timestamp", j.timestamp}};
    if (!j.failure.empty()) obj["failure"] = j.failure;
    return obj.dump();
}

Judgment judgment_from_json_line(std::string_view line) {
    try {
        const auto obj = json::parse(line);
        Judgment j;
        j.tuple_id = obj.at("tuple_id").get<std::string>();
        j.annotator = AnnotatorId::parse(obj.at("annotator").get<std::string>());
        j.valid = obj.at("valid").get<bool>();
        if (j.valid) {
            j.best_index = obj.at("best_index").get<int>();
            j.worst_index = obj.at("worst_index").get<int>();
        }
        j.raw_response = obj.value("raw_response", "");
        j.timestamp = obj.value("timestamp", "");
        j.failure = obj.value("failure", "");
        return j;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("judgment row: ") + e.what());
    }
}

std::vector<Judgment> read_judgments_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open " + path);
    std::vector<Judgment> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(judgment_from_json_line(line));
        } catch (const SchemaError& e) {
            throw SchemaError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void write_judgments_jsonl(const std::vector<Judgment>& judgments, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    for (const auto& j : judgments) out << judgment_to_json_line(j) << '\n';
}

}  // namespace bwsq

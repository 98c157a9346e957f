#include "bwsq/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "bwsq/csv.hpp"
#include "bwsq/error.hpp"
#include "bwsq/log.hpp"
#include "bwsq/random.hpp"
#include "bwsq/unicode.hpp"

namespace bwsq {

using nlohmann::json;

std::string_view class_name(int frequency_class) {
    switch (frequency_class) {
        case 5: return "Abundant";
        case 4: return "Common";
        case 3: return "Common to Rare";
        case 2: return "Rare";
        case 1: return "Very Rare";
        case 0: return "Absent";
        case -1: return "Extinct";
        default: throw InvalidArgument("no frequency class " + std::to_string(frequency_class));
    }
}

std::vector<int> all_classes() { return {-1, 0, 1, 2, 3, 4, 5}; }

std::string_view to_string(Split s) { return s == Split::Train ? "train" : "test"; }

FileFormat format_from_path(std::string_view path) {
    if (path.ends_with(".csv")) return FileFormat::Csv;
    if (path.ends_with(".jsonl") || path.ends_with(".ndjson")) return FileFormat::Jsonl;
    throw InvalidArgument("cannot infer format from '" + std::string(path) + "' (expected .csv or .jsonl)");
}

Corpus::Corpus(std::vector<SurveyRecord> records, Provenance provenance)
    : records_(std::move(records)), provenance_(std::move(provenance)) {
    index_.reserve(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) {
        auto [it, inserted] = index_.emplace(records_[i].record_id, i);
        if (!inserted) {
            throw IntegrityError("duplicate record_id '" + records_[i].record_id + "' (rows " +
                                 std::to_string(it->second + 1) + " and " + std::to_string(i + 1) + ")");
        }
    }
}

const SurveyRecord* Corpus::find(std::string_view record_id) const {
    auto it = index_.find(std::string(record_id));
    return it == index_.end() ? nullptr : &records_[it->second];
}

const SurveyRecord& Corpus::at(std::string_view record_id) const {
    if (const auto* r = find(record_id)) return *r;
    throw IntegrityError("unknown record_id '" + std::string(record_id) + "'");
}

Corpus Corpus::subset(Split s) const {
    std::vector<SurveyRecord> out;
    for (const auto& r : records_) {
        if (r.split == s) out.push_back(r);
    }
    return Corpus(std::move(out), provenance_);
}

namespace {

constexpr const char* kRequired[] = {"record_id", "species_id", "office_id", "text"};

// Field values as strings, absent fields as nullopt. Shared by both readers
// so validation is format-independent.
struct RawRow {
    std::size_t row;
    std::map<std::string, std::string> fields;

    std::optional<std::string> get(const std::string& key) const {
        auto it = fields.find(key);
        if (it == fields.end() || it->second.empty()) return std::nullopt;
        return it->second;
    }
};

std::optional<long long> parse_int(const std::string& s) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::optional<double> parse_double(const std::string& s) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

Corpus build(const std::vector<RawRow>& rows, const std::string& source) {
    std::vector<RowIssue> issues;
    std::vector<SurveyRecord> records;
    records.reserve(rows.size());

    for (const auto& raw : rows) {
        SurveyRecord r;
        bool ok = true;
        auto fail = [&](const std::string& field, const std::string& message) {
            issues.push_back({raw.row, field, message});
            ok = false;
        };

        r.record_id = raw.get("record_id").value_or("");
        r.species_id = raw.get("species_id").value_or("");
        r.office_id = raw.get("office_id").value_or("");
        r.text = raw.get("text").value_or("");
        if (r.record_id.empty()) fail("record_id", "empty");
        if (unicode::trim(r.text).empty()) fail("text", "empty after trimming");

        if (auto v = raw.get("binary_label")) {
            auto parsed = parse_int(*v);
            if (!parsed || (*parsed != 0 && *parsed != 1)) {
                fail("binary_label", "expected 0 or 1, got '" + *v + "'");
            } else {
                r.binary_label = static_cast<int>(*parsed);
            }
        }
        if (auto v = raw.get("multi_label")) {
            auto parsed = parse_int(*v);
            if (!parsed || *parsed < kMinClass || *parsed > kMaxClass) {
                fail("multi_label", "expected integer in [-1, 5], got '" + *v + "'");
            } else {
                r.multi_label = static_cast<int>(*parsed);
            }
        }
        if (r.binary_label && r.multi_label) {
            const bool absent_class = *r.multi_label <= 0;
            if (absent_class != (*r.binary_label == 0)) {
                fail("binary_label", "inconsistent with multi_label " + std::to_string(*r.multi_label));
            }
        }
        if (auto v = raw.get("split")) {
            if (*v == "train") {
                r.split = Split::Train;
            } else if (*v == "test") {
                r.split = Split::Test;
            } else {
                fail("split", "expected 'train' or 'test', got '" + *v + "'");
            }
        }
        if (auto v = raw.get("intensity")) {
            if (auto parsed = parse_double(*v)) {
                r.intensity = *parsed;
            } else {
                fail("intensity", "not a finite number: '" + *v + "'");
            }
        }
        if (ok) records.push_back(std::move(r));
    }
    if (!issues.empty()) throw RowError(std::move(issues));
    return Corpus(std::move(records), Provenance{source, log::utc_now()});
}

std::string read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string json_scalar_to_string(const json& v) {
    if (v.is_null()) return "";
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) return csv::format_number(v.get<double>());
    if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
    return v.dump();
}

}  // namespace

Corpus ingest_csv(std::string_view content, const std::string& source) {
    auto table = csv::parse(content);
    if (table.empty()) throw SchemaError(source + ": missing header row");
    const auto& header = table.front();
    for (const char* column : kRequired) {
        if (std::find(header.begin(), header.end(), column) == header.end()) {
            throw SchemaError(source + ": missing required column '" + column + "'");
        }
    }
    std::vector<RawRow> rows;
    for (std::size_t i = 1; i < table.size(); ++i) {
        const auto& cells = table[i];
        if (cells.size() == 1 && cells[0].empty()) continue;  // blank line
        if (cells.size() != header.size()) {
            throw RowError({{i, "", "expected " + std::to_string(header.size()) + " fields, got " +
                                        std::to_string(cells.size())}});
        }
        RawRow raw{i, {}};
        for (std::size_t c = 0; c < header.size(); ++c) raw.fields[header[c]] = cells[c];
        rows.push_back(std::move(raw));
    }
    return build(rows, source);
}

Corpus ingest_jsonl(std::string_view content, const std::string& source) {
    std::vector<RawRow> rows;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
        auto nl = content.find('\n', pos);
        if (nl == std::string_view::npos) nl = content.size();
        auto line = content.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw SchemaError(source + ": line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!obj.is_object()) throw SchemaError(source + ": line " + std::to_string(line_no) + ": not an object");
        for (const char* key : kRequired) {
            if (!obj.contains(key)) {
                throw SchemaError(source + ": line " + std::to_string(line_no) + ": missing key '" + key + "'");
            }
        }
        RawRow raw{line_no, {}};
        for (auto& [key, value] : obj.items()) raw.fields[key] = json_scalar_to_string(value);
        rows.push_back(std::move(raw));
    }
    return build(rows, source);
}

Corpus ingest(const std::string& path, FileFormat format) {
    const auto content = read_all(path);
    return format == FileFormat::Csv ? ingest_csv(content, path) : ingest_jsonl(content, path);
}

Corpus ingest(const std::string& path) { return ingest(path, format_from_path(path)); }

std::string export_csv(const Corpus& corpus) {
    std::ostringstream out;
    csv::write_row(out, {"record_id", "species_id", "office_id", "text", "binary_label", "multi_label", "split",
                         "intensity"});
    auto opt_int = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); };
    for (const auto& r : corpus) {
        csv::write_row(out, {r.record_id, r.species_id, r.office_id, r.text, opt_int(r.binary_label),
                             opt_int(r.multi_label), r.split ? std::string(to_string(*r.split)) : "",
                             r.intensity ? csv::format_number(*r.intensity) : ""});
    }
    return out.str();
}

std::string export_jsonl(const Corpus& corpus) {
    std::ostringstream out;
    for (const auto& r : corpus) {
        json obj = {{"record_id", r.record_id},
                    {"species_id", r.species_id},
                    {"office_id", r.office_id},
                    {"text", r.text}};
        if (r.binary_label) obj["binary_label"] = *r.binary_label;
        if (r.multi_label) obj["multi_label"] = *r.multi_label;
        if (r.split) obj["split"] = to_string(*r.split);
        if (r.intensity) obj["intensity"] = *r.intensity;
        out << obj.dump() << '\n';
    }
    return out.str();
}

void export_corpus(const Corpus& corpus, const std::string& path, FileFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << (format == FileFormat::Csv ? export_csv(corpus) : export_jsonl(corpus));
}

std::string dedup_key(std::string_view text) { return unicode::trim(unicode::nfc(text)); }

DedupResult deduplicate(const Corpus& corpus) {
    DedupResult result;
    std::unordered_map<std::string, std::size_t> first_by_key;
    std::vector<SurveyRecord> survivors;

    for (const auto& r : corpus) {
        auto key = dedup_key(r.text);
        auto [it, inserted] = first_by_key.emplace(std::move(key), survivors.size());
        if (inserted) {
            survivors.push_back(r);
            result.kept_for[r.record_id] = r.record_id;
            continue;
        }
        const auto& kept = survivors[it->second];
        result.kept_for[r.record_id] = kept.record_id;
        if (kept.binary_label != r.binary_label || kept.multi_label != r.multi_label) {
            result.conflicts.push_back({kept.record_id, r.record_id});
            log::warn("corpus.dedup_label_conflict", {{"kept", kept.record_id}, {"dropped", r.record_id}});
        }
    }
    result.corpus = Corpus(std::move(survivors), corpus.provenance());
    return result;
}

std::size_t test_count(std::size_t n, double test_fraction) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw InvalidArgument("test_fraction must lie in (0, 1)");
    }
    // nearbyint honours the default FE_TONEAREST mode: ties go to even.
    return static_cast<std::size_t>(std::nearbyint(static_cast<double>(n) * test_fraction));
}

Corpus split(const Corpus& corpus, double test_fraction, std::uint64_t seed) {
    const auto n_test = test_count(corpus.size(), test_fraction);
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));

    auto records = corpus.records();
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        records[order[rank]].split = rank < n_test ? Split::Test : Split::Train;
    }
    return Corpus(std::move(records), corpus.provenance());
}

}  // namespace bwsq

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace bwsq {

// Ordered 7-class frequency scheme, Extinct (-1) through Abundant (5).
enum class FrequencyClass : int {
    Extinct = -1,
    Absent = 0,
    VeryRare = 1,
    Rare = 2,
    CommonToRare = 3,
    Common = 4,
    Abundant = 5,
};

inline constexpr int kMinClass = -1;
inline constexpr int kMaxClass = 5;

inline constexpr bool is_valid_class(int c) { return c >= kMinClass && c <= kMaxClass; }

// Display names in the order of the annotation scheme (Abundant first).
std::string_view class_name(int frequency_class);

// All seven classes in ascending order.
std::vector<int> all_classes();

enum class Split { Train, Test };

std::string_view to_string(Split s);

struct SurveyRecord {
    std::string record_id;
    std::string species_id;
    std::string office_id;
    std::string text;
    std::optional<int> binary_label;  // 1 = present, 0 = absent
    std::optional<int> multi_label;   // -1 .. 5
    std::optional<Split> split;
    // Planted ground-truth intensity for synthetic corpora and the mock
    // annotator. Not part of the survey data model proper.
    std::optional<double> intensity;

    bool operator==(const SurveyRecord&) const = default;
};

struct Provenance {
    std::string source;
    std::string ingested_at;
};

enum class FileFormat { Csv, Jsonl };

// Guesses from the extension; throws InvalidArgument when unknown.
FileFormat format_from_path(std::string_view path);

class Corpus {
public:
    Corpus() = default;
    // Throws IntegrityError on a duplicate record_id.
    explicit Corpus(std::vector<SurveyRecord> records, Provenance provenance = {});

    const std::vector<SurveyRecord>& records() const noexcept { return records_; }
    const Provenance& provenance() const noexcept { return provenance_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }

    const SurveyRecord* find(std::string_view record_id) const;
    // Throws IntegrityError when absent.
    const SurveyRecord& at(std::string_view record_id) const;

    auto begin() const { return records_.begin(); }
    auto end() const { return records_.end(); }

    // Records with the given split tag, in corpus order.
    Corpus subset(Split s) const;

private:
    std::vector<SurveyRecord> records_;
    Provenance provenance_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Reads and validates every row. Row-level problems are collected and thrown
// together as a RowError; missing required columns throw SchemaError; a
// repeated record_id throws IntegrityError.
Corpus ingest(const std::string& path, FileFormat format);
Corpus ingest(const std::string& path);

// Parses already-loaded content; `source` only feeds provenance.
Corpus ingest_csv(std::string_view content, const std::string& source = "<memory>");
Corpus ingest_jsonl(std::string_view content, const std::string& source = "<memory>");

// Writes the columns ingest reads; optional fields left empty/omitted.
void export_corpus(const Corpus& corpus, const std::string& path, FileFormat format);
std::string export_csv(const Corpus& corpus);
std::string export_jsonl(const Corpus& corpus);

// Key used for text equality: NFC normalized, outer white space trimmed.
std::string dedup_key(std::string_view text);

struct LabelConflict {
    std::string kept_id;
    std::string dropped_id;
};

struct DedupResult {
    Corpus corpus;
    // Every original record_id -> the record_id that now carries its text.
    std::map<std::string, std::string> kept_for;
    // Duplicates whose gold labels disagreed with the survivor's.
    std::vector<LabelConflict> conflicts;
};

// First occurrence wins; survivors keep their relative order.
DedupResult deduplicate(const Corpus& corpus);

// Number of test records for n items: n * fraction rounded half to even.
std::size_t test_count(std::size_t n, double test_fraction);

// Assigns train/test tags. test_fraction must lie in (0, 1).
Corpus split(const Corpus& corpus, double test_fraction, std::uint64_t seed);

}  // namespace bwsq

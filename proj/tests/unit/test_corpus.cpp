#include <doctest.h>

#include <set>

#include "bwsq/corpus.hpp"
#include "bwsq/csv.hpp"
#include "bwsq/error.hpp"
#include "bwsq/synth.hpp"
#include "bwsq/unicode.hpp"
#include "test_support.hpp"

using namespace bwsq;

namespace {

const char* kCsv =
    "record_id,species_id,office_id,text,binary_label,multi_label,split\n"
    "R1,wolf,FA001,Häufig,1,4,train\n"
    "R2,wolf,FA002,\"Selten, nur im Winter\",1,2,test\n"
    "R3,lynx,FA001,Nicht vorhanden,0,0,\n";

}  // namespace

TEST_CASE("csv parser handles quotes, doubled quotes, line breaks and BOM") {
    const auto rows = csv::parse("\xEF\xBB\xBF" "a,b\n\"x,1\",\"say \"\"hi\"\"\"\n\"two\nlines\",z\n");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == csv::Row{"a", "b"});
    CHECK(rows[1] == csv::Row{"x,1", "say \"hi\""});
    CHECK(rows[2] == csv::Row{"two\nlines", "z"});
    CHECK_THROWS_AS(csv::parse("a,\"open\n"), SchemaError);
}

TEST_CASE("csv escape and number formatting round-trip") {
    CHECK(csv::escape("plain") == "plain");
    CHECK(csv::escape("a,b") == "\"a,b\"");
    CHECK(csv::escape("q\"q") == "\"q\"\"q\"");
    for (double v : {0.1, 1.0 / 3.0, 0.875, -2.5e-7, 12345.678}) {
        CHECK(std::stod(csv::format_number(v)) == v);
    }
}

TEST_CASE("unicode helpers") {
    CHECK(unicode::trim("\xC2\xA0 text \xE2\x80\x83") == "text");
    // Decomposed "a" + combining diaeresis composes to U+00E4.
    CHECK(unicode::nfc("a\xCC\x88") == "\xC3\xA4");
    CHECK(unicode::lower("GROSS Straße") == "gross straße");
    const auto tokens = unicode::tokenize("Sehr häufig, im Wald! (Wölfe)");
    CHECK(tokens == std::vector<std::string>{"sehr", "häufig", "im", "wald", "wölfe"});
}

TEST_CASE("ingest csv reads labels and split") {
    const auto c = ingest_csv(kCsv);
    REQUIRE(c.size() == 3);
    CHECK(c.at("R2").text == "Selten, nur im Winter");
    CHECK(c.at("R1").multi_label == 4);
    CHECK(c.at("R1").split == Split::Train);
    CHECK_FALSE(c.at("R3").split.has_value());
    CHECK(c.subset(Split::Test).size() == 1);
}

TEST_CASE("ingest rejects bad rows, missing columns and duplicate ids") {
    CHECK_THROWS_AS(ingest_csv("record_id,species_id,text\nR1,w,x\n"), SchemaError);
    try {
        ingest_csv("record_id,species_id,office_id,text,multi_label\nR1,w,o,  ,9\nR2,w,o,ok,1\n");
        FAIL("expected RowError");
    } catch (const RowError& e) {
        REQUIRE(e.issues().size() == 2);
        CHECK(e.issues()[0].row == 1);
    }
    CHECK_THROWS_AS(ingest_csv("record_id,species_id,office_id,text\nR1,w,o,a\nR1,w,o,b\n"), IntegrityError);
    // presence label contradicting an absent class
    CHECK_THROWS_AS(ingest_csv("record_id,species_id,office_id,text,binary_label,multi_label\nR1,w,o,a,1,0\n"),
                    RowError);
}

TEST_CASE("csv and jsonl export round-trip") {
    const auto c = ingest_csv(kCsv);
    CHECK(ingest_csv(export_csv(c)).records() == c.records());
    CHECK(ingest_jsonl(export_jsonl(c)).records() == c.records());

    testing::TempDir dir;
    export_corpus(c, dir.file("c.jsonl"), FileFormat::Jsonl);
    CHECK(ingest(dir.file("c.jsonl")).records() == c.records());
    CHECK_THROWS_AS(format_from_path("corpus.xlsx"), InvalidArgument);
}

TEST_CASE("deduplicate keeps the first occurrence and reports label conflicts") {
    std::vector<SurveyRecord> rs(3);
    rs[0] = {"A", "s", "o", "Häufig", 1, 4, {}, {}};
    rs[1] = {"B", "s", "o", " Ha\xCC\x88ufig ", 1, 5, {}, {}};
    rs[2] = {"C", "s", "o", "Selten", 1, 2, {}, {}};
    const auto d = deduplicate(Corpus(rs));
    CHECK(d.corpus.size() == 2);
    CHECK(d.kept_for.at("B") == "A");
    REQUIRE(d.conflicts.size() == 1);
    CHECK(d.conflicts[0].dropped_id == "B");
}

TEST_CASE("split uses half-to-even rounding and is seed-deterministic") {
    CHECK(test_count(10, 0.25) == 2);  // 2.5 -> 2
    CHECK(test_count(14, 0.25) == 4);  // 3.5 -> 4
    CHECK(test_count(1000, 0.2) == 200);

    SynthConfig cfg;
    cfg.n_records = 101;
    cfg.test_fraction = 0;
    const auto c = synthesize_corpus(cfg);
    const auto a = split(c, 0.2, 3);
    const auto b = split(c, 0.2, 3);
    CHECK(a.records() == b.records());
    CHECK(a.subset(Split::Test).size() == test_count(101, 0.2));
    CHECK_THROWS_AS(split(c, 1.0, 3), InvalidArgument);
}

TEST_CASE("synthetic corpus has unique texts and consistent labels") {
    SynthConfig cfg;
    cfg.n_records = 500;
    const auto c = synthesize_corpus(cfg);
    std::set<std::string> texts;
    for (const auto& r : c) {
        texts.insert(r.text);
        REQUIRE(r.multi_label.has_value());
        CHECK(*r.binary_label == (*r.multi_label >= 1 ? 1 : 0));
        const double lo = (*r.multi_label + 1) / 7.0;
        CHECK(*r.intensity >= lo);
        CHECK(*r.intensity < lo + 1.0 / 7.0);
    }
    CHECK(texts.size() == c.size());
}

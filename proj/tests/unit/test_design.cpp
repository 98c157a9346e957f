#include <doctest.h>

#include <set>

#include "bwsq/design.hpp"
#include "bwsq/error.hpp"
#include "test_support.hpp"

using namespace bwsq;

namespace {

std::vector<std::string> ids(int n) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back("R" + std::to_string(1000 + i));
    return out;
}

}  // namespace

TEST_CASE("each record appears N*k times and the design has N*n tuples") {
    for (auto [n, k, N] : std::vector<std::tuple<int, int, int>>{{40, 4, 2}, {30, 3, 1}, {100, 5, 3}}) {
        DesignParams p;
        p.set_size = k;
        p.repetitions = N;
        p.seed = 11;
        const auto d = generate_design(ids(n), p);
        CHECK(d.tuples.size() == static_cast<std::size_t>(N * n));
        const auto report = verify_design(d);
        CHECK(report.passed());
        CHECK(report.expected_appearances == N * k);
        for (const auto& t : d.tuples) {
            CHECK(t.member_ids.size() == static_cast<std::size_t>(k));
            CHECK(std::set<std::string>(t.member_ids.begin(), t.member_ids.end()).size() == t.member_ids.size());
        }
    }
}

TEST_CASE("design is deterministic per seed") {
    DesignParams p;
    p.seed = 5;
    const auto a = generate_design(ids(40), p);
    const auto b = generate_design(ids(40), p);
    CHECK(a.tuples == b.tuples);
    p.seed = 6;
    CHECK_FALSE(generate_design(ids(40), p).tuples == a.tuples);
}

TEST_CASE("divisibility and size errors") {
    DesignParams p;
    CHECK_THROWS_AS(generate_design(ids(42), p), DesignError);
    CHECK_THROWS_AS(generate_design(ids(4), p), DesignError);  // n < 2k
    p.truncate = true;
    const auto d = generate_design(ids(42), p);
    CHECK(d.dropped_ids.size() == 2);
    CHECK(d.tuples.size() == 80);
    CHECK(verify_design(d).passed());
}

TEST_CASE("verify_design flags planted defects") {
    Design d;
    d.params.set_size = 2;
    d.params.repetitions = 1;
    d.tuples = {{"T1", {"a", "b"}, 0}, {"T2", {"b", "a"}, 1}, {"T3", {"c", "c"}, 1}};
    const auto r = verify_design(d, 2);
    CHECK_FALSE(r.passed());
    REQUIRE(r.duplicate_tuples.size() == 1);
    CHECK(r.duplicate_tuples[0] == std::pair<std::string, std::string>{"T1", "T2"});
    CHECK(r.within_tuple_duplicates == std::vector<std::string>{"T3"});
}

TEST_CASE("design jsonl round-trip") {
    DesignParams p;
    p.seed = 9;
    const auto d = generate_design(ids(24), p);
    const auto back = design_from_jsonl(design_to_jsonl(d));
    CHECK(back.tuples == d.tuples);
    CHECK(back.params.set_size == 4);
    CHECK(back.params.repetitions == 2);
    CHECK(verify_design(back).passed());

    testing::TempDir dir;
    write_design_jsonl(d, dir.file("d.jsonl"));
    CHECK(read_design_jsonl(dir.file("d.jsonl")).tuples == d.tuples);
    CHECK_THROWS_AS(design_from_jsonl("{not json}\n"), SchemaError);
}

#include <doctest.h>

#include <set>

#include "bwsq/annotate.hpp"
#include "bwsq/design.hpp"
#include "bwsq/error.hpp"
#include "bwsq/prompts.hpp"
#include "bwsq/synth.hpp"
#include "test_support.hpp"

using namespace bwsq;

namespace {

Corpus corpus_of(std::size_t n) {
    SynthConfig cfg;
    cfg.n_records = n;
    cfg.test_fraction = 0;
    return synthesize_corpus(cfg);
}

Design design_of(const Corpus& c, int N = 1) {
    DesignParams p;
    p.repetitions = N;
    p.seed = 1;
    return generate_design(c, p);
}

CampaignOptions fast_options(const std::string& name) {
    CampaignOptions o;
    o.annotator = AnnotatorId::llm(name);
    o.retry_backoff = std::chrono::milliseconds(0);
    return o;
}

LlmEndpointConfig endpoint(const testing::MockChatServer& server) {
    LlmEndpointConfig cfg;
    cfg.base_url = server.base_url();
    cfg.model_name = "scripted";
    cfg.api_key = "test";
    cfg.timeout = std::chrono::milliseconds(5000);
    return cfg;
}

}  // namespace

TEST_CASE("bws prompt lists the texts in order") {
    const auto p = render_bws_prompt(std::vector<std::string>{"eins", "zwei", "drei", "vier", "fünf"});
    CHECK(p.system.find("Best-Worst Scaling") != std::string::npos);
    CHECK(p.user.find("1. eins\n") != std::string::npos);
    CHECK(p.user.find("5. fünf\n") != std::string::npos);
    CHECK(MockIntensityClient::extract_texts(p.user) ==
          std::vector<std::string>{"eins", "zwei", "drei", "vier", "fünf"});
    CHECK_THROWS_AS(render_multiclass_prompt(std::string_view("")), InvalidArgument);
}

TEST_CASE("bws response parsing") {
    CHECK(parse_bws_response(R"({"Best": 2, "Worst": 4})", 4).ok());
    const auto wrapped = parse_bws_response("Sure!\n```json\n{ \"Best\": [3],\n  \"Worst\": [\"1\"]}\n```", 4);
    REQUIRE(wrapped.ok());
    CHECK(wrapped.best_index == 3);
    CHECK(wrapped.worst_index == 1);
    CHECK(parse_bws_response(R"({"best": 1, "worst": 2})", 4).ok());
    CHECK(parse_bws_response(R"({"Best": 2, "Worst": 2})", 4).status == ParseStatus::Tie);
    CHECK(parse_bws_response(R"({"Best": 5, "Worst": 1})", 4).status == ParseStatus::OutOfRange);
    CHECK(parse_bws_response(R"({"Best": "x", "Worst": 1})", 4).status == ParseStatus::BadValue);
    CHECK(parse_bws_response(R"({"Top": 1})", 4).status == ParseStatus::MissingKeys);
    CHECK(parse_bws_response("I cannot decide.", 4).status == ParseStatus::NoJson);
}

TEST_CASE("class response parsing") {
    CHECK(parse_class_response("Common to Rare (3)") == 3);
    CHECK(parse_class_response("The answer is: Extinct") == -1);
    CHECK(parse_class_response("rare") == 2);
    CHECK_FALSE(parse_class_response("no idea").has_value());
}

TEST_CASE("annotator id and judgment lines round-trip") {
    CHECK(AnnotatorId::parse("human:AR") == AnnotatorId::human("AR"));
    CHECK(AnnotatorId::parse("gpt-4") == AnnotatorId::llm("gpt-4"));
    Judgment j;
    j.tuple_id = "T000001";
    j.annotator = AnnotatorId::llm("m");
    j.best_index = 1;
    j.worst_index = 3;
    j.valid = true;
    j.raw_response = "{\"Best\":1}\nline";
    j.timestamp = "2026-01-01T00:00:00Z";
    CHECK(judgment_from_json_line(judgment_to_json_line(j)) == j);
    CHECK(satisfies_validity(j, 4));
    j.worst_index = 1;
    CHECK_FALSE(satisfies_validity(j, 4));
    CHECK_THROWS_AS(judgment_from_json_line("{"), SchemaError);
}

TEST_CASE("journal replay: later rows win and a torn tail is dropped") {
    testing::TempDir dir;
    const auto path = dir.file("j.jsonl");
    Judgment j;
    j.tuple_id = "T1";
    j.annotator = AnnotatorId::llm("m");
    {
        JudgmentStore s(path);
        s.put(j);
        j.valid = true;
        j.best_index = 1;
        j.worst_index = 2;
        s.put(j);
    }
    {
        std::ofstream out(path, std::ios::app);
        out << "{\"tuple_id\":\"T2\",\"annot";
    }
    JudgmentStore again(path);
    CHECK(again.size() == 1);
    CHECK(again.has_valid("T1", AnnotatorId::llm("m")));
    again.compact();
    CHECK(testing::count_lines(path) == 1);

    testing::spit(path, "garbage\n{\"tuple_id\":\"T1\"}\n");
    CHECK_THROWS_AS(JudgmentStore{path}, SchemaError);
}

TEST_CASE("mock intensity client answers extremes") {
    const auto c = corpus_of(40);
    const auto d = design_of(c);
    MockIntensityClient client(c);
    testing::TempDir dir;
    JudgmentStore store(dir.file("j.jsonl"));
    const auto r = annotate_design(d, c, client, store, fast_options("mock"));
    CHECK(r.stats.valid == d.tuples.size());
    for (const auto& j : r.judgments) {
        const auto* t = d.find(j.tuple_id);
        double hi = -1, lo = 2;
        for (const auto& id : t->member_ids) {
            hi = std::max(hi, *c.at(id).intensity);
            lo = std::min(lo, *c.at(id).intensity);
        }
        CHECK(*c.at(t->member_ids[static_cast<std::size_t>(j.best_index - 1)]).intensity == hi);
        CHECK(*c.at(t->member_ids[static_cast<std::size_t>(j.worst_index - 1)]).intensity == lo);
    }
}

TEST_CASE("http campaign: retries on garbage, persists ties and transport errors as invalid") {
    const auto c = corpus_of(40);
    const auto d = design_of(c);
    auto texts_of = [&](const ComparisonTuple& t) {
        std::vector<std::string> out;
        for (const auto& id : t.member_ids) out.push_back(c.at(id).text);
        return out;
    };
    const auto tie = texts_of(d.tuples[0]);
    const auto garbage = texts_of(d.tuples[1]);
    const auto flaky = texts_of(d.tuples[2]);
    std::atomic<int> flaky_calls{0};
    testing::MockChatServer server([&](const std::string& user) -> std::optional<std::string> {
        const auto texts = MockIntensityClient::extract_texts(user);
        if (texts == tie) return R"({"Best": 2, "Worst": 2})";
        if (texts == garbage) return "I would rather not say.";
        if (texts == flaky && flaky_calls++ == 0) return std::nullopt;
        return R"({"Best": 1, "Worst": 4})";
    });
    HttpChatClient client(endpoint(server));
    testing::TempDir dir;
    JudgmentStore store(dir.file("j.jsonl"));
    auto opts = fast_options("scripted");
    opts.max_retries = 1;
    opts.parallelism = 3;
    const auto r = annotate_design(d, c, client, store, opts);

    CHECK(r.judgments.size() == d.tuples.size());
    CHECK(r.stats.invalid == 2);
    CHECK(r.stats.valid == d.tuples.size() - 2);
    // two attempts for tie, garbage and the flaky tuple; one for the rest
    CHECK(r.stats.requests == d.tuples.size() + 3);
    const auto tie_row = store.find(d.tuples[0].tuple_id, opts.annotator);
    REQUIRE(tie_row.has_value());
    CHECK_FALSE(tie_row->valid);
    CHECK(tie_row->best_index == 0);
    CHECK(tie_row->raw_response.find("\"Best\": 2") != std::string::npos);
    CHECK(store.has_valid(d.tuples[2].tuple_id, opts.annotator));

    // a rerun only retries the invalid tuples
    server.clear();
    const auto again = annotate_design(d, c, client, store, opts);
    CHECK(again.stats.skipped == d.tuples.size() - 2);
    CHECK(server.request_count() == 4);
}

TEST_CASE("cancellation stops early and a rerun resumes without repeats") {
    const auto c = corpus_of(80);
    const auto d = design_of(c, 2);
    std::atomic<bool> cancel{false};
    testing::MockChatServer server([&](const std::string&) -> std::optional<std::string> {
        return R"({"Best": 1, "Worst": 2})";
    });
    HttpChatClient client(endpoint(server));
    testing::TempDir dir;
    JudgmentStore store(dir.file("j.jsonl"));
    auto opts = fast_options("scripted");
    opts.cancel = &cancel;

    struct Cancelling : ChatClient {
        ChatClient& inner;
        std::atomic<bool>& flag;
        int n = 0;
        Cancelling(ChatClient& c, std::atomic<bool>& f) : inner(c), flag(f) {}
        std::string complete(const ChatPrompt& p) override {
            if (++n == 50) flag = true;
            return inner.complete(p);
        }
    } cancelling(client, cancel);

    const auto first = annotate_design(d, c, cancelling, store, opts);
    CHECK(first.stats.cancelled);
    const auto done = store.size();
    CHECK(done >= 50);
    CHECK(done < d.tuples.size());

    cancel = false;
    server.clear();
    const auto second = annotate_design(d, c, client, store, opts);
    CHECK_FALSE(second.stats.cancelled);
    CHECK(server.request_count() == d.tuples.size() - done);
    const auto reqs = server.requests();
    CHECK(std::set<std::string>(reqs.begin(), reqs.end()).size() == reqs.size());
    CHECK(store.size() == d.tuples.size());
}

TEST_CASE("endpoint errors carry the status") {
    testing::MockChatServer server([](const std::string&) -> std::optional<std::string> { return std::nullopt; });
    HttpChatClient client(endpoint(server));
    try {
        client.complete({"s", "u"});
        FAIL("expected EndpointError");
    } catch (const EndpointError& e) {
        CHECK(e.status() == 500);
    }
    LlmEndpointConfig cfg;
    cfg.base_url = "http://127.0.0.1:1/v1";
    cfg.model_name = "x";
    cfg.timeout = std::chrono::milliseconds(500);
    HttpChatClient dead(cfg);
    CHECK_THROWS_AS(dead.complete({"s", "u"}), EndpointError);
    cfg.model_name.clear();
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("request body and content extraction") {
    LlmEndpointConfig cfg;
    cfg.model_name = "m";
    cfg.temperature = 0.5;
    const auto body = nlohmann::json::parse(HttpChatClient::request_body(cfg, {"sys", "usr"}));
    CHECK(body["model"] == "m");
    CHECK(body["temperature"] == 0.5);
    CHECK(body["messages"][0]["role"] == "system");
    CHECK(body["messages"][1]["content"] == "usr");
    CHECK(HttpChatClient::extract_content(R"({"choices":[{"message":{"content":"hi"}}]})") == "hi");
    CHECK_THROWS_AS(HttpChatClient::extract_content(R"({"choices":[]})"), EndpointError);
}

TEST_CASE("rate limiter spaces requests") {
    RateLimiter limiter(600.0);  // one token per 100 ms
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < 4; ++i) limiter.acquire();
    const auto elapsed = std::chrono::steady_clock::now() - start;
    CHECK(elapsed >= std::chrono::milliseconds(280));
}

TEST_CASE("zero-shot labelling with the gold mock") {
    const auto c = corpus_of(30);
    MockLabelClient client(c);
    testing::TempDir dir;
    ZeroShotStore store(dir.file("z.jsonl"));
    const auto r = annotate_zero_shot(c, client, store, fast_options("labels"));
    REQUIRE(r.labels.size() == c.size());
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(r.labels[i].predicted_class == c.records()[i].multi_label);
    ZeroShotStore reread(dir.file("z.jsonl"));
    CHECK(reread.size() == c.size());
}

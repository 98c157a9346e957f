#include "bwsq/annotate.hpp"

#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "bwsq/error.hpp"
#include "bwsq/log.hpp"

namespace bwsq {

using nlohmann::json;

CampaignOptions CampaignOptions::from(const LlmEndpointConfig& cfg) {
    CampaignOptions o;
    o.annotator = AnnotatorId::llm(cfg.model_name);
    o.max_retries = cfg.max_retries;
    o.parallelism = cfg.parallelism;
    o.requests_per_minute = cfg.requests_per_minute;
    o.retry_backoff = cfg.retry_backoff;
    return o;
}

namespace {

// Outcome of one item after all attempts.
struct Attempted {
    bool finished = false;  // false when cancelled before a final answer
    bool valid = false;
};

bool cancelled(const CampaignOptions& o) { return o.cancel && o.cancel->load(); }

// Runs process(i) for every pending index on `parallelism` workers. The
// first exception stops the remaining workers and is rethrown.
template <typename Process>
void for_each_pending(const std::vector<std::size_t>& pending, int parallelism, const CampaignOptions& options,
                      CampaignStats& stats, Process process) {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::mutex stats_mutex;

    auto worker = [&] {
        for (;;) {
            if (failed || cancelled(options)) return;
            const auto slot = next.fetch_add(1);
            if (slot >= pending.size()) return;
            try {
                const Attempted a = process(pending[slot]);
                std::lock_guard lock(stats_mutex);
                if (!a.finished) {
                    stats.cancelled = true;
                } else if (a.valid) {
                    ++stats.valid;
                } else {
                    ++stats.invalid;
                }
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
                return;
            }
        }
    };

    const auto n_workers = static_cast<std::size_t>(std::max(1, parallelism));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> threads;
        for (std::size_t i = 0; i < std::min(n_workers, pending.size()); ++i) threads.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);
    if (cancelled(options)) stats.cancelled = true;
}

// One request/parse cycle with retries. `parse` returns an empty string on
// success or a failure reason.
struct AttemptLog {
    std::string raw;
    std::string failure;
    bool ok = false;
    bool finished = false;
};

template <typename Parse>
AttemptLog attempt_with_retries(ChatClient& client, const ChatPrompt& prompt, const CampaignOptions& options,
                                RateLimiter& limiter, std::atomic<std::size_t>& requests, const std::string& context,
                                Parse parse) {
    AttemptLog log_entry;
    for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
        if (cancelled(options)) return log_entry;
        limiter.acquire();
        ++requests;
        try {
            log_entry.raw = client.complete(prompt);
            log_entry.failure = parse(log_entry.raw);
            if (log_entry.failure.empty()) {
                log_entry.ok = true;
                log_entry.finished = true;
                return log_entry;
            }
            log::debug("annotate.parse_failure", {{"item", context}, {"reason", log_entry.failure}});
        } catch (const EndpointError& e) {
            log_entry.raw.clear();
            log_entry.failure = std::string("endpoint: ") + e.what();
            log::warn("annotate.endpoint_error",
                      {{"item", context}, {"status", std::to_string(e.status())}, {"error", e.what()}});
            if (attempt < options.max_retries && options.retry_backoff.count() > 0) {
                std::this_thread::sleep_for(options.retry_backoff * (1 << std::min(attempt, 6)));
            }
        }
    }
    log_entry.finished = true;
    return log_entry;
}

}  // namespace

CampaignResult annotate_design(const Design& design, const Corpus& corpus, ChatClient& client, JudgmentStore& store,
                               const CampaignOptions& options) {
    if (options.annotator.name.empty()) throw InvalidArgument("campaign annotator name is empty");
    if (options.max_retries < 0) throw InvalidArgument("max_retries must be >= 0");

    // Resolve every prompt up front so a dangling member id fails before any
    // request is made.
    std::vector<ChatPrompt> prompts;
    prompts.reserve(design.tuples.size());
    for (const auto& t : design.tuples) prompts.push_back(render_bws_prompt(t, corpus));

    CampaignResult result;
    result.stats.items = design.tuples.size();
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < design.tuples.size(); ++i) {
        if (store.has_valid(design.tuples[i].tuple_id, options.annotator)) {
            ++result.stats.skipped;
        } else {
            pending.push_back(i);
        }
    }

    RateLimiter limiter(options.requests_per_minute, std::max(1, options.parallelism));
    std::atomic<std::size_t> requests{0};

    for_each_pending(pending, options.parallelism, options, result.stats, [&](std::size_t i) -> Attempted {
        const auto& tuple = design.tuples[i];
        const int k = static_cast<int>(tuple.member_ids.size());
        BwsPick pick;
        auto outcome = attempt_with_retries(client, prompts[i], options, limiter, requests, tuple.tuple_id,
                                            [&](const std::string& raw) {
                                                pick = parse_bws_response(raw, k);
                                                return pick.ok() ? std::string() : std::string(to_string(pick.status));
                                            });
        if (!outcome.finished) return {};

        Judgment j;
        j.tuple_id = tuple.tuple_id;
        j.annotator = options.annotator;
        j.raw_response = std::move(outcome.raw);
        j.timestamp = log::utc_now();
        j.valid = outcome.ok;
        if (outcome.ok) {
            j.best_index = pick.best_index;
            j.worst_index = pick.worst_index;
        } else {
            j.failure = std::move(outcome.failure);
        }
        store.put(j);
        return {true, j.valid};
    });
    result.stats.requests = requests.load();

    for (const auto& t : design.tuples) {
        if (auto j = store.find(t.tuple_id, options.annotator)) result.judgments.push_back(std::move(*j));
    }
    log::info("annotate.campaign_done", {{"annotator", options.annotator.str()},
                                          {"requests", std::to_string(result.stats.requests)},
                                          {"valid", std::to_string(result.stats.valid)},
                                          {"invalid", std::to_string(result.stats.invalid)},
                                          {"skipped", std::to_string(result.stats.skipped)}});
    return result;
}

std::string ZeroShotCodec::encode(const ZeroShotLabel& l) {
    json obj = {{"record_id", l.record_id},
                {"annotator", l.annotator.str()},
                {"predicted_class", l.predicted_class ? json(*l.predicted_class) : json(nullptr)},
                {"valid", l.valid()},
                {"raw_response", l.raw_response},
                {"timestamp", l.timestamp}};
    if (!l.failure.empty()) obj["failure"] = l.failure;
    return obj.dump();
}

ZeroShotLabel ZeroShotCodec::decode(std::string_view line) {
    try {
        const auto obj = json::parse(line);
        ZeroShotLabel l;
        l.record_id = obj.at("record_id").get<std::string>();
        l.annotator = AnnotatorId::parse(obj.at("annotator").get<std::string>());
        if (const auto& c = obj.at("predicted_class"); !c.is_null()) {
            const int cls = c.get<int>();
            if (!is_valid_class(cls)) throw SchemaError("predicted_class out of range");
            l.predicted_class = cls;
        }
        l.raw_response = obj.value("raw_response", "");
        l.timestamp = obj.value("timestamp", "");
        l.failure = obj.value("failure", "");
        return l;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("zero-shot row: ") + e.what());
    }
}

ZeroShotResult annotate_zero_shot(const Corpus& corpus, ChatClient& client, ZeroShotStore& store,
                                  const CampaignOptions& options) {
    if (options.annotator.name.empty()) throw InvalidArgument("campaign annotator name is empty");

    const auto& records = corpus.records();
    std::vector<ChatPrompt> prompts;
    prompts.reserve(records.size());
    for (const auto& r : records) prompts.push_back(render_multiclass_prompt(r));

    auto key_of = [&](const SurveyRecord& r) { return ZeroShotCodec::key_for(r.record_id, options.annotator); };

    ZeroShotResult result;
    result.stats.items = records.size();
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto existing = store.get(key_of(records[i]));
        if (existing && existing->valid()) {
            ++result.stats.skipped;
        } else {
            pending.push_back(i);
        }
    }

    RateLimiter limiter(options.requests_per_minute, std::max(1, options.parallelism));
    std::atomic<std::size_t> requests{0};

    for_each_pending(pending, options.parallelism, options, result.stats, [&](std::size_t i) -> Attempted {
        std::optional<int> cls;
        auto outcome = attempt_with_retries(client, prompts[i], options, limiter, requests, records[i].record_id,
                                            [&](const std::string& raw) {
                                                cls = parse_class_response(raw);
                                                return cls ? std::string() : std::string("no_class");
                                            });
        if (!outcome.finished) return {};
        ZeroShotLabel label;
        label.record_id = records[i].record_id;
        label.annotator = options.annotator;
        label.raw_response = std::move(outcome.raw);
        label.timestamp = log::utc_now();
        if (outcome.ok) {
            label.predicted_class = cls;
        } else {
            label.failure = std::move(outcome.failure);
        }
        store.put(label);
        return {true, label.valid()};
    });
    result.stats.requests = requests.load();

    for (const auto& r : records) {
        if (auto l = store.get(key_of(r))) result.labels.push_back(std::move(*l));
    }
    return result;
}

MockIntensityClient::MockIntensityClient(const Corpus& corpus) {
    for (const auto& r : corpus) {
        if (!r.intensity) throw InvalidArgument("record '" + r.record_id + "' has no intensity for the mock annotator");
        intensity_by_text_.emplace(r.text, *r.intensity);
    }
}

std::vector<std::string> MockIntensityClient::extract_texts(const std::string& user_prompt) {
    const std::string tail = "\nJSON format for your answer:";
    const auto end = user_prompt.rfind(tail);
    auto pos = user_prompt.find("\n1. ");
    if (end == std::string::npos || pos == std::string::npos || pos > end) return {};
    pos += 4;

    std::vector<std::string> texts;
    for (int next = 2;; ++next) {
        const auto marker = "\n" + std::to_string(next) + ". ";
        const auto at = user_prompt.find(marker, pos);
        if (at == std::string::npos || at > end) {
            texts.push_back(user_prompt.substr(pos, end - pos));
            return texts;
        }
        texts.push_back(user_prompt.substr(pos, at - pos));
        pos = at + marker.size();
    }
}

std::string MockIntensityClient::complete(const ChatPrompt& prompt) {
    const auto texts = extract_texts(prompt.user);
    if (texts.size() < 2) throw EndpointError("mock annotator: prompt lists fewer than two texts", 400);
    std::vector<double> values;
    for (const auto& t : texts) {
        auto it = intensity_by_text_.find(t);
        if (it == intensity_by_text_.end()) throw EndpointError("mock annotator: unknown text in prompt", 400);
        values.push_back(it->second);
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    std::size_t worst = best == 0 ? 1 : 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i != best && values[i] <= values[worst]) worst = i;
    }
    std::ostringstream out;
    out << "{\"Best\": [" << best + 1 << "], \"Worst\": [" << worst + 1 << "]}";
    return out.str();
}

MockLabelClient::MockLabelClient(const Corpus& corpus) {
    for (const auto& r : corpus) {
        if (r.multi_label) label_by_text_.emplace(r.text, *r.multi_label);
    }
}

std::string MockLabelClient::complete(const ChatPrompt& prompt) {
    const std::string marker = "Here is the text to classify:\n";
    const auto at = prompt.user.rfind(marker);
    if (at == std::string::npos) throw EndpointError("mock labeller: not a classification prompt", 400);
    auto it = label_by_text_.find(prompt.user.substr(at + marker.size()));
    if (it == label_by_text_.end()) return "unsure";
    return std::string(class_name(it->second)) + " (" + std::to_string(it->second) + ")";
}

}  // namespace bwsq

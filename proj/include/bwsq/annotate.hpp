#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bwsq/corpus.hpp"
#include "bwsq/design.hpp"
#include "bwsq/judgment.hpp"
#include "bwsq/journal.hpp"
#include "bwsq/llm_client.hpp"
#include "bwsq/prompts.hpp"

namespace bwsq {

struct CampaignOptions {
    AnnotatorId annotator;
    // Extra attempts per item after a parse failure or transport error.
    int max_retries = 3;
    int parallelism = 1;
    double requests_per_minute = 0.0;
    std::chrono::milliseconds retry_backoff{1000};
    // Checked between requests; set it to stop a campaign early. Items
    // finished so far stay persisted.
    const std::atomic<bool>* cancel = nullptr;

    static CampaignOptions from(const LlmEndpointConfig& cfg);
};

struct CampaignStats {
    std::size_t items = 0;
    std::size_t skipped = 0;   // already valid in the store
    std::size_t requests = 0;  // HTTP calls issued, retries included
    std::size_t valid = 0;
    std::size_t invalid = 0;
    bool cancelled = false;
};

struct CampaignResult {
    // Current store rows of this annotator, in design order.
    std::vector<Judgment> judgments;
    CampaignStats stats;
};

// Sends every tuple without a stored valid judgment to `client`, retrying
// unparseable replies and transport errors up to max_retries. Each finished
// tuple is persisted immediately, valid or not, so an interrupted campaign
// resumes where it stopped.
CampaignResult annotate_design(const Design& design, const Corpus& corpus, ChatClient& client,
                               JudgmentStore& store, const CampaignOptions& options);

struct ZeroShotLabel {
    std::string record_id;
    AnnotatorId annotator;
    std::optional<int> predicted_class;
    std::string raw_response;
    std::string timestamp;
    std::string failure;

    bool valid() const { return predicted_class.has_value(); }
    bool operator==(const ZeroShotLabel&) const = default;
};

struct ZeroShotCodec {
    using Row = ZeroShotLabel;
    static std::string key_for(const std::string& record_id, const AnnotatorId& a) {
        return record_id + '\x1f' + a.str();
    }
    static std::string key(const ZeroShotLabel& l) { return key_for(l.record_id, l.annotator); }
    static std::string encode(const ZeroShotLabel& l);
    static ZeroShotLabel decode(std::string_view line);
};

using ZeroShotStore = Journal<ZeroShotCodec>;

struct ZeroShotResult {
    std::vector<ZeroShotLabel> labels;  // corpus order
    CampaignStats stats;
};

ZeroShotResult annotate_zero_shot(const Corpus& corpus, ChatClient& client, ZeroShotStore& store,
                                  const CampaignOptions& options);

// Offline annotator answering Best-Worst prompts from a planted intensity per
// text: best is the most intense text, worst the least (ties resolved towards
// the earlier position for best and the later one for worst). It reads the
// numbered texts back out of the rendered prompt, so prompts and parsing are
// exercised exactly as with a remote model.
class MockIntensityClient final : public ChatClient {
public:
    // Throws InvalidArgument when a record has no intensity.
    explicit MockIntensityClient(const Corpus& corpus);

    std::string complete(const ChatPrompt& prompt) override;

    // Texts listed in a rendered Best-Worst user prompt.
    static std::vector<std::string> extract_texts(const std::string& user_prompt);

private:
    std::map<std::string, double> intensity_by_text_;
};

// Offline zero-shot classifier answering with each text's gold multi_label,
// e.g. "Common (4)". Records without a multi_label are answered "unsure".
class MockLabelClient final : public ChatClient {
public:
    explicit MockLabelClient(const Corpus& corpus);

    std::string complete(const ChatPrompt& prompt) override;

private:
    std::map<std::string, int> label_by_text_;
};

}  // namespace bwsq

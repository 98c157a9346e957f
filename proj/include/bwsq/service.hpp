#pragma once

#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "bwsq/corpus.hpp"
#include "bwsq/design.hpp"
#include "bwsq/error.hpp"
#include "bwsq/judgment.hpp"

namespace httplib {
class Server;
}

namespace bwsq {

// Which tuples each human annotator judges. Loaded from JSON:
//   {"name": "...", "corpus": "c.jsonl", "design": "d.jsonl",
//    "annotators": {"AR": ["T000001", ...], ...}}
// Relative paths resolve against the campaign file's directory.
struct Campaign {
    std::string name;
    Corpus corpus;
    Design design;
    std::map<std::string, std::vector<std::string>> subsets;

    // Throws IntegrityError when a subset names an unknown tuple, repeats
    // a tuple, or a tuple member is missing from the corpus.
    void validate() const;
};

Campaign load_campaign(const std::string& path);

struct Assignment {
    std::string annotator_id;
    std::string tuple_id;
    std::size_t position = 0;  // 1-based within the annotator's subset
    std::size_t total = 0;
    std::vector<std::string> texts;  // design order
    std::string issued_at;
};

struct SubmitOutcome {
    enum class Status { Accepted, Duplicate, Rejected };
    Status status = Status::Rejected;
    std::string reason;

    bool ok() const { return status != Status::Rejected; }
};

struct AnnotatorProgress {
    std::string annotator_id;
    std::size_t judged = 0;
    std::size_t total = 0;
};

struct ProgressReport {
    std::string campaign;
    std::vector<AnnotatorProgress> annotators;
    std::size_t judged = 0;
    std::size_t total = 0;

    double completion() const { return total == 0 ? 0.0 : static_cast<double>(judged) / static_cast<double>(total); }
};

class UnknownAnnotator : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

// Human-annotation bookkeeping over a journal of judgments. Judgments are
// stored with annotator kind human under the campaign shorthand.
class AnnotationService {
public:
    AnnotationService(Campaign campaign, const std::string& journal_path);

    // Lowest-indexed tuple of the subset without a valid judgment, or
    // nullopt when the subset is done. Throws UnknownAnnotator.
    std::optional<Assignment> next_assignment(const std::string& annotator_id) const;

    // Resubmitting the stored indices is accepted without a new row; any
    // other second submission for the same tuple is rejected.
    SubmitOutcome submit(const std::string& annotator_id, const std::string& tuple_id, int best_index,
                         int worst_index);

    ProgressReport progress() const;

    // Valid judgment rows of the campaign's annotators as JSONL.
    std::string export_jsonl() const;

    const Campaign& campaign() const noexcept { return campaign_; }

private:
    Campaign campaign_;
    JudgmentStore store_;
    mutable std::shared_mutex mutex_;
};

std::string assignment_to_json(const Assignment& a);
std::string progress_to_json(const ProgressReport& p);

// Registers the HTTP routes on `server`. With a non-empty assets_dir, "/"
// serves files from there; otherwise a small built-in page.
void mount_routes(httplib::Server& server, AnnotationService& service, const std::string& assets_dir = {});

struct ServeOptions {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string journal;
    std::string campaign;
    std::string assets;
};

// Blocks until the server stops (SIGINT/SIGTERM handled by the caller).
int serve(const ServeOptions& options);

}  // namespace bwsq

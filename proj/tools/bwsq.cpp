#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "bwsq/annotate.hpp"
#include "bwsq/corpus.hpp"
#include "bwsq/csv.hpp"
#include "bwsq/design.hpp"
#include "bwsq/embeddings.hpp"
#include "bwsq/error.hpp"
#include "bwsq/evaluation.hpp"
#include "bwsq/log.hpp"
#include "bwsq/logistic.hpp"
#include "bwsq/model_io.hpp"
#include "bwsq/regression.hpp"
#include "bwsq/report.hpp"
#include "bwsq/scoring.hpp"
#include "bwsq/service.hpp"
#include "bwsq/stats.hpp"
#include "bwsq/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bwsq;

namespace {

constexpr const char* kVersion = "0.1.0";

std::atomic<bool> g_cancel{false};
extern "C" void on_interrupt(int) { g_cancel = true; }

int g_argc = 0;
char** g_argv = nullptr;

// Every output gets <output>.manifest.json with the command line, the parsed
// options of the subcommand and tool versions, enough to rerun it.
void write_manifest(const CLI::App& sub, const std::vector<std::string>& outputs) {
    json options = json::object();
    for (const auto* opt : sub.get_options()) {
        if (opt->get_name() == "--help") continue;
        const auto& results = opt->results();
        if (results.empty()) continue;
        std::string name = opt->get_name();
        while (!name.empty() && name.front() == '-') name.erase(name.begin());
        if (opt->get_expected_max() > 1 || results.size() > 1) {
            options[name] = results;
        } else {
            options[name] = results.front();
        }
    }
    json argv = json::array();
    for (int i = 0; i < g_argc; ++i) argv.push_back(g_argv[i]);
    json manifest{{"tool", "bwsq"},
                  {"version", kVersion},
                  {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION)},
                  {"subcommand", sub.get_name()},
                  {"argv", argv},
                  {"options", options},
                  {"outputs", outputs},
                  {"created_at", log::utc_now()}};
    for (const auto& out : outputs) write_text_file(out + ".manifest.json", manifest.dump(2) + "\n");
}

void ensure_parent(const std::string& path) {
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

void write_output(const std::string& path, const std::string& content) {
    ensure_parent(path);
    write_text_file(path, content);
}

// Training records: the Train split when the corpus carries split tags,
// otherwise every record.
Corpus train_part(const Corpus& c) {
    for (const auto& r : c) {
        if (r.split) return c.subset(Split::Train);
    }
    return c;
}

bool has_splits(const Corpus& c) {
    return std::any_of(c.begin(), c.end(), [](const SurveyRecord& r) { return r.split.has_value(); });
}

// Scores or predictions: any CSV with record_id and norm_score columns.
std::vector<ScoreRecord> read_norm_scores(const std::string& path) {
    const auto table = csv::read_file(path);
    if (table.empty()) throw SchemaError(path + ": empty file");
    const auto& header = table.front();
    auto col = [&](const char* name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw SchemaError(path + ": missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const auto id_col = col("record_id");
    const auto score_col = col("norm_score");
    std::vector<ScoreRecord> out;
    std::vector<RowIssue> issues;
    for (std::size_t i = 1; i < table.size(); ++i) {
        const auto& row = table[i];
        if (row.size() == 1 && row[0].empty()) continue;
        if (row.size() != header.size()) {
            issues.push_back({i, "", "wrong field count"});
            continue;
        }
        ScoreRecord s;
        s.record_id = row[id_col];
        try {
            std::size_t used = 0;
            s.norm_score = std::stod(row[score_col], &used);
            if (used != row[score_col].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            issues.push_back({i, "norm_score", "not a number"});
            continue;
        }
        out.push_back(std::move(s));
    }
    if (!issues.empty()) throw RowError(std::move(issues));
    return out;
}

std::string predictions_csv(const std::vector<std::string>& ids, const Eigen::VectorXd& pred) {
    std::ostringstream out;
    csv::write_row(out, {"record_id", "norm_score"});
    for (std::size_t i = 0; i < ids.size(); ++i) {
        csv::write_row(out, {ids[i], csv::format_number(pred(static_cast<Eigen::Index>(i)))});
    }
    return out.str();
}

std::set<std::string> split_list(const std::string& s) {
    std::set<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.insert(item);
    }
    return out;
}

struct EndpointFlags {
    std::string base_url;
    std::string model;
    int parallel = 1;
    double rpm = 0.0;
    int max_retries = 3;
    double temperature = 0.0;
    int timeout_s = 60;
    int backoff_ms = 1000;

    void add(CLI::App* app) {
        app->add_option("--base-url", base_url, "Chat-completions base URL (default: BWSQ_BASE_URL)");
        app->add_option("--model", model, "Model name (default: BWSQ_MODEL)");
        app->add_option("--parallel", parallel, "Concurrent requests")->check(CLI::PositiveNumber);
        app->add_option("--rpm", rpm, "Client-side requests per minute, 0 = unlimited")->check(CLI::NonNegativeNumber);
        app->add_option("--max-retries", max_retries, "Retries per item")->check(CLI::NonNegativeNumber);
        app->add_option("--temperature", temperature, "Sampling temperature");
        app->add_option("--timeout", timeout_s, "Request timeout in seconds")->check(CLI::PositiveNumber);
        app->add_option("--backoff-ms", backoff_ms, "First retry delay after a transport error");
    }

    LlmEndpointConfig config() const {
        auto cfg = LlmEndpointConfig::from_environment();
        if (!base_url.empty()) cfg.base_url = base_url;
        if (!model.empty()) cfg.model_name = model;
        cfg.parallelism = parallel;
        cfg.requests_per_minute = rpm;
        cfg.max_retries = max_retries;
        cfg.temperature = temperature;
        cfg.timeout = std::chrono::seconds(timeout_s);
        cfg.retry_backoff = std::chrono::milliseconds(backoff_ms);
        cfg.validate();
        return cfg;
    }
};

struct LogisticFlags {
    double l2 = 1.0;
    bool tune = false;
    int mdf = 1;
    std::uint64_t seed = 0;
    std::string exclude;
    std::string lexicon;
    bool class_weights = false;
    int max_iter = 1000;
    double tol = 1e-6;

    void add(CLI::App* app) {
        app->add_option("--l2", l2, "L2 penalty strength")->check(CLI::NonNegativeNumber);
        app->add_flag("--tune", tune, "Pick l2 from {0.01, 0.1, 1, 10} on an inner 20% validation split");
        app->add_option("--min-doc-freq", mdf, "Minimum document frequency of a unigram")->check(CLI::PositiveNumber);
        app->add_option("--seed", seed, "Seed for splits and tuning");
        app->add_option("--exclude", exclude, "Comma-separated tokens to drop from the vocabulary");
        app->add_option("--lexicon", lexicon, "Scored quantifier CSV (phrase,score) used as extra features")
            ->check(CLI::ExistingFile);
        app->add_flag("--class-weights", class_weights, "Inverse-frequency class weights");
        app->add_option("--max-iter", max_iter, "Optimizer iteration limit")->check(CLI::PositiveNumber);
        app->add_option("--tol", tol, "Gradient-norm tolerance")->check(CLI::PositiveNumber);
    }

    LogisticConfig config() const {
        LogisticConfig c;
        c.l2 = l2;
        c.tune = tune;
        c.min_doc_freq = mdf;
        c.seed = seed;
        c.excluded_tokens = split_list(exclude);
        c.inverse_frequency_weights = class_weights;
        c.optimizer.max_iterations = max_iter;
        c.optimizer.gradient_tolerance = tol;
        if (!lexicon.empty()) c.lexicon = std::make_shared<QuantifierLexicon>(QuantifierLexicon::read_csv(lexicon));
        return c;
    }
};

std::string audit_csv(const std::vector<ClassAudit>& audits) {
    std::ostringstream out;
    csv::write_row(out, {"class", "rank", "token", "weight"});
    for (const auto& a : audits) {
        for (std::size_t i = 0; i < a.top.size(); ++i) {
            csv::write_row(out, {std::to_string(a.frequency_class), std::to_string(i + 1), a.top[i].token,
                                 csv::format_number(a.top[i].weight)});
        }
    }
    return out.str();
}

}  // namespace

int main(int argc, char** argv) {
    g_argc = argc;
    g_argv = argv;
    CLI::App app{"Best-Worst Scaling quantity annotation and modelling pipeline"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.fallthrough();
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "debug, info, warn or error")
        ->check(CLI::IsMember({"debug", "info", "warn", "error"}));

    std::vector<std::string> outputs;
    std::function<void()> action;

    // synth
    auto* synth = app.add_subcommand("synth", "Write the synthetic quantifier corpus");
    SynthConfig synth_cfg;
    std::string synth_out;
    synth->add_option("--out", synth_out, "Corpus file (.jsonl or .csv)")->required();
    synth->add_option("--n", synth_cfg.n_records, "Number of records")->check(CLI::PositiveNumber);
    synth->add_option("--species", synth_cfg.n_species, "Number of species")->check(CLI::PositiveNumber);
    synth->add_option("--offices", synth_cfg.n_offices, "Number of forestry offices")->check(CLI::PositiveNumber);
    synth->add_option("--seed", synth_cfg.seed, "Generator seed");
    synth->add_option("--test-fraction", synth_cfg.test_fraction, "Share tagged as test, 0 for none")
        ->check(CLI::Range(0.0, 0.99));
    synth->callback([&] {
        action = [&] {
            const auto corpus = synthesize_corpus(synth_cfg);
            ensure_parent(synth_out);
            export_corpus(corpus, synth_out, format_from_path(synth_out));
            outputs = {synth_out};
            log::info("synth.done", {{"records", std::to_string(corpus.size())}, {"out", synth_out}});
        };
    });

    // ingest
    auto* ing = app.add_subcommand("ingest", "Validate survey records and write a normalized corpus");
    std::string ing_in, ing_out, ing_format;
    bool ing_dedup = false;
    double ing_split = 0.0;
    std::uint64_t ing_seed = 0;
    ing->add_option("--in", ing_in, "Input CSV or JSONL")->required()->check(CLI::ExistingFile);
    ing->add_option("--format", ing_format, "csv or jsonl (default: by extension)")
        ->check(CLI::IsMember({"csv", "jsonl"}));
    ing->add_option("--out", ing_out, "Output corpus (.jsonl or .csv)")->required();
    ing->add_flag("--dedup", ing_dedup, "Drop repeated texts (NFC, trimmed); first occurrence wins");
    ing->add_option("--split", ing_split, "Tag this share as test (0 keeps existing tags)")->check(CLI::Range(0.0, 0.99));
    ing->add_option("--seed", ing_seed, "Split seed");
    ing->callback([&] {
        action = [&] {
            Corpus corpus = ing_format.empty()
                                ? ingest(ing_in)
                                : ingest(ing_in, ing_format == "csv" ? FileFormat::Csv : FileFormat::Jsonl);
            if (ing_dedup) {
                auto d = deduplicate(corpus);
                log::info("ingest.dedup", {{"before", std::to_string(corpus.size())},
                                           {"after", std::to_string(d.corpus.size())},
                                           {"conflicts", std::to_string(d.conflicts.size())}});
                corpus = std::move(d.corpus);
            }
            if (ing_split > 0.0) corpus = split(corpus, ing_split, ing_seed);
            ensure_parent(ing_out);
            export_corpus(corpus, ing_out, format_from_path(ing_out));
            outputs = {ing_out};
            std::cout << corpus.size() << " records\n";
        };
    });

    // design
    auto* des = app.add_subcommand("design", "Generate a Best-Worst Scaling tuple design");
    std::string des_corpus, des_out;
    DesignParams des_params;
    des->add_option("--corpus", des_corpus, "Corpus file")->required()->check(CLI::ExistingFile);
    des->add_option("--k", des_params.set_size, "Texts per tuple")->check(CLI::Range(3, 64));
    des->add_option("--N", des_params.repetitions, "Repetitions; each text appears N*k times")
        ->check(CLI::PositiveNumber);
    des->add_option("--seed", des_params.seed, "Design seed");
    des->add_flag("--truncate", des_params.truncate, "Drop n mod k random records instead of failing");
    des->add_option("--max-retries", des_params.max_retries, "Reshuffles per round")->check(CLI::PositiveNumber);
    des->add_option("--out", des_out, "Design JSONL")->required();
    des->callback([&] {
        action = [&] {
            const auto design = generate_design(ingest(des_corpus), des_params);
            const auto report = verify_design(design);
            if (!report.passed()) throw DesignError("generated design failed verification");
            ensure_parent(des_out);
            write_design_jsonl(design, des_out);
            outputs = {des_out};
            std::cout << design.tuples.size() << " tuples\n";
        };
    });

    // annotate-llm
    auto* ann = app.add_subcommand("annotate-llm", "Collect Best-Worst judgments from an LLM endpoint");
    std::string ann_corpus, ann_design, ann_out, ann_annotator;
    EndpointFlags ann_endpoint;
    ann->add_option("--corpus", ann_corpus, "Corpus file")->required()->check(CLI::ExistingFile);
    ann->add_option("--design", ann_design, "Design JSONL")->required()->check(CLI::ExistingFile);
    ann->add_option("--judgments", ann_out, "Judgment journal (JSONL, appended and resumed)")->required();
    ann->add_option("--annotator", ann_annotator,
                    "Annotator id stored with each row (default: llm:<model>); mock:intensity answers offline "
                    "from the corpus intensity column");
    ann_endpoint.add(ann);
    ann->callback([&] {
        action = [&] {
            const auto corpus = ingest(ann_corpus);
            const auto design = read_design_jsonl(ann_design);
            std::unique_ptr<ChatClient> client;
            CampaignOptions opts;
            if (ann_annotator == "mock:intensity") {
                client = std::make_unique<MockIntensityClient>(corpus);
                opts.annotator = AnnotatorId::llm("mock-intensity");
                opts.max_retries = ann_endpoint.max_retries;
                opts.parallelism = ann_endpoint.parallel;
                opts.retry_backoff = std::chrono::milliseconds(0);
            } else {
                const auto cfg = ann_endpoint.config();
                client = std::make_unique<HttpChatClient>(cfg);
                opts = CampaignOptions::from(cfg);
                opts.annotator = ann_annotator.empty() ? AnnotatorId::llm(cfg.model_name) : AnnotatorId::parse(ann_annotator);
            }
            opts.cancel = &g_cancel;
            ensure_parent(ann_out);
            JudgmentStore store(ann_out);
            const auto result = annotate_design(design, corpus, *client, store, opts);
            store.compact();
            outputs = {ann_out};
            const auto& s = result.stats;
            std::cout << "items=" << s.items << " skipped=" << s.skipped << " requests=" << s.requests
                      << " valid=" << s.valid << " invalid=" << s.invalid << (s.cancelled ? " cancelled" : "") << "\n";
            if (s.cancelled) throw Error("campaign cancelled; rerun the same command to resume");
        };
    });

    // serve
    auto* srv = app.add_subcommand("serve", "Run the human annotation service");
    ServeOptions srv_opts;
    srv->add_option("--campaign", srv_opts.campaign, "Campaign JSON")->required()->check(CLI::ExistingFile);
    srv->add_option("--journal", srv_opts.journal, "Judgment journal (JSONL)")->required();
    srv->add_option("--port", srv_opts.port, "TCP port")->check(CLI::Range(1, 65535));
    srv->add_option("--host", srv_opts.host, "Bind address");
    srv->add_option("--assets", srv_opts.assets, "Directory with the built annotation UI");
    int srv_status = 0;
    srv->callback([&] {
        action = [&] {
            ensure_parent(srv_opts.journal);
            srv_status = serve(srv_opts);
        };
    });

    // score
    auto* sc = app.add_subcommand("score", "Compute Best-Worst scores from judgments");
    std::string sc_design, sc_out, sc_annotator, sc_corpus, sc_imputed;
    std::vector<std::string> sc_judgments;
    bool sc_pool = false;
    sc->add_option("--design", sc_design, "Design JSONL")->required()->check(CLI::ExistingFile);
    sc->add_option("--judgments", sc_judgments, "Judgment JSONL (repeatable)")->required()->check(CLI::ExistingFile);
    sc->add_option("--annotator", sc_annotator, "Use only this annotator's rows");
    sc->add_flag("--pool", sc_pool, "Pool the counts of several annotators");
    sc->add_option("--out", sc_out, "Score CSV")->required();
    sc->add_option("--corpus", sc_corpus, "Corpus, to list records absent from the design")->check(CLI::ExistingFile);
    sc->add_option("--imputed-out", sc_imputed, "CSV of corpus records outside the design with score 0")
        ->needs("--corpus");
    sc->callback([&] {
        action = [&] {
            const auto design = read_design_jsonl(sc_design);
            std::vector<Judgment> judgments;
            for (const auto& path : sc_judgments) {
                for (auto& j : read_judgments_jsonl(path)) {
                    if (sc_annotator.empty() || j.annotator == AnnotatorId::parse(sc_annotator)) judgments.push_back(std::move(j));
                }
            }
            ScoreOptions opts;
            opts.pool = sc_pool;
            const auto result = score(judgments, design, opts);
            write_output(sc_out, scores_to_csv(result.scored));
            outputs = {sc_out};
            if (!result.unscored.empty()) {
                log::warn("score.unscored", {{"records", std::to_string(result.unscored.size())}});
            }
            if (!sc_imputed.empty()) {
                std::ostringstream out;
                csv::write_row(out, {"record_id", "norm_score"});
                for (const auto& i : impute_absent(ingest(sc_corpus), result)) {
                    csv::write_row(out, {i.record_id, csv::format_number(i.norm_score)});
                }
                write_output(sc_imputed, out.str());
                outputs.push_back(sc_imputed);
            }
            std::cout << result.scored.size() << " records scored\n";
        };
    });

    // agreement
    auto* agr = app.add_subcommand("agreement", "Pairwise Cohen's kappa between annotators");
    std::vector<std::string> agr_judgments;
    std::string agr_out, agr_test_out;
    std::vector<std::string> agr_compare;
    std::uint64_t agr_seed = 0;
    agr->add_option("--judgments", agr_judgments, "Judgment JSONL (repeatable)")->required()->check(CLI::ExistingFile);
    agr->add_option("--out", agr_out, "Agreement CSV (annotator_a, annotator_b, n_items, B, W, B+W)")->required();
    agr->add_option("--compare", agr_compare,
                    "Two annotators X,Y: paired permutation test of kappa(h, X) vs kappa(h, Y) over every other "
                    "annotator h")
        ->expected(2);
    agr->add_option("--test-out", agr_test_out, "JSON with the permutation test")->needs("--compare");
    agr->add_option("--seed", agr_seed, "Seed for sampled permutations");
    agr->callback([&] {
        action = [&] {
            std::map<AnnotatorId, std::vector<Judgment>> by_annotator;
            for (const auto& path : agr_judgments) {
                for (auto& j : read_judgments_jsonl(path)) by_annotator[j.annotator].push_back(std::move(j));
            }
            if (by_annotator.size() < 2) throw InvalidArgument("agreement needs judgments of at least two annotators");
            std::vector<stats::AgreementReport> reports;
            std::map<std::pair<AnnotatorId, AnnotatorId>, stats::AgreementReport> lookup;
            for (auto a = by_annotator.begin(); a != by_annotator.end(); ++a) {
                for (auto b = std::next(a); b != by_annotator.end(); ++b) {
                    try {
                        auto r = stats::bws_agreement(a->second, b->second);
                        lookup[{a->first, b->first}] = r;
                        lookup[{b->first, a->first}] = r;
                        reports.push_back(r);
                    } catch (const InvalidArgument& e) {
                        log::warn("agreement.skipped", {{"a", a->first.str()}, {"b", b->first.str()}, {"why", e.what()}});
                    }
                }
            }
            write_output(agr_out, stats::agreement_to_csv(reports));
            outputs = {agr_out};
            if (!agr_compare.empty()) {
                const auto x = AnnotatorId::parse(agr_compare[0]);
                const auto y = AnnotatorId::parse(agr_compare[1]);
                json result = json::object();
                for (const char* metric : {"B", "W", "B+W"}) {
                    std::vector<double> kx, ky;
                    for (const auto& [h, rows] : by_annotator) {
                        if (h == x || h == y) continue;
                        auto ix = lookup.find({h, x});
                        auto iy = lookup.find({h, y});
                        if (ix == lookup.end() || iy == lookup.end()) continue;
                        auto pick = [&](const stats::AgreementReport& r) {
                            const std::string m = metric;
                            return m == "B" ? r.kappa_best : m == "W" ? r.kappa_worst : r.kappa_both;
                        };
                        kx.push_back(pick(ix->second));
                        ky.push_back(pick(iy->second));
                    }
                    if (kx.empty()) throw InvalidArgument("no annotator was compared with both " + x.str() + " and " + y.str());
                    const auto t = stats::paired_permutation_test(kx, ky, agr_seed);
                    result[metric] = {{"n_pairs", kx.size()}, {"mean_difference", t.observed}, {"p_value", t.p_value},
                                      {"permutations", t.permutations}, {"exact", t.exact}};
                }
                result["x"] = x.str();
                result["y"] = y.str();
                const auto text = result.dump(2) + "\n";
                if (!agr_test_out.empty()) {
                    write_output(agr_test_out, text);
                    outputs.push_back(agr_test_out);
                } else {
                    std::cout << text;
                }
            }
            std::cout << reports.size() << " annotator pairs\n";
        };
    });

    // train-binary / train-multi
    auto add_classifier = [&](const char* name, Task task, const char* help) {
        auto* cmd = app.add_subcommand(name, help);
        struct State {
            std::string corpus, out, cv_out, audit_out;
            int cv = 0;
            std::size_t audit = 20;
            LogisticFlags flags;
        };
        auto st = std::make_shared<State>();
        cmd->add_option("--corpus", st->corpus, "Corpus file")->required()->check(CLI::ExistingFile);
        cmd->add_option("--out", st->out, "Model JSON")->required();
        cmd->add_option("--cv", st->cv, "Also run k-fold cross-validation on the training records")
            ->check(CLI::Range(2, 100));
        cmd->add_option("--cv-out", st->cv_out, "Cross-validation CSV")->needs("--cv");
        cmd->add_option("--audit-out", st->audit_out, "Top features per class (CSV)");
        cmd->add_option("--audit-top", st->audit, "Features per class in the audit");
        st->flags.add(cmd);
        cmd->callback([&, st, task] {
            action = [&, st, task] {
                const auto train = train_part(ingest(st->corpus));
                const auto cfg = st->flags.config();
                const auto clf = train_classifier(train, task, cfg);
                write_output(st->out, classifier_to_json(clf) + "\n");
                outputs = {st->out};
                if (!st->audit_out.empty()) {
                    write_output(st->audit_out, audit_csv(audit_features(clf, st->audit)));
                    outputs.push_back(st->audit_out);
                }
                if (st->cv > 0) {
                    const auto cv = crossval_classifier(train, task, cfg, st->cv, cfg.seed);
                    const auto text = crossval_to_csv(cv.folds, cv.mean);
                    if (!st->cv_out.empty()) {
                        write_output(st->cv_out, text);
                        outputs.push_back(st->cv_out);
                    } else {
                        std::cout << text;
                    }
                }
                std::cout << "trained on " << train.size() << " records, l2=" << clf.model.l2
                          << (clf.model.converged ? "" : " (not converged)") << "\n";
            };
        });
    };
    add_classifier("train-binary", Task::Binary, "Train the presence/absence classifier");
    add_classifier("train-multi", Task::Multiclass, "Train the 7-class frequency classifier");

    // train-regress
    auto* trr = app.add_subcommand("train-regress", "Kernel ridge regression on Best-Worst scores");
    std::string trr_corpus, trr_scores, trr_out, trr_features = "unigram", trr_embeddings, trr_kernel = "rbf",
                                                 trr_cv_out;
    KrrConfig trr_cfg;
    int trr_mdf = 1, trr_cv = 0;
    bool trr_no_center = false;
    trr->add_option("--corpus", trr_corpus, "Corpus file")->required()->check(CLI::ExistingFile);
    trr->add_option("--scores", trr_scores, "Score CSV from `score`")->required()->check(CLI::ExistingFile);
    trr->add_option("--out", trr_out, "Model JSON")->required();
    trr->add_option("--features", trr_features, "unigram or embeddings")->check(CLI::IsMember({"unigram", "embeddings"}));
    trr->add_option("--embeddings", trr_embeddings, "Embedding JSONL {record_id, vector}")->check(CLI::ExistingFile);
    trr->add_option("--kernel", trr_kernel, "linear or rbf")->check(CLI::IsMember({"linear", "rbf"}));
    trr->add_option("--gamma", trr_cfg.kernel.gamma, "rbf gamma")->check(CLI::PositiveNumber);
    trr->add_option("--alpha", trr_cfg.alpha, "Ridge strength")->check(CLI::NonNegativeNumber);
    trr->add_flag("--tune", trr_cfg.tune, "Grid-search kernel, gamma and alpha on an inner validation split");
    trr->add_flag("--no-center", trr_no_center, "Do not centre the targets");
    trr->add_option("--seed", trr_cfg.seed, "Seed for folds and tuning");
    trr->add_option("--min-doc-freq", trr_mdf, "Minimum document frequency (unigram features)")
        ->check(CLI::PositiveNumber);
    trr->add_option("--cv", trr_cv, "Also run k-fold cross-validation")->check(CLI::Range(2, 100));
    trr->add_option("--cv-out", trr_cv_out, "Cross-validation CSV")->needs("--cv");
    trr->callback([&] {
        action = [&] {
            trr_cfg.kernel = trr_kernel == "linear" ? Kernel::linear() : Kernel::rbf(trr_cfg.kernel.gamma);
            trr_cfg.center_targets = !trr_no_center;
            const auto data = regression_data(ingest(trr_corpus), read_norm_scores(trr_scores));
            CrossValResult cv;
            if (trr_features == "embeddings") {
                if (trr_embeddings.empty()) throw InvalidArgument("--features embeddings needs --embeddings");
                const auto table = ingest_embeddings(trr_embeddings);
                warn_unknown_ids(table, data.ids);
                const auto model = train_embedding_regressor(data, table, trr_cfg);
                write_output(trr_out, embedding_regressor_to_json(model) + "\n");
                if (trr_cv > 0) cv = crossval_krr_embeddings(data, table, trr_cfg, trr_cv, trr_cfg.seed);
                std::cout << "kernel=" << model.model.kernel.name() << " alpha=" << model.model.alpha << "\n";
            } else {
                const auto model = train_text_regressor(data, trr_cfg, trr_mdf);
                write_output(trr_out, text_regressor_to_json(model) + "\n");
                if (trr_cv > 0) cv = crossval_krr_text(data, trr_cfg, trr_mdf, trr_cv, trr_cfg.seed);
                std::cout << "kernel=" << model.model.kernel.name() << " alpha=" << model.model.alpha << "\n";
            }
            outputs = {trr_out};
            if (trr_cv > 0) {
                const auto text = crossval_to_csv(cv.folds, cv.mean);
                if (!trr_cv_out.empty()) {
                    write_output(trr_cv_out, text);
                    outputs.push_back(trr_cv_out);
                } else {
                    std::cout << text;
                }
            }
        };
    });

    // zero-shot
    auto* zs = app.add_subcommand("zero-shot", "Zero-shot 7-class labelling with an LLM");
    std::string zs_corpus, zs_labels, zs_annotator, zs_metrics;
    EndpointFlags zs_endpoint;
    zs->add_option("--corpus", zs_corpus, "Corpus file")->required()->check(CLI::ExistingFile);
    zs->add_option("--labels", zs_labels, "Label journal (JSONL, appended and resumed)")->required();
    zs->add_option("--annotator", zs_annotator,
                   "Annotator id (default: llm:<model>); mock:labels answers offline with the gold labels");
    zs->add_option("--metrics", zs_metrics, "F1 against the gold multi_label (JSON)");
    zs_endpoint.add(zs);
    zs->callback([&] {
        action = [&] {
            const auto corpus = ingest(zs_corpus);
            std::unique_ptr<ChatClient> client;
            CampaignOptions opts;
            if (zs_annotator == "mock:labels") {
                client = std::make_unique<MockLabelClient>(corpus);
                opts.annotator = AnnotatorId::llm("mock-labels");
                opts.retry_backoff = std::chrono::milliseconds(0);
                opts.parallelism = zs_endpoint.parallel;
            } else {
                const auto cfg = zs_endpoint.config();
                client = std::make_unique<HttpChatClient>(cfg);
                opts = CampaignOptions::from(cfg);
                opts.annotator = zs_annotator.empty() ? AnnotatorId::llm(cfg.model_name) : AnnotatorId::parse(zs_annotator);
            }
            opts.cancel = &g_cancel;
            ensure_parent(zs_labels);
            ZeroShotStore store(zs_labels);
            const auto result = annotate_zero_shot(corpus, *client, store, opts);
            store.compact();
            outputs = {zs_labels};
            if (!zs_metrics.empty()) {
                // Unparseable answers are left out of F1 and reported as a count.
                std::vector<int> gold, pred;
                std::size_t unparsed = 0;
                for (const auto& l : result.labels) {
                    const auto& r = corpus.at(l.record_id);
                    if (!r.multi_label) continue;
                    if (!l.predicted_class) {
                        ++unparsed;
                        continue;
                    }
                    gold.push_back(*r.multi_label);
                    pred.push_back(*l.predicted_class);
                }
                if (gold.empty()) throw InvalidArgument("no parsed answers with a gold multi_label to evaluate");
                auto m = json::parse(metrics_to_json(MetricsBundle::classification(gold, pred, all_classes())));
                m["n_unparsed"] = unparsed;
                write_output(zs_metrics, m.dump(2) + "\n");
                outputs.push_back(zs_metrics);
            }
            std::cout << "valid=" << result.stats.valid << " invalid=" << result.stats.invalid << "\n";
            if (result.stats.cancelled) throw Error("campaign cancelled; rerun the same command to resume");
        };
    });

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Evaluate a saved model");
    std::string ev_model, ev_corpus, ev_split = "test", ev_scores, ev_embeddings, ev_out, ev_pred;
    ev->add_option("--model", ev_model, "Model JSON")->required()->check(CLI::ExistingFile);
    ev->add_option("--corpus", ev_corpus, "Corpus file")->required()->check(CLI::ExistingFile);
    ev->add_option("--split", ev_split, "test, train or all")->check(CLI::IsMember({"test", "train", "all"}));
    ev->add_option("--scores", ev_scores, "Gold score CSV (regression models)")->check(CLI::ExistingFile);
    ev->add_option("--embeddings", ev_embeddings, "Embedding JSONL (embedding models)")->check(CLI::ExistingFile);
    ev->add_option("--out", ev_out, "Metrics JSON")->required();
    ev->add_option("--predictions", ev_pred, "Regression predictions CSV (record_id, norm_score)");
    ev->callback([&] {
        action = [&] {
            Corpus corpus = ingest(ev_corpus);
            if (ev_split != "all") {
                if (!has_splits(corpus)) throw InvalidArgument("corpus has no split tags; use --split all");
                corpus = corpus.subset(ev_split == "test" ? Split::Test : Split::Train);
            }
            const auto text = read_text_file(ev_model);
            const auto type = model_type(text);
            MetricsBundle m;
            if (type == "logistic") {
                const auto clf = classifier_from_json(text);
                const auto task = clf.model.task;
                std::vector<int> gold;
                std::vector<std::string> texts;
                for (const auto& r : corpus) {
                    if (auto l = label_of(r, task)) {
                        gold.push_back(*l);
                        texts.push_back(r.text);
                    }
                }
                if (gold.empty()) throw InvalidArgument("no labelled records to evaluate");
                m = MetricsBundle::classification(gold, clf.predict(texts), clf.model.classes);
            } else {
                if (ev_scores.empty()) throw InvalidArgument("regression models need --scores");
                auto scores = read_norm_scores(ev_scores);
                std::erase_if(scores, [&](const ScoreRecord& s) { return !corpus.find(s.record_id); });
                const auto data = regression_data(corpus, scores);
                Eigen::VectorXd pred;
                if (type == "krr-text") {
                    pred = text_regressor_from_json(text).predict(data.texts);
                } else {
                    if (ev_embeddings.empty()) throw InvalidArgument("embedding models need --embeddings");
                    pred = embedding_regressor_from_json(text).predict(ingest_embeddings(ev_embeddings), data.ids);
                }
                m = MetricsBundle::regression(data.targets, pred);
                if (!ev_pred.empty()) {
                    write_output(ev_pred, predictions_csv(data.ids, pred));
                    outputs.push_back(ev_pred);
                }
            }
            write_output(ev_out, metrics_to_json(m) + "\n");
            outputs.push_back(ev_out);
            std::cout << metrics_to_json(m) << "\n";
        };
    });

    // report
    auto* rep = app.add_subcommand("report", "Case-study tables: score classes, per-species histograms");
    std::string rep_scores, rep_corpus, rep_dir, rep_binning = "equal-width";
    std::vector<std::string> rep_species;
    bool rep_flags = false;
    int rep_bins = 10;
    rep->add_option("--scores", rep_scores, "Scores or predictions CSV (record_id, norm_score)")
        ->required()
        ->check(CLI::ExistingFile);
    rep->add_option("--corpus", rep_corpus, "Corpus file")->required()->check(CLI::ExistingFile);
    rep->add_option("--out-dir", rep_dir, "Output directory")->required();
    rep->add_option("--binning", rep_binning, "equal-width or quantile")
        ->check(CLI::IsMember({"equal-width", "quantile"}));
    rep->add_flag("--flags-from-labels", rep_flags, "Take absent/extinct classes from the gold labels");
    rep->add_option("--species", rep_species, "Species to histogram (default: all)");
    rep->add_option("--bins", rep_bins, "Histogram bins")->check(CLI::PositiveNumber);
    rep->callback([&] {
        action = [&] {
            const auto corpus = ingest(rep_corpus);
            const auto scores = read_norm_scores(rep_scores);
            std::vector<double> values;
            for (const auto& s : scores) values.push_back(s.norm_score);
            const auto binning =
                rep_binning == "quantile" ? ClassBinning::quantile(values) : ClassBinning::equal_width();
            const auto flags = rep_flags ? flags_from_labels(corpus) : std::map<std::string, int>{};
            const fs::path dir(rep_dir);
            fs::create_directories(dir);

            const auto binned = (dir / "binned.csv").string();
            write_output(binned, binned_to_csv(bin_scores(scores, binning, flags)));
            outputs.push_back(binned);

            const auto labels = multi_labels(corpus);
            if (!labels.empty()) {
                const auto table = class_vs_score_table(labels, scores);
                const auto path = (dir / "class_vs_score.csv").string();
                write_output(path, class_table_to_csv(table));
                outputs.push_back(path);
                for (const auto& [a, b] : table.violations) {
                    log::warn("report.non_monotone", {{"lower_class", std::to_string(a)}, {"upper_class", std::to_string(b)}});
                }
                std::cout << "class means " << (table.monotone() ? "increase" : "do not increase") << " with class\n";
            }

            auto species = rep_species;
            if (species.empty()) {
                std::set<std::string> all;
                for (const auto& r : corpus) all.insert(r.species_id);
                species.assign(all.begin(), all.end());
            }
            for (const auto& sp : species) {
                SpeciesDistribution d;
                try {
                    d = species_distribution(corpus, scores, sp, rep_bins);
                } catch (const InvalidArgument& e) {
                    if (!rep_species.empty()) throw;
                    continue;  // species without scored records
                }
                const auto hist = (dir / ("hist_" + sp + ".csv")).string();
                const auto summary = (dir / ("summary_" + sp + ".json")).string();
                write_output(hist, histogram_to_csv(d.histogram));
                write_output(summary, distribution_summary_json(d) + "\n");
                outputs.push_back(hist);
                outputs.push_back(summary);
            }
        };
    });

    // curve
    auto* cur = app.add_subcommand("curve", "Training curve at fixed increments");
    std::string cur_corpus, cur_out, cur_task = "binary";
    std::size_t cur_step = 100;
    double cur_test = 0.2;
    LogisticFlags cur_flags;
    cur->add_option("--corpus", cur_corpus, "Corpus file")->required()->check(CLI::ExistingFile);
    cur->add_option("--task", cur_task, "binary or multi")->check(CLI::IsMember({"binary", "multi"}));
    cur->add_option("--step", cur_step, "Training-set increment")->check(CLI::PositiveNumber);
    cur->add_option("--test-fraction", cur_test, "Test share when the corpus has no split tags")
        ->check(CLI::Range(0.01, 0.99));
    cur->add_option("--out", cur_out, "Curve CSV")->required();
    cur_flags.add(cur);
    // Each increment tunes l2 on its own inner validation split unless told not to.
    bool cur_no_tune = false;
    cur->add_flag("--no-tune", cur_no_tune, "Use --l2 as given instead of tuning at every increment");
    cur->callback([&] {
        action = [&] {
            Corpus corpus = ingest(cur_corpus);
            auto cfg = cur_flags.config();
            cfg.tune = !cur_no_tune;
            if (!has_splits(corpus)) corpus = split(corpus, cur_test, cfg.seed);
            const auto task = cur_task == "binary" ? Task::Binary : Task::Multiclass;
            const auto curve = training_curve(corpus, task, cur_step, cfg, cfg.seed);
            write_output(cur_out, curve_to_csv(curve));
            outputs = {cur_out};
            std::cout << curve_to_csv(curve);
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n";
        CLI::App* failing = &app;
        for (auto* sub : app.get_subcommands()) failing = sub;
        std::cerr << failing->help();
        return 2;
    }

    log::set_min_level(log_level == "debug"  ? log::Level::Debug
                       : log_level == "warn" ? log::Level::Warn
                       : log_level == "error" ? log::Level::Error
                                              : log::Level::Info);
    std::signal(SIGINT, on_interrupt);
    std::signal(SIGTERM, on_interrupt);

    CLI::App* sub = app.get_subcommands().front();
    try {
        if (!action) throw InvalidArgument("nothing to do");
        action();
        if (!outputs.empty()) write_manifest(*sub, outputs);
    } catch (const std::exception& e) {
        log::error("run.failed", {{"subcommand", sub->get_name()}, {"what", e.what()}});
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return sub->get_name() == "serve" ? srv_status : 0;
}

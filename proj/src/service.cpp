#include "httplib.h"

#include "bwsq/service.hpp"

#include <csignal>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "bwsq/log.hpp"
#include "json.hpp"

namespace bwsq {

using nlohmann::json;

void Campaign::validate() const {
    if (subsets.empty()) throw IntegrityError("campaign '" + name + "' has no annotators");
    for (const auto& [annotator, tuple_ids] : subsets) {
        if (annotator.empty()) throw IntegrityError("campaign: empty annotator id");
        std::set<std::string> seen;
        for (const auto& id : tuple_ids) {
            const auto* t = design.find(id);
            if (!t) throw IntegrityError("campaign: annotator " + annotator + " has unknown tuple " + id);
            if (!seen.insert(id).second) {
                throw IntegrityError("campaign: annotator " + annotator + " lists tuple " + id + " twice");
            }
            for (const auto& member : t->member_ids) {
                if (!corpus.find(member)) throw IntegrityError("campaign: tuple " + id + " member " + member + " not in corpus");
            }
        }
    }
}

Campaign load_campaign(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError(path + ": " + e.what());
    }
    const auto base = std::filesystem::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        const std::filesystem::path fp(p);
        return (fp.is_absolute() ? fp : base / fp).string();
    };
    try {
        Campaign c;
        c.name = j.value("name", std::filesystem::path(path).stem().string());
        c.corpus = ingest(resolve(j.at("corpus").get<std::string>()));
        c.design = read_design_jsonl(resolve(j.at("design").get<std::string>()));
        for (const auto& [annotator, ids] : j.at("annotators").items()) {
            c.subsets[annotator] = ids.get<std::vector<std::string>>();
        }
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw SchemaError(path + ": " + e.what());
    }
}

AnnotationService::AnnotationService(Campaign campaign, const std::string& journal_path)
    : campaign_(std::move(campaign)), store_(journal_path) {
    campaign_.validate();
    log::info("service.replayed", {{"journal", journal_path}, {"rows", std::to_string(store_.size())}});
}

std::optional<Assignment> AnnotationService::next_assignment(const std::string& annotator_id) const {
    auto it = campaign_.subsets.find(annotator_id);
    if (it == campaign_.subsets.end()) throw UnknownAnnotator("unknown annotator '" + annotator_id + "'");
    const auto who = AnnotatorId::human(annotator_id);

    std::shared_lock lock(mutex_);
    const auto& ids = it->second;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (store_.has_valid(ids[i], who)) continue;
        const auto* tuple = campaign_.design.find(ids[i]);
        Assignment a;
        a.annotator_id = annotator_id;
        a.tuple_id = ids[i];
        a.position = i + 1;
        a.total = ids.size();
        for (const auto& member : tuple->member_ids) a.texts.push_back(campaign_.corpus.at(member).text);
        a.issued_at = log::utc_now();
        return a;
    }
    return std::nullopt;
}

SubmitOutcome AnnotationService::submit(const std::string& annotator_id, const std::string& tuple_id, int best_index,
                                        int worst_index) {
    using Status = SubmitOutcome::Status;
    auto it = campaign_.subsets.find(annotator_id);
    if (it == campaign_.subsets.end()) return {Status::Rejected, "unknown annotator"};
    if (std::find(it->second.begin(), it->second.end(), tuple_id) == it->second.end()) {
        return {Status::Rejected, "tuple not assigned to this annotator"};
    }
    const auto k = static_cast<int>(campaign_.design.find(tuple_id)->member_ids.size());
    if (best_index < 1 || best_index > k || worst_index < 1 || worst_index > k) {
        return {Status::Rejected, "index out of range 1.." + std::to_string(k)};
    }
    if (best_index == worst_index) return {Status::Rejected, "tie: best and worst must differ"};

    const auto who = AnnotatorId::human(annotator_id);
    std::unique_lock lock(mutex_);
    if (auto prior = store_.find(tuple_id, who); prior && prior->valid) {
        if (prior->best_index == best_index && prior->worst_index == worst_index) return {Status::Duplicate, ""};
        return {Status::Rejected, "tuple already judged"};
    }
    Judgment j;
    j.tuple_id = tuple_id;
    j.annotator = who;
    j.best_index = best_index;
    j.worst_index = worst_index;
    j.raw_response = json{{"Best", best_index}, {"Worst", worst_index}}.dump();
    j.timestamp = log::utc_now();
    j.valid = true;
    store_.put(j);
    return {Status::Accepted, ""};
}

ProgressReport AnnotationService::progress() const {
    ProgressReport p;
    p.campaign = campaign_.name;
    std::shared_lock lock(mutex_);
    for (const auto& [annotator, ids] : campaign_.subsets) {
        AnnotatorProgress a{annotator, 0, ids.size()};
        const auto who = AnnotatorId::human(annotator);
        for (const auto& id : ids) {
            if (store_.has_valid(id, who)) ++a.judged;
        }
        p.judged += a.judged;
        p.total += a.total;
        p.annotators.push_back(a);
    }
    return p;
}

std::string AnnotationService::export_jsonl() const {
    std::ostringstream out;
    std::shared_lock lock(mutex_);
    for (const auto& j : store_.rows()) {
        if (!j.valid || j.annotator.kind != AnnotatorId::Kind::Human) continue;
        if (!campaign_.subsets.contains(j.annotator.name)) continue;
        out << judgment_to_json_line(j) << '\n';
    }
    return out.str();
}

std::string assignment_to_json(const Assignment& a) {
    return json{{"annotator_id", a.annotator_id}, {"tuple_id", a.tuple_id}, {"position", a.position},
                {"total", a.total},               {"texts", a.texts},       {"issued_at", a.issued_at}}
        .dump();
}

std::string progress_to_json(const ProgressReport& p) {
    json annotators = json::array();
    for (const auto& a : p.annotators) {
        annotators.push_back({{"annotator_id", a.annotator_id}, {"judged", a.judged}, {"total", a.total}});
    }
    return json{{"campaign", p.campaign},
                {"annotators", annotators},
                {"judged", p.judged},
                {"total", p.total},
                {"completion", p.completion()}}
        .dump();
}

namespace {

constexpr const char* kBuiltinPage = R"html(<!doctype html>
<html lang="de"><head><meta charset="utf-8"><title>BWS annotation</title>
<style>body{font-family:sans-serif;max-width:50em;margin:2em auto}li{margin:.6em 0}</style></head>
<body>
<h1>Best-Worst Scaling</h1>
<p><label>Annotator <input id="who" size="6"></label> <button onclick="load()">Start</button></p>
<div id="task"></div>
<script>
let current = null;
async function load() {
  const who = document.getElementById('who').value;
  const r = await fetch('/api/v1/assignments/next?annotator=' + encodeURIComponent(who));
  const box = document.getElementById('task');
  if (r.status === 204) { box.textContent = 'Done, thank you.'; return; }
  if (!r.ok) { box.textContent = (await r.json()).reason; return; }
  current = await r.json();
  let html = '<p>' + current.position + ' / ' + current.total + '</p><ol>';
  current.texts.forEach((t, i) => {
    html += '<li><label><input type="radio" name="best" value="' + (i + 1) + '"> best</label> ' +
            '<label><input type="radio" name="worst" value="' + (i + 1) + '"> worst</label><br>' +
            t.replace(/</g, '&lt;') + '</li>';
  });
  box.innerHTML = html + '</ol><button onclick="send()">Submit</button>';
}
async function send() {
  const best = document.querySelector('input[name=best]:checked');
  const worst = document.querySelector('input[name=worst]:checked');
  if (!best || !worst || best.value === worst.value) { alert('Pick two different texts.'); return; }
  const r = await fetch('/api/v1/judgments', {method: 'POST', headers: {'Content-Type': 'application/json'},
    body: JSON.stringify({annotator_id: current.annotator_id, tuple_id: current.tuple_id,
                          best_index: +best.value, worst_index: +worst.value})});
  if (!r.ok) { alert((await r.json()).reason); return; }
  load();
}
</script>
</body></html>
)html";

void reply_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

}  // namespace

void mount_routes(httplib::Server& server, AnnotationService& service, const std::string& assets_dir) {
    server.Get("/api/v1/assignments/next", [&service](const httplib::Request& req, httplib::Response& res) {
        if (!req.has_param("annotator")) return reply_json(res, 400, {{"reason", "missing annotator parameter"}});
        try {
            const auto a = service.next_assignment(req.get_param_value("annotator"));
            if (!a) {
                res.status = 204;
                return;
            }
            res.status = 200;
            res.set_content(assignment_to_json(*a), "application/json");
        } catch (const UnknownAnnotator& e) {
            reply_json(res, 404, {{"reason", e.what()}});
        }
    });

    server.Post("/api/v1/judgments", [&service](const httplib::Request& req, httplib::Response& res) {
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::parse_error&) {
            return reply_json(res, 400, {{"reason", "body is not JSON"}});
        }
        auto field_ok = [&](const char* key, bool want_int) {
            return body.is_object() && body.contains(key) &&
                   (want_int ? body[key].is_number_integer() : body[key].is_string());
        };
        if (!field_ok("annotator_id", false) || !field_ok("tuple_id", false)) {
            return reply_json(res, 422, {{"reason", "annotator_id and tuple_id must be strings"}});
        }
        if (!field_ok("best_index", true) || !field_ok("worst_index", true)) {
            return reply_json(res, 422, {{"reason", "best_index and worst_index must be integers"}});
        }
        const auto outcome = service.submit(body["annotator_id"].get<std::string>(), body["tuple_id"].get<std::string>(),
                                            body["best_index"].get<int>(), body["worst_index"].get<int>());
        if (!outcome.ok()) return reply_json(res, 422, {{"reason", outcome.reason}});
        const bool dup = outcome.status == SubmitOutcome::Status::Duplicate;
        reply_json(res, 201, {{"status", dup ? "duplicate" : "accepted"}});
    });

    server.Get("/api/v1/progress", [&service](const httplib::Request&, httplib::Response& res) {
        res.set_content(progress_to_json(service.progress()), "application/json");
    });

    server.Get("/api/v1/export", [&service](const httplib::Request&, httplib::Response& res) {
        res.set_content(service.export_jsonl(), "application/x-ndjson");
    });

    if (!assets_dir.empty() && std::filesystem::is_directory(assets_dir) &&
        std::filesystem::exists(std::filesystem::path(assets_dir) / "index.html")) {
        server.set_mount_point("/", assets_dir);
    } else {
        server.Get("/", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(kBuiltinPage, "text/html; charset=utf-8");
        });
    }

    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        log::error("service.exception", {{"what", what}});
        reply_json(res, 500, {{"reason", what}});
    });
}

namespace {
httplib::Server* g_server = nullptr;
extern "C" void stop_server(int) {
    if (g_server) g_server->stop();
}
}  // namespace

int serve(const ServeOptions& options) {
    if (options.campaign.empty() || options.journal.empty()) throw InvalidArgument("serve needs --campaign and --journal");
    AnnotationService service(load_campaign(options.campaign), options.journal);
    httplib::Server server;
    mount_routes(server, service, options.assets);

    g_server = &server;
    std::signal(SIGINT, stop_server);
    std::signal(SIGTERM, stop_server);
    log::info("service.listening", {{"host", options.host}, {"port", std::to_string(options.port)}});
    const bool ok = server.listen(options.host, options.port);
    g_server = nullptr;
    if (!ok) {
        log::error("service.listen_failed", {{"host", options.host}, {"port", std::to_string(options.port)}});
        return 1;
    }
    log::info("service.stopped");
    return 0;
}

}  // namespace bwsq

#pragma once

// A full formulation session driven through an abstract transport, so the same
// script runs in-process, over HTTP, and inside the acceptance binary.

#include "test_support.hpp"

#include "cqf/service.hpp"

#include <functional>
#include <utility>

namespace cqf::testing {

struct Reply {
    int status = 0;
    json body;
};

using Transport = std::function<Reply(const std::string& method, const std::string& path, const std::string& body)>;

inline std::string read_data(const char* name) { return data_file(name); }

/// Collects failed expectations as readable lines.
class FlowLog {
public:
    void expect(bool ok, const std::string& what) {
        if (!ok) failures_.push_back(what);
    }

    void expect_status(const Reply& r, int status, const std::string& what) {
        expect(r.status == status, what + ": status " + std::to_string(r.status) + ", expected " + std::to_string(status) + " " + r.body.dump());
    }

    template <typename T>
    void expect_eq(const T& got, const T& want, const std::string& what) {
        if (!(got == want)) {
            std::ostringstream ss;
            ss << what << ": got '" << got << "', expected '" << want << "'";
            failures_.push_back(ss.str());
        }
    }

    const std::vector<std::string>& failures() const { return failures_; }

private:
    std::vector<std::string> failures_;
};

inline std::string text_of(const json& j, const char* key = "text") { return j.is_object() && j.contains(key) && j.at(key).is_string() ? j.at(key).get<std::string>() : ""; }

/// Runs create, ppq, more, select, spider, prune, nav, refine, generalize, drafts,
/// population, eval and sql, plus the error statuses. Returns the failures.
inline std::vector<std::string> run_session_flow(const Transport& send) {
    FlowLog log;
    auto post = [&](const std::string& path, const json& body) { return send("POST", path, body.dump()); };

    const auto created = send("POST", "/sessions", read_data("el1.cqs"));
    log.expect_status(created, 201, "create session");
    if (created.status != 201) return log.failures();
    const auto base = "/sessions/" + created.body.at("session").get<std::string>();
    log.expect_eq(created.body.value("object_types", 0), 7, "object type count");
    log.expect_eq(created.body.value("fact_types", 0), 7, "fact type count");

    const auto types = send("GET", base + "/object-types", "");
    log.expect_status(types, 200, "object types");
    log.expect_eq(text_of(types.body.at("object_types").at(0), "id"), std::string("Election"), "most important object type");

    // Point-to-point query with one alternative per batch.
    const auto ppq = post(base + "/ppq", {{"points", {"President", "Election", "NrOfVotes"}}, {"batch", 1}});
    log.expect_status(ppq, 201, "ppq");
    if (ppq.status != 201) return log.failures();
    const auto pid = ppq.body.at("id").get<std::string>();
    log.expect_eq(text_of(ppq.body), std::string("President winning election which resulted in nr of votes"), "ppq text");
    log.expect_eq(ppq.body.at("segments").at(0).at("offered").size(), std::size_t{1}, "first batch size");
    log.expect(!ppq.body.at("segments").at(0).at("exhausted").get<bool>(), "segment 0 not yet exhausted");

    const auto more = post(base + "/ppq/" + pid + "/more", {{"segment", 0}, {"batch", 1}});
    log.expect_status(more, 200, "more");
    log.expect_eq(more.body.at("added").size(), std::size_t{1}, "more adds one path");
    log.expect_eq(text_of(more.body.at("added").at(0)), std::string("President being politician is president of administration inaugurated in year of election election"),
                  "second alternative");
    log.expect_eq(more.body.at("added").at(0).value("weight", 0), 4, "second alternative weight");
    log.expect(more.body.value("exhausted", false), "segment 0 exhausted after the last path");

    const auto again = post(base + "/ppq/" + pid + "/more", {{"segment", 0}});
    log.expect_status(again, 200, "more after exhaustion");
    log.expect(again.body.at("added").empty(), "more after exhaustion adds nothing");
    log.expect_eq(again.body.value("offered_count", 0), 2, "offered count stays");

    const auto chosen = post(base + "/ppq/" + pid + "/select", {{"segment", 0}, {"choice", 1}});
    log.expect_status(chosen, 200, "select alternative");
    log.expect_eq(text_of(chosen.body),
                  std::string("President being politician is president of administration inaugurated in year of election election which resulted in nr of votes"),
                  "text after selecting the alternative");
    const auto restored = post(base + "/ppq/" + pid + "/select", {{"segment", 0}, {"choice", 0}});
    log.expect_eq(text_of(restored.body), std::string("President winning election which resulted in nr of votes"), "text after reselecting");
    log.expect_status(post(base + "/ppq/" + pid + "/more", {{"segment", 7}}), 409, "more on a missing segment");

    // Spider query, then prune two branches.
    const auto sp = post(base + "/spider", {{"object_type", "Politician"}});
    log.expect_status(sp, 201, "spider");
    if (sp.status != 201) return log.failures();
    const auto tid = sp.body.at("id").get<std::string>();
    std::vector<std::string> texts;
    for (const auto& p : sp.body.at("paths")) texts.push_back(text_of(p));
    log.expect(texts == std::vector<std::string>{"Politician is president of administration", "Politician who is president", "Politician member of party"},
               "spider paths: " + sp.body.at("paths").dump());
    post(base + "/spider/" + tid + "/prune", {{"at", json::array()}, {"branch", 2}});
    const auto pruned = post(base + "/spider/" + tid + "/prune", {{"at", json::array()}, {"branch", 1}});
    log.expect_status(pruned, 200, "prune");
    log.expect_eq(pruned.body.at("paths").size(), std::size_t{1}, "paths after pruning twice");
    log.expect_eq(text_of(pruned.body.at("paths").at(0)), std::string("Politician is president of administration"), "remaining spider path");
    log.expect_status(post(base + "/spider/" + tid + "/prune", {{"at", json::array()}, {"branch", 4}}), 409, "prune out of range");

    // Switch to navigation from the concatenation of two path drafts.
    const auto d1 = post(base + "/drafts", {{"expr", "(atom FT1 fwd)"}});
    const auto d2 = post(base + "/drafts", {{"expr", "(atom FT2 fwd)"}});
    log.expect_status(d1, 201, "draft 1");
    log.expect_status(d2, 201, "draft 2");
    log.expect_eq(text_of(d1.body), std::string("Politician is president of administration"), "draft 1 text");
    log.expect_eq(text_of(d2.body), std::string("Administration inaugurated in year"), "draft 2 text");
    const auto nav = post(base + "/nav", {{"origin", {text_of(d1.body, "id"), text_of(d2.body, "id")}}});
    log.expect_status(nav, 201, "nav");
    if (nav.status != 201) return log.failures();
    const auto nid = nav.body.at("id").get<std::string>();
    log.expect_eq(text_of(nav.body), std::string("Politician is president of administration inaugurated in year"), "nav focus");
    const auto listed = send("GET", base + "/nav/" + nid + "/moves", "");
    log.expect_status(listed, 200, "list moves");
    log.expect_eq(listed.body.at("moves").size(), std::size_t{2}, "legal moves at the focus");

    const auto refined = post(base + "/nav/" + nid + "/move", {{"kind", "refine"}, {"step", {{"fact_type", "FT7"}, {"direction", "reverse"}}}});
    log.expect_status(refined, 200, "refine");
    log.expect_eq(text_of(refined.body), std::string("Politician is president of administration inaugurated in year of election election"), "refined focus");
    log.expect_status(post(base + "/nav/" + nid + "/move", {{"kind", "refine"}, {"step", {{"fact_type", "FT2"}, {"direction", "reverse"}}}}), 409,
                      "refine into a visited type");
    const auto back = post(base + "/nav/" + nid + "/move", {{"kind", "generalize"}});
    log.expect_eq(text_of(back.body), std::string("Politician is president of administration inaugurated in year"), "focus after generalize");
    log.expect_eq(back.body.at("history").size(), std::size_t{2}, "history length");

    const auto root = post(base + "/nav", {{"origin", "Party"}});
    log.expect_status(post(base + "/nav/" + text_of(root.body, "id") + "/move", {{"kind", "generalize"}}), 409, "generalize at the root");

    // Back to drafts: the navigation focus and the ppq path become expressions.
    const auto from_nav = post(base + "/drafts", {{"nav", nid}});
    log.expect_eq(text_of(from_nav.body), std::string("Politician is president of administration inaugurated in year"), "draft from nav");
    const auto from_ppq = post(base + "/drafts", {{"ppq", pid}});
    log.expect_status(from_ppq, 201, "draft from ppq");
    const auto qid = text_of(from_ppq.body, "id");
    log.expect_eq(text_of(from_ppq.body, "expr"), std::string("(atom FT3 fwd FT4 fwd)"), "ppq draft expression");
    log.expect_status(post(base + "/drafts", {{"expr", "(concat (atom FT3 fwd) (atom FT3 fwd))"}}), 400, "ill-typed draft");

    const auto holey = post(base + "/drafts", {{"expr", "(concat (atom FT3 fwd) (placeholder \"votes\" Election NrOfVotes))"}});
    log.expect_status(holey, 201, "draft with a placeholder");
    log.expect(!holey.body.value("complete", true), "placeholder draft is incomplete");
    const auto filled = post(base + "/drafts/" + text_of(holey.body, "id") + "/splice", {{"label", "votes"}, {"replacement", "(atom FT4 fwd)"}});
    log.expect_status(filled, 200, "splice");
    log.expect_eq(text_of(filled.body), std::string("President winning election which resulted in nr of votes"), "spliced text");
    log.expect(filled.body.value("complete", false), "spliced draft is complete");

    // Evaluation needs a population.
    log.expect_status(post(base + "/eval", {{"draft_id", qid}}), 409, "eval without population");
    const auto pop = send("POST", base + "/population", read_data("p1.cqp"));
    log.expect_status(pop, 200, "load population");
    log.expect_eq(pop.body.value("facts", 0), 6, "population facts");

    const auto rel = post(base + "/eval", {{"draft_id", qid}});
    log.expect_status(rel, 200, "eval draft");
    log.expect_eq(rel.body.at("rows"), json::array({json::array({"Lincoln", "1866452"}), json::array({"Lincoln", "2218388"})}), "eval rows");
    const auto tab = post(base + "/eval", {{"tree_id", tid}});
    log.expect_status(tab, 200, "eval tree");
    log.expect_eq(tab.body.value("kind", std::string()), std::string("table"), "tree result kind");
    log.expect_eq(tab.body.at("rows"), json::array({json::array({"Lincoln", "adm20"})}), "tree rows");
    const auto counted = post(base + "/drafts", {{"expr", "(count (atom FT3 fwd))"}});
    const auto n = post(base + "/eval", {{"draft_id", text_of(counted.body, "id")}});
    log.expect_eq(n.body.value("count", 0), 3, "count");

    const auto sql = send("GET", base + "/sql/" + qid, "");
    log.expect_status(sql, 200, "sql");
    log.expect_eq(text_of(sql.body, "sql"), std::string("SELECT DISTINCT t1.a, t2.b FROM ft3 t1 JOIN ft4 t2 ON t1.b = t2.a;"), "sql text");
    log.expect_status(send("GET", base + "/sql/" + tid, ""), 404, "sql for an unknown draft");

    // Transport-level statuses.
    log.expect_status(send("GET", "/sessions/nope/object-types", ""), 404, "unknown session");
    log.expect_status(send("GET", "/nowhere", ""), 404, "unknown endpoint");
    log.expect_status(send("GET", "/sessions", ""), 405, "wrong method");
    log.expect_status(send("POST", base + "/eval", "{not json"), 400, "malformed body");
    const auto bad = send("POST", "/sessions", "object A id:code\nfact F1 A\n");
    log.expect_status(bad, 400, "malformed schema");
    log.expect_eq(bad.body.value("line", 0), 2, "schema error line");
    return log.failures();
}

inline Transport in_process(Service& service) {
    return [&service](const std::string& method, const std::string& path, const std::string& body) {
        auto r = service.handle(Request{method, path, body});
        return Reply{r.status, r.body};
    };
}

}  // namespace cqf::testing

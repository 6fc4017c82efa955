#pragma once

#include "cqf/evaluator.hpp"
#include "cqf/navigator.hpp"
#include "cqf/sqlgen.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <random>

namespace cqf {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Wire encodings shared by the service and the CLI

inline json to_json(const Step& s) { return {{"fact_type", s.fact_type.str()}, {"direction", std::string(to_string(s.direction))}}; }

inline Step step_from_json(const json& j) {
    const auto dir = j.at("direction").get<std::string>();
    if (dir != "forward" && dir != "reverse" && dir != "fwd" && dir != "rev")
        throw Error(ErrorKind::syntax, "direction must be 'forward' or 'reverse'");
    return Step{FactTypeId(j.at("fact_type").get<std::string>()), dir.starts_with("f") ? Direction::forward : Direction::reverse};
}

inline json to_json(const SchemaGraph& g, const SchemaPath& p) {
    json steps = json::array();
    for (const auto& s : p.steps) steps.push_back(to_json(s));
    return {{"head", p.head.str()}, {"tail", path_tail(g, p).str()}, {"steps", steps}, {"text", verbalize_path(g, p)}};
}

inline json to_json(const SchemaGraph& g, const WeightedPath& wp) {
    return {{"path", to_json(g, wp.path)}, {"weight", wp.weight}, {"text", wp.text}};
}

inline json to_json(const SchemaGraph& g, const SpiderTree& t) {
    json branches = json::array();
    for (const auto& b : t.branches) {
        branches.push_back({{"step", to_json(b.step)},
                            {"text", text::lower(g.connector(b.step)) + " " + text::lower(g.object_type(b.child.root).name)},
                            {"child", to_json(g, b.child)}});
    }
    return {{"root", t.root.str()}, {"name", g.object_type(t.root).name}, {"branches", branches}};
}

inline json to_json(const SchemaGraph& g, const NavMove& m, const NavNode& at) {
    const auto next = apply_move(g, at, m);
    json out = {{"text", verbalize_path(g, next.focus)}};
    if (const auto* r = std::get_if<Refine>(&m)) {
        out["kind"] = "refine";
        out["step"] = to_json(r->step);
    } else {
        out["kind"] = "generalize";
    }
    return out;
}

inline NavMove move_from_json(const json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "generalize") return Generalize{};
    if (kind == "refine") return Refine{step_from_json(j.at("step"))};
    throw Error(ErrorKind::syntax, "move kind must be 'refine' or 'generalize'");
}

inline json to_json(const SchemaGraph& g, const BinaryRelation& r) {
    json rows = json::array();
    for (const auto& [a, b] : r.pairs) rows.push_back({a, b});
    return {{"kind", "relation"}, {"head", r.head_type.str()}, {"tail", r.tail_type.str()},
            {"columns", {text::lower(g.object_type(r.head_type).name), text::lower(g.object_type(r.tail_type).name)}}, {"rows", rows}};
}

inline json to_json(const ResultTable& t) {
    json rows = json::array();
    for (const auto& row : t.rows) {
        json r = json::array();
        for (const auto& cell : row) r.push_back(cell ? json(*cell) : json(nullptr));
        rows.push_back(r);
    }
    return {{"kind", "table"}, {"columns", t.columns}, {"rows", rows}};
}

// ---------------------------------------------------------------------------

struct ServiceConfig {
    std::chrono::minutes session_ttl{30};
    std::size_t default_batch = default_batch_size;
    int port = 8080;

    /// Reads PORT, SESSION_TTL_MINUTES and DEFAULT_BATCH; unset or malformed values keep defaults.
    static ServiceConfig from_env() {
        ServiceConfig c;
        auto read = [](const char* name) -> std::optional<long long> {
            const char* v = std::getenv(name);
            if (!v) return std::nullopt;
            auto n = text::parse_integer(v);
            if (!n || *n <= 0) return std::nullopt;
            return n;
        };
        if (auto v = read("PORT")) c.port = static_cast<int>(*v);
        if (auto v = read("SESSION_TTL_MINUTES")) c.session_ttl = std::chrono::minutes(*v);
        if (auto v = read("DEFAULT_BATCH")) c.default_batch = static_cast<std::size_t>(*v);
        return c;
    }
};

struct Request {
    std::string method;
    std::string path;
    std::string body;
};

struct Response {
    int status = 200;
    json body;
};

/// Session-keeping front end over the query-formulation modules.
///
/// Requests on different sessions run in parallel; requests on one session are
/// serialized by that session's mutex.
class Service {
public:
    using Clock = std::chrono::steady_clock;

    explicit Service(ServiceConfig config = {}, std::function<Clock::time_point()> clock = [] { return Clock::now(); })
        : config_(config), clock_(std::move(clock)) {}

    const ServiceConfig& config() const noexcept { return config_; }

    Response handle(const Request& req) {
        try {
            return route(req);
        } catch (const HttpError& e) {
            return {e.status, {{"error", e.what()}}};
        } catch (const ParseError& e) {
            return {400, {{"error", e.what()}, {"line", e.line()}, {"column", e.column()}}};
        } catch (const Error& e) {
            return {status_for(e.kind()), {{"error", e.what()}}};
        } catch (const json::exception& e) {
            return {400, {{"error", std::string("malformed request body: ") + e.what()}}};
        }
    }

    /// Evicts sessions idle for longer than the configured TTL.
    std::size_t gc_sessions(Clock::time_point now) {
        std::lock_guard lock(registry_mutex_);
        std::size_t evicted = 0;
        for (auto it = sessions_.begin(); it != sessions_.end();) {
            std::unique_lock session_lock(it->second->mutex);
            if (now - it->second->last_access > config_.session_ttl) {
                session_lock.unlock();
                it = sessions_.erase(it);
                ++evicted;
            } else {
                ++it;
            }
        }
        return evicted;
    }

    std::size_t session_count() const {
        std::lock_guard lock(registry_mutex_);
        return sessions_.size();
    }

private:
    struct HttpError : std::runtime_error {
        HttpError(int s, const std::string& m) : std::runtime_error(m), status(s) {}
        int status;
    };

    struct Draft {
        QueryExpr expr;
    };

    struct Session {
        std::mutex mutex;
        std::shared_ptr<const SchemaGraph> schema;
        std::optional<Population> population;
        std::map<std::string, PpqResult> ppqs;
        std::map<std::string, QueryTree> spiders;
        std::map<std::string, NavNode> navs;
        std::map<std::string, Draft> drafts;
        std::map<char, std::size_t> counters;
        Clock::time_point last_access;

        std::string next_id(char prefix) { return std::string(1, prefix) + std::to_string(++counters[prefix]); }
    };

    static int status_for(ErrorKind k) {
        switch (k) {
            case ErrorKind::out_of_range:
            case ErrorKind::illegal_move:
            case ErrorKind::state: return 409;
            default: return 400;
        }
    }

    static std::vector<std::string> split_path(std::string_view path) {
        if (auto q = path.find('?'); q != std::string_view::npos) path = path.substr(0, q);
        std::vector<std::string> parts;
        std::size_t start = 0;
        while (start <= path.size()) {
            auto end = path.find('/', start);
            if (end == std::string_view::npos) end = path.size();
            if (end > start) parts.emplace_back(path.substr(start, end - start));
            start = end + 1;
        }
        return parts;
    }

    static json parse_body(const Request& req) {
        if (text::trim(req.body).empty()) return json::object();
        auto j = json::parse(req.body);
        if (!j.is_object()) throw HttpError(400, "request body must be a JSON object");
        return j;
    }

    /// Raw text bodies, or a JSON object carrying the text under `field`.
    static std::string text_body(const Request& req, const char* field) {
        const auto trimmed = text::trim(req.body);
        if (!trimmed.empty() && trimmed.front() == '{') {
            auto j = json::parse(req.body);
            return j.at(field).get<std::string>();
        }
        return req.body;
    }

    static std::string random_token() {
        std::random_device rd;
        std::string out;
        static const char* hex = "0123456789abcdef";
        for (int i = 0; i < 8; ++i) {
            auto word = rd();
            for (int k = 0; k < 4; ++k) {
                out.push_back(hex[(word >> (k * 8 + 4)) & 0xF]);
                out.push_back(hex[(word >> (k * 8)) & 0xF]);
            }
        }
        return out;
    }

    static void require(bool ok, const char* method_ok) {
        if (!ok) throw HttpError(405, std::string("method not allowed; use ") + method_ok);
    }

    Response route(const Request& req) {
        const auto parts = split_path(req.path);
        const bool get = req.method == "GET", post = req.method == "POST";
        if (parts.size() == 1 && parts[0] == "healthz") {
            require(get, "GET");
            return {200, {{"status", "ok"}, {"sessions", session_count()}}};
        }
        if (parts.empty() || parts[0] != "sessions") throw HttpError(404, "no such endpoint: " + req.path);
        if (parts.size() == 1) {
            require(post, "POST");
            return create_session(text_body(req, "schema"));
        }
        auto session = find_session(parts[1]);
        std::lock_guard lock(session->mutex);
        session->last_access = clock_();
        Session& s = *session;
        const auto& g = *s.schema;
        if (parts.size() < 3) {
            require(get, "GET");
            return {200, {{"id", parts[1]}, {"schema", serialize_schema(g)}, {"has_population", s.population.has_value()}}};
        }
        const auto& resource = parts[2];

        if (resource == "object-types" && parts.size() == 3) {
            require(get, "GET");
            json list = json::array();
            for (const auto& id : importance_order(g)) {
                const auto& ot = g.object_type(id);
                json o = {{"id", id.str()}, {"name", ot.name}, {"kind", ot.kind == ObjectKind::entity ? "entity" : "value"}, {"degree", g.adjacent_steps(id).size()}};
                o["reference_scheme"] = ot.reference_scheme ? json(*ot.reference_scheme) : json(nullptr);
                list.push_back(o);
            }
            return {200, {{"object_types", list}}};
        }
        if (resource == "ppq") return route_ppq(s, req, parts);
        if (resource == "spider") return route_spider(s, req, parts);
        if (resource == "nav") return route_nav(s, req, parts);
        if (resource == "drafts") return route_drafts(s, req, parts);
        if (resource == "population" && parts.size() == 3) {
            require(post, "POST");
            auto pop = parse_population(text_body(req, "population"), g);
            json out = {{"facts", pop.size()}, {"fact_types", pop.fact_type_count()}};
            s.population = std::move(pop);
            return {200, out};
        }
        if (resource == "eval" && parts.size() == 3) {
            require(post, "POST");
            return evaluate(s, parse_body(req));
        }
        if (resource == "sql" && parts.size() == 4) {
            require(get, "GET");
            const auto& d = lookup(s.drafts, parts[3], "draft");
            return {200, {{"draft", parts[3]}, {"sql", emit_sql(g, d.expr)}}};
        }
        throw HttpError(404, "no such endpoint: " + req.path);
    }

    Response create_session(const std::string& source) {
        auto graph = parse_schema(source);
        if (auto v = validate_schema(graph); !v.empty()) {
            json list = json::array();
            for (const auto& x : v) list.push_back(x.message);
            return {400, {{"error", "schema violates invariants"}, {"violations", list}}};
        }
        auto session = std::make_shared<Session>();
        session->schema = std::make_shared<const SchemaGraph>(std::move(graph));
        session->last_access = clock_();
        std::string id;
        {
            std::lock_guard lock(registry_mutex_);
            do id = random_token();
            while (sessions_.contains(id));
            sessions_.emplace(id, session);
        }
        return {201, {{"session", id}, {"object_types", session->schema->object_types().size()}, {"fact_types", session->schema->fact_types().size()}}};
    }

    std::shared_ptr<Session> find_session(const std::string& id) {
        std::lock_guard lock(registry_mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw HttpError(404, "unknown session '" + id + "'");
        return it->second;
    }

    template <typename Map>
    static typename Map::mapped_type& lookup(Map& m, const std::string& id, const char* what) {
        auto it = m.find(id);
        if (it == m.end()) throw HttpError(404, std::string("unknown ") + what + " '" + id + "'");
        return it->second;
    }

    static json ppq_json(const SchemaGraph& g, const std::string& id, const PpqResult& r) {
        json segments = json::array();
        for (std::size_t i = 0; i < r.segments.size(); ++i) {
            const auto& seg = r.segments[i];
            json offered = json::array();
            std::size_t selected_index = 0;
            for (std::size_t k = 0; k < seg.offered.size(); ++k) {
                offered.push_back(to_json(g, seg.offered[k]));
                if (seg.offered[k].path == seg.selected) selected_index = k;
            }
            segments.push_back({{"index", i},
                                {"from", seg.enumerator.from().str()},
                                {"to", seg.enumerator.to().str()},
                                {"selected", selected_index},
                                {"selected_path", to_json(g, seg.selected)},
                                {"offered", offered},
                                {"exhausted", seg.enumerator.exhausted()}});
        }
        json points = json::array();
        for (const auto& p : r.points) points.push_back(p.str());
        const auto whole = ppq_path(g, r);
        return {{"id", id}, {"points", points}, {"segments", segments}, {"path", to_json(g, whole)}, {"text", verbalize_path(g, whole)}};
    }

    Response route_ppq(Session& s, const Request& req, const std::vector<std::string>& parts) {
        const auto& g = *s.schema;
        if (parts.size() == 3) {
            require(req.method == "POST", "POST");
            const auto body = parse_body(req);
            std::vector<ObjectTypeId> points;
            for (const auto& p : body.at("points")) points.emplace_back(p.get<std::string>());
            const auto batch = body.value("batch", config_.default_batch);
            if (batch == 0) throw HttpError(400, "batch must be positive");
            auto r = run_ppq(s.schema, points, batch);
            const auto id = s.next_id('p');
            auto out = ppq_json(g, id, r);
            s.ppqs.emplace(id, std::move(r));
            return {201, out};
        }
        auto& r = lookup(s.ppqs, parts[3], "point-to-point query");
        if (parts.size() == 4) {
            require(req.method == "GET", "GET");
            return {200, ppq_json(g, parts[3], r)};
        }
        if (parts.size() != 5) throw HttpError(404, "no such endpoint: " + req.path);
        require(req.method == "POST", "POST");
        const auto body = parse_body(req);
        if (parts[4] == "more") {
            const auto segment = body.at("segment").get<std::size_t>();
            const auto batch = body.value("batch", config_.default_batch);
            if (batch == 0) throw HttpError(400, "batch must be positive");
            auto added = more_paths(r, segment, batch);
            json list = json::array();
            for (const auto& wp : added) list.push_back(to_json(g, wp));
            return {200, {{"segment", segment}, {"added", list}, {"offered_count", r.segments[segment].offered.size()}, {"exhausted", r.segments[segment].enumerator.exhausted()}}};
        }
        if (parts[4] == "select") {
            r = select_alternative(r, body.at("segment").get<std::size_t>(), body.at("choice").get<std::size_t>());
            return {200, ppq_json(g, parts[3], r)};
        }
        throw HttpError(404, "no such endpoint: " + req.path);
    }

    static TreeIndexPath index_path(const json& body) {
        TreeIndexPath at;
        if (body.contains("at"))
            for (const auto& i : body.at("at")) at.push_back(i.get<std::size_t>());
        return at;
    }

    static json spider_json(const SchemaGraph& g, const std::string& id, const QueryTree& qt) {
        json paths = json::array();
        for (const auto& p : tree_paths(qt.crown)) paths.push_back(to_json(g, p));
        return {{"id", id}, {"stem", to_json(g, qt.stem)}, {"tree", to_json(g, qt.crown)}, {"paths", paths},
                {"text", verbalize_expr(g, QueryExpr::make({TreeExpr{qt}}))}};
    }

    Response route_spider(Session& s, const Request& req, const std::vector<std::string>& parts) {
        const auto& g = *s.schema;
        if (parts.size() == 3) {
            require(req.method == "POST", "POST");
            const auto body = parse_body(req);
            SchemaPath stem;
            if (body.contains("stem")) {
                const auto& d = lookup(s.drafts, body.at("stem").get<std::string>(), "draft");
                const auto* a = std::get_if<AtomExpr>(&d.expr.node().v);
                if (!a) throw Error(ErrorKind::type_mismatch, "a spider stem must be a path draft");
                stem = a->path;
            }
            ObjectTypeId root = body.contains("object_type") ? ObjectTypeId(body.at("object_type").get<std::string>()) : path_tail(g, stem);
            if (stem.head.empty()) stem.head = root;
            auto qt = attach_spider(g, stem, spider(g, root));
            const auto id = s.next_id('t');
            auto out = spider_json(g, id, qt);
            s.spiders.emplace(id, std::move(qt));
            return {201, out};
        }
        auto& qt = lookup(s.spiders, parts[3], "spider");
        if (parts.size() == 4) {
            require(req.method == "GET", "GET");
            return {200, spider_json(g, parts[3], qt)};
        }
        if (parts.size() != 5) throw HttpError(404, "no such endpoint: " + req.path);
        require(req.method == "POST", "POST");
        const auto body = parse_body(req);
        if (parts[4] == "prune") qt.crown = prune_branch(qt.crown, index_path(body), body.at("branch").get<std::size_t>());
        else if (parts[4] == "extend") qt.crown = extend_leaf(g, qt.crown, index_path(body));
        else throw HttpError(404, "no such endpoint: " + req.path);
        return {200, spider_json(g, parts[3], qt)};
    }

    static json nav_json(const SchemaGraph& g, const std::string& id, const NavNode& n) {
        json history = json::array();
        for (const auto& m : n.history) history.push_back(describe_move(m));
        json mv = json::array();
        for (const auto& m : moves(g, n)) mv.push_back(to_json(g, m, n));
        return {{"id", id}, {"focus", to_json(g, n.focus)}, {"text", verbalize_path(g, n.focus)}, {"history", history}, {"moves", mv}};
    }

    Response route_nav(Session& s, const Request& req, const std::vector<std::string>& parts) {
        const auto& g = *s.schema;
        if (parts.size() == 3) {
            require(req.method == "POST", "POST");
            const auto body = parse_body(req);
            const auto& origin = body.at("origin");
            NavNode node;
            if (origin.is_string()) {
                node = start_session(g, ObjectTypeId(origin.get<std::string>()));
            } else if (origin.is_array() && !origin.empty()) {
                std::optional<SchemaPath> path;
                for (const auto& d : origin) {
                    const auto& draft = lookup(s.drafts, d.get<std::string>(), "draft");
                    const auto* a = std::get_if<AtomExpr>(&draft.expr.node().v);
                    if (!a) throw Error(ErrorKind::type_mismatch, "draft '" + d.get<std::string>() + "' is not a path");
                    path = path ? concat_paths(g, *path, a->path) : a->path;
                }
                node = start_session(g, *path);
            } else {
                throw HttpError(400, "origin must be an object type id or a non-empty list of draft ids");
            }
            const auto id = s.next_id('n');
            auto out = nav_json(g, id, node);
            s.navs.emplace(id, std::move(node));
            return {201, out};
        }
        auto& node = lookup(s.navs, parts[3], "navigation session");
        if (parts.size() == 4) {
            require(req.method == "GET", "GET");
            return {200, nav_json(g, parts[3], node)};
        }
        if (parts.size() != 5) throw HttpError(404, "no such endpoint: " + req.path);
        if (parts[4] == "moves") {
            require(req.method == "GET", "GET");
            return {200, {{"moves", nav_json(g, parts[3], node).at("moves")}}};
        }
        if (parts[4] == "move") {
            require(req.method == "POST", "POST");
            const auto body = parse_body(req);
            NavMove m;
            if (body.contains("index")) {
                const auto legal = moves(g, node);
                const auto i = body.at("index").get<std::size_t>();
                if (i >= legal.size()) throw Error(ErrorKind::illegal_move, "move index " + std::to_string(i) + " out of range");
                m = legal[i];
            } else {
                m = move_from_json(body);
            }
            node = apply_move(g, node, m);
            return {200, nav_json(g, parts[3], node)};
        }
        throw HttpError(404, "no such endpoint: " + req.path);
    }

    static json draft_json(const SchemaGraph& g, const std::string& id, const QueryExpr& e) {
        const auto ht = head_tail(g, e);
        return {{"id", id}, {"expr", print_query(e)}, {"text", verbalize_expr(g, e)}, {"head", ht.head.str()}, {"tail", ht.tail.str()},
                {"complete", !contains_placeholder(e)}};
    }

    static void require_valid(const SchemaGraph& g, const QueryExpr& e) {
        if (auto v = validate_expr(g, e); !v.empty()) {
            std::string msg = "expression is ill-typed:";
            for (const auto& x : v) msg += " " + x.message + ";";
            throw Error(ErrorKind::type_mismatch, msg);
        }
    }

    QueryExpr draft_source(Session& s, const json& body) {
        const auto& g = *s.schema;
        if (body.contains("expr")) return parse_query(g, body.at("expr").get<std::string>());
        if (body.contains("draft")) return lookup(s.drafts, body.at("draft").get<std::string>(), "draft").expr;
        if (body.contains("nav")) return atom(g, to_particle(lookup(s.navs, body.at("nav").get<std::string>(), "navigation session")));
        if (body.contains("ppq")) return atom(g, ppq_path(g, lookup(s.ppqs, body.at("ppq").get<std::string>(), "point-to-point query")));
        if (body.contains("spider")) return tree_expr(g, lookup(s.spiders, body.at("spider").get<std::string>(), "spider"));
        throw HttpError(400, "expected one of: expr, draft, nav, ppq, spider");
    }

    Response route_drafts(Session& s, const Request& req, const std::vector<std::string>& parts) {
        const auto& g = *s.schema;
        if (parts.size() == 3) {
            require(req.method == "POST", "POST");
            auto e = draft_source(s, parse_body(req));
            require_valid(g, e);
            const auto id = s.next_id('d');
            auto out = draft_json(g, id, e);
            s.drafts.emplace(id, Draft{std::move(e)});
            return {201, out};
        }
        auto& d = lookup(s.drafts, parts[3], "draft");
        if (parts.size() == 4) {
            require(req.method == "GET", "GET");
            return {200, draft_json(g, parts[3], d.expr)};
        }
        if (parts.size() == 5 && parts[4] == "splice") {
            require(req.method == "POST", "POST");
            const auto body = parse_body(req);
            const auto label = body.at("label").get<std::string>();
            auto replacement = draft_source(s, body.contains("replacement") ? json{{"expr", body.at("replacement")}} : body);
            require_valid(g, replacement);
            d.expr = splice(g, d.expr, label, replacement);
            return {200, draft_json(g, parts[3], d.expr)};
        }
        throw HttpError(404, "no such endpoint: " + req.path);
    }

    Response evaluate(Session& s, const json& body) {
        const auto& g = *s.schema;
        if (!s.population) throw Error(ErrorKind::state, "no population loaded in this session");
        QueryExpr e;
        if (body.contains("draft_id")) e = lookup(s.drafts, body.at("draft_id").get<std::string>(), "draft").expr;
        else if (body.contains("tree_id")) e = QueryExpr::make({TreeExpr{lookup(s.spiders, body.at("tree_id").get<std::string>(), "spider")}});
        else throw HttpError(400, "expected draft_id or tree_id");
        const auto result = eval_expr(g, *s.population, e);
        if (const auto* r = std::get_if<BinaryRelation>(&result)) return {200, to_json(g, *r)};
        if (const auto* n = std::get_if<std::size_t>(&result)) return {200, {{"kind", "count"}, {"count", *n}}};
        return {200, to_json(std::get<ResultTable>(result))};
    }

    ServiceConfig config_;
    std::function<Clock::time_point()> clock_;
    mutable std::mutex registry_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace cqf

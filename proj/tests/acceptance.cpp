// Acceptance suite: one PASS/FAIL line per criterion, each with a pinned time limit.
// Exit status is nonzero if any criterion fails.

#include "session_flow.hpp"
#include "sql_cases.hpp"

#include "cqf/http.hpp"

#include <chrono>
#include <cstdio>
#include <thread>

using namespace cqf;
using namespace cqf::testing;

namespace {

using Failures = std::vector<std::string>;

struct Criterion {
    const char* name;
    std::chrono::milliseconds limit;
    std::function<void(Failures&)> body;
};

void check(Failures& f, bool ok, const std::string& what) {
    if (!ok) f.push_back(what);
}

std::vector<WeightedPath> drain(PathEnumerator& e, std::size_t batch) {
    std::vector<WeightedPath> out;
    for (auto b = e.next_batch(batch); !b.empty(); b = e.next_batch(batch)) out.insert(out.end(), b.begin(), b.end());
    return out;
}

std::size_t pick(std::mt19937& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

void session_strings(Failures& f) {
    const auto g = std::make_shared<const SchemaGraph>(el1());
    const auto r = run_ppq(g, {ot("President"), ot("Election"), ot("NrOfVotes")}, default_batch_size);
    check(f, verbalize_path(*g, ppq_path(*g, r)) == "President winning election which resulted in nr of votes", "ppq selected path");
    const auto full = concat_paths(*g, path("Politician", {fwd("FT1")}), path("Administration", {fwd("FT2")}));
    check(f, verbalize_path(*g, start_session(*g, full).focus) == "Politician is president of administration inaugurated in year", "nav focus from FT1+FT2");
    check(f, verbalize_path(*g, start_session(*g, path("Administration", {fwd("FT2")})).focus) == "Administration inaugurated in year", "nav focus from FT2");
}

void enumeration_oracle(Failures& f) {
    std::mt19937 rng(1001);
    std::vector<SchemaGraph> schemas{el1()};
    for (int i = 0; i < 24; ++i) schemas.push_back(random_schema(rng, 10, 14));
    for (const auto& g : schemas) {
        check(f, g.object_types().size() <= 10 && g.fact_types().size() <= 14, "schema size bounds");
        for (const auto& a : g.object_types())
            for (const auto& b : g.object_types()) {
                auto e = open_enumeration(g, a.id, b.id);
                const auto got = drain(e, 4);
                std::set<std::vector<Step>> seen;
                for (std::size_t k = 0; k < got.size(); ++k) {
                    check(f, seen.insert(got[k].path.steps).second, "duplicate path " + got[k].text);
                    if (k > 0) check(f, got[k - 1].weight <= got[k].weight, "weights decrease at " + got[k].text);
                }
                check(f, seen == brute_force_simple_paths(g, a.id, b.id), "path set differs for " + a.id.str() + " -> " + b.id.str());
            }
    }
}

void more_protocol(Failures& f) {
    std::mt19937 rng(1002);
    for (int i = 0; i < 30; ++i) {
        const auto g = std::make_shared<const SchemaGraph>(i == 0 ? el1() : random_schema(rng));
        const auto& types = g->object_types();
        const auto a = types[pick(rng, types.size())].id, b = types[pick(rng, types.size())].id;
        auto full = open_enumeration(g, a, b);
        const auto reference = drain(full, 1000);
        for (std::size_t batch = 1; batch <= 5; ++batch) {
            auto e = open_enumeration(g, a, b);
            std::vector<WeightedPath> joined;
            for (auto part = e.next_batch(batch); !part.empty(); part = e.next_batch(batch)) {
                check(f, part.size() <= batch, "batch too large");
                joined.insert(joined.end(), part.begin(), part.end());
            }
            check(f, joined == reference, "batches of " + std::to_string(batch) + " differ from the full drain");
            check(f, e.exhausted() && e.next_batch(batch).empty(), "call after exhaustion returned paths");
        }
    }
}

void spider_laws(Failures& f) {
    std::mt19937 rng(1003);
    std::vector<SchemaGraph> schemas{el1()};
    for (int i = 0; i < 20; ++i) schemas.push_back(random_schema(rng));
    for (const auto& g : schemas)
        for (const auto& o : g.object_types()) {
            const auto t = spider(g, o.id);
            std::vector<Step> steps;
            for (const auto& br : t.branches) steps.push_back(br.step);
            check(f, steps == g.adjacent_steps(o.id), "spider branches differ at " + o.id.str());
        }
    for (int run = 0; run < 600; ++run) {
        const auto& g = schemas[pick(rng, schemas.size())];
        auto t = spider(g, g.object_types()[pick(rng, g.object_types().size())].id);
        for (int k = 0; k < 8; ++k) {
            t = random_tree_edit(rng, g, t);
            check(f, chains_are_simple(t) && spider_violations(g, t).empty(), "edit broke the no-repeat invariant");
        }
    }
}

void qbn_laws(Failures& f) {
    std::mt19937 rng(1004);
    int walks = 0;
    for (; walks < 1200; ++walks) {
        const auto g = walks % 6 == 0 ? el1() : random_schema(rng);
        auto n = start_session(g, g.object_types()[pick(rng, g.object_types().size())].id);
        for (int k = 0; k < 6; ++k) {
            const auto legal = moves(g, n);
            for (const auto& m : legal) {
                const auto next = apply_move(g, n, m);
                check(f, path_violations(g, next.focus).empty(), "invalid focus after a move");
                if (std::holds_alternative<Refine>(m)) check(f, apply_move(g, next, Generalize{}).focus == n.focus, "generalize did not undo refine");
            }
            if (legal.empty()) break;
            n = apply_move(g, n, legal[pick(rng, legal.size())]);
        }
    }
    for (int i = 0; i < 250; ++i) {
        const auto g = random_schema(rng);
        const auto p = random_walk(rng, g, 5);
        check(f, to_particle(start_session(g, p)) == p, "particle differs from origin " + print_path(p));
    }
}

SchemaPath reversed(const SchemaGraph& g, const SchemaPath& p) {
    SchemaPath r{path_tail(g, p), {}};
    for (auto it = p.steps.rbegin(); it != p.steps.rend(); ++it) r.steps.push_back(Step{it->fact_type, opposite(it->direction)});
    return r;
}

void evaluator_oracle(Failures& f) {
    std::mt19937 rng(1005);
    std::vector<std::pair<SchemaGraph, Population>> cases{{el1(), p1()}};
    for (int i = 0; i < 24; ++i) {
        auto g = i % 2 ? el1() : random_schema(rng, 7, 10);
        auto pop = random_population(rng, g, 50);
        check(f, pop.size() <= 50, "population size bound");
        cases.emplace_back(std::move(g), std::move(pop));
    }
    for (const auto& [g, pop] : cases) {
        for (const auto& a : g.object_types())
            for (const auto& b : g.object_types())
                for (const auto& steps : brute_force_simple_paths(g, a.id, b.id)) {
                    if (steps.size() > 4) continue;
                    const SchemaPath p{a.id, steps};
                    check(f, eval_path(g, pop, p).pairs == nested_loop_eval(g, pop, p), "oracle differs on " + print_path(p));
                }
        for (int k = 0; k < 30; ++k) {
            const auto p = random_walk(rng, g, 3);
            SchemaPath q{path_tail(g, p), {}};
            for (auto n = pick(rng, 4); n > 0; --n) {
                const auto& adj = g.adjacent_steps(path_tail(g, q));
                if (adj.empty()) break;
                q.steps.push_back(adj[pick(rng, adj.size())]);
            }
            if (!p.steps.empty() && !q.steps.empty()) {
                const auto pq = concat_paths(g, p, q);
                check(f, eval_path(g, pop, pq) == compose(eval_path(g, pop, p), eval_path(g, pop, q)), "composition law on " + print_path(pq));
            }
            check(f, eval_path(g, pop, reversed(g, p)) == transpose(eval_path(g, pop, p)), "transpose law on " + print_path(p));
        }
    }
}

void builder_typing(Failures& f) {
    std::mt19937 rng(1006);
    const auto random_g = random_schema(rng, 8, 12);
    for (int i = 0; i < 1000; ++i) {
        const auto& g = i % 2 || random_g.fact_types().empty() ? el1() : random_g;
        const auto e = random_expr(rng, g, 3);
        check(f, validate_expr(g, e).empty(), "constructed tree rejected: " + print_query(e));
        const auto bad = mutate_types(rng, g, e);
        check(f, !validate_expr(g, bad).empty(), "mutant accepted: " + print_query(bad));
    }
}

void sql_determinism(Failures& f) {
    const auto& g = el1();
    check(f, sql_cases().size() >= 10, "fewer than 10 golden cases");
    for (const auto& c : sql_cases()) {
        const auto e = parse_query(g, c.query);
        const auto sql = emit_sql(g, e);
        std::ifstream in(golden_path(c.name), std::ios::binary);
        std::ostringstream golden;
        golden << in.rdbuf();
        check(f, in.good() || in.eof(), std::string("missing golden file ") + c.name);
        check(f, sql + "\n" == golden.str(), std::string("golden mismatch for ") + c.name);
        check(f, emit_sql(g, e) == sql, std::string("unstable output for ") + c.name);
        check(f, count_joins(sql) == expected_joins(g, e), std::string("join count for ") + c.name);
        if (auto plain = plain_join_formula(e)) check(f, count_joins(sql) == *plain, std::string("plain join formula for ") + c.name);
    }
}

void service_contract(Failures& f) {
    Service service;
    httplib::Server server;
    mount(server, service);
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread listener([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    httplib::Client client("127.0.0.1", port);
    const auto failures = run_session_flow([&](const std::string& method, const std::string& p, const std::string& body) {
        auto res = method == "GET" ? client.Get(p) : client.Post(p, body, "application/json");
        if (!res) return Reply{0, json()};
        return Reply{res->status, json::parse(res->body, nullptr, false)};
    });
    f.insert(f.end(), failures.begin(), failures.end());
    server.stop();
    listener.join();
}

}  // namespace

int main() {
    using namespace std::chrono_literals;
    const std::vector<Criterion> criteria{
        {"session strings", 1000ms, session_strings},
        {"enumeration oracle", 10000ms, enumeration_oracle},
        {"more protocol", 2000ms, more_protocol},
        {"spider laws", 5000ms, spider_laws},
        {"navigation laws", 5000ms, qbn_laws},
        {"evaluator oracle", 10000ms, evaluator_oracle},
        {"builder typing", 5000ms, builder_typing},
        {"sql determinism", 2000ms, sql_determinism},
        {"service contract", 5000ms, service_contract},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Failures f;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.body(f);
        } catch (const std::exception& e) {
            f.push_back(std::string("exception: ") + e.what());
        }
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
        if (ms > c.limit) f.push_back("took " + std::to_string(ms.count()) + " ms");
        const bool ok = f.empty();
        failed += !ok;
        std::printf("%s  %-20s %6lld ms (limit %lld ms)\n", ok ? "PASS" : "FAIL", c.name, static_cast<long long>(ms.count()), static_cast<long long>(c.limit.count()));
        for (std::size_t i = 0; i < f.size() && i < 5; ++i) std::printf("      %s\n", f[i].c_str());
        if (f.size() > 5) std::printf("      ... %zu more\n", f.size() - 5);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed ? 1 : 0;
}

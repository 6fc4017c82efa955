#pragma once

#include "cqf/http.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <condition_variable>
#include <fstream>
#include <iostream>
#include <thread>

namespace cqf::cli {

/// Exit codes: 0 ok, 1 domain error, 2 usage error.
enum ExitCode : int { ok = 0, domain_error = 1, usage_error = 2 };

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::unknown, "cannot read file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline SchemaGraph load_schema(const std::string& path) {
    auto g = parse_schema(read_file(path));
    if (auto v = validate_schema(g); !v.empty()) throw Error(ErrorKind::invalid, path + ": " + v.front().message);
    return g;
}

inline std::string cell(const std::optional<Value>& v) { return v.value_or(""); }

inline void print_result(const SchemaGraph& g, const EvalResult& result, std::ostream& out) {
    if (const auto* r = std::get_if<BinaryRelation>(&result)) {
        out << text::lower(g.object_type(r->head_type).name) << '\t' << text::lower(g.object_type(r->tail_type).name) << '\n';
        for (const auto& [a, b] : r->pairs) out << a << '\t' << b << '\n';
    } else if (const auto* n = std::get_if<std::size_t>(&result)) {
        out << *n << '\n';
    } else {
        const auto& t = std::get<ResultTable>(result);
        for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "\t" : "") << t.columns[i];
        out << '\n';
        for (const auto& row : t.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "\t" : "") << cell(row[i]);
            out << '\n';
        }
    }
}

/// Applies one line of a navigation script: "refine <FactType> <fwd|rev>", "refine <index>" or "generalize".
inline NavNode apply_script_line(const SchemaGraph& g, const NavNode& node, const std::string& line, std::size_t line_no) {
    std::istringstream words(line);
    std::string verb;
    words >> verb;
    if (verb == "generalize") return apply_move(g, node, Generalize{});
    if (verb != "refine") throw ParseError(line_no, 1, "expected 'refine' or 'generalize', got '" + verb + "'");
    std::string a, b;
    words >> a >> b;
    if (b.empty()) {
        const auto idx = text::parse_integer(a);
        const auto legal = moves(g, node);
        if (!idx || *idx < 0) throw ParseError(line_no, 8, "expected a move index or '<FactType> <fwd|rev>'");
        std::size_t refine_no = 0;
        for (const auto& m : legal)
            if (std::holds_alternative<Refine>(m) && refine_no++ == static_cast<std::size_t>(*idx)) return apply_move(g, node, m);
        throw Error(ErrorKind::illegal_move, "line " + std::to_string(line_no) + ": no refinement #" + a + " at focus '" + verbalize_path(g, node.focus) + "'");
    }
    const auto dir = detail::parse_direction(b);
    if (!dir) throw ParseError(line_no, 1, "expected 'fwd' or 'rev', got '" + b + "'");
    return apply_move(g, node, Refine{Step{FactTypeId(a), *dir}});
}

inline void serve(const ServiceConfig& config, std::ostream& err) {
    Service service(config);
    httplib::Server server;
    mount(server, service);
    std::mutex m;
    std::condition_variable cv;
    bool stopping = false;
    std::thread gc([&] {
        std::unique_lock lock(m);
        while (!cv.wait_for(lock, std::chrono::minutes(1), [&] { return stopping; })) service.gc_sessions(Service::Clock::now());
    });
    err << "listening on 0.0.0.0:" << config.port << std::endl;
    const bool ok = server.listen("0.0.0.0", config.port);
    {
        std::lock_guard lock(m);
        stopping = true;
    }
    cv.notify_all();
    gc.join();
    if (!ok) throw Error(ErrorKind::state, "cannot listen on port " + std::to_string(config.port));
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Conceptual query formulation: path search, spider queries, navigation, evaluation and SQL", "cqf"};
    app.require_subcommand(1);

    std::string schema_file, population_file, path_text, query_file, start, moves_file;
    std::vector<std::string> points;
    std::vector<std::size_t> prunes;
    std::string root;
    const auto env = ServiceConfig::from_env();
    std::size_t batch = env.default_batch, more = 0;
    int port = env.port;

    auto* validate = app.add_subcommand("validate", "Check a schema file; silent on success");
    validate->add_option("-s,--schema", schema_file, "Schema (.cqs)")->required();

    auto* object_types = app.add_subcommand("object-types", "List object types in importance order (id, degree)");
    object_types->add_option("-s,--schema", schema_file, "Schema (.cqs)")->required();

    auto* ppq = app.add_subcommand("ppq", "Rank connecting paths between successive points");
    ppq->add_option("-s,--schema", schema_file, "Schema (.cqs)")->required();
    ppq->add_option("points", points, "Object types, at least two")->required();
    ppq->add_option("--batch", batch, "Paths per batch")->check(CLI::PositiveNumber);
    ppq->add_option("--more", more, "Simulated MORE presses per segment");

    auto* spider_cmd = app.add_subcommand("spider", "Spider query around an object type");
    spider_cmd->add_option("-s,--schema", schema_file, "Schema (.cqs)")->required();
    spider_cmd->add_option("type", root, "Root object type")->required();
    spider_cmd->add_option("--prune", prunes, "Remove root branch i (applied in order)")->take_all();

    auto* nav = app.add_subcommand("nav", "Replay a query-by-navigation script");
    nav->add_option("-s,--schema", schema_file, "Schema (.cqs)")->required();
    nav->add_option("--start", start, "Object type, or a file holding a path")->required();
    nav->add_option("--moves", moves_file, "Script: one 'refine ...' or 'generalize' per line")->required();

    auto* eval = app.add_subcommand("eval", "Evaluate a path or query against a population");
    eval->add_option("-s,--schema", schema_file, "Schema (.cqs)")->required();
    eval->add_option("-p,--population", population_file, "Population (.cqp)")->required();
    auto* path_opt = eval->add_option("--path", path_text, "Path text, e.g. 'FT3 fwd FT4 fwd' or '@Year'");
    auto* query_opt = eval->add_option("--query", query_file, "Query text file");
    path_opt->excludes(query_opt);

    auto* sql = app.add_subcommand("sql", "Print SQL for a query");
    sql->add_option("-s,--schema", schema_file, "Schema (.cqs)")->required();
    sql->add_option("--query", query_file, "Query text file")->required();

    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP+JSON service");
    serve_cmd->add_option("--port", port, "Listening port");

    std::vector<const char*> argv{"cqf"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
        if (ppq->parsed() && points.size() < 2) throw CLI::ValidationError("points", "a point-to-point query needs at least 2 points");
        if (eval->parsed() && path_opt->count() + query_opt->count() != 1) throw CLI::RequiredError("exactly one of --path or --query");
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? ok : usage_error;
    }

    try {
        if (validate->parsed()) {
            SchemaGraph g;
            try {
                g = parse_schema(read_file(schema_file));
            } catch (const ParseError& e) {
                err << schema_file << ": " << e.what() << '\n';
                return domain_error;
            }
            const auto v = validate_schema(g);
            for (const auto& x : v) err << schema_file << ": " << x.message << '\n';
            return v.empty() ? ok : domain_error;
        }
        const auto g = std::make_shared<const SchemaGraph>(load_schema(schema_file));
        if (object_types->parsed()) {
            for (const auto& id : importance_order(*g)) out << id.str() << '\t' << g->adjacent_steps(id).size() << '\n';
        } else if (ppq->parsed()) {
            std::vector<ObjectTypeId> ids(points.begin(), points.end());
            auto r = run_ppq(g, ids, batch);
            for (std::size_t s = 0; s < r.segments.size(); ++s)
                for (std::size_t k = 0; k < more; ++k) more_paths(r, s, batch);
            for (std::size_t s = 0; s < r.segments.size(); ++s) {
                const auto& seg = r.segments[s];
                out << "# segment " << s + 1 << ": " << seg.enumerator.from().str() << " -> " << seg.enumerator.to().str() << '\n';
                for (const auto& wp : seg.offered) out << wp.weight << '\t' << wp.text << '\n';
            }
        } else if (spider_cmd->parsed()) {
            auto t = spider(*g, ObjectTypeId(root));
            for (auto i : prunes) t = prune_branch(t, {}, i);
            for (const auto& p : tree_paths(t)) out << verbalize_path(*g, p) << '\n';
        } else if (nav->parsed()) {
            NavNode node;
            if (g->contains(ObjectTypeId(start))) node = start_session(*g, ObjectTypeId(start));
            else node = start_session(*g, parse_path(*g, read_file(start)));
            out << verbalize_path(*g, node.focus) << '\n';
            std::istringstream script(read_file(moves_file));
            std::string line;
            std::size_t line_no = 0;
            while (std::getline(script, line)) {
                ++line_no;
                const auto t = text::trim(line);
                if (t.empty() || t.front() == '#') continue;
                node = apply_script_line(*g, node, std::string(t), line_no);
                out << verbalize_path(*g, node.focus) << '\n';
            }
        } else if (eval->parsed()) {
            const auto pop = parse_population(read_file(population_file), *g);
            const auto e = query_opt->count() ? parse_query(*g, read_file(query_file)) : atom(*g, parse_path(*g, path_text));
            print_result(*g, eval_expr(*g, pop, e), out);
        } else if (sql->parsed()) {
            const auto e = parse_query(*g, read_file(query_file));
            out << emit_sql(*g, e) << '\n';
        } else if (serve_cmd->parsed()) {
            auto config = env;
            config.port = port;
            serve(config, err);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return domain_error;
    }
    return ok;
}

}  // namespace cqf::cli

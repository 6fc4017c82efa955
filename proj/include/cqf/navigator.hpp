#pragma once

#include "cqf/schema.hpp"

#include <variant>

namespace cqf {

struct Refine {
    Step step;
    friend bool operator==(const Refine&, const Refine&) = default;
};

struct Generalize {
    friend bool operator==(const Generalize&, const Generalize&) = default;
};

using NavMove = std::variant<Refine, Generalize>;

/// A node of a query-by-navigation session. History is kept for undo display only.
struct NavNode {
    SchemaPath focus;
    std::vector<NavMove> history;

    friend bool operator==(const NavNode&, const NavNode&) = default;
};

inline NavNode start_session(const SchemaGraph& g, const ObjectTypeId& origin) {
    g.object_type(origin);
    return NavNode{SchemaPath{origin, {}}, {}};
}

inline NavNode start_session(const SchemaGraph& g, const SchemaPath& origin) {
    check_path(g, origin);
    return NavNode{origin, {}};
}

/// Refinements along each adjacent step of the focus tail that does not revisit
/// an object type on the focus, then generalize when the focus has a step to drop.
inline std::vector<NavMove> moves(const SchemaGraph& g, const NavNode& n) {
    const auto tail = path_tail(g, n.focus);
    const auto on_focus = path_nodes(g, n.focus);
    std::vector<NavMove> out;
    for (const auto& step : g.adjacent_steps(tail)) {
        const auto& next = g.to_player(step);
        if (std::find(on_focus.begin(), on_focus.end(), next) != on_focus.end()) continue;
        out.emplace_back(Refine{step});
    }
    if (!n.focus.steps.empty()) out.emplace_back(Generalize{});
    return out;
}

inline std::string describe_move(const NavMove& m) {
    if (const auto* r = std::get_if<Refine>(&m)) return "refine " + r->step.fact_type.str() + " " + std::string(to_string(r->step.direction));
    return "generalize";
}

inline NavNode apply_move(const SchemaGraph& g, const NavNode& n, const NavMove& m) {
    const auto legal = moves(g, n);
    if (std::find(legal.begin(), legal.end(), m) == legal.end())
        throw Error(ErrorKind::illegal_move, "illegal move '" + describe_move(m) + "' at focus '" + verbalize_path(g, n.focus) + "'");
    NavNode out = n;
    if (const auto* r = std::get_if<Refine>(&m)) out.focus.steps.push_back(r->step);
    else out.focus.steps.pop_back();
    out.history.push_back(m);
    return out;
}

inline SchemaPath to_particle(const NavNode& n) { return n.focus; }

}  // namespace cqf

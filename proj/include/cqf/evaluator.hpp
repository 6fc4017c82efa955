#pragma once

#include "cqf/querybuilder.hpp"

#include <unordered_map>

namespace cqf {

using Value = std::string;
using ValuePair = std::pair<Value, Value>;

/// The information base: fact instances per fact type, set semantics.
class Population {
public:
    Population() = default;

    /// Adds one fact; returns false when it was already present.
    bool add(const FactTypeId& ft, Value a, Value b) { return facts_[ft].emplace(std::move(a), std::move(b)).second; }

    const std::set<ValuePair>& facts(const FactTypeId& ft) const {
        static const std::set<ValuePair> none;
        auto it = facts_.find(ft);
        return it == facts_.end() ? none : it->second;
    }

    const std::map<FactTypeId, std::set<ValuePair>>& all() const noexcept { return facts_; }

    std::size_t size() const {
        std::size_t n = 0;
        for (const auto& [_, s] : facts_) n += s.size();
        return n;
    }

    std::size_t fact_type_count() const {
        return static_cast<std::size_t>(std::count_if(facts_.begin(), facts_.end(), [](const auto& kv) { return !kv.second.empty(); }));
    }

    /// Every value occurring in a role played by `ot`.
    std::set<Value> active_domain(const SchemaGraph& g, const ObjectTypeId& ot) const {
        std::set<Value> out;
        for (const auto& [ft_id, pairs] : facts_) {
            const auto* ft = g.find_fact_type(ft_id);
            if (!ft) continue;
            for (const auto& [a, b] : pairs) {
                if (ft->roles[0].player == ot) out.insert(a);
                if (ft->roles[1].player == ot) out.insert(b);
            }
        }
        return out;
    }

    friend bool operator==(const Population&, const Population&) = default;

private:
    std::map<FactTypeId, std::set<ValuePair>> facts_;
};

/// Denotation of a path expression.
struct BinaryRelation {
    ObjectTypeId head_type;
    ObjectTypeId tail_type;
    std::set<ValuePair> pairs;

    friend bool operator==(const BinaryRelation&, const BinaryRelation&) = default;
};

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::optional<Value>>> rows;

    friend bool operator==(const ResultTable&, const ResultTable&) = default;
};

using EvalResult = std::variant<BinaryRelation, std::size_t, ResultTable>;

// ---------------------------------------------------------------------------
// .cqp population format

namespace detail {

inline std::vector<std::string> split_values(std::string_view body, std::size_t line_no, std::size_t offset) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false, was_quoted = false;
    std::size_t i = 0;
    auto flush = [&] {
        out.push_back(was_quoted ? cur : std::string(text::trim(cur)));
        cur.clear();
        was_quoted = false;
    };
    for (; i < body.size(); ++i) {
        const char c = body[i];
        if (quoted) {
            if (c == '\\' && i + 1 < body.size()) cur.push_back(body[++i]);
            else if (c == '"') quoted = false;
            else cur.push_back(c);
        } else if (c == '"') {
            if (!text::trim(cur).empty()) throw ParseError(line_no, offset + i + 1, "quote inside unquoted value");
            cur.clear();
            quoted = was_quoted = true;
        } else if (c == ',') {
            flush();
        } else if (was_quoted) {
            if (!std::isspace(static_cast<unsigned char>(c))) throw ParseError(line_no, offset + i + 1, "text after closing quote");
        } else {
            cur.push_back(c);
        }
    }
    if (quoted) throw ParseError(line_no, offset + body.size() + 1, "unterminated quoted value");
    flush();
    return out;
}

}  // namespace detail

/// Parses `<FactTypeId>: <valueA> , <valueB>` lines; `#` comments and blank lines are skipped.
inline Population parse_population(std::string_view source, const SchemaGraph& g) {
    Population pop;
    std::size_t line_no = 0, start = 0;
    while (start < source.size()) {
        auto end = source.find('\n', start);
        if (end == std::string_view::npos) end = source.size();
        auto line = source.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        const auto trimmed = text::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        const auto colon = line.find(':');
        if (colon == std::string_view::npos) throw ParseError(line_no, 1, "expected '<FactTypeId>: <valueA> , <valueB>'");
        const FactTypeId id{std::string(text::trim(line.substr(0, colon)))};
        const auto* ft = g.find_fact_type(id);
        if (!ft) throw ParseError(line_no, 1, "unknown fact type '" + id.str() + "'");
        auto values = detail::split_values(line.substr(colon + 1), line_no, colon + 1);
        if (values.size() != 2)
            throw ParseError(line_no, colon + 2, "fact type " + id.str() + " is binary but the line has " + std::to_string(values.size()) + " values");
        for (std::size_t r = 0; r < 2; ++r) {
            if (values[r].empty()) throw ParseError(line_no, colon + 2, "empty value for role " + std::to_string(r + 1));
            const auto& player = g.object_type(ft->roles[r].player);
            if (value_domain(player) == ValueDomain::integer) {
                const auto n = text::parse_integer(values[r]);
                if (!n) throw ParseError(line_no, colon + 2, "value '" + values[r] + "' for " + player.id.str() + " must be an integer");
                values[r] = std::to_string(*n);
            }
        }
        pop.add(id, std::move(values[0]), std::move(values[1]));
    }
    return pop;
}

inline std::string serialize_population(const Population& pop, const SchemaGraph& g) {
    auto quote = [](const Value& v) {
        if (v.find_first_of(",\"#") == std::string::npos && text::trim(v) == v) return v;
        std::string out = "\"";
        for (char c : v) {
            if (c == '"' || c == '\\') out.push_back('\\');
            out.push_back(c);
        }
        return out + "\"";
    };
    std::string out;
    for (const auto& ft : g.fact_types())
        for (const auto& [a, b] : pop.facts(ft.id)) out += ft.id.str() + ": " + quote(a) + " , " + quote(b) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Relational operators

inline BinaryRelation compose(const BinaryRelation& r, const BinaryRelation& s) {
    std::unordered_map<Value, std::vector<const Value*>> by_head;
    for (const auto& [a, b] : s.pairs) by_head[a].push_back(&b);
    BinaryRelation out{r.head_type, s.tail_type, {}};
    for (const auto& [a, b] : r.pairs)
        if (auto it = by_head.find(b); it != by_head.end())
            for (const auto* c : it->second) out.pairs.emplace(a, *c);
    return out;
}

inline BinaryRelation transpose(const BinaryRelation& r) {
    BinaryRelation out{r.tail_type, r.head_type, {}};
    for (const auto& [a, b] : r.pairs) out.pairs.emplace(b, a);
    return out;
}

inline BinaryRelation identity_relation(const SchemaGraph& g, const Population& pop, const ObjectTypeId& ot) {
    BinaryRelation out{ot, ot, {}};
    for (const auto& v : pop.active_domain(g, ot)) out.pairs.emplace(v, v);
    return out;
}

inline BinaryRelation step_relation(const SchemaGraph& g, const Population& pop, const Step& s) {
    BinaryRelation r{g.from_player(s), g.to_player(s), {}};
    for (const auto& [a, b] : pop.facts(s.fact_type)) {
        if (s.direction == Direction::forward) r.pairs.emplace(a, b);
        else r.pairs.emplace(b, a);
    }
    return r;
}

inline BinaryRelation eval_path(const SchemaGraph& g, const Population& pop, const SchemaPath& p) {
    check_path(g, p);
    if (p.steps.empty()) return identity_relation(g, pop, p.head);
    auto r = step_relation(g, pop, p.steps.front());
    for (std::size_t i = 1; i < p.steps.size(); ++i) r = compose(r, step_relation(g, pop, p.steps[i]));
    return r;
}

/// Numeric order for integer-valued types, lexicographic for text-valued ones.
inline bool compare_values(const Value& v, Comparison cmp, const std::string& literal, ValueDomain domain) {
    int order;
    const auto a = text::parse_number(v), b = text::parse_number(literal);
    if (domain == ValueDomain::integer && a && b) order = *a < *b ? -1 : (*a > *b ? 1 : 0);
    else order = v < literal ? -1 : (v > literal ? 1 : 0);
    switch (cmp) {
        case Comparison::eq: return order == 0;
        case Comparison::ne: return order != 0;
        case Comparison::lt: return order < 0;
        case Comparison::le: return order <= 0;
        case Comparison::gt: return order > 0;
        case Comparison::ge: return order >= 0;
    }
    return false;
}

inline ResultTable eval_query_tree(const SchemaGraph& g, const Population& pop, const QueryTree& qt);

namespace detail {

inline BinaryRelation eval_relation(const SchemaGraph& g, const Population& pop, const QueryExpr& e) {
    return std::visit(
        [&](const auto& n) -> BinaryRelation {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, AtomExpr>) {
                return eval_path(g, pop, n.path);
            } else if constexpr (std::is_same_v<T, PlaceholderExpr>) {
                throw Error(ErrorKind::state, "unresolved placeholder [" + n.label + "]");
            } else if constexpr (std::is_same_v<T, BinaryExpr>) {
                const auto l = eval_relation(g, pop, n.left);
                const auto r = eval_relation(g, pop, n.right);
                if (n.op == BinaryOp::concat) return compose(l, r);
                BinaryRelation out{l.head_type, l.tail_type, {}};
                if (n.op == BinaryOp::unite) {
                    std::set_union(l.pairs.begin(), l.pairs.end(), r.pairs.begin(), r.pairs.end(), std::inserter(out.pairs, out.pairs.end()));
                } else if (n.op == BinaryOp::intersect) {
                    std::set_intersection(l.pairs.begin(), l.pairs.end(), r.pairs.begin(), r.pairs.end(), std::inserter(out.pairs, out.pairs.end()));
                } else {
                    std::set_difference(l.pairs.begin(), l.pairs.end(), r.pairs.begin(), r.pairs.end(), std::inserter(out.pairs, out.pairs.end()));
                }
                return out;
            } else if constexpr (std::is_same_v<T, SelectExpr>) {
                auto inner = eval_relation(g, pop, n.inner);
                const auto domain = value_domain(g.object_type(inner.tail_type));
                std::erase_if(inner.pairs, [&](const ValuePair& p) { return !compare_values(p.second, n.cmp, n.literal, domain); });
                return inner;
            } else {
                throw Error(ErrorKind::invalid, "a count or tree cannot be used as a relation");
            }
        },
        e.node().v);
}

}  // namespace detail

/// Evaluates a validated, placeholder-free expression: a relation, a count, or a table for trees.
inline EvalResult eval_expr(const SchemaGraph& g, const Population& pop, const QueryExpr& e) {
    if (contains_placeholder(e)) throw Error(ErrorKind::state, "expression contains an unresolved placeholder");
    if (auto v = validate_expr(g, e); !v.empty()) throw Error(ErrorKind::type_mismatch, "invalid expression: " + v.front().message);
    if (const auto* c = std::get_if<CountExpr>(&e.node().v)) return detail::eval_relation(g, pop, c->inner).pairs.size();
    if (const auto* t = std::get_if<TreeExpr>(&e.node().v)) return eval_query_tree(g, pop, t->tree);
    return detail::eval_relation(g, pop, e);
}

/// Flat tabulation of a double tree: a root column, then one column per crown
/// leaf path. One row per root instance reachable through the stem; one-to-many
/// branches multiply rows, missing values stay empty.
inline ResultTable eval_query_tree(const SchemaGraph& g, const Population& pop, const QueryTree& qt) {
    const auto tail = path_tail(g, qt.stem);
    if (tail != qt.crown.root)
        throw Error(ErrorKind::type_mismatch, "stem ends at " + tail.str() + " but the crown is rooted at " + qt.crown.root.str());
    if (auto v = spider_violations(g, qt.crown); !v.empty()) throw Error(ErrorKind::invalid, "invalid tree: " + v.front().message);

    ResultTable table;
    const auto root_name = text::lower(g.object_type(qt.crown.root).name);
    table.columns.push_back(root_name);
    std::vector<BinaryRelation> leaf_relations;
    for (const auto& p : tree_paths(qt.crown)) {
        if (p.steps.empty()) continue;
        table.columns.push_back(text::lower(verbalize_path(g, p).substr(root_name.size() + 1)));
        leaf_relations.push_back(eval_path(g, pop, p));
    }

    std::set<Value> roots;
    if (qt.stem.steps.empty()) roots = pop.active_domain(g, qt.crown.root);
    else
        for (const auto& [_, b] : eval_path(g, pop, qt.stem).pairs) roots.insert(b);

    for (const auto& root : roots) {
        std::vector<std::vector<std::optional<Value>>> options;
        for (const auto& rel : leaf_relations) {
            std::vector<std::optional<Value>> vals;
            for (auto it = rel.pairs.lower_bound({root, Value{}}); it != rel.pairs.end() && it->first == root; ++it) vals.emplace_back(it->second);
            if (vals.empty()) vals.emplace_back(std::nullopt);
            options.push_back(std::move(vals));
        }
        std::vector<std::optional<Value>> row{root};
        auto emit = [&](auto&& self, std::size_t col) -> void {
            if (col == options.size()) {
                table.rows.push_back(row);
                return;
            }
            for (const auto& v : options[col]) {
                row.push_back(v);
                self(self, col + 1);
                row.pop_back();
            }
        };
        emit(emit, 0);
    }
    return table;
}

}  // namespace cqf

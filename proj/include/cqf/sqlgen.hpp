#pragma once

#include "cqf/querybuilder.hpp"

namespace cqf {

struct TableMapping {
    FactTypeId fact_type;
    std::string table;
    std::array<std::string, 2> columns;  ///< one per role, in role order

    friend bool operator==(const TableMapping&, const TableMapping&) = default;
};

/// Fact type to table mapping: table = lowercased fact type id, columns = role
/// names or "a"/"b". Ordered by fact type id.
struct RelationalMap {
    std::vector<TableMapping> tables;

    const TableMapping& at(const FactTypeId& ft) const {
        for (const auto& t : tables)
            if (t.fact_type == ft) return t;
        throw Error(ErrorKind::unknown, "fact type '" + ft.str() + "' has no table");
    }
};

namespace detail {

inline bool is_sql_identifier(std::string_view s) {
    if (s.empty() || std::isdigit(static_cast<unsigned char>(s.front()))) return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::islower(c) || std::isdigit(c) || c == '_'; });
}

inline bool is_sql_keyword(const std::string& s) {
    static const std::set<std::string> words = {"all",   "and",   "as",    "by",     "count",  "create", "distinct", "except", "from", "group",
                                                "in",    "inner", "insert","intersect","into", "is",     "join",     "not",    "null", "on",
                                                "or",    "order", "select","table",  "union",  "values", "where"};
    return words.contains(s);
}

}  // namespace detail

inline RelationalMap relational_map(const SchemaGraph& g) {
    std::vector<const FactType*> facts;
    for (const auto& ft : g.fact_types()) facts.push_back(&ft);
    std::sort(facts.begin(), facts.end(), [](const FactType* a, const FactType* b) { return text::natural_compare(a->id.str(), b->id.str()) < 0; });

    RelationalMap map;
    std::map<std::string, FactTypeId> seen_tables;
    for (const auto* ft : facts) {
        TableMapping t{ft->id, text::lower(ft->id.str()), {"a", "b"}};
        if (!detail::is_sql_identifier(t.table) || detail::is_sql_keyword(t.table))
            throw Error(ErrorKind::invalid, "fact type id '" + ft->id.str() + "' does not map to a valid SQL table name");
        if (auto [it, inserted] = seen_tables.emplace(t.table, ft->id); !inserted)
            throw Error(ErrorKind::collision, "fact types '" + it->second.str() + "' and '" + ft->id.str() + "' both map to table '" + t.table + "'");
        for (std::size_t r = 0; r < 2; ++r) {
            if (!ft->roles[r].role_name) continue;
            t.columns[r] = text::lower(*ft->roles[r].role_name);
            if (!detail::is_sql_identifier(t.columns[r]) || detail::is_sql_keyword(t.columns[r]))
                throw Error(ErrorKind::invalid, "role name '" + *ft->roles[r].role_name + "' of " + ft->id.str() + " is not a valid SQL column name");
        }
        if (t.columns[0] == t.columns[1])
            throw Error(ErrorKind::collision, "both roles of " + ft->id.str() + " map to column '" + t.columns[0] + "'");
        map.tables.push_back(std::move(t));
    }
    return map;
}

inline std::string sql_type(const ObjectType& ot) { return value_domain(ot) == ValueDomain::integer ? "INTEGER" : "TEXT"; }

inline std::string emit_ddl(const SchemaGraph& g) {
    const auto map = relational_map(g);
    std::string out;
    for (const auto& t : map.tables) {
        const auto& ft = g.fact_type(t.fact_type);
        out += "CREATE TABLE " + t.table + " (" + t.columns[0] + " " + sql_type(g.object_type(ft.roles[0].player)) + ", " + t.columns[1] + " " +
               sql_type(g.object_type(ft.roles[1].player)) + ");\n";
    }
    return out;
}

namespace detail {

/// Lowers expressions to SQL. A maximal chain of concatenated atoms (with
/// selections folded in as WHERE terms) becomes one SELECT with one alias per
/// step and one JOIN per junction; any other operand of a chain joins as a
/// derived table exposing columns hd/tl. Set operations become compound
/// selects whose members are always simple SELECTs.
class SqlLowering {
public:
    SqlLowering(const SchemaGraph& g) : g_(g), map_(relational_map(g)) {}

    std::string top(const QueryExpr& e) {
        if (const auto* c = std::get_if<CountExpr>(&e.node().v)) {
            const auto alias = next_alias();
            const auto inner = query(c->inner, true);
            return "SELECT COUNT(*) FROM (" + inner + ") " + alias + ";";
        }
        return query(e, false) + ";";
    }

private:
    struct Chain {
        std::vector<std::string> from;  ///< first item, then "JOIN ... ON ..." items
        std::string head_col, tail_col;
        ObjectTypeId type;              ///< object type at the current chain end
        std::vector<std::string> where;
    };

    std::string next_alias() { return "t" + std::to_string(++alias_); }

    static bool is_set_op(const QueryExpr& e) {
        const auto* b = std::get_if<BinaryExpr>(&e.node().v);
        return b && b->op != BinaryOp::concat;
    }

    std::string query(const QueryExpr& e, bool named) {
        if (const auto* b = std::get_if<BinaryExpr>(&e.node().v); b && b->op != BinaryOp::concat) {
            const char* op = b->op == BinaryOp::unite ? " UNION " : b->op == BinaryOp::intersect ? " INTERSECT " : " EXCEPT ";
            const auto left = member(b->left, named);
            const auto right = member(b->right, named);
            return left + op + right;
        }
        Chain chain;
        chain.type = head_tail(g_, e).head;
        flatten(e, chain);
        if (chain.from.empty()) add_identity(chain);
        return render(chain, named);
    }

    /// A compound member: a simple SELECT, wrapping nested compounds as derived tables.
    std::string member(const QueryExpr& e, bool named) {
        if (!is_set_op(e)) return query(e, named);
        Chain chain;
        chain.type = head_tail(g_, e).head;
        add_derived(chain, e);
        return render(chain, named);
    }

    std::string render(const Chain& c, bool named) const {
        std::string out = "SELECT DISTINCT " + c.head_col + (named ? " AS hd" : "") + ", " + c.tail_col + (named ? " AS tl" : "") + " FROM ";
        for (std::size_t i = 0; i < c.from.size(); ++i) out += (i ? " " : "") + c.from[i];
        for (std::size_t i = 0; i < c.where.size(); ++i) out += (i ? " AND " : " WHERE ") + c.where[i];
        return out;
    }

    void add_unit(Chain& c, const std::string& source, const std::string& alias, const std::string& in_col, const std::string& out_col, const ObjectTypeId& out_type) {
        if (c.from.empty()) {
            c.from.push_back(source + " " + alias);
            c.head_col = alias + "." + in_col;
        } else {
            c.from.push_back("JOIN " + source + " " + alias + " ON " + c.tail_col + " = " + alias + "." + in_col);
        }
        c.tail_col = alias + "." + out_col;
        c.type = out_type;
    }

    void add_derived(Chain& c, const QueryExpr& e) {
        const auto ht = head_tail(g_, e);
        const auto alias = next_alias();
        add_unit(c, "(" + query(e, true) + ")", alias, "hd", "tl", ht.tail);
    }

    /// Identity over the active domain of the chain's current type.
    void add_identity(Chain& c) {
        const auto alias = next_alias();
        std::vector<std::string> members;
        for (const auto& t : map_.tables) {
            const auto& ft = g_.fact_type(t.fact_type);
            for (std::size_t r = 0; r < 2; ++r) {
                if (ft.roles[r].player != c.type) continue;
                const auto inner = next_alias();
                members.push_back("SELECT DISTINCT " + inner + "." + t.columns[r] + " AS hd, " + inner + "." + t.columns[r] + " AS tl FROM " + t.table + " " + inner);
            }
        }
        std::string source;
        if (members.empty()) source = "(SELECT NULL AS hd, NULL AS tl WHERE 1 = 0)";
        else {
            source = "(";
            for (std::size_t i = 0; i < members.size(); ++i) source += (i ? " UNION " : "") + members[i];
            source += ")";
        }
        add_unit(c, source, alias, "hd", "tl", c.type);
    }

    void flatten(const QueryExpr& e, Chain& c) {
        if (const auto* a = std::get_if<AtomExpr>(&e.node().v)) {
            for (const auto& step : a->path.steps) {
                const auto& t = map_.at(step.fact_type);
                const bool fwd = step.direction == Direction::forward;
                const auto alias = next_alias();
                add_unit(c, t.table, alias, t.columns[fwd ? 0 : 1], t.columns[fwd ? 1 : 0], g_.to_player(step));
            }
        } else if (const auto* b = std::get_if<BinaryExpr>(&e.node().v); b && b->op == BinaryOp::concat) {
            flatten(b->left, c);
            flatten(b->right, c);
        } else if (const auto* s = std::get_if<SelectExpr>(&e.node().v)) {
            flatten(s->inner, c);
            if (c.from.empty()) add_identity(c);
            c.where.push_back(c.tail_col + " " + std::string(to_string(s->cmp)) + " " + literal(s->literal, c.type));
        } else if (std::holds_alternative<PlaceholderExpr>(e.node().v)) {
            throw Error(ErrorKind::state, "unresolved placeholder [" + std::get<PlaceholderExpr>(e.node().v).label + "]");
        } else if (std::holds_alternative<TreeExpr>(e.node().v)) {
            throw Error(ErrorKind::unsupported, "query trees are evaluated natively and have no SQL lowering");
        } else if (std::holds_alternative<CountExpr>(e.node().v)) {
            throw Error(ErrorKind::invalid, "a count can only be the outermost construct");
        } else {
            add_derived(c, e);
        }
    }

    std::string literal(const std::string& lit, const ObjectTypeId& type) const {
        if (value_domain(g_.object_type(type)) == ValueDomain::integer) {
            if (auto n = text::parse_number(lit)) return std::string(text::trim(lit));
        }
        std::string out = "'";
        for (char ch : lit) {
            if (ch == '\'') out.push_back('\'');
            out.push_back(ch);
        }
        return out + "'";
    }

    const SchemaGraph& g_;
    RelationalMap map_;
    int alias_ = 0;
};

}  // namespace detail

/// SQL text for a validated, placeholder-free expression. Byte-stable for equal inputs.
inline std::string emit_sql(const SchemaGraph& g, const QueryExpr& e) {
    if (contains_placeholder(e)) throw Error(ErrorKind::state, "expression contains an unresolved placeholder");
    if (std::holds_alternative<TreeExpr>(e.node().v)) throw Error(ErrorKind::unsupported, "query trees are evaluated natively and have no SQL lowering");
    if (auto v = validate_expr(g, e); !v.empty()) throw Error(ErrorKind::type_mismatch, "invalid expression: " + v.front().message);
    return detail::SqlLowering(g).top(e);
}

}  // namespace cqf

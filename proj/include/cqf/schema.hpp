#pragma once

#include "cqf/common.hpp"

#include <array>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace cqf {

enum class ObjectKind { entity, value };

/// How instance values of an object type are denoted.
enum class ValueDomain { text, integer };

struct ObjectType {
    ObjectTypeId id;
    std::string name;  ///< display text, e.g. "Nr Of Votes" for id NrOfVotes
    ObjectKind kind = ObjectKind::entity;
    std::optional<std::string> reference_scheme;  ///< present iff kind == entity

    friend bool operator==(const ObjectType&, const ObjectType&) = default;
};

struct Role {
    ObjectTypeId player;
    std::string connector;  ///< phrase used when traversing from this role toward the other one
    std::optional<std::string> role_name;

    friend bool operator==(const Role&, const Role&) = default;
};

struct FactType {
    FactTypeId id;
    std::array<Role, 2> roles;

    friend bool operator==(const FactType&, const FactType&) = default;
};

enum class Direction { forward, reverse };

inline Direction opposite(Direction d) { return d == Direction::forward ? Direction::reverse : Direction::forward; }

inline std::string_view to_string(Direction d) { return d == Direction::forward ? "forward" : "reverse"; }

/// One traversal of a fact type. Forward goes from roles[0].player to roles[1].player.
struct Step {
    FactTypeId fact_type;
    Direction direction = Direction::forward;

    friend bool operator==(const Step&, const Step&) = default;
    friend auto operator<=>(const Step&, const Step&) = default;
};

/// Head-to-tail walk through a schema; the atomic query particle.
struct SchemaPath {
    ObjectTypeId head;
    std::vector<Step> steps;

    bool empty() const noexcept { return steps.empty(); }

    friend bool operator==(const SchemaPath&, const SchemaPath&) = default;
    friend auto operator<=>(const SchemaPath&, const SchemaPath&) = default;
};

inline bool step_less(const Step& a, const Step& b) {
    if (const int c = text::natural_compare(a.fact_type.str(), b.fact_type.str()); c != 0) return c < 0;
    return a.direction < b.direction;
}

/// Immutable conceptual schema with derived adjacency. Construction never throws
/// on invariant violations; use validate_schema to inspect them.
class SchemaGraph {
public:
    SchemaGraph() = default;

    SchemaGraph(std::vector<ObjectType> object_types, std::vector<FactType> fact_types)
        : object_types_(std::move(object_types)), fact_types_(std::move(fact_types)) {
        for (std::size_t i = 0; i < object_types_.size(); ++i) {
            object_index_.emplace(object_types_[i].id, i);
            adjacency_.try_emplace(object_types_[i].id);
        }
        for (std::size_t i = 0; i < fact_types_.size(); ++i) {
            const auto& ft = fact_types_[i];
            fact_index_.emplace(ft.id, i);
            if (auto it = adjacency_.find(ft.roles[0].player); it != adjacency_.end())
                it->second.push_back(Step{ft.id, Direction::forward});
            if (auto it = adjacency_.find(ft.roles[1].player); it != adjacency_.end())
                it->second.push_back(Step{ft.id, Direction::reverse});
        }
        for (auto& [_, steps] : adjacency_) std::sort(steps.begin(), steps.end(), step_less);
    }

    const std::vector<ObjectType>& object_types() const noexcept { return object_types_; }
    const std::vector<FactType>& fact_types() const noexcept { return fact_types_; }

    const ObjectType* find_object_type(const ObjectTypeId& id) const {
        auto it = object_index_.find(id);
        return it == object_index_.end() ? nullptr : &object_types_[it->second];
    }

    const FactType* find_fact_type(const FactTypeId& id) const {
        auto it = fact_index_.find(id);
        return it == fact_index_.end() ? nullptr : &fact_types_[it->second];
    }

    const ObjectType& object_type(const ObjectTypeId& id) const {
        if (const auto* ot = find_object_type(id)) return *ot;
        throw Error(ErrorKind::unknown, "unknown object type '" + id.str() + "'");
    }

    const FactType& fact_type(const FactTypeId& id) const {
        if (const auto* ft = find_fact_type(id)) return *ft;
        throw Error(ErrorKind::unknown, "unknown fact type '" + id.str() + "'");
    }

    bool contains(const ObjectTypeId& id) const { return object_index_.contains(id); }

    /// Steps departing `id`, ordered by (fact type id, direction).
    const std::vector<Step>& adjacent_steps(const ObjectTypeId& id) const {
        auto it = adjacency_.find(id);
        if (it == adjacency_.end()) throw Error(ErrorKind::unknown, "unknown object type '" + id.str() + "'");
        return it->second;
    }

    const ObjectTypeId& from_player(const Step& s) const {
        return fact_type(s.fact_type).roles[s.direction == Direction::forward ? 0 : 1].player;
    }
    const ObjectTypeId& to_player(const Step& s) const {
        return fact_type(s.fact_type).roles[s.direction == Direction::forward ? 1 : 0].player;
    }
    const std::string& connector(const Step& s) const {
        return fact_type(s.fact_type).roles[s.direction == Direction::forward ? 0 : 1].connector;
    }

    friend bool operator==(const SchemaGraph& a, const SchemaGraph& b) {
        return a.object_types_ == b.object_types_ && a.fact_types_ == b.fact_types_;
    }

private:
    std::vector<ObjectType> object_types_;
    std::vector<FactType> fact_types_;
    std::unordered_map<ObjectTypeId, std::size_t> object_index_;
    std::unordered_map<FactTypeId, std::size_t> fact_index_;
    std::map<ObjectTypeId, std::vector<Step>> adjacency_;
};

inline const std::vector<Step>& adjacent_steps(const SchemaGraph& g, const ObjectTypeId& ot) { return g.adjacent_steps(ot); }

/// Integer if the identifying format names a count, year or number; text otherwise.
/// Entities are judged by their reference scheme, value types by their name.
inline ValueDomain value_domain(const ObjectType& ot) {
    static const std::set<std::string> numeric_words = {"year", "nr", "number", "count", "amount", "quantity", "int", "integer", "numeric"};
    const std::string source = ot.kind == ObjectKind::entity ? ot.reference_scheme.value_or("") : ot.name;
    std::istringstream words(text::lower(text::words_of_identifier(source)));
    std::string w;
    while (words >> w)
        if (numeric_words.contains(w)) return ValueDomain::integer;
    return ValueDomain::text;
}

// ---------------------------------------------------------------------------
// Paths

inline std::vector<Violation> path_violations(const SchemaGraph& g, const SchemaPath& p) {
    std::vector<Violation> out;
    if (!g.contains(p.head)) {
        out.push_back({"path head '" + p.head.str() + "' is not an object type"});
        return out;
    }
    ObjectTypeId at = p.head;
    for (std::size_t i = 0; i < p.steps.size(); ++i) {
        const auto* ft = g.find_fact_type(p.steps[i].fact_type);
        if (!ft) {
            out.push_back({"path step " + std::to_string(i + 1) + " references unknown fact type '" + p.steps[i].fact_type.str() + "'"});
            return out;
        }
        const auto& from = g.from_player(p.steps[i]);
        if (from != at) {
            out.push_back({"path step " + std::to_string(i + 1) + " (" + ft->id.str() + ") departs from " + from.str() + ", not " + at.str()});
            return out;
        }
        at = g.to_player(p.steps[i]);
    }
    return out;
}

inline void check_path(const SchemaGraph& g, const SchemaPath& p) {
    if (auto v = path_violations(g, p); !v.empty()) throw Error(ErrorKind::invalid, "invalid path: " + v.front().message);
}

inline ObjectTypeId path_tail(const SchemaGraph& g, const SchemaPath& p) {
    check_path(g, p);
    return p.steps.empty() ? p.head : g.to_player(p.steps.back());
}

/// Object types visited by a valid path, head first.
inline std::vector<ObjectTypeId> path_nodes(const SchemaGraph& g, const SchemaPath& p) {
    std::vector<ObjectTypeId> nodes{p.head};
    for (const auto& s : p.steps) nodes.push_back(g.to_player(s));
    return nodes;
}

/// Head name, then connector and target name per step; head capitalized, the rest lowercase.
inline std::string verbalize_path(const SchemaGraph& g, const SchemaPath& p) {
    check_path(g, p);
    std::string out = text::lower(g.object_type(p.head).name);
    for (const auto& s : p.steps) {
        out += ' ';
        out += text::lower(g.connector(s));
        out += ' ';
        out += text::lower(g.object_type(g.to_player(s)).name);
    }
    return text::capitalize_first(std::move(out));
}

// ---------------------------------------------------------------------------
// Validation

inline std::vector<Violation> validate_schema(const SchemaGraph& g) {
    std::vector<Violation> out;
    std::map<std::string, std::string> seen_names;
    std::set<ObjectTypeId> seen_ids;
    for (const auto& ot : g.object_types()) {
        if (ot.id.empty()) out.push_back({"object type with empty id"});
        if (!seen_ids.insert(ot.id).second) out.push_back({"duplicate object type id '" + ot.id.str() + "'"});
        const auto key = text::lower(ot.name);
        if (auto [it, inserted] = seen_names.emplace(key, ot.name); !inserted)
            out.push_back({"duplicate name '" + ot.name + "' (clashes with '" + it->second + "')"});
        if (ot.kind == ObjectKind::value && ot.reference_scheme)
            out.push_back({"value type '" + ot.name + "' must not have a reference scheme"});
        if (ot.kind == ObjectKind::entity && (!ot.reference_scheme || ot.reference_scheme->empty()))
            out.push_back({"entity type '" + ot.name + "' lacks a reference scheme"});
    }
    std::set<FactTypeId> seen_facts;
    for (const auto& ft : g.fact_types()) {
        if (!seen_facts.insert(ft.id).second) out.push_back({"duplicate fact type id '" + ft.id.str() + "'"});
        for (std::size_t r = 0; r < 2; ++r) {
            const auto& role = ft.roles[r];
            if (!g.contains(role.player))
                out.push_back({"fact type " + ft.id.str() + " role " + std::to_string(r + 1) + " references unknown object type '" + role.player.str() + "'"});
            if (text::trim(role.connector).empty())
                out.push_back({"fact type " + ft.id.str() + " role " + std::to_string(r + 1) + " has an empty connector"});
        }
        if (ft.roles[0].player == ft.roles[1].player)
            out.push_back({"fact type " + ft.id.str() + " relates '" + ft.roles[0].player.str() + "' to itself; ring fact types are not supported"});
    }
    return out;
}

/// All object types by degree descending, then name ascending.
inline std::vector<ObjectTypeId> importance_order(const SchemaGraph& g) {
    std::vector<const ObjectType*> types;
    for (const auto& ot : g.object_types()) types.push_back(&ot);
    std::stable_sort(types.begin(), types.end(), [&](const ObjectType* a, const ObjectType* b) {
        const auto da = g.adjacent_steps(a->id).size(), db = g.adjacent_steps(b->id).size();
        if (da != db) return da > db;
        return a->name < b->name;
    });
    std::vector<ObjectTypeId> out;
    for (const auto* ot : types) out.push_back(ot->id);
    return out;
}

// ---------------------------------------------------------------------------
// .cqs text format

namespace detail {

class LineScanner {
public:
    LineScanner(std::string_view line, std::size_t line_no) : line_(line), line_no_(line_no) {}

    void skip_space() {
        while (pos_ < line_.size() && std::isspace(static_cast<unsigned char>(line_[pos_]))) ++pos_;
    }
    bool at_end() {
        skip_space();
        return pos_ >= line_.size();
    }
    std::size_t column() const { return pos_ + 1; }

    [[noreturn]] void fail(const std::string& message) const { throw ParseError(line_no_, pos_ + 1, message); }

    std::string word() {
        skip_space();
        const auto start = pos_;
        while (pos_ < line_.size()) {
            const char c = line_[pos_];
            if (std::isspace(static_cast<unsigned char>(c)) || c == '"' || c == '[' || c == ']' || c == '/' || c == ':') break;
            ++pos_;
        }
        if (start == pos_) fail("expected a name");
        return std::string(line_.substr(start, pos_ - start));
    }

    std::string quoted() {
        skip_space();
        if (pos_ >= line_.size() || line_[pos_] != '"') fail("expected a quoted connector");
        ++pos_;
        std::string out;
        while (pos_ < line_.size() && line_[pos_] != '"') {
            if (line_[pos_] == '\\' && pos_ + 1 < line_.size()) ++pos_;
            out.push_back(line_[pos_++]);
        }
        if (pos_ >= line_.size()) fail("unterminated quoted connector");
        ++pos_;
        return out;
    }

    bool peek(char c) {
        skip_space();
        return pos_ < line_.size() && line_[pos_] == c;
    }

    void expect(char c) {
        if (!peek(c)) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    std::string rest() {
        skip_space();
        auto r = line_.substr(pos_);
        pos_ = line_.size();
        return std::string(text::trim(r));
    }

private:
    std::string_view line_;
    std::size_t line_no_;
    std::size_t pos_ = 0;
};

inline std::string_view strip_comment(std::string_view line) {
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_quotes = !in_quotes;
        if (line[i] == '#' && !in_quotes) return line.substr(0, i);
    }
    return line;
}

inline bool is_identifier(std::string_view s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isalnum(c) || c == '_' || c == '-'; });
}

}  // namespace detail

/// Parses the line-oriented `.cqs` format:
///   object <Name> value | id:<reference-scheme>
///   fact <Id>: <PlayerA>[role] "<connector A to B>" / "<connector B to A>" <PlayerB>[role]
/// The bracketed role names are optional. `#` starts a comment.
inline SchemaGraph parse_schema(std::string_view source) {
    std::vector<ObjectType> objects;
    std::vector<FactType> facts;
    std::vector<std::size_t> fact_lines;
    std::map<std::string, std::size_t> name_lines;
    std::set<FactTypeId> fact_ids;

    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= source.size()) {
        auto end = source.find('\n', start);
        if (end == std::string_view::npos) end = source.size();
        auto raw = source.substr(start, end - start);
        if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
        ++line_no;
        start = end + 1;

        detail::LineScanner sc(detail::strip_comment(raw), line_no);
        if (sc.at_end()) {
            if (end == source.size()) break;
            continue;
        }
        const auto keyword = sc.word();
        if (keyword == "object") {
            ObjectType ot;
            const auto col = sc.column();
            const auto name = sc.word();
            if (!detail::is_identifier(name)) throw ParseError(line_no, col, "invalid object type name '" + name + "'");
            ot.id = ObjectTypeId(name);
            ot.name = text::words_of_identifier(name);
            const auto kind = sc.word();
            if (kind == "value") {
                ot.kind = ObjectKind::value;
            } else if (kind == "id") {
                sc.expect(':');
                ot.kind = ObjectKind::entity;
                ot.reference_scheme = sc.word();
            } else {
                sc.fail("expected 'value' or 'id:<reference-scheme>' after object type name");
            }
            if (!sc.at_end()) sc.fail("unexpected trailing text");
            const auto key = text::lower(ot.name);
            if (auto it = name_lines.find(key); it != name_lines.end())
                throw ParseError(line_no, col, "duplicate object type name '" + name + "' (first declared on line " + std::to_string(it->second) + ")");
            name_lines.emplace(key, line_no);
            objects.push_back(std::move(ot));
        } else if (keyword == "fact") {
            FactType ft;
            const auto col = sc.column();
            ft.id = FactTypeId(sc.word());
            if (!detail::is_identifier(ft.id.str())) throw ParseError(line_no, col, "invalid fact type id '" + ft.id.str() + "'");
            if (!fact_ids.insert(ft.id).second) throw ParseError(line_no, col, "duplicate fact type id '" + ft.id.str() + "'");
            sc.expect(':');
            auto read_player = [&](Role& role) {
                role.player = ObjectTypeId(sc.word());
                if (sc.peek('[')) {
                    sc.expect('[');
                    role.role_name = sc.word();
                    sc.expect(']');
                }
            };
            read_player(ft.roles[0]);
            const auto c1 = sc.column();
            ft.roles[0].connector = sc.quoted();
            if (text::trim(ft.roles[0].connector).empty()) throw ParseError(line_no, c1, "empty connector");
            sc.expect('/');
            const auto c2 = sc.column();
            ft.roles[1].connector = sc.quoted();
            if (text::trim(ft.roles[1].connector).empty()) throw ParseError(line_no, c2, "empty connector");
            read_player(ft.roles[1]);
            if (!sc.at_end()) {
                if (sc.peek('"')) sc.fail("n-ary fact types are not supported; fact types must be binary");
                sc.fail("unexpected trailing text");
            }
            facts.push_back(std::move(ft));
            fact_lines.push_back(line_no);
        } else {
            throw ParseError(line_no, 1, "unknown declaration '" + keyword + "' (expected 'object' or 'fact')");
        }
        if (end == source.size()) break;
    }

    if (objects.empty()) throw Error(ErrorKind::syntax, "no object types declared");

    std::set<ObjectTypeId> known;
    for (const auto& ot : objects) known.insert(ot.id);
    for (std::size_t i = 0; i < facts.size(); ++i) {
        for (const auto& role : facts[i].roles)
            if (!known.contains(role.player))
                throw ParseError(fact_lines[i], 1, "fact type " + facts[i].id.str() + " references unknown object type '" + role.player.str() + "'");
        if (facts[i].roles[0].player == facts[i].roles[1].player)
            throw ParseError(fact_lines[i], 1, "fact type " + facts[i].id.str() + " relates '" + facts[i].roles[0].player.str() + "' to itself; ring fact types are not supported");
    }
    return SchemaGraph(std::move(objects), std::move(facts));
}

inline std::string serialize_schema(const SchemaGraph& g) {
    std::ostringstream out;
    for (const auto& ot : g.object_types()) {
        out << "object " << ot.id.str() << ' ';
        if (ot.kind == ObjectKind::value) out << "value";
        else out << "id:" << ot.reference_scheme.value_or("");
        out << '\n';
    }
    auto escape = [](const std::string& s) {
        std::string e;
        for (char c : s) {
            if (c == '"' || c == '\\') e.push_back('\\');
            e.push_back(c);
        }
        return e;
    };
    for (const auto& ft : g.fact_types()) {
        auto player = [](const Role& r) { return r.player.str() + (r.role_name ? "[" + *r.role_name + "]" : ""); };
        out << "fact " << ft.id.str() << ": " << player(ft.roles[0]) << " \"" << escape(ft.roles[0].connector) << "\" / \""
            << escape(ft.roles[1].connector) << "\" " << player(ft.roles[1]) << '\n';
    }
    return out.str();
}

}  // namespace cqf

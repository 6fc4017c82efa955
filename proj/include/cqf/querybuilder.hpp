#pragma once

#include "cqf/pathfinder.hpp"
#include "cqf/spider.hpp"

#include <memory>
#include <variant>

namespace cqf {

enum class BinaryOp { concat, intersect, unite, difference };
enum class Comparison { eq, ne, lt, le, gt, ge };

struct ExprNode;

/// Immutable query expression tree. Children are shared, so copies are cheap.
///
/// Nodes built through atom/combine/select/count/placeholder/tree_expr are
/// type-checked on construction. QueryExpr::make skips checking; use it for
/// trees that will go through validate_expr (parsed text, tests).
class QueryExpr {
public:
    QueryExpr() = default;

    static QueryExpr make(ExprNode node);

    const ExprNode& node() const {
        if (!node_) throw Error(ErrorKind::invalid, "empty query expression");
        return *node_;
    }
    bool empty() const noexcept { return !node_; }

    friend bool operator==(const QueryExpr& a, const QueryExpr& b);

private:
    std::shared_ptr<const ExprNode> node_;
};

struct AtomExpr {
    SchemaPath path;
    friend bool operator==(const AtomExpr&, const AtomExpr&) = default;
};

/// A labelled hole with fixed typing, later replaced via splice.
struct PlaceholderExpr {
    std::string label;
    ObjectTypeId from;
    ObjectTypeId to;
    friend bool operator==(const PlaceholderExpr&, const PlaceholderExpr&) = default;
};

struct BinaryExpr {
    BinaryOp op;
    QueryExpr left;
    QueryExpr right;
    friend bool operator==(const BinaryExpr&, const BinaryExpr&) = default;
};

struct SelectExpr {
    QueryExpr inner;
    Comparison cmp;
    std::string literal;
    friend bool operator==(const SelectExpr&, const SelectExpr&) = default;
};

struct CountExpr {
    QueryExpr inner;
    friend bool operator==(const CountExpr&, const CountExpr&) = default;
};

struct TreeExpr {
    QueryTree tree;
    friend bool operator==(const TreeExpr&, const TreeExpr&) = default;
};

struct ExprNode {
    std::variant<AtomExpr, PlaceholderExpr, BinaryExpr, SelectExpr, CountExpr, TreeExpr> v;
    friend bool operator==(const ExprNode&, const ExprNode&) = default;
};

inline QueryExpr QueryExpr::make(ExprNode node) {
    QueryExpr e;
    e.node_ = std::make_shared<const ExprNode>(std::move(node));
    return e;
}

inline bool operator==(const QueryExpr& a, const QueryExpr& b) {
    if (a.node_ == b.node_) return true;
    if (!a.node_ || !b.node_) return false;
    return *a.node_ == *b.node_;
}

/// Distinguished tail type of a count.
inline const ObjectTypeId number_type{"Number"};

struct HeadTail {
    ObjectTypeId head;
    ObjectTypeId tail;
    friend bool operator==(const HeadTail&, const HeadTail&) = default;
};

inline std::string_view to_string(BinaryOp op) {
    switch (op) {
        case BinaryOp::concat: return "concat";
        case BinaryOp::intersect: return "intersect";
        case BinaryOp::unite: return "union";
        case BinaryOp::difference: return "difference";
    }
    return "?";
}

inline std::string_view to_string(Comparison c) {
    switch (c) {
        case Comparison::eq: return "=";
        case Comparison::ne: return "!=";
        case Comparison::lt: return "<";
        case Comparison::le: return "<=";
        case Comparison::gt: return ">";
        case Comparison::ge: return ">=";
    }
    return "?";
}

inline std::optional<Comparison> parse_comparison(std::string_view s) {
    if (s == "=") return Comparison::eq;
    if (s == "!=" || s == "<>") return Comparison::ne;
    if (s == "<") return Comparison::lt;
    if (s == "<=") return Comparison::le;
    if (s == ">") return Comparison::gt;
    if (s == ">=") return Comparison::ge;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Typing

namespace detail {

inline bool top_level_only(const QueryExpr& e) {
    return std::holds_alternative<CountExpr>(e.node().v) || std::holds_alternative<TreeExpr>(e.node().v);
}

inline std::optional<HeadTail> check_expr(const SchemaGraph& g, const QueryExpr& e, std::vector<Violation>& out) {
    if (e.empty()) {
        out.push_back({"empty expression"});
        return std::nullopt;
    }
    return std::visit(
        [&](const auto& n) -> std::optional<HeadTail> {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, AtomExpr>) {
                auto v = path_violations(g, n.path);
                if (!v.empty()) {
                    out.insert(out.end(), v.begin(), v.end());
                    return std::nullopt;
                }
                return HeadTail{n.path.head, path_tail(g, n.path)};
            } else if constexpr (std::is_same_v<T, PlaceholderExpr>) {
                bool ok = true;
                if (n.label.empty()) {
                    out.push_back({"placeholder with empty label"});
                    ok = false;
                }
                for (const auto* id : {&n.from, &n.to})
                    if (!g.contains(*id)) {
                        out.push_back({"placeholder [" + n.label + "] references unknown object type '" + id->str() + "'"});
                        ok = false;
                    }
                if (!ok) return std::nullopt;
                return HeadTail{n.from, n.to};
            } else if constexpr (std::is_same_v<T, BinaryExpr>) {
                const auto l = check_expr(g, n.left, out);
                const auto r = check_expr(g, n.right, out);
                const auto name = std::string(to_string(n.op));
                bool ok = l && r;
                for (const auto* child : {&n.left, &n.right})
                    if (!child->empty() && top_level_only(*child)) {
                        out.push_back({name + " operand must be a relation, not a count or tree"});
                        ok = false;
                    }
                if (!ok) return std::nullopt;
                if (n.op == BinaryOp::concat) {
                    if (l->tail != r->head) {
                        out.push_back({"concat type mismatch: left ends at " + l->tail.str() + ", right starts at " + r->head.str()});
                        return std::nullopt;
                    }
                    return HeadTail{l->head, r->tail};
                }
                if (l->head != r->head || l->tail != r->tail) {
                    out.push_back({name + " type mismatch: " + l->head.str() + "->" + l->tail.str() + " vs " + r->head.str() + "->" + r->tail.str()});
                    return std::nullopt;
                }
                return l;
            } else if constexpr (std::is_same_v<T, SelectExpr>) {
                const auto inner = check_expr(g, n.inner, out);
                if (!inner) return std::nullopt;
                if (top_level_only(n.inner)) {
                    out.push_back({"select operand must be a relation, not a count or tree"});
                    return std::nullopt;
                }
                const auto& tail = g.object_type(inner->tail);
                if (tail.kind == ObjectKind::entity && !tail.reference_scheme) {
                    out.push_back({"select on " + tail.id.str() + " which has no reference scheme"});
                    return std::nullopt;
                }
                if (value_domain(tail) == ValueDomain::integer && !text::parse_number(n.literal)) {
                    out.push_back({"select literal '" + n.literal + "' is not a number but " + tail.id.str() + " values are numeric"});
                    return std::nullopt;
                }
                return inner;
            } else if constexpr (std::is_same_v<T, CountExpr>) {
                const auto inner = check_expr(g, n.inner, out);
                if (!inner) return std::nullopt;
                if (top_level_only(n.inner)) {
                    out.push_back({"count operand must be a relation, not a count or tree"});
                    return std::nullopt;
                }
                return HeadTail{number_type, number_type};
            } else {
                auto v = path_violations(g, n.tree.stem);
                auto sv = spider_violations(g, n.tree.crown);
                v.insert(v.end(), sv.begin(), sv.end());
                if (!v.empty()) {
                    out.insert(out.end(), v.begin(), v.end());
                    return std::nullopt;
                }
                const auto tail = path_tail(g, n.tree.stem);
                if (tail != n.tree.crown.root) {
                    out.push_back({"tree stem ends at " + tail.str() + " but the crown is rooted at " + n.tree.crown.root.str()});
                    return std::nullopt;
                }
                return HeadTail{n.tree.stem.head, tail};
            }
        },
        e.node().v);
}

}  // namespace detail

/// Every typing violation in `e` against `g`, recursively. Empty iff the tree is well-formed.
inline std::vector<Violation> validate_expr(const SchemaGraph& g, const QueryExpr& e) {
    std::vector<Violation> out;
    detail::check_expr(g, e, out);
    return out;
}

inline HeadTail head_tail(const SchemaGraph& g, const QueryExpr& e) {
    std::vector<Violation> v;
    auto ht = detail::check_expr(g, e, v);
    if (!ht) throw Error(ErrorKind::type_mismatch, v.empty() ? "ill-typed expression" : v.front().message);
    return *ht;
}

// ---------------------------------------------------------------------------
// Constructors

inline QueryExpr atom(const SchemaGraph& g, const SchemaPath& p) {
    check_path(g, p);
    return QueryExpr::make({AtomExpr{p}});
}

inline QueryExpr placeholder(const SchemaGraph& g, std::string label, const ObjectTypeId& from, const ObjectTypeId& to) {
    auto e = QueryExpr::make({PlaceholderExpr{std::move(label), from, to}});
    head_tail(g, e);
    return e;
}

inline QueryExpr combine(const SchemaGraph& g, BinaryOp op, const QueryExpr& left, const QueryExpr& right) {
    auto e = QueryExpr::make({BinaryExpr{op, left, right}});
    head_tail(g, e);
    return e;
}

inline QueryExpr select(const SchemaGraph& g, const QueryExpr& inner, Comparison cmp, std::string literal) {
    auto e = QueryExpr::make({SelectExpr{inner, cmp, std::move(literal)}});
    head_tail(g, e);
    return e;
}

inline QueryExpr count(const SchemaGraph& g, const QueryExpr& inner) {
    auto e = QueryExpr::make({CountExpr{inner}});
    head_tail(g, e);
    return e;
}

inline QueryExpr tree_expr(const SchemaGraph& g, const QueryTree& qt) {
    auto e = QueryExpr::make({TreeExpr{qt}});
    head_tail(g, e);
    return e;
}

inline bool contains_placeholder(const QueryExpr& e) {
    return std::visit(
        [](const auto& n) -> bool {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, PlaceholderExpr>) return true;
            else if constexpr (std::is_same_v<T, BinaryExpr>) return contains_placeholder(n.left) || contains_placeholder(n.right);
            else if constexpr (std::is_same_v<T, SelectExpr> || std::is_same_v<T, CountExpr>) return contains_placeholder(n.inner);
            else return false;
        },
        e.node().v);
}

namespace detail {

inline QueryExpr replace_placeholder(const QueryExpr& e, const std::string& label, const QueryExpr& replacement, std::size_t& hits) {
    return std::visit(
        [&](const auto& n) -> QueryExpr {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, PlaceholderExpr>) {
                if (n.label != label) return e;
                ++hits;
                return replacement;
            } else if constexpr (std::is_same_v<T, BinaryExpr>) {
                return QueryExpr::make({BinaryExpr{n.op, replace_placeholder(n.left, label, replacement, hits), replace_placeholder(n.right, label, replacement, hits)}});
            } else if constexpr (std::is_same_v<T, SelectExpr>) {
                return QueryExpr::make({SelectExpr{replace_placeholder(n.inner, label, replacement, hits), n.cmp, n.literal}});
            } else if constexpr (std::is_same_v<T, CountExpr>) {
                return QueryExpr::make({CountExpr{replace_placeholder(n.inner, label, replacement, hits)}});
            } else {
                return e;
            }
        },
        e.node().v);
}

inline const PlaceholderExpr* find_placeholder(const QueryExpr& e, const std::string& label) {
    return std::visit(
        [&](const auto& n) -> const PlaceholderExpr* {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, PlaceholderExpr>) {
                return n.label == label ? &n : nullptr;
            } else if constexpr (std::is_same_v<T, BinaryExpr>) {
                if (const auto* p = find_placeholder(n.left, label)) return p;
                return find_placeholder(n.right, label);
            } else if constexpr (std::is_same_v<T, SelectExpr> || std::is_same_v<T, CountExpr>) {
                return find_placeholder(n.inner, label);
            } else {
                return nullptr;
            }
        },
        e.node().v);
}

}  // namespace detail

/// Replaces every placeholder labelled `label` by `replacement`, which must have the same typing.
inline QueryExpr splice(const SchemaGraph& g, const QueryExpr& e, const std::string& label, const QueryExpr& replacement) {
    const auto* slot = detail::find_placeholder(e, label);
    if (!slot) throw Error(ErrorKind::unknown, "no placeholder labelled '" + label + "'");
    if (detail::top_level_only(replacement)) throw Error(ErrorKind::type_mismatch, "a count or tree cannot fill placeholder [" + label + "]");
    const auto ht = head_tail(g, replacement);
    if (ht.head != slot->from || ht.tail != slot->to)
        throw Error(ErrorKind::type_mismatch, "placeholder [" + label + "] expects " + slot->from.str() + "->" + slot->to.str() + " but the replacement is " +
                                                  ht.head.str() + "->" + ht.tail.str());
    std::size_t hits = 0;
    return detail::replace_placeholder(e, label, replacement, hits);
}

// ---------------------------------------------------------------------------
// Verbalization

namespace detail {

inline std::string comparison_words(Comparison c) {
    switch (c) {
        case Comparison::eq: return "equal to";
        case Comparison::ne: return "not equal to";
        case Comparison::lt: return "less than";
        case Comparison::le: return "at most";
        case Comparison::gt: return "greater than";
        case Comparison::ge: return "at least";
    }
    return "?";
}

inline std::string strip_head(const SchemaGraph& g, const QueryExpr& e, std::string text) {
    std::vector<Violation> v;
    auto ht = check_expr(g, e, v);
    if (!ht || !g.contains(ht->head)) return text;
    const auto head = text::lower(g.object_type(ht->head).name);
    if (text::lower(text.substr(0, head.size())) != head) return text;
    if (text.size() == head.size()) return {};
    if (text[head.size()] != ' ') return text;
    return text.substr(head.size() + 1);
}

}  // namespace detail

inline std::string verbalize_expr(const SchemaGraph& g, const QueryExpr& e) {
    return std::visit(
        [&](const auto& n) -> std::string {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, AtomExpr>) {
                return verbalize_path(g, n.path);
            } else if constexpr (std::is_same_v<T, PlaceholderExpr>) {
                return "[" + n.label + "]";
            } else if constexpr (std::is_same_v<T, BinaryExpr>) {
                auto operand = [&](const QueryExpr& x) {
                    auto t = verbalize_expr(g, x);
                    const auto* b = std::get_if<BinaryExpr>(&x.node().v);
                    return b && b->op != BinaryOp::concat ? "(" + t + ")" : t;
                };
                if (n.op == BinaryOp::concat) {
                    const auto left = verbalize_expr(g, n.left);
                    const auto right = detail::strip_head(g, n.right, verbalize_expr(g, n.right));
                    return right.empty() ? left : left + " " + right;
                }
                const char* word = n.op == BinaryOp::intersect ? " AND ALSO " : n.op == BinaryOp::unite ? " OR " : " BUT NOT ";
                return operand(n.left) + word + operand(n.right);
            } else if constexpr (std::is_same_v<T, SelectExpr>) {
                return verbalize_expr(g, n.inner) + " " + detail::comparison_words(n.cmp) + " " + n.literal;
            } else if constexpr (std::is_same_v<T, CountExpr>) {
                return "number of " + verbalize_expr(g, n.inner);
            } else {
                std::string out = verbalize_path(g, n.tree.stem);
                const auto paths = tree_paths(n.tree.crown);
                std::string crown;
                for (const auto& p : paths) {
                    if (p.steps.empty()) continue;
                    const auto t = verbalize_path(g, p);
                    const auto root = text::lower(g.object_type(p.head).name);
                    crown += (crown.empty() ? "" : "; ") + text::lower(t.substr(root.size() + 1));
                }
                return crown.empty() ? out : out + ": " + crown;
            }
        },
        e.node().v);
}

// ---------------------------------------------------------------------------
// Query text: s-expression prefix form

namespace detail {

inline std::string quote_if_needed(const std::string& s) {
    const bool bare = !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isalnum(c) || c == '_' || c == '-' || c == '.'; });
    if (bare) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out + "\"";
}

inline std::string print_steps(const std::vector<Step>& steps) {
    std::string out;
    for (const auto& s : steps) out += " " + s.fact_type.str() + (s.direction == Direction::forward ? " fwd" : " rev");
    return out;
}

inline void print_crown(const SpiderTree& t, std::string& out) {
    out += "(crown " + t.root.str();
    for (const auto& b : t.branches) {
        out += " (" + b.step.fact_type.str() + (b.step.direction == Direction::forward ? " fwd " : " rev ");
        print_crown(b.child, out);
        out += ")";
    }
    out += ")";
}

}  // namespace detail

/// Prints the path part of an atom: "@Head" for a 0-step path, else "FT3 fwd FT4 rev".
inline std::string print_path(const SchemaPath& p) {
    if (p.steps.empty()) return "@" + p.head.str();
    return detail::print_steps(p.steps).substr(1);
}

inline std::string print_query(const QueryExpr& e) {
    return std::visit(
        [](const auto& n) -> std::string {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, AtomExpr>) {
                if (n.path.steps.empty()) return "(atom " + n.path.head.str() + ")";
                return "(atom" + detail::print_steps(n.path.steps) + ")";
            } else if constexpr (std::is_same_v<T, PlaceholderExpr>) {
                return "(placeholder " + detail::quote_if_needed(n.label) + " " + n.from.str() + " " + n.to.str() + ")";
            } else if constexpr (std::is_same_v<T, BinaryExpr>) {
                return "(" + std::string(to_string(n.op)) + " " + print_query(n.left) + " " + print_query(n.right) + ")";
            } else if constexpr (std::is_same_v<T, SelectExpr>) {
                return "(select " + print_query(n.inner) + " " + std::string(to_string(n.cmp)) + " " + detail::quote_if_needed(n.literal) + ")";
            } else if constexpr (std::is_same_v<T, CountExpr>) {
                return "(count " + print_query(n.inner) + ")";
            } else {
                std::string out = "(tree " + print_query(QueryExpr::make({AtomExpr{n.tree.stem}})) + " ";
                detail::print_crown(n.tree.crown, out);
                return out + ")";
            }
        },
        e.node().v);
}

namespace detail {

struct Token {
    enum Kind { open, close, word, string, end } kind;
    std::string text;
    std::size_t line, column;
};

class SexprLexer {
public:
    explicit SexprLexer(std::string_view src) : src_(src) { advance(); }

    const Token& peek() const { return current_; }

    Token take() {
        Token t = current_;
        advance();
        return t;
    }

    [[noreturn]] static void fail(const Token& at, const std::string& message) { throw ParseError(at.line, at.column, message); }

private:
    void advance() {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == ';') {
                while (pos_ < src_.size() && src_[pos_] != '\n') bump();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                bump();
            } else {
                break;
            }
        }
        const auto line = line_, col = col_;
        if (pos_ >= src_.size()) {
            current_ = {Token::end, "", line, col};
            return;
        }
        const char c = src_[pos_];
        if (c == '(' || c == ')') {
            bump();
            current_ = {c == '(' ? Token::open : Token::close, std::string(1, c), line, col};
            return;
        }
        if (c == '"') {
            bump();
            std::string s;
            while (pos_ < src_.size() && src_[pos_] != '"') {
                if (src_[pos_] == '\\' && pos_ + 1 < src_.size()) bump();
                s.push_back(src_[pos_]);
                bump();
            }
            if (pos_ >= src_.size()) throw ParseError(line, col, "unterminated string");
            bump();
            current_ = {Token::string, std::move(s), line, col};
            return;
        }
        std::string w;
        while (pos_ < src_.size() && !std::isspace(static_cast<unsigned char>(src_[pos_])) && src_[pos_] != '(' && src_[pos_] != ')' && src_[pos_] != '"') {
            w.push_back(src_[pos_]);
            bump();
        }
        current_ = {Token::word, std::move(w), line, col};
    }

    void bump() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    std::string_view src_;
    std::size_t pos_ = 0, line_ = 1, col_ = 1;
    Token current_{Token::end, "", 1, 1};
};

inline std::optional<Direction> parse_direction(std::string_view w) {
    if (w == "fwd" || w == "forward") return Direction::forward;
    if (w == "rev" || w == "reverse") return Direction::reverse;
    return std::nullopt;
}

class QueryParser {
public:
    QueryParser(const SchemaGraph& g, std::string_view src) : g_(g), lex_(src) {}

    QueryExpr parse_document() {
        auto e = expr();
        if (lex_.peek().kind != Token::end) SexprLexer::fail(lex_.peek(), "unexpected trailing input");
        return e;
    }

    SchemaPath parse_bare_path() {
        std::vector<Token> words;
        while (lex_.peek().kind == Token::word) words.push_back(lex_.take());
        if (lex_.peek().kind != Token::end) SexprLexer::fail(lex_.peek(), "unexpected input in path");
        if (words.size() == 1 && words[0].text.starts_with("@")) return SchemaPath{ObjectTypeId(words[0].text.substr(1)), {}};
        return path_from_words(words, lex_.peek());
    }

private:
    Token word(const char* what) {
        auto t = lex_.take();
        if (t.kind != Token::word && t.kind != Token::string) SexprLexer::fail(t, std::string("expected ") + what);
        return t;
    }

    void close() {
        auto t = lex_.take();
        if (t.kind != Token::close) SexprLexer::fail(t, "expected ')'");
    }

    SchemaPath path_from_words(const std::vector<Token>& words, const Token& at) {
        SchemaPath p;
        std::size_t i = 0;
        if (words.empty()) SexprLexer::fail(at, "an atom needs a head object type or at least one step");
        if (words.size() % 2 == 1) {
            p.head = ObjectTypeId(words[0].text.starts_with("@") ? words[0].text.substr(1) : words[0].text);
            i = 1;
        }
        for (; i < words.size(); i += 2) {
            const auto dir = parse_direction(words[i + 1].text);
            if (!dir) SexprLexer::fail(words[i + 1], "expected 'fwd' or 'rev', got '" + words[i + 1].text + "'");
            p.steps.push_back(Step{FactTypeId(words[i].text), *dir});
        }
        if (p.head.empty()) {
            const auto* ft = g_.find_fact_type(p.steps.front().fact_type);
            if (!ft) SexprLexer::fail(words[0], "unknown fact type '" + words[0].text + "'");
            p.head = g_.from_player(p.steps.front());
        }
        return p;
    }

    SpiderTree crown() {
        auto open = lex_.take();
        if (open.kind != Token::open) SexprLexer::fail(open, "expected '(crown ...)'");
        auto kw = word("'crown'");
        if (kw.text != "crown") SexprLexer::fail(kw, "expected 'crown'");
        SpiderTree t{ObjectTypeId(word("crown root").text), {}};
        while (lex_.peek().kind == Token::open) {
            lex_.take();
            auto ft = word("fact type");
            auto d = word("direction");
            const auto dir = parse_direction(d.text);
            if (!dir) SexprLexer::fail(d, "expected 'fwd' or 'rev'");
            auto child = crown();
            close();
            t.branches.push_back({Step{FactTypeId(ft.text), *dir}, std::move(child)});
        }
        close();
        return t;
    }

    QueryExpr expr() {
        auto open = lex_.take();
        if (open.kind != Token::open) SexprLexer::fail(open, "expected '('");
        auto kw = word("construct name");
        const auto& k = kw.text;
        QueryExpr out;
        if (k == "atom") {
            std::vector<Token> words;
            while (lex_.peek().kind == Token::word) words.push_back(lex_.take());
            out = QueryExpr::make({AtomExpr{path_from_words(words, kw)}});
        } else if (k == "placeholder") {
            auto label = word("label").text;
            auto from = word("object type").text;
            auto to = word("object type").text;
            out = QueryExpr::make({PlaceholderExpr{label, ObjectTypeId(from), ObjectTypeId(to)}});
        } else if (k == "concat" || k == "intersect" || k == "union" || k == "difference") {
            const BinaryOp op = k == "concat" ? BinaryOp::concat : k == "intersect" ? BinaryOp::intersect : k == "union" ? BinaryOp::unite : BinaryOp::difference;
            auto l = expr();
            auto r = expr();
            out = QueryExpr::make({BinaryExpr{op, l, r}});
        } else if (k == "select") {
            auto inner = expr();
            auto c = word("comparison");
            const auto cmp = parse_comparison(c.text);
            if (!cmp) SexprLexer::fail(c, "unknown comparison '" + c.text + "'");
            auto lit = word("literal").text;
            out = QueryExpr::make({SelectExpr{inner, *cmp, lit}});
        } else if (k == "count") {
            out = QueryExpr::make({CountExpr{expr()}});
        } else if (k == "tree") {
            auto stem = expr();
            const auto* a = std::get_if<AtomExpr>(&stem.node().v);
            if (!a) SexprLexer::fail(kw, "tree stem must be an atom");
            auto c = crown();
            out = QueryExpr::make({TreeExpr{QueryTree{a->path, std::move(c)}}});
        } else {
            SexprLexer::fail(kw, "unknown construct '" + k + "'");
        }
        close();
        return out;
    }

    const SchemaGraph& g_;
    SexprLexer lex_;
};

}  // namespace detail

/// Parses query text. Syntax only; run validate_expr for typing.
inline QueryExpr parse_query(const SchemaGraph& g, std::string_view text) { return detail::QueryParser(g, text).parse_document(); }

/// Parses a bare path: "@Year" or "[Head] FT3 fwd FT4 rev".
inline SchemaPath parse_path(const SchemaGraph& g, std::string_view text) {
    auto p = detail::QueryParser(g, text).parse_bare_path();
    check_path(g, p);
    return p;
}

}  // namespace cqf

#pragma once

#include "cqf/schema.hpp"

namespace cqf {

struct SpiderBranch;

/// Star of fact types around a root object type; leaves can be grown into further stars.
struct SpiderTree {
    ObjectTypeId root;
    std::vector<SpiderBranch> branches;

    bool is_leaf() const noexcept { return branches.empty(); }

    friend bool operator==(const SpiderTree&, const SpiderTree&);
};

struct SpiderBranch {
    Step step;
    SpiderTree child;

    friend bool operator==(const SpiderBranch&, const SpiderBranch&) = default;
};

inline bool operator==(const SpiderTree& a, const SpiderTree& b) { return a.root == b.root && a.branches == b.branches; }

/// Root-to-node address: one branch index per level.
using TreeIndexPath = std::vector<std::size_t>;

/// A path stem leading into a spider crown: the double tree with a shared root.
struct QueryTree {
    SchemaPath stem;
    SpiderTree crown;

    friend bool operator==(const QueryTree&, const QueryTree&) = default;
};

inline SpiderTree spider(const SchemaGraph& g, const ObjectTypeId& root) {
    SpiderTree t{root, {}};
    for (const auto& step : g.adjacent_steps(root)) t.branches.push_back({step, SpiderTree{g.to_player(step), {}}});
    return t;
}

namespace detail {

inline std::string describe(const TreeIndexPath& at) {
    std::string s = "[";
    for (std::size_t i = 0; i < at.size(); ++i) s += (i ? "," : "") + std::to_string(at[i]);
    return s + "]";
}

/// Walks `at`, collecting every node root on the way (the chain), and returns the addressed node.
template <typename Tree>
Tree& walk(Tree& t, const TreeIndexPath& at, std::vector<ObjectTypeId>* chain = nullptr) {
    Tree* node = &t;
    if (chain) chain->push_back(node->root);
    for (std::size_t depth = 0; depth < at.size(); ++depth) {
        if (at[depth] >= node->branches.size())
            throw Error(ErrorKind::out_of_range, "bad tree index path " + describe(at) + ": node at depth " + std::to_string(depth) + " has " +
                                                     std::to_string(node->branches.size()) + " branches");
        node = &node->branches[at[depth]].child;
        if (chain) chain->push_back(node->root);
    }
    return *node;
}

inline void collect_paths(const SpiderTree& t, SchemaPath& prefix, std::vector<SchemaPath>& out) {
    if (t.is_leaf()) {
        out.push_back(prefix);
        return;
    }
    for (const auto& b : t.branches) {
        prefix.steps.push_back(b.step);
        collect_paths(b.child, prefix, out);
        prefix.steps.pop_back();
    }
}

}  // namespace detail

inline SpiderTree prune_branch(const SpiderTree& t, const TreeIndexPath& at, std::size_t branch) {
    SpiderTree out = t;
    auto& node = detail::walk(out, at);
    if (branch >= node.branches.size())
        throw Error(ErrorKind::out_of_range, "branch " + std::to_string(branch) + " out of range at " + detail::describe(at) + " (" +
                                                 std::to_string(node.branches.size()) + " branches)");
    node.branches.erase(node.branches.begin() + static_cast<std::ptrdiff_t>(branch));
    return out;
}

/// Replaces a leaf by its own spider, minus branches leading back onto the root-to-leaf chain.
inline SpiderTree extend_leaf(const SchemaGraph& g, const SpiderTree& t, const TreeIndexPath& at) {
    SpiderTree out = t;
    std::vector<ObjectTypeId> chain;
    auto& leaf = detail::walk(out, at, &chain);
    if (!leaf.is_leaf()) throw Error(ErrorKind::invalid, "node at " + detail::describe(at) + " is not a leaf");
    for (auto& b : spider(g, leaf.root).branches) {
        if (std::find(chain.begin(), chain.end(), b.child.root) != chain.end()) continue;
        leaf.branches.push_back(std::move(b));
    }
    return out;
}

inline QueryTree attach_spider(const SchemaGraph& g, const SchemaPath& stem, const SpiderTree& crown) {
    const auto tail = path_tail(g, stem);
    if (tail != crown.root)
        throw Error(ErrorKind::type_mismatch, "stem ends at " + tail.str() + " but the spider is rooted at " + crown.root.str());
    return QueryTree{stem, crown};
}

/// One root-to-leaf path per leaf in depth-first branch order; a bare root yields its 0-step path.
inline std::vector<SchemaPath> tree_paths(const SpiderTree& t) {
    std::vector<SchemaPath> out;
    SchemaPath prefix{t.root, {}};
    detail::collect_paths(t, prefix, out);
    return out;
}

inline std::size_t node_count(const SpiderTree& t) {
    std::size_t n = 1;
    for (const auto& b : t.branches) n += node_count(b.child);
    return n;
}

inline std::vector<Violation> spider_violations(const SchemaGraph& g, const SpiderTree& t) {
    std::vector<Violation> out;
    std::vector<ObjectTypeId> chain;
    auto visit = [&](auto&& self, const SpiderTree& node) -> void {
        if (!g.contains(node.root)) {
            out.push_back({"spider node references unknown object type '" + node.root.str() + "'"});
            return;
        }
        chain.push_back(node.root);
        std::set<Step> seen;
        for (const auto& b : node.branches) {
            if (!g.find_fact_type(b.step.fact_type)) {
                out.push_back({"spider branch references unknown fact type '" + b.step.fact_type.str() + "'"});
                continue;
            }
            if (g.from_player(b.step) != node.root)
                out.push_back({"spider branch " + b.step.fact_type.str() + " does not depart from " + node.root.str()});
            else if (g.to_player(b.step) != b.child.root)
                out.push_back({"spider branch " + b.step.fact_type.str() + " leads to " + g.to_player(b.step).str() + ", not " + b.child.root.str()});
            if (!seen.insert(b.step).second) out.push_back({"duplicate spider branch " + b.step.fact_type.str() + " at " + node.root.str()});
            if (std::find(chain.begin(), chain.end(), b.child.root) != chain.end())
                out.push_back({"object type " + b.child.root.str() + " repeats along a spider chain"});
            else
                self(self, b.child);
        }
        chain.pop_back();
    };
    visit(visit, t);
    return out;
}

}  // namespace cqf

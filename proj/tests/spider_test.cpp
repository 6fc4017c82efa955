#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace cqf;
using namespace cqf::testing;

TEST(Spider, PoliticianOnFixture) {
    const auto& g = el1();
    const auto t = spider(g, ot("Politician"));
    ASSERT_EQ(t.branches.size(), 3u);
    std::vector<std::string> texts;
    for (const auto& p : tree_paths(t)) texts.push_back(verbalize_path(g, p));
    EXPECT_EQ(texts, (std::vector<std::string>{"Politician is president of administration", "Politician who is president", "Politician member of party"}));
    EXPECT_EQ(node_count(t), 4u);
}

TEST(Spider, BranchesMatchAdjacentStepsForEveryObjectType) {
    std::mt19937 rng(31);
    std::vector<SchemaGraph> schemas{el1()};
    for (int i = 0; i < 20; ++i) schemas.push_back(random_schema(rng));
    for (const auto& g : schemas) {
        for (const auto& o : g.object_types()) {
            const auto t = spider(g, o.id);
            std::vector<Step> steps;
            for (const auto& b : t.branches) {
                steps.push_back(b.step);
                EXPECT_EQ(b.child.root, g.to_player(b.step));
                EXPECT_TRUE(b.child.is_leaf());
            }
            EXPECT_EQ(steps, g.adjacent_steps(o.id));
            EXPECT_TRUE(spider_violations(g, t).empty());
        }
    }
}

TEST(Spider, UnknownRootThrows) { EXPECT_THROW(spider(el1(), ot("Senator")), Error); }

TEST(Spider, PruneRemovesExactlyOneSubtree) {
    const auto& g = el1();
    auto t = extend_leaf(g, spider(g, ot("Politician")), {0});
    const auto before = node_count(t);
    const auto removed = node_count(t.branches[0].child);
    const auto pruned = prune_branch(t, {}, 0);
    EXPECT_EQ(node_count(pruned), before - removed);
    EXPECT_EQ(pruned.branches[0], t.branches[1]);
    EXPECT_EQ(pruned.branches[1], t.branches[2]);
}

TEST(Spider, PruneOutOfRange) {
    const auto t = spider(el1(), ot("Party"));
    try {
        prune_branch(t, {}, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::out_of_range);
    }
    EXPECT_THROW(prune_branch(t, {4}, 0), Error);
}

TEST(Spider, ExtendSkipsTypesOnTheChain) {
    const auto& g = el1();
    const auto t = extend_leaf(g, spider(g, ot("Politician")), {1});  // President
    const auto& president = t.branches[1].child;
    ASSERT_EQ(president.root, ot("President"));
    ASSERT_EQ(president.branches.size(), 1u);  // FT3 to Election; FT5 back to Politician is skipped
    EXPECT_EQ(president.branches[0].step, fwd("FT3"));
    EXPECT_TRUE(chains_are_simple(t));
}

TEST(Spider, ExtendRequiresALeaf) {
    const auto& g = el1();
    const auto t = spider(g, ot("Politician"));
    try {
        extend_leaf(g, t, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::invalid);
    }
    try {
        extend_leaf(g, t, {7});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::out_of_range);
    }
}

TEST(Spider, RandomEditSequencesKeepChainsSimple) {
    std::mt19937 rng(32);
    for (int run = 0; run < 200; ++run) {
        const auto g = run % 4 == 0 ? el1() : random_schema(rng);
        const auto& types = g.object_types();
        auto t = spider(g, types[std::uniform_int_distribution<std::size_t>(0, types.size() - 1)(rng)].id);
        for (int k = 0; k < 8; ++k) {
            const auto before = t;
            t = random_tree_edit(rng, g, t);
            ASSERT_TRUE(chains_are_simple(t));
            ASSERT_TRUE(spider_violations(g, t).empty());
            const auto paths = tree_paths(t);
            EXPECT_EQ(paths.size(), tree_addresses(t, true).size());
            for (const auto& p : paths) {
                EXPECT_EQ(p.head, t.root);
                EXPECT_TRUE(path_violations(g, p).empty());
            }
        }
    }
}

TEST(Spider, BareRootYieldsItsEmptyPath) {
    const auto& g = el1();
    auto t = spider(g, ot("Party"));
    t = prune_branch(t, {}, 0);
    EXPECT_EQ(tree_paths(t), (std::vector<SchemaPath>{path("Party")}));
}

TEST(Spider, ViolationsDetectRepeatsAndBadBranches) {
    const auto& g = el1();
    SpiderTree t{ot("Politician"), {{rev("FT5"), SpiderTree{ot("President"), {{fwd("FT5"), SpiderTree{ot("Politician"), {}}}}}}}};
    EXPECT_FALSE(spider_violations(g, t).empty());
    SpiderTree bad{ot("Politician"), {{fwd("FT3"), SpiderTree{ot("Election"), {}}}}};
    EXPECT_FALSE(spider_violations(g, bad).empty());
    SpiderTree dup{ot("Party"), {{rev("FT6"), SpiderTree{ot("Politician"), {}}}, {rev("FT6"), SpiderTree{ot("Politician"), {}}}}};
    EXPECT_FALSE(spider_violations(g, dup).empty());
}

TEST(Spider, AttachReadsBack) {
    const auto& g = el1();
    const auto stem = path("President", {fwd("FT5")});
    const auto crown = spider(g, ot("Politician"));
    const auto qt = attach_spider(g, stem, crown);
    EXPECT_EQ(qt.stem, stem);
    EXPECT_EQ(qt.crown, crown);
    try {
        attach_spider(g, stem, spider(g, ot("Party")));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::type_mismatch);
    }
}

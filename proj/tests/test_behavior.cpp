#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "bigsos/base_streams.hpp"
#include "bigsos/behavior.hpp"

using namespace bigsos;

namespace {

StreamPrefix abc() {
  return make_stream<Term>({Term::var("x0"), Term::var("x1"), Term::var("x2"), Term::var("x3")}, {"a", "b", "c"});
}

}  // namespace

TEST(StreamPrefix, HeadStepTail) {
  auto p = abc();
  EXPECT_EQ(p.length(), 3u);
  EXPECT_EQ(prefix_head(p), Term::var("x0"));
  auto [l, next] = prefix_step(p);
  EXPECT_EQ(l, "a");
  EXPECT_EQ(next, Term::var("x1"));
  auto t = prefix_tail(p, 2);
  EXPECT_EQ(t.length(), 1u);
  EXPECT_EQ(t.label(0), "c");
  EXPECT_EQ(prefix_tail(p, 3).length(), 0u);
  EXPECT_THROW(prefix_tail(p, 4), PreconditionError);
}

TEST(StreamPrefix, StepOnEmptyPrefixThrows) {
  StreamPrefix p{{}, Term::var("x")};
  EXPECT_THROW(prefix_step(p), PreconditionError);
  EXPECT_THROW(p.label(0), PreconditionError);
}

TEST(StreamPrefix, DecorateRecolorsBySuffixes) {
  auto p = abc();
  auto d = prefix_decorate(p);
  ASSERT_EQ(d.length(), 3u);
  for (std::size_t i = 0; i <= 3; ++i) EXPECT_EQ(d.node(i), prefix_tail(p, i));
  EXPECT_EQ(d.labels(), p.labels());
}

TEST(StreamPrefix, MapColorsKeepsLabels) {
  auto p = abc();
  auto q = map_colors(p, [](const Term& t) { return Term::app("f", {t}); });
  EXPECT_EQ(q.labels(), p.labels());
  EXPECT_EQ(render(q.node(2)), "f(x2)");
}

TEST(StreamPrefix, TakeTruncates) {
  auto p = abc();
  EXPECT_EQ(p.take(1).labels(), std::vector<Letter>{"a"});
  EXPECT_EQ(p.take(1).tail_node, Term::var("x1"));
  EXPECT_EQ(p.take(9), p);
}

TEST(TreePrefix, CanonSortsAndMergesDuplicates) {
  TreePrefix t{Term::var("r"), 2, {}};
  t.children.push_back({"b", tree_leaf(Term::var("u"))});
  t.children.push_back({"a", tree_leaf(Term::var("v"))});
  t.children.push_back({"b", tree_leaf(Term::var("u"))});
  auto c = tree_canon(t, 2);
  ASSERT_EQ(c.children.size(), 2u);
  EXPECT_EQ(c.children[0].label, "a");
  EXPECT_EQ(tree_max_branching(c), 2u);
  EXPECT_EQ(tree_canon(c, 2), c);
}

TEST(TreePrefix, CanonTruncatesDepth) {
  TreePrefix t{Term::var("r"), 2, {{"a", TreePrefix{Term::var("s"), 1, {{"b", tree_leaf(Term::var("t"), 0)}}}}}};
  auto c = tree_canon(t, 1);
  EXPECT_EQ(c.budget, 1u);
  ASSERT_EQ(c.children.size(), 1u);
  EXPECT_EQ(c.children[0].subtree.budget, 0u);
  EXPECT_TRUE(c.children[0].subtree.children.empty());
}

TEST(TreePrefix, ChildrenNeedBudget) {
  TreePrefix t{Term::var("r"), 0, {}};
  EXPECT_THROW(tree_children(t), PreconditionError);
}

TEST(TreePrefix, SpineOfDegenerateTree) {
  TreePrefix t{Term::var("r"), 2, {{"a", TreePrefix{Term::var("s"), 1, {{"b", tree_leaf(Term::var("t"), 0)}}}}}};
  auto s = tree_spine(t);
  EXPECT_EQ(s.labels(), (std::vector<Letter>{"a", "b"}));
  EXPECT_EQ(s.tail_node, Term::var("t"));
}

TEST(TreePrefix, DotOutputListsEdges) {
  TreePrefix t{Term::app("C"), 1, {{"$", tree_leaf(Term::app("q", {Term::app("C")}), 0)}}};
  auto dot = to_dot(t, "g");
  EXPECT_NE(dot.find("digraph"), std::string::npos);
  EXPECT_NE(dot.find("q(C)"), std::string::npos);
  EXPECT_NE(dot.find("$"), std::string::npos);
}

TEST(BaseStreams, EventuallyPeriodicLetters) {
  auto b = parse_base_stream("$,a,(a,b)");
  EXPECT_FALSE(b.finite());
  std::vector<Letter> want{"$", "a", "a", "b", "a", "b", "a"};
  for (std::size_t j = 0; j < want.size(); ++j) EXPECT_EQ(b.letter(j), want[j]) << j;
  auto f = parse_base_stream("a,b");
  EXPECT_TRUE(f.finite());
  EXPECT_THROW(parse_base_stream("a,()"), Error);
}

TEST(BaseStreams, PrefixNodesAreColors) {
  BaseStreamEnv env;
  env.add_periodic("x", {}, {"a", "b"});
  auto p = base_prefix(env, "x", 3);
  EXPECT_EQ(p.labels(), (std::vector<Letter>{"a", "b", "a"}));
  EXPECT_EQ(render(p.node(3)), "x.3");
  auto c = parse_color(p.node(2));
  ASSERT_TRUE(c);
  EXPECT_EQ(c->first, "x");
  EXPECT_EQ(c->second, 2u);
}

TEST(BaseStreams, AttachReplacesVariables) {
  BaseStreamEnv env;
  env.add_periodic("x", {}, {"a"});
  Term t = Term::app("q", {Term::var("x")});
  EXPECT_EQ(render(attach_bases(t, env)), "q(x.0)");
  EXPECT_THROW(attach_bases(Term::var("y"), env), PreconditionError);
}

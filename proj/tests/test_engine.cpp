#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace bigsos;
using namespace bigsos::testing;

namespace {

Spec spec_of(const std::string& name) { return load_spec(corpus("specs/" + name + ".sos")); }

const Term C = Term::app("C");

Term q(const Term& t) { return Term::app("q", {t}); }

}  // namespace

// ---- one rule application -------------------------------------------------------------------

TEST(Rho, ZipTakesFirstLabelAndSwaps) {
  Spec s = spec_of("zip");
  auto x = make_stream<Term>({Term::var("x"), Term::var("x1")}, {"a"});
  auto y = make_stream<Term>({Term::var("y"), Term::var("y1")}, {"b"});
  SuccSet want{{"a", Term::app("zip", {Term::var("y"), Term::var("x1")})}};
  EXPECT_EQ(one_step_rho(s, "zip", {x, y}), want);
}

TEST(Rho, DropUsesSecondLabel) {
  Spec s = spec_of("drop");
  auto x = make_stream<Term>({Term::var("x"), Term::var("x1"), Term::var("x2")}, {"a", "b"});
  SuccSet want{{"b", q(Term::var("x2"))}};
  EXPECT_EQ(one_step_rho(s, "q", {x}), want);
}

TEST(Rho, InsufficientLookahead) {
  Spec s = spec_of("drop");
  auto x = make_stream<Term>({Term::var("x"), Term::var("x1")}, {"a"});
  EXPECT_THROW(one_step_rho(s, "q", {x}), PreconditionError);
}

TEST(Rho, LtsLeafStep) {
  Spec s = spec_of("lts_negative");
  TreePrefix leaf{Term::var("x1"), 1, {}};
  TreePrefix t{Term::var("x"), 2, {{"a", leaf}}};
  SuccSet want{{"a", q(Term::var("x"))}};
  EXPECT_EQ(one_step_rho(s, "q", std::vector<TreePrefix>{t}), want);
}

TEST(Rho, LtsTwoStepPath) {
  Spec s = spec_of("lts_negative");
  TreePrefix deep{Term::var("x2"), 0, {}};
  TreePrefix mid{Term::var("x1"), 1, {{"b", deep}}};
  TreePrefix t{Term::var("x"), 2, {{"a", mid}}};
  SuccSet want{{"b", q(Term::var("x2"))}};
  EXPECT_EQ(one_step_rho(s, "q", std::vector<TreePrefix>{t}), want);
}

// ---- stream unfolding -----------------------------------------------------------------------

TEST(StreamUnfold, NonExtensionOfNestedConstant) {
  Spec s = spec_of("nested_constant");
  Verdict v = unfold_stream(s, {C}, 3, 1000);
  ASSERT_EQ(v.kind, Verdict::Kind::NoExtension);
  ASSERT_TRUE(v.witness);
  const Witness& w = *v.witness;
  EXPECT_EQ(w.kind, Witness::Kind::OccursCheck);
  EXPECT_EQ(w.position, 2u);
  ASSERT_TRUE(w.lhs && w.rhs);
  EXPECT_TRUE(w.lhs->is_var());
  EXPECT_EQ(*w.rhs, q(*w.lhs));
  std::string why;
  EXPECT_TRUE(Replayer(normalize(s)).replays(w, &why)) << why;
}

TEST(StreamUnfold, AmbiguityWhenTargetDropsOperation) {
  Spec s = spec_of("dropping_target");
  Verdict v = unfold_stream(s, {C}, 2, 1000);
  ASSERT_EQ(v.kind, Verdict::Kind::Ambiguous);
  ASSERT_TRUE(v.witness);
  EXPECT_EQ(v.witness->kind, Witness::Kind::Unforced);
  EXPECT_EQ(v.witness->position, 1u);
  EXPECT_EQ(v.witness->term, q(C));
  // Depth 1 only asks for the first transition, which rule C forces.
  EXPECT_EQ(unfold_stream(s, {C}, 1, 1000).kind, Verdict::Kind::ConsistentPrefix);
}

TEST(StreamUnfold, ZipInterleaves) {
  Spec s = spec_of("zip");
  BaseStreamEnv env;
  env.add_periodic("x", {}, {"a"});
  env.add_periodic("y", {}, {"b"});
  Term t = attach_bases(Term::app("zip", {Term::var("x"), Term::var("y")}), env);
  Verdict v = unfold_stream(s, {t}, 8, 1000, &env);
  ASSERT_TRUE(v.consistent());
  EXPECT_EQ(v.streams[0].second.labels(), (std::vector<Letter>{"a", "b", "a", "b", "a", "b", "a", "b"}));
}

TEST(StreamUnfold, DropOfAlternatingStream) {
  Spec s = spec_of("drop");
  BaseStreamEnv env;
  env.add_periodic("x", {}, {"a", "b"});
  Verdict v = unfold_stream(s, {attach_bases(q(Term::var("x")), env)}, 6, 1000, &env);
  ASSERT_TRUE(v.consistent());
  EXPECT_EQ(v.streams[0].second.labels(), std::vector<Letter>(6, "b"));
  EXPECT_EQ(render(v.streams[0].second.node(3)), "q(x.6)");
}

TEST(StreamUnfold, ZipOverZipHandDerived) {
  Spec s = spec_of("zip");
  BaseStreamEnv env;
  env.add_periodic("x", {}, {"a"});
  env.add_periodic("y", {}, {"b"});
  Term z = Term::app("zip", {Term::var("x"), Term::var("y")});
  Term zz = attach_bases(Term::app("zip", {z, Term::var("y")}), env);
  Verdict v = unfold_stream(s, {zz}, 8, 5000, &env);
  ASSERT_TRUE(v.consistent());
  // Outer zip alternates inner zip (a b a b ...) with y (b b ...): a b b b a b b b.
  EXPECT_EQ(v.streams[0].second.labels(), (std::vector<Letter>{"a", "b", "b", "b", "a", "b", "b", "b"}));
}

TEST(StreamUnfold, FuelExhaustionIsUnknown) {
  QueueMachine m = load_qm(corpus("machines/loop.qm"));
  auto red = qm_to_stream_spec(m);
  Verdict v = unfold_stream(red.spec, {C}, 50, 3);
  EXPECT_EQ(v.kind, Verdict::Kind::Unknown);
}

TEST(StreamUnfold, RejectsNonFunctionalSpec) {
  Spec s = parse_spec("behavior stream\nalphabet a, b\nop q/1\nrule q(x): x -a-> y => a -> q(y)\n");
  EXPECT_THROW(StreamEngine{s}, SpecError);
  EXPECT_THROW(unfold_stream(spec_of("lts_negative"), {C}, 1, 10), SpecError);
}

TEST(StreamUnfold, OracleEquivalenceOnCorpus) {
  auto corp = machine_corpus(10, 30);
  ASSERT_GE(corp.halting.size() + corp.looping.size(), 20u);
  auto check = [](const QueueMachine& m, std::size_t n) {
    auto red = qm_to_stream_spec(m);
    auto want = lemma_prefix_oracle(m, n + 1);
    ASSERT_TRUE(std::holds_alternative<StreamPrefix>(want));
    Verdict v = unfold_stream(red.spec, {C}, n, 100000);
    ASSERT_TRUE(v.consistent()) << to_string(v.kind);
    EXPECT_EQ(v.streams[0].second, std::get<StreamPrefix>(want));
  };
  for (const auto& [m, k] : corp.halting)
    if (k >= 1) check(m, k + 1);
  for (const auto& m : corp.looping) check(m, 20);
}

TEST(StreamUnfold, HaltingMachinesRefuteWithReplayableWitness) {
  auto corp = machine_corpus(10, 30);
  for (const auto& [m, k] : corp.halting) {
    auto red = qm_to_stream_spec(m);
    Verdict v = unfold_stream(red.spec, {C}, k + 2, 100000);
    ASSERT_EQ(v.kind, Verdict::Kind::NoExtension) << "halts at " << k;
    EXPECT_EQ(v.witness->position, k + 2);
    std::string why;
    EXPECT_TRUE(Replayer(normalize(red.spec)).replays(*v.witness, &why)) << why;
    // One transition short of the witness nothing is contradicted yet.
    EXPECT_TRUE(unfold_stream(red.spec, {C}, k + 1, 100000).consistent());
  }
}

TEST(StreamUnfold, ReplayerRejectsTamperedWitness) {
  Spec s = normalize(spec_of("nested_constant"));
  Verdict v = unfold_stream(s, {C}, 3, 1000);
  ASSERT_TRUE(v.witness);
  Witness w = *v.witness;
  w.trace.pop_back();
  EXPECT_FALSE(Replayer(s).replays(w));
  Witness w2 = *v.witness;
  w2.trace.back().target = C;
  EXPECT_FALSE(Replayer(s).replays(w2));
}

// ---- LTS unfolding ---------------------------------------------------------------------------

TEST(LtsUnfold, OnlyRuleC) {
  Spec s = parse_spec("behavior lts\nalphabet $\nop C/0\nop q1/1\nrule C: => $ -> q1(C)\n");
  Verdict v = unfold_lts(s, {C}, 3, 100);
  ASSERT_TRUE(v.consistent());
  const TreePrefix& t = v.trees[0].second;
  ASSERT_EQ(t.children.size(), 1u);
  EXPECT_EQ(t.children[0].label, "$");
  EXPECT_EQ(t.children[0].subtree.node, Term::app("q1", {C}));
  EXPECT_TRUE(t.children[0].subtree.children.empty());
}

TEST(LtsUnfold, HaltingMachinesClash) {
  auto corp = machine_corpus(10, 30);
  for (const auto& [m, k] : corp.halting) {
    auto red = qm_to_lts_spec(m);
    Verdict v = unfold_lts(red.spec, {C}, k + 3, 100000);
    ASSERT_EQ(v.kind, Verdict::Kind::NoExtension) << "halts at " << k;
    EXPECT_EQ(v.witness->kind, Witness::Kind::EmptyNonemptyClash);
    std::string why;
    EXPECT_TRUE(replays_clash(normalize(red.spec), *v.witness, &why)) << why;
  }
}

TEST(LtsUnfold, LoopingMachinesGiveDegenerateTrees) {
  auto corp = machine_corpus(10, 30);
  for (const auto& m : corp.looping) {
    auto red = qm_to_lts_spec(m);
    Verdict v = unfold_lts(red.spec, {C}, 8, 100000);
    ASSERT_TRUE(v.consistent()) << to_string(v.kind);
    const TreePrefix& t = v.trees[0].second;
    EXPECT_LE(tree_max_branching(t), 1u);
    auto want = lemma_prefix_oracle(m, 9);
    ASSERT_TRUE(std::holds_alternative<StreamPrefix>(want));
    EXPECT_EQ(tree_spine(t), std::get<StreamPrefix>(want));
  }
}

TEST(LtsUnfold, NeedsClosedSeeds) {
  EXPECT_THROW(unfold_lts(spec_of("lts_negative"), {q(Term::var("x"))}, 2, 100), PreconditionError);
}

TEST(LtsUnfold, NegativePremiseExample) {
  Spec s = spec_of("lts_negative");
  Term t = q(Term::app("pre_a", {Term::app("nil")}));
  Verdict v = unfold_lts(s, {t}, 2, 1000);
  ASSERT_TRUE(v.consistent());
  // pre_a(nil) -a-> nil and nil is stuck, so q steps by a to itself.
  ASSERT_EQ(v.trees[0].second.children.size(), 1u);
  EXPECT_EQ(v.trees[0].second.children[0].label, "a");
  EXPECT_EQ(v.trees[0].second.children[0].subtree.node, t);
}

// ---- checks ----------------------------------------------------------------------------------

TEST(Diagram, EngineOutputIsSelfConsistent) {
  QueueMachine m = load_qm(corpus("machines/rotate.qm"));
  auto red = qm_to_stream_spec(m);
  Verdict v = unfold_stream(red.spec, {C}, 12, 10000);
  ASSERT_TRUE(v.consistent());
  auto table = prefix_table(v.facts, 3);
  auto rep = check_extension_diagram(red.spec, table);
  EXPECT_GT(rep.checked, 0u);
  EXPECT_TRUE(rep.ok());
  // The first step of C is ($, q1(C)).
  const auto& p = table.at(C);
  EXPECT_EQ(p.label(0), "$");
  EXPECT_EQ(p.node(1), Term::app("q_q1", {C}));
}

TEST(Diagram, CorruptedPrefixIsReported) {
  QueueMachine m = load_qm(corpus("machines/rotate.qm"));
  auto red = qm_to_stream_spec(m);
  Verdict v = unfold_stream(red.spec, {C}, 12, 10000);
  auto table = prefix_table(v.facts, 3);
  Term key = Term::app("q_q1", {C});
  table.at(key).steps[0].label = table.at(key).steps[0].label == "$" ? "a" : "$";
  auto rep = check_extension_diagram(red.spec, table);
  EXPECT_FALSE(rep.ok());
}

TEST(Axioms, ZipAndDropPass) {
  BaseStreamEnv env;
  env.add_periodic("x", {"b"}, {"a", "b"});
  env.add_periodic("y", {}, {"b"});
  auto z = check_axioms(spec_of("zip"), env,
                        {parse_term("zip(x, y)"), parse_term("zip(zip(x, y), y)"), parse_term("zip(y, zip(x, x))")}, 16);
  EXPECT_TRUE(z.ok()) << z.failures();
  auto d = check_axioms(spec_of("drop"), env, {parse_term("q(x)"), parse_term("q(q(x))")}, 16);
  EXPECT_TRUE(d.ok()) << d.failures();
  std::set<std::string> kinds;
  for (const auto& r : z.results) kinds.insert(r.axiom);
  EXPECT_EQ(kinds, (std::set<std::string>{"identity", "head", "compositional", "decompositional", "naturality"}));
}

TEST(Forcedness, EntriesAreRederived) {
  QueueMachine m = load_qm(corpus("machines/rotate.qm"));
  auto red = qm_to_stream_spec(m);
  Verdict v = unfold_stream(red.spec, {C}, 10, 10000);
  ASSERT_TRUE(v.consistent());
  auto rep = check_forcedness(red.spec, v.facts, 10000);
  EXPECT_GT(rep.checked, 5u);
  EXPECT_TRUE(rep.ok());
}

TEST(Forcedness, CorruptedEntryIsNotReconstructed) {
  QueueMachine m = load_qm(corpus("machines/rotate.qm"));
  auto red = qm_to_stream_spec(m);
  Verdict v = unfold_stream(red.spec, {C}, 10, 10000);
  auto facts = v.facts;
  facts[0].label = facts[0].label == "$" ? "a" : "$";
  EXPECT_FALSE(check_forcedness(red.spec, facts, 10000).ok());
}

TEST(Forcedness, LtsTreesAreRederived) {
  QueueMachine m = load_qm(corpus("machines/rotate.qm"));
  auto red = qm_to_lts_spec(m);
  Verdict v = unfold_lts(red.spec, {C}, 8, 10000);
  ASSERT_TRUE(v.consistent());
  auto rep = check_forcedness(red.spec, v.trees, 10000);
  EXPECT_GT(rep.checked, 3u);
  EXPECT_TRUE(rep.ok());
}

TEST(CheckExtension, Verdicts) {
  EXPECT_EQ(check_extension(spec_of("nested_constant"), 3, 4, 10000).kind, Verdict::Kind::NoExtension);
  EXPECT_EQ(check_extension(spec_of("dropping_target"), 3, 2, 10000).kind, Verdict::Kind::Ambiguous);
  EXPECT_EQ(check_extension(spec_of("drop"), 3, 8, 10000).kind, Verdict::Kind::ConsistentPrefix);
  EXPECT_EQ(check_extension(spec_of("zip"), 3, 8, 10000).kind, Verdict::Kind::ConsistentPrefix);
}

TEST(CheckExtension, HaltingMachineNeedsEnoughDepth) {
  QueueMachine m = load_qm(corpus("machines/halt3.qm"));
  auto red = qm_to_stream_spec(m);
  EXPECT_EQ(check_extension(red.spec, 3, 5, 10000).kind, Verdict::Kind::NoExtension);
}

TEST(CheckExtension, ParallelMatchesSequential) {
  ExtensionOptions o;
  o.depth = 6;
  auto a = check_extension(spec_of("zip"), o);
  o.jobs = 4;
  auto b = check_extension(spec_of("zip"), o);
  EXPECT_EQ(a.verdict.kind, b.verdict.kind);
  ASSERT_EQ(a.per_seed.size(), b.per_seed.size());
  for (std::size_t i = 0; i < a.per_seed.size(); ++i) EXPECT_EQ(a.per_seed[i].verdict.kind, b.per_seed[i].verdict.kind);
}

TEST(CheckExtension, LtsSpec) {
  auto v = check_extension(qm_to_lts_spec(load_qm(corpus("machines/rotate.qm"))).spec, 2, 5, 10000);
  EXPECT_EQ(v.kind, Verdict::Kind::ConsistentPrefix);
}

TEST(VerdictJson, WitnessFields) {
  Verdict v = unfold_stream(spec_of("nested_constant"), {C}, 3, 1000);
  auto j = to_json(v);
  EXPECT_EQ(j["verdict"], "NoExtension");
  EXPECT_EQ(j["witness"]["kind"], "OccursCheck");
  EXPECT_EQ(j["witness"]["position"], 2);
  EXPECT_TRUE(j["witness"].contains("trace"));
}

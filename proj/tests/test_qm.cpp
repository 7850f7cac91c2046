#include <random>
#include <string>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace bigsos;
using namespace bigsos::testing;

namespace {

QueueMachine looping() {
  QueueMachine m;
  m.states = {"q1"};
  m.alphabet = {"$"};
  m.start = "q1";
  m.delta0["q1"] = {"q1", "$"};
  return m;
}

QueueMachine immediate_halt() {
  QueueMachine m;
  m.states = {"q1"};
  m.alphabet = {"$"};
  m.start = "q1";
  m.delta2[{"q1", "$", "$"}] = {"q1", "$"};
  return m;
}

std::vector<std::string> as_vector(const std::deque<Letter>& q) { return {q.begin(), q.end()}; }

}  // namespace

TEST(Qm, ValidateDisjointness) {
  QueueMachine m = looping();
  m.delta1[{"q1", "$"}] = {"q1", "$"};
  EXPECT_FALSE(qm_validate(m).empty());
}

TEST(Qm, ValidateTotality) {
  QueueMachine m = immediate_halt();
  m.alphabet.push_back("a");
  EXPECT_FALSE(qm_validate(m).empty());
  EXPECT_TRUE(qm_validate(immediate_halt()).empty());
  EXPECT_TRUE(qm_validate(looping()).empty());
}

TEST(Qm, StepClauses) {
  auto s0 = qm_step(looping(), initial_configuration(looping()));
  EXPECT_EQ(s0.clause, 0);
  EXPECT_EQ(as_vector(s0.next.queue), (std::vector<std::string>{"$", "$"}));

  QueueMachine m;
  m.states = {"q1", "q2"};
  m.alphabet = {"$", "a"};
  m.start = "q1";
  m.delta1[{"q1", "$"}] = {"q2", "a"};
  auto s1 = qm_step(m, initial_configuration(m));
  EXPECT_EQ(s1.clause, 1);
  EXPECT_EQ(s1.next.state, "q2");
  EXPECT_EQ(as_vector(s1.next.queue), std::vector<std::string>{"a"});

  auto s2 = qm_step(immediate_halt(), initial_configuration(immediate_halt()));
  EXPECT_TRUE(s2.terminated);
  auto s3 = qm_step(immediate_halt(), Configuration{"q1", {"$", "$"}});
  EXPECT_EQ(s3.clause, 2);
  EXPECT_EQ(as_vector(s3.next.queue), std::vector<std::string>{"$"});
}

TEST(Qm, EmptyQueueIsAPrecondition) {
  EXPECT_THROW(qm_step(looping(), Configuration{"q1", {}}), PreconditionError);
}

TEST(Qm, LoopingRunTrace) {
  auto r = qm_run(looping(), 10);
  EXPECT_FALSE(r.halted());
  ASSERT_EQ(r.trace.size(), 11u);
  for (std::size_t i = 0; i < r.trace.size(); ++i) EXPECT_EQ(r.trace[i].queue.size(), i + 1);
}

TEST(Qm, ImmediateHalt) {
  auto r = qm_run(immediate_halt(), 10);
  EXPECT_TRUE(r.halted());
  EXPECT_EQ(r.steps, 0u);
}

TEST(Qm, RandomMachinesMatchReferenceSimulator) {
  std::mt19937 rng(99);
  for (int i = 0; i < 300; ++i) {
    QueueMachine m = random_qm(rng, 4, 3);
    ASSERT_TRUE(qm_validate(m).empty());
    auto mine = qm_run(m, 60);
    auto ref = ref_run(m, 60);
    ASSERT_EQ(mine.halted(), ref.halted) << i;
    if (mine.halted()) {
      EXPECT_EQ(mine.steps, ref.steps) << i;
    }
    ASSERT_EQ(mine.trace.size(), ref.trace.size());
    for (std::size_t k = 0; k < ref.trace.size(); ++k) {
      EXPECT_EQ(mine.trace[k].state, ref.trace[k].first);
      EXPECT_EQ(as_vector(mine.trace[k].queue), ref.trace[k].second);
    }
    // Each clause changes the queue length by +1, 0 or -1.
    for (std::size_t k = 0; k < mine.clauses.size(); ++k) {
      long d = static_cast<long>(mine.trace[k + 1].queue.size()) - static_cast<long>(mine.trace[k].queue.size());
      EXPECT_EQ(d, 1 - mine.clauses[k]);
    }
  }
}

TEST(Qm, JsonRoundTrip) {
  QueueMachine m = load_qm(corpus("machines/halt3.qm"));
  QueueMachine again = qm_from_json(to_json(m));
  EXPECT_EQ(to_json(again), to_json(m));
  EXPECT_TRUE(qm_validate(m).empty());
  EXPECT_THROW(qm_from_json(nlohmann::json::parse(R"({"states": ["q1"]})")), ParseError);
}

TEST(Classical, ReferenceAgreesWithLibrarySimulator) {
  std::mt19937 rng(5);
  for (int i = 0; i < 200; ++i) {
    ClassicalQM cm = random_classical(rng, 3, 3);
    auto a = classical_run(cm, 200);
    auto b = ref_classical(cm, 200);
    EXPECT_EQ(a.halted, b.halted);
    EXPECT_EQ(a.steps, b.steps);
  }
}

TEST(Classical, CompiledMachineCoSimulates) {
  std::mt19937 rng(17);
  std::size_t halted = 0;
  for (int i = 0; i < 200; ++i) {
    ClassicalQM cm = random_classical(rng, 3, 3);
    QueueMachine m = classical_to_qm(cm);
    ASSERT_TRUE(qm_validate(m).empty()) << qm_validate(m).front();
    auto want = ref_classical(cm, 200);
    auto got = cosimulate(cm, m, 200);
    EXPECT_EQ(got.halted, want.halted) << i;
    EXPECT_EQ(got.steps, want.steps) << i;
    halted += want.halted;
  }
  EXPECT_GT(halted, 10u);
  EXPECT_LT(halted, 190u);
}

TEST(Classical, BlankAvoidsAlphabet) {
  ClassicalQM cm;
  cm.states = {"s"};
  cm.alphabet = {"$", "\xE2\x96\xA1"};
  cm.start = "s";
  cm.delta[{"s", "$"}] = {"s", {}};
  cm.delta[{"s", "\xE2\x96\xA1"}] = {"s", {}};
  QueueMachine m = classical_to_qm(cm);
  EXPECT_EQ(m.alphabet.size(), 3u);
  EXPECT_EQ(m.alphabet.back(), "\xE2\x96\xA1'");
  EXPECT_TRUE(qm_validate(m).empty());
}

TEST(Classical, StringWordsSplitOnLetters) {
  ClassicalQM cm = load_classical(corpus("machines/drain.cqm"));
  EXPECT_EQ(cm.delta.at({"q1", "$"}).second, (std::vector<Letter>{"a", "a"}));
  EXPECT_TRUE(ref_classical(cm, 50).halted);
}

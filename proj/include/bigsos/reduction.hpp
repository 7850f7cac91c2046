#pragma once

// Queue machine -> mixed-GSOS specification (stream and LTS variants), and the direct recipe
// for the stream that the unique extension assigns to the constant C.

#include <cctype>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "bigsos/behavior.hpp"
#include "bigsos/errors.hpp"
#include "bigsos/qm.hpp"
#include "bigsos/rules.hpp"

namespace bigsos {

struct ReductionOutput {
  Spec spec;
  std::map<State, Symbol> op_of_state;
  Symbol constant = "C";
};

namespace detail {

inline std::string sanitize_ident(const std::string& s) {
  std::string out;
  for (unsigned char c : s) out += (std::isalnum(c) || c == '_') ? static_cast<char>(c) : '_';
  return out.empty() ? "_" : out;
}

inline std::map<State, Symbol> state_ops(const QueueMachine& m) {
  std::map<State, Symbol> out;
  std::set<Symbol> taken{"C"};
  for (const auto& q : m.states) {
    Symbol base = "q_" + sanitize_ident(q);
    Symbol name = base;
    for (std::size_t k = 2; taken.count(name); ++k) name = base + "_" + std::to_string(k);
    taken.insert(name);
    out[q] = name;
  }
  return out;
}

inline std::string name_part(const std::string& s) {
  std::string out;
  for (char c : s) out += std::isspace(static_cast<unsigned char>(c)) ? '_' : c;
  return out;
}

inline ReductionOutput reduce(const QueueMachine& m, bool lts) {
  if (auto errs = qm_validate(m); !errs.empty()) throw SpecError("invalid queue machine: " + errs.front());
  ReductionOutput out;
  out.op_of_state = state_ops(m);
  Spec& spec = out.spec;
  spec.behavior = lts ? Behavior::Lts : Behavior::Stream;
  spec.alphabet = m.alphabet;
  spec.start_letter = m.dollar;
  spec.signature.add(out.constant, 0);
  for (const auto& q : m.states) spec.signature.add(out.op_of_state.at(q), 1);

  auto op = [&](const State& q) { return out.op_of_state.at(q); };
  auto x = Term::var("x"), y = Term::var("y"), z = Term::var("z");
  auto lit = [](const Letter& l) { return LabelExpr::lit(l); };

  Rule c;
  c.name = "C";
  c.head_op = out.constant;
  c.concl_label = lit(m.dollar);
  c.concl_target = Term::app(op(m.start), {Term::app(out.constant)});
  spec.rules.push_back(c);

  for (const auto& q : m.states) {
    if (const Move* mv = m.d0(q)) {
      Rule r;
      r.name = "R0_" + name_part(q);
      r.head_op = op(q);
      r.arg_vars = {"x"};
      r.concl_label = lit(mv->letter);
      r.concl_target = Term::app(op(mv->state), {x});
      spec.rules.push_back(r);
      continue;
    }
    for (const auto& a : m.alphabet) {
      if (const Move* mv = m.d1(q, a)) {
        Rule r;
        r.name = "R1_" + name_part(q) + "_" + name_part(a);
        r.head_op = op(q);
        r.arg_vars = {"x"};
        r.premises = {Premise::pos("x", lit(a), "y")};
        r.concl_label = lit(mv->letter);
        r.concl_target = Term::app(op(mv->state), {y});
        spec.rules.push_back(r);
        continue;
      }
      for (const auto& b : m.alphabet) {
        if (const Move* mv = m.d2(q, a, b)) {
          Rule r;
          r.name = "R2_" + name_part(q) + "_" + name_part(a) + "_" + name_part(b);
          r.head_op = op(q);
          r.arg_vars = {"x"};
          r.premises = {Premise::pos("x", lit(a), "y"), Premise::pos("y", lit(b), "z")};
          r.concl_label = lit(mv->letter);
          r.concl_target = Term::app(op(mv->state), {z});
          spec.rules.push_back(r);
        }
      }
      if (lts) {
        Rule r;
        r.name = "R2p_" + name_part(q) + "_" + name_part(a);
        r.head_op = op(q);
        r.arg_vars = {"x"};
        r.premises = {Premise::pos("x", lit(a), "y"), Premise::neg_all("y")};
        r.concl_label = lit(a);
        r.concl_target = Term::app(op(q), {x});
        spec.rules.push_back(r);
      }
    }
  }
  return out;
}

}  // namespace detail

inline ReductionOutput qm_to_stream_spec(const QueueMachine& m) { return detail::reduce(m, false); }
inline ReductionOutput qm_to_lts_spec(const QueueMachine& m) { return detail::reduce(m, true); }

struct HaltsBefore {
  std::size_t k;  // the machine halts after k steps
  bool operator==(const HaltsBefore&) const = default;
};

using OracleResult = std::variant<StreamPrefix, HaltsBefore>;

// The first n nodes tau_0 .. tau_(n-1) of the stream of C. Node i >= 1 is q(tau_j) where
// (q, w) is the i-th configuration (1-based) and j = i - |w|; label a_0 is the dollar and a_i
// is the letter appended by the i-th step. Needs n - 2 machine steps.
inline OracleResult lemma_prefix_oracle(const QueueMachine& m, std::size_t n) {
  if (n == 0) throw PreconditionError("the oracle needs n >= 1");
  auto ops = detail::state_ops(m);
  const Term c = Term::app("C");
  if (n == 1) return StreamPrefix{{}, c};
  std::size_t need = n - 2;
  RunResult run = qm_run(m, need, true);
  if (run.halted() && run.steps < need) return HaltsBefore{run.steps};
  std::vector<Term> nodes{c};
  std::vector<Letter> labels{m.dollar};
  for (std::size_t i = 1; i < n; ++i) {
    const Configuration& conf = run.trace[i - 1];
    std::size_t j = i - conf.queue.size();
    nodes.push_back(Term::app(ops.at(conf.state), {nodes[j]}));
    if (i + 1 < n) labels.push_back(run.trace[i].queue.back());
  }
  return make_stream(std::move(nodes), std::move(labels));
}

}  // namespace bigsos

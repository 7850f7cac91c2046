#pragma once

// Reference implementations used as oracles by the test suites and the acceptance binary.
// None of them call into the code they check.

#include <deque>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "bigsos/bigsos.hpp"

namespace bigsos::testing {

inline std::string corpus(const std::string& rel) { return std::string(BIGSOS_CORPUS_DIR) + "/" + rel; }

// ---- queue machines ------------------------------------------------------------------------

struct RefRun {
  bool halted = false;
  std::size_t steps = 0;
  std::vector<std::pair<std::string, std::vector<std::string>>> trace;  // (state, queue)
};

// Straight transcription of the three clauses, on vectors. Returns false on termination.
inline bool ref_step(const QueueMachine& m, std::string& q, std::vector<std::string>& w) {
  std::optional<Move> mv;
  std::size_t drop = 0;
  if (auto it = m.delta0.find(q); it != m.delta0.end()) {
    mv = it->second;
  } else if (auto it1 = m.delta1.find({q, w[0]}); it1 != m.delta1.end()) {
    mv = it1->second;
    drop = 1;
  } else if (w.size() >= 2) {
    auto it2 = m.delta2.find({q, w[0], w[1]});
    if (it2 == m.delta2.end()) throw std::logic_error("reference simulator: machine is not total");
    mv = it2->second;
    drop = 2;
  }
  if (!mv) return false;
  w.erase(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(drop));
  w.push_back(mv->letter);
  q = mv->state;
  return true;
}

// Runs at most fuel steps; halted also covers a machine stuck right at the fuel boundary.
inline RefRun ref_run(const QueueMachine& m, std::size_t fuel) {
  RefRun r;
  std::string q = m.start;
  std::vector<std::string> w{m.dollar};
  r.trace.emplace_back(q, w);
  while (r.steps < fuel) {
    if (!ref_step(m, q, w)) {
      r.halted = true;
      return r;
    }
    ++r.steps;
    r.trace.emplace_back(q, w);
  }
  std::string q2 = q;
  std::vector<std::string> w2 = w;
  r.halted = !ref_step(m, q2, w2);
  return r;
}

// True when the machine provably never terminates from its initial configuration: a
// configuration repeats, or the run enters a cycle of states that all have delta0.
inline bool provably_loops(const QueueMachine& m, std::size_t fuel) {
  std::set<std::pair<std::string, std::vector<std::string>>> seen;
  RefRun r = ref_run(m, fuel);
  if (r.halted) return false;
  for (const auto& c : r.trace) {
    if (!seen.insert(c).second) return true;
    std::set<std::string> chain;
    std::string q = c.first;
    while (m.delta0.count(q)) {
      if (!chain.insert(q).second) return true;
      q = m.delta0.at(q).state;
    }
  }
  return false;
}

inline QueueMachine random_qm(std::mt19937& rng, std::size_t max_states, std::size_t max_letters) {
  QueueMachine m;
  std::size_t ns = 1 + rng() % max_states, nl = 1 + rng() % max_letters;
  for (std::size_t i = 1; i <= ns; ++i) m.states.push_back("q" + std::to_string(i));
  m.alphabet.push_back("$");
  for (std::size_t i = 1; i < nl; ++i) m.alphabet.push_back(std::string(1, static_cast<char>('a' + i - 1)));
  m.start = "q1";
  auto any_state = [&] { return m.states[rng() % ns]; };
  auto any_letter = [&] { return m.alphabet[rng() % nl]; };
  for (const auto& q : m.states) {
    if (rng() % 5 == 0) {
      m.delta0[q] = {any_state(), any_letter()};
      continue;
    }
    for (const auto& a : m.alphabet) {
      if (rng() % 3 == 0) {
        m.delta1[{q, a}] = {any_state(), any_letter()};
        continue;
      }
      for (const auto& b : m.alphabet) m.delta2[std::make_tuple(q, a, b)] = {any_state(), any_letter()};
    }
  }
  return m;
}

struct MachineCorpus {
  std::vector<std::pair<QueueMachine, std::size_t>> halting;  // with halting step
  std::vector<QueueMachine> looping;
};

// A fixed-seed mix of machines halting within max_halt steps and machines that provably loop.
inline MachineCorpus machine_corpus(std::size_t per_kind, std::size_t max_halt, unsigned seed = 2024) {
  MachineCorpus c;
  std::mt19937 rng(seed);
  std::set<std::size_t> halt_steps;
  for (std::size_t tries = 0; tries < 200000 && (c.halting.size() < per_kind || c.looping.size() < per_kind); ++tries) {
    QueueMachine m = random_qm(rng, 4, 3);
    RefRun r = ref_run(m, max_halt);
    if (r.halted) {
      // Prefer distinct halting times so the corpus is not dominated by immediate halts.
      if (c.halting.size() < per_kind && (halt_steps.insert(r.steps).second || tries > 20000))
        c.halting.emplace_back(m, r.steps);
    } else if (c.looping.size() < per_kind && provably_loops(m, 200)) {
      c.looping.push_back(m);
    }
  }
  return c;
}

// ---- classical machines ---------------------------------------------------------------------

inline ClassicalQM random_classical(std::mt19937& rng, std::size_t max_states, std::size_t max_letters) {
  ClassicalQM m;
  std::size_t ns = 1 + rng() % max_states, nl = 1 + rng() % max_letters;
  for (std::size_t i = 1; i <= ns; ++i) m.states.push_back("s" + std::to_string(i));
  m.alphabet.push_back("$");
  for (std::size_t i = 1; i < nl; ++i) m.alphabet.push_back(std::string(1, static_cast<char>('a' + i - 1)));
  m.start = "s1";
  for (const auto& q : m.states)
    for (const auto& a : m.alphabet) {
      std::size_t len = std::discrete_distribution<std::size_t>({4, 4, 2})(rng);
      std::vector<Letter> w;
      for (std::size_t i = 0; i < len; ++i) w.push_back(m.alphabet[rng() % nl]);
      m.delta[{q, a}] = {m.states[rng() % ns], w};
    }
  return m;
}

struct RefClassical {
  bool halted = false;
  std::size_t steps = 0;
};

inline RefClassical ref_classical(const ClassicalQM& m, std::size_t fuel) {
  std::deque<std::string> w{m.dollar};
  std::string q = m.start;
  RefClassical r;
  while (!w.empty() && r.steps < fuel) {
    const auto& [to, word] = m.delta.at({q, w.front()});
    w.pop_front();
    w.insert(w.end(), word.begin(), word.end());
    q = to;
    ++r.steps;
  }
  r.halted = w.empty();
  return r;
}

// Runs the compiled machine until it terminates or has simulated `classical_fuel` classical
// steps. A classical step is a delta1 move or a delta2 move whose second letter is not blank.
inline RefClassical cosimulate(const ClassicalQM& cm, const QueueMachine& m, std::size_t classical_fuel) {
  std::set<std::string> original(cm.alphabet.begin(), cm.alphabet.end());
  std::string q = m.start;
  std::vector<std::string> w{m.dollar};
  RefClassical out;
  for (std::size_t guard = 0; guard < 10'000'000; ++guard) {
    bool d0 = m.delta0.count(q) != 0;
    if (!d0) {
      if (m.delta1.count({q, w[0]})) {
        if (out.steps == classical_fuel) return out;
        ++out.steps;
      } else if (w.size() >= 2 && original.count(w[1])) {
        if (out.steps == classical_fuel) return out;
        ++out.steps;
      }
    }
    if (!ref_step(m, q, w)) {
      out.halted = true;
      return out;
    }
  }
  throw std::logic_error("co-simulation guard exhausted");
}

// ---- prefix oracle, restated ---------------------------------------------------------------

// tau_0 = C; for i >= 1 with i-th configuration (q, w) (1-based), tau_i = q(tau_(i-|w|)).
inline std::vector<std::string> ref_oracle_nodes(const QueueMachine& m, std::size_t n,
                                                 const std::map<std::string, std::string>& op_of) {
  RefRun r = ref_run(m, n);
  std::vector<std::string> nodes{"C"};
  for (std::size_t i = 1; i < n && i - 1 < r.trace.size(); ++i) {
    const auto& [q, w] = r.trace[i - 1];
    nodes.push_back(op_of.at(q) + "(" + nodes[i - w.size()] + ")");
  }
  return nodes;
}

// ---- witness replay --------------------------------------------------------------------------

// Replays a stream witness: every trace step must be an instance of its rule, and the
// transitions asserted by premises and conclusions, with one transition per term, must be
// contradictory under first-order unification with occurs check.
class Replayer {
 public:
  explicit Replayer(const Spec& spec) : spec_(spec) {}

  bool replays(const Witness& w, std::string* why = nullptr) {
    if (w.kind == Witness::Kind::CaseSplit || w.kind == Witness::Kind::Multiple) {
      if (w.kind == Witness::Kind::Multiple) return fail(why, "not a refutation");
      if (w.cases.empty()) return fail(why, "case split without cases");
      for (const auto& [choice, sub] : w.cases)
        if (!replays(sub, why)) return false;
      return true;
    }
    terms_.clear();
    labels_.clear();
    facts_.clear();
    for (const auto& s : w.trace)
      if (!assert_step(s, why)) return false;
    if (w.kind == Witness::Kind::NoRule) {
      if (w.term.is_var()) return fail(why, "no-rule witness without a term");
      auto saved = std::make_tuple(terms_, labels_, facts_);
      for (const auto& r : spec_.rules) {
        if (r.head_op != w.term.name()) continue;
        assert_instance(r, w.term);
        if (!contradictory()) return fail(why, "rule " + r.name + " applies consistently");
        std::tie(terms_, labels_, facts_) = saved;
      }
      return true;
    }
    return contradictory() || fail(why, "trace is consistent");
  }

 private:
  static bool fail(std::string* why, const std::string& msg) {
    if (why) *why = msg;
    return false;
  }

  static bool is_meta_name(const std::string& n) { return !n.empty() && n[0] == '?'; }

  Term walk(const Term& t) const {
    if (t.is_var()) {
      auto it = terms_.find(t.name());
      return it == terms_.end() ? t : walk(it->second);
    }
    std::vector<Term> args;
    for (const auto& a : t.args()) args.push_back(walk(a));
    return Term::app(t.name(), std::move(args));
  }

  static bool contains(const std::string& v, const Term& t) {
    if (t.is_var()) return t.name() == v;
    for (const auto& a : t.args())
      if (contains(v, a)) return true;
    return false;
  }

  bool unify(const Term& a0, const Term& b0) {
    Term a = walk(a0), b = walk(b0);
    if (a == b) return true;
    if (a.is_var() && is_meta_name(a.name())) {
      if (contains(a.name(), b)) return false;
      terms_.emplace(a.name(), b);
      return true;
    }
    if (b.is_var() && is_meta_name(b.name())) return unify(b, a);
    if (a.is_var() || b.is_var() || a.name() != b.name() || a.arity() != b.arity()) return false;
    for (std::size_t i = 0; i < a.arity(); ++i)
      if (!unify(a.args()[i], b.args()[i])) return false;
    return true;
  }

  std::string walk_label(const std::string& l) const {
    auto it = labels_.find(l);
    return it == labels_.end() ? l : walk_label(it->second);
  }

  bool unify_label(const std::string& a0, const std::string& b0) {
    std::string a = walk_label(a0), b = walk_label(b0);
    if (a == b) return true;
    if (is_meta_name(a)) return labels_.emplace(a, b), true;
    if (is_meta_name(b)) return labels_.emplace(b, a), true;
    return false;
  }

  std::string label_of(const LabelExpr& l, const TraceStep& s) const {
    if (l.is_lit()) return l.text;
    auto it = s.labels.find(l.text);
    return it == s.labels.end() ? "?unbound:" + l.text : it->second;
  }

  bool assert_step(const TraceStep& s, std::string* why) {
    const Rule* rule = nullptr;
    for (std::size_t i = 0; i < spec_.rules.size(); ++i)
      if (spec_.rule_id(i) == s.rule) rule = &spec_.rules[i];
    if (!rule) return fail(why, "unknown rule " + s.rule);
    Substitution env(s.vars.begin(), s.vars.end());
    for (const auto& v : rule->arg_vars)
      if (!env.count(v)) return fail(why, "step of " + s.rule + " misses variable " + v);
    if (!(subst_partial(rule->head_term(), env) == s.head)) return fail(why, "head of " + s.rule + " does not match");
    for (const auto& p : rule->premises) {
      if (!p.is_pos()) return fail(why, "negative premise in a stream trace");
      if (!env.count(p.source) || !env.count(p.target)) return fail(why, "premise variable unbound in " + s.rule);
      facts_.push_back({env.at(p.source), label_of(p.label, s), env.at(p.target)});
    }
    Term target = subst_partial(rule->concl_target, env);
    if (!(target == s.target)) return fail(why, "target of " + s.rule + " does not match");
    facts_.push_back({s.head, label_of(rule->concl_label, s), target});
    return true;
  }

  bool contradictory() {
    for (;;) {
      bool changed = false;
      for (std::size_t i = 0; i < facts_.size(); ++i)
        for (std::size_t j = i + 1; j < facts_.size(); ++j) {
          if (!(walk(facts_[i].term) == walk(facts_[j].term))) continue;
          auto before = std::make_pair(terms_.size(), labels_.size());
          if (!unify_label(facts_[i].label, facts_[j].label) || !unify(facts_[i].next, facts_[j].next)) return true;
          changed = changed || before != std::make_pair(terms_.size(), labels_.size());
        }
      if (!changed) return false;
    }
  }

  // Fresh instance of a rule at a given head, premise targets and label variables as metas.
  void assert_instance(const Rule& r, const Term& head) {
    Substitution env;
    for (std::size_t i = 0; i < r.arg_vars.size(); ++i) env.insert_or_assign(r.arg_vars[i], head.args()[i]);
    auto fresh = [&](const std::string& v) { return "?inst:" + r.name + ":" + v; };
    for (const auto& p : r.premises)
      if (p.is_pos() && !env.count(p.target)) env.insert_or_assign(p.target, Term::var(fresh(p.target)));
    auto lab = [&](const LabelExpr& l) { return l.is_lit() ? l.text : fresh("label:" + l.text); };
    for (const auto& p : r.premises)
      if (p.is_pos()) facts_.push_back({env.at(p.source), lab(p.label), env.at(p.target)});
    facts_.push_back({head, lab(r.concl_label), subst_partial(r.concl_target, env)});
  }

  const Spec& spec_;
  std::map<std::string, Term> terms_;
  std::map<std::string, std::string> labels_;
  std::vector<FactEntry> facts_;
};

// Structural replay of an empty/nonempty clash: the recorded derivation under the empty
// hypothesis uses rules correctly and targets a transition of the clashing term, and every
// transition derivable under a nonempty hypothesis targets a term strictly containing a
// successor placeholder.
inline bool replays_clash(const Spec& spec, const Witness& w, std::string* why = nullptr) {
  auto fail = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  if (w.kind != Witness::Kind::EmptyNonemptyClash) return fail("not a clash witness");
  if (w.forced_when_empty.empty()) return fail("nothing forced when empty");
  bool hits = false;
  for (const auto& s : w.trace) {
    const Rule* rule = nullptr;
    for (std::size_t i = 0; i < spec.rules.size(); ++i)
      if (spec.rule_id(i) == s.rule) rule = &spec.rules[i];
    if (!rule) return fail("unknown rule " + s.rule);
    Substitution env(s.vars.begin(), s.vars.end());
    if (!(subst_partial(rule->head_term(), env) == s.head)) return fail("head mismatch in " + s.rule);
    if (!(subst_partial(rule->concl_target, env) == s.target)) return fail("target mismatch in " + s.rule);
    for (const auto& p : rule->premises) {
      if (p.kind == Premise::Kind::NegAll && env.at(p.source) == w.term) continue;
      if (p.kind == Premise::Kind::NegAll) {
        for (const auto& f : w.facts)
          if (f.term == env.at(p.source)) return fail("negative premise contradicted by a recorded fact");
      }
      if (p.is_pos()) {
        bool found = false;
        for (const auto& f : w.facts)
          found = found || (f.term == env.at(p.source) && f.next == env.at(p.target));
        if (!found) return fail("positive premise of " + s.rule + " not among the recorded facts");
      }
    }
    hits = hits || s.head == w.term;
  }
  if (!hits) return fail("no step derives a transition of the clashing term");
  for (const auto& g : w.growth) {
    std::string t = render(g.target);
    if (g.target.is_var() || t.find("?zeta") == std::string::npos) return fail("growth target " + t + " is not larger");
  }
  return true;
}

// ---- golden format files ---------------------------------------------------------------------

inline std::vector<std::string> golden_mismatches(const std::string& golden_path) {
  std::ifstream in(golden_path);
  nlohmann::json g = nlohmann::json::parse(in);
  Spec spec;
  if (g.contains("spec")) {
    spec = load_spec(corpus(g["spec"].get<std::string>()));
  } else {
    QueueMachine m = load_qm(corpus(g["machine"].get<std::string>()));
    spec = (g["target"] == "lts" ? qm_to_lts_spec(m) : qm_to_stream_spec(m)).spec;
  }
  auto rep = classify_spec(spec);
  auto fn = check_functionality(spec);
  std::vector<std::string> out;
  if (g["verdict"] != to_string(rep.verdict)) out.push_back("verdict " + std::string(to_string(rep.verdict)));
  if (g["functional"] != fn.ok()) out.push_back("functionality");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < spec.rules.size(); ++i) {
    std::string id = spec.rule_id(i);
    seen.insert(id);
    if (!g["per_rule"].contains(id)) {
      out.push_back("rule " + id + " missing from golden");
      continue;
    }
    if (g["per_rule"][id].get<std::vector<std::string>>() != to_strings(rep.per_rule[i])) out.push_back("rule " + id);
  }
  for (const auto& [id, f] : g["per_rule"].items())
    if (!seen.count(id)) out.push_back("golden rule " + id + " not produced");
  for (const auto& [op, f] : g["per_op"].items()) {
    auto it = rep.per_op.find(op);
    if (it == rep.per_op.end() || f.get<std::vector<std::string>>() != to_strings(it->second)) out.push_back("op " + op);
  }
  if (g["per_op"].size() != rep.per_op.size()) out.push_back("operation count");
  return out;
}

// ---- misc ------------------------------------------------------------------------------------

inline std::vector<std::string> labels_of(const StreamPrefix& p) { return p.labels(); }

}  // namespace bigsos::testing

#pragma once

// Bounded construction of the successor trees that a distributive law extending an LTS
// specification must assign to closed terms. The successor set of a term is the set of
// transitions derivable from the successor sets of the terms its premises inspect. When that
// computation reaches the term itself, its set has to be a fixed point: if assuming it empty
// forces transitions while assuming it nonempty only yields strictly deeper targets, no set
// works (empty/nonempty clash); otherwise candidate sets from a bounded universe are tried.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bigsos/behavior.hpp"
#include "bigsos/errors.hpp"
#include "bigsos/rules.hpp"
#include "bigsos/stream_engine.hpp"
#include "bigsos/terms.hpp"
#include "bigsos/verdict.hpp"

namespace bigsos {

using SuccSet = std::set<std::pair<Letter, Term>>;

inline constexpr std::size_t kMaxExhaustiveCandidates = 10;

namespace detail {

struct NeedHypothesis {
  Term term;
};
struct Inconclusive {};
struct LtsFailure {
  Verdict::Kind kind;
  Witness witness;
};

inline bool has_zeta(const Term& t) {
  if (t.closed()) return false;
  if (t.is_var()) return t.name().rfind("?zeta", 0) == 0;
  return std::any_of(t.args().begin(), t.args().end(), [](const Term& a) { return has_zeta(a); });
}

}  // namespace detail

class LtsSession {
 public:
  LtsSession(const Spec& spec, std::size_t fuel, std::size_t extra_depth) : spec_(&spec), fuel_{fuel, 0}, extra_(extra_depth) {
    for (const auto& op : spec.signature.operations()) ground_[op.name] = ground_rules(spec, op.name);
  }

  SuccSet succ(const Term& t) {
    if (auto it = memo_.find(t); it != memo_.end()) return it->second;
    if (auto it = hyp_.find(t); it != hyp_.end()) return it->second;
    if (std::find(stack_.begin(), stack_.end(), t) != stack_.end()) throw detail::NeedHypothesis{t};
    fuel_.tick();
    stack_.push_back(t);
    StackGuard guard{stack_};
    SuccSet s;
    try {
      Mode m;
      s = derive(t, m);
    } catch (const detail::NeedHypothesis& nh) {
      if (!(nh.term == t)) throw;
      s = cycle_solve(t);
    }
    if (hyp_.empty()) memo_.emplace(t, s);
    return s;
  }

  TreePrefix tree(const Term& t, std::size_t depth, std::size_t level = 0) {
    TreePrefix out{t, depth, {}};
    if (depth == 0) return out;
    level_ = level;
    for (const auto& [l, v] : succ(t)) out.children.push_back({l, tree(v, depth - 1, level + 1)});
    return out;
  }

  std::size_t level() const { return level_; }
  std::size_t fuel_spent() const { return std::min(fuel_.spent, fuel_.limit); }

 private:
  struct Mode {
    std::optional<Term> generic;     // premises on this term see an arbitrary nonempty set
    std::optional<Term> optimistic;  // negative premises on this term are assumed to hold
    std::size_t zeta = 0;
    bool pos_on_generic = false;
    std::vector<TraceStep>* steps = nullptr;
  };

  struct StackGuard {
    std::vector<Term>& stack;
    ~StackGuard() { stack.pop_back(); }
  };

  struct HypGuard {
    std::map<Term, SuccSet>& hyp;
    Term key;
    HypGuard(std::map<Term, SuccSet>& h, Term k, SuccSet s) : hyp(h), key(std::move(k)) { hyp[key] = std::move(s); }
    ~HypGuard() { hyp.erase(key); }
  };

  SuccSet lookup(const Term& t) { return succ(t); }

  void match(const Rule& r, const Term& head, std::size_t k, std::map<Symbol, Term>& vars, Mode& mode, SuccSet& out) {
    if (k == r.premises.size()) {
      Term target = subst(r.concl_target, vars);
      out.emplace(r.concl_label.text, target);
      if (mode.steps) mode.steps->push_back({r.name, head, vars, {}, r.concl_label.text, target});
      return;
    }
    const Premise& p = r.premises[k];
    Term src = vars.at(p.source);
    if (mode.generic && src == *mode.generic) {
      if (p.is_pos()) {
        mode.pos_on_generic = true;
        vars.insert_or_assign(p.target, Term::var("?zeta" + std::to_string(mode.zeta++)));
        match(r, head, k + 1, vars, mode, out);
        vars.erase(p.target);
      } else if (p.kind == Premise::Kind::NegLabel) {
        match(r, head, k + 1, vars, mode, out);
      }
      return;
    }
    if (detail::has_zeta(src)) throw detail::Inconclusive{};
    if (mode.optimistic && src == *mode.optimistic && p.is_negative()) {
      match(r, head, k + 1, vars, mode, out);
      return;
    }
    SuccSet s = lookup(src);
    switch (p.kind) {
      case Premise::Kind::Pos:
        for (const auto& [l, v] : s) {
          if (l != p.label.text) continue;
          vars.insert_or_assign(p.target, v);
          match(r, head, k + 1, vars, mode, out);
        }
        vars.erase(p.target);
        break;
      case Premise::Kind::NegLabel:
        if (std::none_of(s.begin(), s.end(), [&](const auto& e) { return e.first == p.label.text; }))
          match(r, head, k + 1, vars, mode, out);
        break;
      case Premise::Kind::NegAll:
        if (s.empty()) match(r, head, k + 1, vars, mode, out);
        break;
    }
  }

  SuccSet derive(const Term& t, Mode& mode) {
    SuccSet out;
    if (t.is_var()) throw PreconditionError("LTS unfolding needs closed terms, got '" + render(t) + "'");
    auto it = ground_.find(t.name());
    if (it == ground_.end()) return out;
    for (const auto& r : it->second) {
      std::map<Symbol, Term> vars;
      for (std::size_t i = 0; i < r.arg_vars.size(); ++i) vars.emplace(r.arg_vars[i], t.args()[i]);
      match(r, t, 0, vars, mode, out);
    }
    return out;
  }

  Witness base_witness(const Term& u) const {
    Witness w;
    w.term = u;
    for (const auto& [t, s] : memo_)
      for (const auto& [l, v] : s) w.facts.push_back({t, l, v});
    return w;
  }

  SuccSet cycle_solve(const Term& u) {
    std::vector<TraceStep> empty_steps;
    SuccSet forced;
    {
      HypGuard g(hyp_, u, {});
      Mode m;
      m.steps = &empty_steps;
      forced = derive(u, m);
    }

    std::vector<TraceStep> growth_steps;
    bool conclusive = false, growing = true;
    try {
      Mode gm;
      gm.generic = u;
      gm.steps = &growth_steps;
      SuccSet g = derive(u, gm);
      conclusive = true;
      for (const auto& [l, v] : g) growing = growing && detail::has_zeta(v) && !v.is_var();
    } catch (const detail::Inconclusive&) {
    } catch (const detail::NeedHypothesis& nh) {
      if (!(nh.term == u)) throw;
    }
    if (conclusive && growing) {
      if (forced.empty()) return {};
      Witness w = base_witness(u);
      w.kind = Witness::Kind::EmptyNonemptyClash;
      w.trace = std::move(empty_steps);
      w.growth = std::move(growth_steps);
      for (const auto& [l, v] : forced) w.forced_when_empty.emplace_back(l, v);
      w.message = "the successor set of " + render(u) + " must be nonempty when assumed empty, and every transition "
                  "derivable from a nonempty set targets a strictly larger term";
      throw detail::LtsFailure{Verdict::Kind::NoExtension, std::move(w)};
    }

    // Candidate transitions: least fixed point with negative premises on u assumed to hold.
    std::size_t bound = u.depth() + extra_;
    SuccSet cand = forced;
    bool complete = true;
    for (;;) {
      SuccSet next;
      {
        HypGuard g(hyp_, u, cand);
        Mode m;
        m.optimistic = u;
        next = derive(u, m);
      }
      bool grew = false;
      for (const auto& e : next) {
        if (cand.count(e)) continue;
        if (e.second.depth() > bound) {
          complete = false;
          continue;
        }
        fuel_.tick();
        cand.insert(e);
        grew = true;
      }
      if (!grew) break;
    }
    std::vector<std::pair<Letter, Term>> items(cand.begin(), cand.end());
    std::vector<SuccSet> subsets;
    if (items.size() <= kMaxExhaustiveCandidates) {
      for (std::size_t mask = 0; mask < (std::size_t{1} << items.size()); ++mask) {
        SuccSet s;
        for (std::size_t i = 0; i < items.size(); ++i)
          if (mask >> i & 1) s.insert(items[i]);
        subsets.push_back(std::move(s));
      }
    } else {
      complete = false;
      subsets.emplace_back();
      for (std::size_t i = 0; i < items.size(); ++i) {
        subsets.push_back({items[i]});
        for (std::size_t j = i + 1; j < items.size(); ++j) subsets.push_back({items[i], items[j]});
      }
    }
    std::vector<SuccSet> solutions;
    for (const auto& s : subsets) {
      fuel_.tick();
      HypGuard g(hyp_, u, s);
      Mode m;
      if (derive(u, m) == s) solutions.push_back(s);
    }
    if (solutions.size() == 1) return solutions.front();
    Witness w = base_witness(u);
    if (solutions.empty()) {
      if (!complete) {
        w.kind = Witness::Kind::Unforced;
        w.message = "no supported successor set for " + render(u) + " within the searched universe";
        throw detail::LtsFailure{Verdict::Kind::Unknown, std::move(w)};
      }
      w.kind = Witness::Kind::NoSupportedSet;
      w.message = "no set of transitions of " + render(u) + " is exactly the set it derives";
      w.trace = std::move(empty_steps);
      throw detail::LtsFailure{Verdict::Kind::NoExtension, std::move(w)};
    }
    w.kind = Witness::Kind::Multiple;
    w.message = std::to_string(solutions.size()) + " different successor sets of " + render(u) + " are self-supporting";
    throw detail::LtsFailure{Verdict::Kind::Ambiguous, std::move(w)};
  }

  const Spec* spec_;
  std::map<Symbol, std::vector<Rule>> ground_;
  std::map<Term, SuccSet> memo_;
  std::map<Term, SuccSet> hyp_;
  std::vector<Term> stack_;
  detail::FuelPool fuel_;
  std::size_t extra_;
  std::size_t level_ = 0;
};

inline Verdict unfold_lts(const Spec& spec0, const std::vector<Term>& seeds, std::size_t depth, std::size_t fuel) {
  Spec spec = normalize(spec0);
  if (spec.behavior != Behavior::Lts) throw SpecError("LTS unfolding needs an lts specification");
  for (const auto& s : seeds) {
    check_term(spec.signature, s);
    if (!s.closed()) throw PreconditionError("LTS seeds must be closed terms, got '" + render(s) + "'");
  }
  LtsSession session(spec, fuel, depth + max_target_depth(spec));
  Verdict v;
  v.depth = depth;
  std::optional<Witness> ambiguous;
  bool unknown = false;
  for (const auto& seed : seeds) {
    try {
      v.trees.emplace_back(seed, tree_canon(session.tree(seed, depth), depth));
    } catch (const detail::LtsFailure& f) {
      Witness w = f.witness;
      w.seed = seed;
      w.position = session.level() + 1;
      if (f.kind == Verdict::Kind::NoExtension) {
        v.kind = Verdict::Kind::NoExtension;
        v.witness = std::move(w);
        v.trees.clear();
        v.fuel_spent = session.fuel_spent();
        return v;
      }
      if (f.kind == Verdict::Kind::Ambiguous && !ambiguous) ambiguous = std::move(w);
      if (f.kind == Verdict::Kind::Unknown) unknown = true;
    } catch (const OutOfFuel&) {
      unknown = true;
      break;
    }
  }
  v.fuel_spent = session.fuel_spent();
  if (ambiguous) {
    v.kind = Verdict::Kind::Ambiguous;
    v.witness = std::move(ambiguous);
  } else {
    v.kind = unknown ? Verdict::Kind::Unknown : Verdict::Kind::ConsistentPrefix;
  }
  return v;
}

}  // namespace bigsos

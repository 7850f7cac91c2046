#pragma once

// Rule AST for stream and LTS specifications, validation/normalisation and grounding of label
// metavariables over the finite alphabet.

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
#include "bigsos/terms.hpp"

namespace bigsos {

struct LabelExpr {
  enum class Kind { Lit, Var };
  Kind kind = Kind::Lit;
  std::string text;

  static LabelExpr lit(Letter l) { return {Kind::Lit, std::move(l)}; }
  static LabelExpr var(Symbol v) { return {Kind::Var, std::move(v)}; }
  bool is_lit() const { return kind == Kind::Lit; }
  bool is_var() const { return kind == Kind::Var; }

  bool operator==(const LabelExpr&) const = default;
  auto operator<=>(const LabelExpr&) const = default;
};

struct Premise {
  enum class Kind { Pos, NegLabel, NegAll };
  Kind kind = Kind::Pos;
  Symbol source;
  LabelExpr label;  // unused for NegAll
  Symbol target;    // Pos only

  static Premise pos(Symbol src, LabelExpr l, Symbol tgt) { return {Kind::Pos, std::move(src), std::move(l), std::move(tgt)}; }
  static Premise neg_label(Symbol src, LabelExpr l) { return {Kind::NegLabel, std::move(src), std::move(l), {}}; }
  static Premise neg_all(Symbol src) { return {Kind::NegAll, std::move(src), {}, {}}; }

  bool is_pos() const { return kind == Kind::Pos; }
  bool is_negative() const { return kind != Kind::Pos; }

  bool operator==(const Premise&) const = default;
};

struct Rule {
  std::string name;  // empty: referred to by position
  Symbol head_op;
  std::vector<Symbol> arg_vars;
  std::vector<Premise> premises;
  LabelExpr concl_label;
  Term concl_target = Term::app("_");
  // Conclusion label metavariables not bound by a premise, quantified over the alphabet.
  std::vector<Symbol> forall;

  bool operator==(const Rule&) const = default;

  // Label metavariables in order of first occurrence.
  std::vector<Symbol> label_vars() const {
    std::vector<Symbol> out;
    auto add = [&](const LabelExpr& l) {
      if (l.is_var() && std::find(out.begin(), out.end(), l.text) == out.end()) out.push_back(l.text);
    };
    for (const auto& p : premises)
      if (p.kind != Premise::Kind::NegAll) add(p.label);
    add(concl_label);
    for (const auto& v : forall) add(LabelExpr::var(v));
    return out;
  }

  bool is_arg(const Symbol& v) const { return std::find(arg_vars.begin(), arg_vars.end(), v) != arg_vars.end(); }

  Term head_term() const {
    std::vector<Term> args;
    for (const auto& v : arg_vars) args.push_back(Term::var(v));
    return Term::app(head_op, std::move(args));
  }
};

enum class Behavior { Stream, Lts };

inline const char* to_string(Behavior b) { return b == Behavior::Stream ? "stream" : "lts"; }

struct Spec {
  Behavior behavior = Behavior::Stream;
  std::vector<Letter> alphabet;
  std::optional<Letter> start_letter;
  Signature signature;
  std::vector<Rule> rules;

  bool has_letter(const Letter& l) const { return std::find(alphabet.begin(), alphabet.end(), l) != alphabet.end(); }

  std::string rule_id(std::size_t i) const {
    return rules[i].name.empty() ? "r" + std::to_string(i + 1) : rules[i].name;
  }

  std::vector<std::size_t> rules_for(const Symbol& op) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < rules.size(); ++i)
      if (rules[i].head_op == op) out.push_back(i);
    return out;
  }

  bool operator==(const Spec&) const = default;
};

struct Diagnostic {
  enum class Severity { Info, Warning, Error };
  Severity severity = Severity::Error;
  std::string code;
  std::string message;
  std::optional<std::size_t> rule;

  bool is_error() const { return severity == Severity::Error; }
};

inline const char* to_string(Diagnostic::Severity s) {
  switch (s) {
    case Diagnostic::Severity::Info: return "info";
    case Diagnostic::Severity::Warning: return "warning";
    default: return "error";
  }
}

inline bool has_errors(const std::vector<Diagnostic>& ds) {
  return std::any_of(ds.begin(), ds.end(), [](const Diagnostic& d) { return d.is_error(); });
}

namespace detail {

inline Diagnostic rule_error(std::size_t i, std::string code, std::string msg) {
  return {Diagnostic::Severity::Error, std::move(code), std::move(msg), i};
}

// Stable topological order of premises: a premise comes after the Pos premise binding its source.
inline bool order_premises(const Rule& r, std::vector<Premise>& out) {
  std::set<Symbol> scope(r.arg_vars.begin(), r.arg_vars.end());
  std::vector<bool> used(r.premises.size(), false);
  out.clear();
  bool progress = true;
  while (out.size() < r.premises.size() && progress) {
    progress = false;
    for (std::size_t i = 0; i < r.premises.size(); ++i) {
      if (used[i] || !scope.count(r.premises[i].source)) continue;
      used[i] = true;
      progress = true;
      out.push_back(r.premises[i]);
      if (r.premises[i].is_pos()) scope.insert(r.premises[i].target);
      break;
    }
  }
  return out.size() == r.premises.size();
}

}  // namespace detail

inline std::vector<Diagnostic> validate_rule(const Spec& spec, std::size_t index) {
  std::vector<Diagnostic> ds;
  const Rule& r = spec.rules[index];
  auto err = [&](std::string code, std::string msg) { ds.push_back(detail::rule_error(index, std::move(code), std::move(msg))); };

  auto arity = spec.signature.arity(r.head_op);
  if (!arity) {
    err("unknown-op", "unknown operation '" + r.head_op + "'");
    return ds;
  }
  if (*arity != r.arg_vars.size()) {
    err("arity", "'" + r.head_op + "' expects " + std::to_string(*arity) + " arguments, got " +
                     std::to_string(r.arg_vars.size()));
  }
  std::set<Symbol> bound;
  for (const auto& v : r.arg_vars) {
    if (!bound.insert(v).second) err("duplicate-arg", "argument variable '" + v + "' repeated");
  }
  std::set<Symbol> targets;
  for (const auto& p : r.premises) {
    if (p.is_pos()) {
      if (bound.count(p.target) || !targets.insert(p.target).second) {
        err("non-fresh-target", "premise target '" + p.target + "' is not fresh");
      }
    }
    if (p.is_negative() && spec.behavior == Behavior::Stream) {
      err("negative-in-stream", "negative premise on '" + p.source + "' in a stream specification");
    }
    if (p.kind != Premise::Kind::NegAll && p.label.is_lit() && !spec.has_letter(p.label.text)) {
      err("unknown-letter", "letter '" + p.label.text + "' is not in the alphabet");
    }
  }
  std::vector<Premise> ordered;
  if (!detail::order_premises(r, ordered)) {
    err("unbound-source", "a premise source is neither an argument nor a premise target");
  }
  std::set<Symbol> scope = bound;
  scope.insert(targets.begin(), targets.end());
  if (spec.behavior == Behavior::Stream) {
    std::map<Symbol, int> outgoing;
    for (const auto& p : r.premises)
      if (p.is_pos() && ++outgoing[p.source] > 1) {
        err("duplicate-premise", "more than one transition premise on '" + p.source + "' in a stream rule");
      }
  }
  for (const auto& v : vars(r.concl_target)) {
    if (!scope.count(v)) err("unbound-var", "conclusion variable '" + v + "' is not in scope");
  }
  try {
    check_term(spec.signature, r.concl_target);
  } catch (const SpecError& e) {
    err("bad-target", e.what());
  }
  if (r.concl_label.is_lit() && !spec.has_letter(r.concl_label.text)) {
    err("unknown-letter", "letter '" + r.concl_label.text + "' is not in the alphabet");
  }
  if (r.concl_label.is_var()) {
    bool in_premise = std::any_of(r.premises.begin(), r.premises.end(), [&](const Premise& p) {
      return p.kind != Premise::Kind::NegAll && p.label == r.concl_label;
    });
    bool declared = std::find(r.forall.begin(), r.forall.end(), r.concl_label.text) != r.forall.end();
    if (!in_premise && !declared) {
      err("unbound-label", "conclusion label '" + r.concl_label.text + "' is neither bound by a premise nor declared");
    }
  }
  return ds;
}

inline std::vector<Diagnostic> validate_spec(const Spec& spec) {
  std::vector<Diagnostic> ds;
  std::set<Letter> seen;
  for (const auto& l : spec.alphabet) {
    if (!seen.insert(l).second) ds.push_back({Diagnostic::Severity::Error, "duplicate-letter", "letter '" + l + "' repeated", {}});
  }
  if (spec.alphabet.empty()) ds.push_back({Diagnostic::Severity::Error, "empty-alphabet", "alphabet is empty", {}});
  if (spec.start_letter && !spec.has_letter(*spec.start_letter)) {
    ds.push_back({Diagnostic::Severity::Error, "unknown-letter", "start letter '" + *spec.start_letter + "' not in alphabet", {}});
  }
  for (std::size_t i = 0; i < spec.rules.size(); ++i) {
    auto rd = validate_rule(spec, i);
    ds.insert(ds.end(), rd.begin(), rd.end());
  }
  return ds;
}

// Puts premises in root-to-leaf order; throws SpecError on invalid specifications.
inline Spec normalize(Spec spec) {
  auto ds = validate_spec(spec);
  for (const auto& d : ds) {
    if (!d.is_error()) continue;
    std::string where = d.rule ? "rule " + spec.rule_id(*d.rule) + ": " : "";
    throw SpecError(where + d.message);
  }
  for (auto& r : spec.rules) {
    std::vector<Premise> ordered;
    detail::order_premises(r, ordered);
    r.premises = std::move(ordered);
  }
  return spec;
}

inline LabelExpr instantiate(const LabelExpr& l, const std::map<Symbol, Letter>& env) {
  if (l.is_lit()) return l;
  auto it = env.find(l.text);
  return it == env.end() ? l : LabelExpr::lit(it->second);
}

inline Rule instantiate(const Rule& r, const std::map<Symbol, Letter>& env) {
  Rule out = r;
  for (auto& p : out.premises)
    if (p.kind != Premise::Kind::NegAll) p.label = instantiate(p.label, env);
  out.concl_label = instantiate(out.concl_label, env);
  out.forall.clear();
  return out;
}

// All instantiations of the label metavariables of one rule over the alphabet.
inline std::vector<Rule> ground_rule(const Spec& spec, const Rule& r) {
  auto lvars = r.label_vars();
  if (lvars.empty()) return {r};
  std::vector<Rule> out;
  std::vector<std::size_t> idx(lvars.size(), 0);
  const std::size_t k = spec.alphabet.size();
  if (k == 0) return out;
  for (;;) {
    std::map<Symbol, Letter> env;
    std::string suffix;
    for (std::size_t i = 0; i < lvars.size(); ++i) {
      env[lvars[i]] = spec.alphabet[idx[i]];
      suffix += (i ? "," : "") + lvars[i] + "=" + spec.alphabet[idx[i]];
    }
    Rule g = instantiate(r, env);
    g.name = (r.name.empty() ? std::string("rule") : r.name) + "[" + suffix + "]";
    out.push_back(std::move(g));
    std::size_t pos = 0;
    while (pos < idx.size() && ++idx[pos] == k) idx[pos++] = 0;
    if (pos == idx.size()) break;
  }
  return out;
}

inline std::vector<Rule> ground_rules(const Spec& spec, const Symbol& op) {
  std::vector<Rule> out;
  for (std::size_t i : spec.rules_for(op)) {
    Rule r = spec.rules[i];
    if (r.name.empty()) r.name = spec.rule_id(i);
    auto g = ground_rule(spec, r);
    out.insert(out.end(), g.begin(), g.end());
  }
  return out;
}

// Length of the longest premise chain starting at variable v.
inline std::size_t chain_depth(const Rule& r, const Symbol& v) {
  std::size_t best = 0;
  for (const auto& p : r.premises) {
    if (p.source != v) continue;
    if (p.is_pos()) best = std::max(best, 1 + chain_depth(r, p.target));
    else best = std::max<std::size_t>(best, 1);
  }
  return best;
}

inline std::size_t max_lookahead(const Spec& spec, const Symbol& op) {
  std::size_t d = 0;
  for (std::size_t i : spec.rules_for(op))
    for (const auto& v : spec.rules[i].arg_vars) d = std::max(d, chain_depth(spec.rules[i], v));
  return d;
}

inline std::size_t max_lookahead(const Spec& spec) {
  std::size_t d = 0;
  for (const auto& op : spec.signature.operations()) d = std::max(d, max_lookahead(spec, op.name));
  return d;
}

inline std::size_t max_target_depth(const Spec& spec) {
  std::size_t d = 0;
  for (const auto& r : spec.rules) d = std::max(d, r.concl_target.depth());
  return d;
}

}  // namespace bigsos

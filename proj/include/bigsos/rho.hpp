#pragma once

// One application of the specification to an operation whose arguments have known
// behaviours: match every rule against the supplied prefixes/trees and collect the
// conclusions.

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "bigsos/behavior.hpp"
#include "bigsos/errors.hpp"
#include "bigsos/lts_engine.hpp"
#include "bigsos/rules.hpp"

namespace bigsos {

namespace detail {

inline std::vector<Rule> rules_checked(const Spec& spec, const Symbol& op, std::size_t nargs) {
  auto arity = spec.signature.arity(op);
  if (!arity) throw SpecError("unknown operation '" + op + "'");
  if (*arity != nargs) throw PreconditionError("'" + op + "' expects " + std::to_string(*arity) + " argument behaviours");
  return ground_rules(normalize(spec), op);
}

}  // namespace detail

inline SuccSet one_step_rho(const Spec& spec, const Symbol& op, const std::vector<StreamPrefix>& args) {
  auto rules = detail::rules_checked(spec, op, args.size());
  for (const auto& r : rules)
    for (std::size_t i = 0; i < args.size(); ++i)
      if (chain_depth(r, r.arg_vars[i]) > args[i].length()) {
        throw PreconditionError("argument " + std::to_string(i + 1) + " of '" + op + "' needs lookahead " +
                                std::to_string(chain_depth(r, r.arg_vars[i])));
      }
  SuccSet out;
  for (const auto& r : rules) {
    std::map<Symbol, std::pair<std::size_t, std::size_t>> at;  // variable -> (argument, position)
    for (std::size_t i = 0; i < args.size(); ++i) at[r.arg_vars[i]] = {i, 0};
    bool ok = true;
    for (const auto& p : r.premises) {
      auto [a, pos] = at.at(p.source);
      if (args[a].label(pos) != p.label.text) {
        ok = false;
        break;
      }
      at[p.target] = {a, pos + 1};
    }
    if (!ok) continue;
    Substitution s;
    for (const auto& [v, ap] : at) s.emplace(v, args[ap.first].node(ap.second));
    out.emplace(r.concl_label.text, subst(r.concl_target, s));
  }
  if (spec.behavior == Behavior::Stream && out.size() != 1) {
    throw SpecError("'" + op + "' yields " + std::to_string(out.size()) + " transitions on the given streams");
  }
  return out;
}

namespace detail {

inline void rho_tree_match(const Rule& r, std::size_t k, std::map<Symbol, const TreePrefix*>& at, SuccSet& out) {
  if (k == r.premises.size()) {
    Substitution s;
    for (const auto& [v, t] : at) s.emplace(v, t->node);
    out.emplace(r.concl_label.text, subst(r.concl_target, s));
    return;
  }
  const Premise& p = r.premises[k];
  const auto& children = tree_children(*at.at(p.source));
  switch (p.kind) {
    case Premise::Kind::Pos:
      for (const auto& e : children) {
        if (e.label != p.label.text) continue;
        at[p.target] = &e.subtree;
        rho_tree_match(r, k + 1, at, out);
      }
      at.erase(p.target);
      break;
    case Premise::Kind::NegLabel:
      if (std::none_of(children.begin(), children.end(), [&](const auto& e) { return e.label == p.label.text; }))
        rho_tree_match(r, k + 1, at, out);
      break;
    case Premise::Kind::NegAll:
      if (children.empty()) rho_tree_match(r, k + 1, at, out);
      break;
  }
}

}  // namespace detail

inline SuccSet one_step_rho(const Spec& spec, const Symbol& op, const std::vector<TreePrefix>& args) {
  auto rules = detail::rules_checked(spec, op, args.size());
  SuccSet out;
  for (const auto& r : rules) {
    std::map<Symbol, const TreePrefix*> at;
    for (std::size_t i = 0; i < args.size(); ++i) at[r.arg_vars[i]] = &args[i];
    detail::rho_tree_match(r, 0, at, out);
  }
  return out;
}

}  // namespace bigsos

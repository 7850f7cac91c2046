#pragma once

// Results of bounded extension checking and the witnesses attached to them.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "bigsos/behavior.hpp"
#include "bigsos/terms.hpp"

namespace bigsos {

// One rule application: the head instance, how the rule's term and label variables were
// instantiated, and the entry it determined. Unknown terms appear as `?k`, unknown letters as `?Lk`.
struct TraceStep {
  std::string rule;
  Term head = Term::app("_");
  std::map<Symbol, Term> vars;
  std::map<Symbol, std::string> labels;
  std::string label;
  Term target = Term::app("_");
};

// Known behaviour of one term at the time of the contradiction.
struct FactEntry {
  Term term = Term::app("_");
  std::string label;
  Term next = Term::app("_");
};

struct Witness {
  enum class Kind { OccursCheck, Clash, NoRule, EmptyNonemptyClash, NoSupportedSet, CaseSplit, Unforced, Multiple };

  Kind kind = Kind::Unforced;
  Term seed = Term::app("_");
  Term term = Term::app("_");
  std::size_t position = 0;
  std::optional<Term> lhs;  // equation lhs = rhs for OccursCheck and Clash
  std::optional<Term> rhs;
  std::string message;
  std::vector<FactEntry> facts;
  std::vector<TraceStep> trace;
  // CaseSplit: one refuted branch per candidate rule at `term`.
  std::vector<std::pair<std::string, Witness>> cases;
  // LTS: successor sets by hypothesis, e.g. transitions forced when the set is empty.
  std::vector<std::pair<std::string, Term>> forced_when_empty;
  std::vector<TraceStep> growth;
};

inline const char* to_string(Witness::Kind k) {
  switch (k) {
    case Witness::Kind::OccursCheck: return "OccursCheck";
    case Witness::Kind::Clash: return "Clash";
    case Witness::Kind::NoRule: return "NoRule";
    case Witness::Kind::EmptyNonemptyClash: return "EmptyNonemptyClash";
    case Witness::Kind::NoSupportedSet: return "NoSupportedSet";
    case Witness::Kind::CaseSplit: return "CaseSplit";
    case Witness::Kind::Multiple: return "Multiple";
    default: return "Unforced";
  }
}

struct Verdict {
  enum class Kind { ConsistentPrefix, NoExtension, Ambiguous, Unknown };

  Kind kind = Kind::Unknown;
  std::size_t depth = 0;
  std::vector<std::pair<Term, StreamPrefix>> streams;
  std::vector<std::pair<Term, TreePrefix>> trees;
  std::optional<Witness> witness;
  // Stream: every resolved entry of the constraint store (arguments included).
  std::vector<FactEntry> facts;
  std::size_t fuel_spent = 0;
  std::string note;

  bool consistent() const { return kind == Kind::ConsistentPrefix; }
  bool no_extension() const { return kind == Kind::NoExtension; }
  bool ambiguous() const { return kind == Kind::Ambiguous; }
  bool unknown() const { return kind == Kind::Unknown; }
};

inline const char* to_string(Verdict::Kind k) {
  switch (k) {
    case Verdict::Kind::ConsistentPrefix: return "ConsistentPrefix";
    case Verdict::Kind::NoExtension: return "NoExtension";
    case Verdict::Kind::Ambiguous: return "Ambiguous";
    default: return "Unknown";
  }
}

// Exit-code ordering used when aggregating: NoExtension > Ambiguous > ConsistentPrefix > Unknown.
inline int severity(Verdict::Kind k) {
  switch (k) {
    case Verdict::Kind::NoExtension: return 3;
    case Verdict::Kind::Ambiguous: return 2;
    case Verdict::Kind::ConsistentPrefix: return 1;
    default: return 0;
  }
}

inline std::string render_equation(const Witness& w) {
  if (!w.lhs || !w.rhs) return {};
  return render(*w.lhs) + " = " + render(*w.rhs);
}

inline nlohmann::json to_json(const TraceStep& s) {
  nlohmann::json j{{"rule", s.rule}, {"head", render(s.head)}, {"label", s.label}, {"target", render(s.target)}};
  j["instantiation"] = nlohmann::json::object();
  for (const auto& [v, t] : s.vars) j["instantiation"][v] = render(t);
  for (const auto& [v, l] : s.labels) j["instantiation"][v] = l;
  return j;
}

inline nlohmann::json to_json(const Witness& w) {
  nlohmann::json j{{"kind", to_string(w.kind)},
                   {"seed", render(w.seed)},
                   {"term", render(w.term)},
                   {"position", w.position},
                   {"message", w.message}};
  if (w.lhs && w.rhs) j["equation"] = render_equation(w);
  j["facts"] = nlohmann::json::array();
  for (const auto& f : w.facts) j["facts"].push_back({{"term", render(f.term)}, {"label", f.label}, {"next", render(f.next)}});
  j["trace"] = nlohmann::json::array();
  for (const auto& s : w.trace) j["trace"].push_back(to_json(s));
  if (!w.cases.empty()) {
    j["cases"] = nlohmann::json::array();
    for (const auto& [choice, sub] : w.cases) j["cases"].push_back({{"choice", choice}, {"witness", to_json(sub)}});
  }
  if (!w.forced_when_empty.empty()) {
    j["forced_when_empty"] = nlohmann::json::array();
    for (const auto& [l, t] : w.forced_when_empty) j["forced_when_empty"].push_back({{"label", l}, {"target", render(t)}});
  }
  if (!w.growth.empty()) {
    j["growth"] = nlohmann::json::array();
    for (const auto& s : w.growth) j["growth"].push_back(to_json(s));
  }
  return j;
}

inline nlohmann::json to_json(const TreePrefix& t) {
  nlohmann::json j{{"node", render(t.node)}};
  j["children"] = nlohmann::json::array();
  for (const auto& e : t.children) j["children"].push_back({{"label", e.label}, {"tree", to_json(e.subtree)}});
  return j;
}

inline nlohmann::json to_json(const Verdict& v) {
  nlohmann::json j{{"verdict", to_string(v.kind)}, {"depth", v.depth}, {"fuel_spent", v.fuel_spent}};
  if (v.witness) j["witness"] = to_json(*v.witness);
  j["prefixes"] = nlohmann::json::object();
  for (const auto& [t, p] : v.streams) {
    nlohmann::json nodes = nlohmann::json::array();
    for (std::size_t i = 0; i <= p.length(); ++i) nodes.push_back(render(p.node(i)));
    j["prefixes"][render(t)] = {{"labels", p.labels()}, {"nodes", nodes}};
  }
  for (const auto& [t, tr] : v.trees) j["prefixes"][render(t)] = to_json(tr);
  if (!v.note.empty()) j["note"] = v.note;
  return j;
}

}  // namespace bigsos

#pragma once

// Rule-format analysis: which rules are GSOS / coGSOS, whether a specification is GSOS, coGSOS,
// mixed-GSOS or only biGSOS, and whether a stream specification is deterministic and
// exhaustive on every label pattern up to its lookahead depth.

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bigsos/rules.hpp"

namespace bigsos {

struct FormatSet {
  bool gsos = false;
  bool cogsos = false;

  bool empty() const { return !gsos && !cogsos; }
  FormatSet operator&(const FormatSet& o) const { return {gsos && o.gsos, cogsos && o.cogsos}; }
  bool operator==(const FormatSet&) const = default;
};

inline std::vector<std::string> to_strings(const FormatSet& f) {
  std::vector<std::string> out;
  if (f.gsos) out.emplace_back("GSOS");
  if (f.cogsos) out.emplace_back("coGSOS");
  return out;
}

enum class SpecFormat { GSOS, CoGSOS, MixedGSOS, BiGSOSOnly, IllFormed };

inline const char* to_string(SpecFormat f) {
  switch (f) {
    case SpecFormat::GSOS: return "GSOS";
    case SpecFormat::CoGSOS: return "coGSOS";
    case SpecFormat::MixedGSOS: return "mixed-GSOS";
    case SpecFormat::BiGSOSOnly: return "biGSOS-only";
    default: return "ill-formed";
  }
}

// Rule shape tests. A rule is GSOS when all premises test argument variables only (for streams
// at most one transition premise per argument). It is coGSOS when its premises form chains
// (trees for LTS) rooted at the arguments and its target is a variable or a flat term.
inline FormatSet classify_rule(const Spec& spec, const Rule& rule) {
  FormatSet f;
  f.gsos = true;
  std::map<Symbol, int> pos_out;
  for (const auto& p : rule.premises) {
    if (!rule.is_arg(p.source)) f.gsos = false;
    if (p.is_pos()) ++pos_out[p.source];
  }
  if (spec.behavior == Behavior::Stream) {
    for (const auto& [v, n] : pos_out)
      if (n > 1) f.gsos = false;
  }
  bool chains = true;
  if (spec.behavior == Behavior::Stream) {
    for (const auto& [v, n] : pos_out)
      if (n > 1) chains = false;
  }
  const Term& t = rule.concl_target;
  bool flat = t.is_var() || std::all_of(t.args().begin(), t.args().end(), [](const Term& a) { return a.is_var(); });
  f.cogsos = chains && flat;
  return f;
}

inline FormatSet classify_rule(const Spec& spec, std::size_t index) { return classify_rule(spec, spec.rules[index]); }

struct FormatReport {
  SpecFormat verdict = SpecFormat::IllFormed;
  std::vector<FormatSet> per_rule;
  std::map<Symbol, FormatSet> per_op;
  std::vector<Diagnostic> diagnostics;

  // GSOS and coGSOS specifications are degenerate mixed-GSOS specifications.
  bool is_mixed_gsos() const {
    return verdict == SpecFormat::GSOS || verdict == SpecFormat::CoGSOS || verdict == SpecFormat::MixedGSOS;
  }
};

inline FormatReport classify_spec(const Spec& spec) {
  FormatReport rep;
  rep.diagnostics = validate_spec(spec);
  if (has_errors(rep.diagnostics)) {
    rep.verdict = SpecFormat::IllFormed;
    return rep;
  }
  for (const auto& op : spec.signature.operations()) rep.per_op[op.name] = {true, true};
  for (const auto& r : spec.rules) {
    FormatSet f = classify_rule(spec, r);
    rep.per_rule.push_back(f);
    rep.per_op[r.head_op] = rep.per_op[r.head_op] & f;
  }
  bool all_gsos = true, all_cogsos = true, all_assigned = true;
  for (const auto& [op, f] : rep.per_op) {
    all_gsos = all_gsos && f.gsos;
    all_cogsos = all_cogsos && f.cogsos;
    all_assigned = all_assigned && !f.empty();
  }
  if (all_gsos) rep.verdict = SpecFormat::GSOS;
  else if (all_cogsos) rep.verdict = SpecFormat::CoGSOS;
  else if (all_assigned) rep.verdict = SpecFormat::MixedGSOS;
  else rep.verdict = SpecFormat::BiGSOSOnly;
  for (std::size_t i = 0; i < spec.rules.size(); ++i) {
    if (rep.per_rule[i].empty()) {
      rep.diagnostics.push_back({Diagnostic::Severity::Info, "bigsos-rule",
                                 "rule " + spec.rule_id(i) + " combines lookahead with a non-flat target", i});
    }
  }
  for (const auto& [op, f] : rep.per_op) {
    if (!f.empty()) continue;
    bool any_empty = false;
    for (std::size_t i : spec.rules_for(op)) any_empty = any_empty || rep.per_rule[i].empty();
    if (!any_empty) {
      rep.diagnostics.push_back({Diagnostic::Severity::Info, "mixed-op",
                                 "rules for '" + op + "' mix GSOS-only and coGSOS-only rules", {}});
    }
  }
  return rep;
}

struct FunctionalityReport {
  struct OpStats {
    std::size_t lookahead = 0;
    std::size_t patterns = 0;
    std::size_t missing = 0;
    std::size_t overlapping = 0;
    bool checked = true;
  };
  std::map<Symbol, OpStats> per_op;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return !has_errors(diagnostics); }
};

namespace detail {

// Matches a ground or schematic stream rule against per-argument label words.
inline bool rule_matches_pattern(const Rule& r, const std::vector<std::vector<Letter>>& words) {
  std::map<Symbol, Letter> lenv;
  for (std::size_t i = 0; i < r.arg_vars.size(); ++i) {
    Symbol cur = r.arg_vars[i];
    std::size_t d = 0;
    for (;;) {
      const Premise* next = nullptr;
      for (const auto& p : r.premises)
        if (p.is_pos() && p.source == cur) next = &p;
      if (!next) break;
      if (d >= words[i].size()) return false;
      const Letter& actual = words[i][d];
      if (next->label.is_lit()) {
        if (next->label.text != actual) return false;
      } else {
        auto [it, fresh] = lenv.emplace(next->label.text, actual);
        if (!fresh && it->second != actual) return false;
      }
      cur = next->target;
      ++d;
    }
  }
  return true;
}

inline std::string render_pattern(const std::vector<std::vector<Letter>>& words) {
  std::string out = "(";
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += "; ";
    for (std::size_t j = 0; j < words[i].size(); ++j) out += (j ? " " : "") + words[i][j];
  }
  return out + ")";
}

}  // namespace detail

inline constexpr std::size_t kMaxFunctionalityPatterns = 1u << 18;
inline constexpr std::size_t kMaxReportedPatterns = 8;

inline FunctionalityReport check_functionality(const Spec& spec) {
  FunctionalityReport rep;
  for (const auto& op : spec.signature.operations()) {
    FunctionalityReport::OpStats st;
    auto idx = spec.rules_for(op.name);
    std::vector<std::size_t> depth(op.arity, 0);
    for (std::size_t i : idx)
      for (std::size_t a = 0; a < op.arity; ++a) depth[a] = std::max(depth[a], chain_depth(spec.rules[i], spec.rules[i].arg_vars[a]));
    for (auto d : depth) st.lookahead = std::max(st.lookahead, d);

    if (spec.behavior == Behavior::Lts) {
      // Nondeterminism is allowed; only count pairs of rules that can fire on the same argument behaviour.
      for (std::size_t x = 0; x < idx.size(); ++x)
        for (std::size_t y = x + 1; y < idx.size(); ++y) {
          const Rule& r1 = spec.rules[idx[x]];
          const Rule& r2 = spec.rules[idx[y]];
          bool clash = false;
          for (const auto& p1 : r1.premises)
            for (const auto& p2 : r2.premises) {
              auto a1 = std::find(r1.arg_vars.begin(), r1.arg_vars.end(), p1.source) - r1.arg_vars.begin();
              auto a2 = std::find(r2.arg_vars.begin(), r2.arg_vars.end(), p2.source) - r2.arg_vars.begin();
              if (a1 != a2 || a1 == static_cast<std::ptrdiff_t>(r1.arg_vars.size())) continue;
              if (p1.kind == Premise::Kind::NegAll && p2.is_pos()) clash = true;
              if (p2.kind == Premise::Kind::NegAll && p1.is_pos()) clash = true;
              if (p1.is_pos() && p2.kind == Premise::Kind::NegLabel && p1.label == p2.label) clash = true;
              if (p2.is_pos() && p1.kind == Premise::Kind::NegLabel && p1.label == p2.label) clash = true;
            }
          if (!clash) ++st.overlapping;
        }
      if (st.overlapping) {
        rep.diagnostics.push_back({Diagnostic::Severity::Info, "lts-overlap",
                                   "'" + op.name + "': " + std::to_string(st.overlapping) + " pairs of rules may fire together", {}});
      }
      rep.per_op[op.name] = st;
      continue;
    }

    std::size_t total_len = 0;
    for (auto d : depth) total_len += d;
    std::size_t patterns = 1;
    bool too_big = false;
    for (std::size_t i = 0; i < total_len; ++i) {
      patterns *= spec.alphabet.size();
      if (patterns > kMaxFunctionalityPatterns) {
        too_big = true;
        break;
      }
    }
    if (too_big) {
      st.checked = false;
      rep.diagnostics.push_back({Diagnostic::Severity::Warning, "pattern-space",
                                 "'" + op.name + "': label pattern space too large to enumerate", {}});
      rep.per_op[op.name] = st;
      continue;
    }
    st.patterns = patterns;
    std::vector<std::size_t> digits(total_len, 0);
    std::size_t reported_missing = 0, reported_overlap = 0;
    for (std::size_t n = 0; n < patterns; ++n) {
      std::vector<std::vector<Letter>> words(op.arity);
      std::size_t k = 0;
      for (std::size_t a = 0; a < op.arity; ++a)
        for (std::size_t d = 0; d < depth[a]; ++d) words[a].push_back(spec.alphabet[digits[k++]]);
      std::vector<std::string> matching;
      for (std::size_t i : idx)
        if (detail::rule_matches_pattern(spec.rules[i], words)) matching.push_back(spec.rule_id(i));
      if (matching.empty()) {
        ++st.missing;
        if (reported_missing++ < kMaxReportedPatterns) {
          rep.diagnostics.push_back({Diagnostic::Severity::Error, "missing",
                                     "'" + op.name + "': no rule for label pattern " + detail::render_pattern(words), {}});
        }
      } else if (matching.size() > 1) {
        ++st.overlapping;
        if (reported_overlap++ < kMaxReportedPatterns) {
          std::string rules;
          for (std::size_t i = 0; i < matching.size(); ++i) rules += (i ? ", " : "") + matching[i];
          rep.diagnostics.push_back({Diagnostic::Severity::Error, "overlap",
                                     "'" + op.name + "': rules " + rules + " overlap on label pattern " +
                                         detail::render_pattern(words), {}});
        }
      }
      for (std::size_t p = 0; p < digits.size(); ++p) {
        if (++digits[p] < spec.alphabet.size()) break;
        digits[p] = 0;
      }
    }
    rep.per_op[op.name] = st;
  }
  return rep;
}

inline nlohmann::json to_json(const Diagnostic& d) {
  nlohmann::json j{{"severity", to_string(d.severity)}, {"code", d.code}, {"message", d.message}};
  if (d.rule) j["rule"] = *d.rule;
  return j;
}

inline nlohmann::json to_json(const Spec& spec, const FormatReport& rep, const FunctionalityReport* fn = nullptr) {
  nlohmann::json j;
  j["verdict"] = to_string(rep.verdict);
  j["mixed_gsos"] = rep.is_mixed_gsos();
  j["per_rule"] = nlohmann::json::array();
  for (std::size_t i = 0; i < rep.per_rule.size(); ++i) {
    j["per_rule"].push_back({{"rule", spec.rule_id(i)}, {"formats", to_strings(rep.per_rule[i])}});
  }
  j["per_op"] = nlohmann::json::object();
  for (const auto& [op, f] : rep.per_op) j["per_op"][op] = to_strings(f);
  j["diagnostics"] = nlohmann::json::array();
  for (const auto& d : rep.diagnostics) j["diagnostics"].push_back(to_json(d));
  if (fn) {
    for (const auto& d : fn->diagnostics) j["diagnostics"].push_back(to_json(d));
    j["functional"] = fn->ok();
    for (const auto& [op, st] : fn->per_op) {
      j["lookahead"][op] = st.lookahead;
    }
  }
  return j;
}

}  // namespace bigsos

#pragma once

// Checks on constructed prefixes: agreement with one rule application (extension diagram),
// the distributive-law axioms for streams over base streams, re-derivability of every entry,
// and the orchestrating extension check.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "bigsos/base_streams.hpp"
#include "bigsos/behavior.hpp"
#include "bigsos/lts_engine.hpp"
#include "bigsos/rho.hpp"
#include "bigsos/rules.hpp"
#include "bigsos/stream_engine.hpp"
#include "bigsos/verdict.hpp"

namespace bigsos {

// ---- extension diagram ----------------------------------------------------------------------

struct DiagramMismatch {
  Term term;
  std::string expected;  // from one rule application
  std::string actual;    // from the constructed prefix
};

struct DiagramReport {
  std::size_t checked = 0;
  std::vector<DiagramMismatch> mismatches;
  bool ok() const { return mismatches.empty(); }
};

using PrefixTable = std::map<Term, StreamPrefix>;
using TreeTable = std::map<Term, TreePrefix>;

namespace detail {

inline std::string render_succ(const SuccSet& s) {
  std::string out = "{";
  bool first = true;
  for (const auto& [l, t] : s) {
    out += (first ? "" : ", ") + l + " -> " + render(t);
    first = false;
  }
  return out + "}";
}

}  // namespace detail

// For every operation term in the table whose arguments also have long enough prefixes in the
// table, the first transition must be the one rule application on those prefixes.
inline DiagramReport check_extension_diagram(const Spec& spec, const PrefixTable& table, std::size_t n = 1) {
  DiagramReport rep;
  auto spec_n = normalize(spec);
  for (const auto& [t, p] : table) {
    if (t.is_var() || p.length() == 0 || n == 0) continue;
    std::vector<StreamPrefix> args;
    std::size_t need = max_lookahead(spec_n, t.name());
    bool have = true;
    for (const auto& a : t.args()) {
      auto it = table.find(a);
      if (it == table.end() || it->second.length() < need) {
        have = false;
        break;
      }
      args.push_back(it->second);
    }
    if (!have) continue;
    ++rep.checked;
    SuccSet expected;
    try {
      expected = one_step_rho(spec_n, t.name(), args);
    } catch (const Error& e) {
      rep.mismatches.push_back({t, e.what(), p.label(0) + " -> " + render(p.node(1))});
      continue;
    }
    SuccSet actual{{p.label(0), p.node(1)}};
    if (expected != actual) rep.mismatches.push_back({t, detail::render_succ(expected), detail::render_succ(actual)});
  }
  return rep;
}

inline DiagramReport check_extension_diagram(const Spec& spec, const TreeTable& table, std::size_t n = 1) {
  DiagramReport rep;
  auto spec_n = normalize(spec);
  for (const auto& [t, tr] : table) {
    if (t.is_var() || tr.budget == 0 || n == 0) continue;
    std::vector<TreePrefix> args;
    std::size_t need = max_lookahead(spec_n, t.name());
    bool have = true;
    for (const auto& a : t.args()) {
      auto it = table.find(a);
      if (it == table.end() || it->second.budget < need) {
        have = false;
        break;
      }
      args.push_back(it->second);
    }
    if (!have) continue;
    ++rep.checked;
    SuccSet expected = one_step_rho(spec_n, t.name(), args);
    SuccSet actual;
    for (const auto& e : tr.children) actual.emplace(e.label, e.subtree.node);
    if (expected != actual) rep.mismatches.push_back({t, detail::render_succ(expected), detail::render_succ(actual)});
  }
  return rep;
}

// Prefixes of length up to `len` for every term of a fact list, following successor links.
inline PrefixTable prefix_table(const std::vector<FactEntry>& facts, std::size_t len) {
  std::map<Term, std::pair<Letter, Term>> step;
  for (const auto& f : facts) step.emplace(f.term, std::make_pair(f.label, f.next));
  PrefixTable out;
  for (const auto& f : facts) {
    StreamPrefix p{{}, f.term};
    Term cur = f.term;
    for (std::size_t i = 0; i < len; ++i) {
      auto it = step.find(cur);
      if (it == step.end()) break;
      p.steps.push_back({cur, it->second.first});
      cur = it->second.second;
    }
    p.tail_node = cur;
    out.emplace(f.term, std::move(p));
  }
  return out;
}

// ---- axioms ----------------------------------------------------------------------------------

struct AxiomResult {
  std::string axiom;  // identity, head, compositional, decompositional, naturality
  std::string subject;
  bool ok = true;
  std::string detail;
};

struct AxiomReport {
  std::vector<AxiomResult> results;
  bool ok() const {
    return std::all_of(results.begin(), results.end(), [](const AxiomResult& r) { return r.ok; });
  }
  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(results.begin(), results.end(), [](const AxiomResult& r) { return !r.ok; }));
  }
};

inline nlohmann::json to_json(const AxiomReport& r) {
  nlohmann::json j{{"ok", r.ok()}, {"checked", r.results.size()}, {"failures", nlohmann::json::array()}};
  std::map<std::string, std::size_t> counts;
  for (const auto& x : r.results) {
    ++counts[x.axiom];
    if (!x.ok) j["failures"].push_back({{"axiom", x.axiom}, {"subject", x.subject}, {"detail", x.detail}});
  }
  j["per_axiom"] = counts;
  return j;
}

namespace detail {

inline void proper_subterms(const Term& t, std::set<Term>& out, bool root = true) {
  if (t.is_var()) return;
  if (!root) out.insert(t);
  for (const auto& a : t.args()) proper_subterms(a, out, false);
}

inline Term replace_subterm(const Term& t, const Term& s, const Term& with) {
  if (t == s) return with;
  if (t.is_var() || t.closed()) return t;
  std::vector<Term> args;
  for (const auto& a : t.args()) args.push_back(replace_subterm(a, s, with));
  return Term::app(t.name(), std::move(args));
}

inline Term rename_colors(const Term& t, const std::map<Symbol, Symbol>& names) {
  if (t.is_var()) {
    auto c = parse_color(t);
    if (!c) return t;
    auto it = names.find(c->first);
    return it == names.end() ? t : color(it->second, c->second);
  }
  if (t.closed()) return t;
  std::vector<Term> args;
  for (const auto& a : t.args()) args.push_back(rename_colors(a, names));
  return Term::app(t.name(), std::move(args));
}

inline std::string fresh_stream_name(const BaseStreamEnv& env, const std::string& base) {
  std::string name = base;
  for (std::size_t k = 1; env.find(name); ++k) name = base + std::to_string(k);
  return name;
}

inline std::string describe_difference(const StreamPrefix& want, const StreamPrefix& got) {
  std::size_t n = std::min(want.length(), got.length());
  for (std::size_t i = 0; i <= n; ++i) {
    if (!(want.node(i) == got.node(i))) {
      return "node " + std::to_string(i) + ": expected " + render(want.node(i)) + ", got " + render(got.node(i));
    }
    if (i < n && want.label(i) != got.label(i)) {
      return "label " + std::to_string(i) + ": expected " + want.label(i) + ", got " + got.label(i);
    }
  }
  if (want.length() != got.length()) return "lengths differ";
  return {};
}

}  // namespace detail

inline constexpr std::size_t kAxiomFuel = 200000;

// Terms are open terms whose variables name streams of env.
inline AxiomReport check_axioms(const Spec& spec, const BaseStreamEnv& env, const std::vector<Term>& terms, std::size_t n,
                                std::size_t fuel = kAxiomFuel) {
  AxiomReport rep;
  StreamEngine engine(spec);
  auto unfold_one = [&](const Term& seed, std::size_t len, const BaseStreamEnv& e) -> std::optional<StreamPrefix> {
    Verdict v = engine.unfold({seed}, len, fuel, &e);
    if (!v.consistent()) return std::nullopt;
    return v.streams.front().second;
  };
  auto add = [&](std::string axiom, std::string subject, std::string detail) {
    bool ok = detail.empty();
    rep.results.push_back({std::move(axiom), std::move(subject), ok, std::move(detail)});
  };

  for (const auto& [name, b] : env.streams) {
    if (b.finite() && b.prefix.size() < n) continue;
    auto got = unfold_one(color(name, 0), n, env);
    if (!got) {
      add("identity", name, "base stream did not unfold");
      continue;
    }
    add("identity", name, detail::describe_difference(base_prefix(env, name, n), *got));
  }

  for (const auto& t : terms) {
    std::string subject = render(t);
    Term seed = attach_bases(t, env);
    auto p = unfold_one(seed, n, env);
    if (!p) {
      add("head", subject, "term did not unfold to a consistent prefix");
      continue;
    }
    add("head", subject, p->node(0) == seed ? "" : "head is " + render(p->node(0)) + ", expected " + render(seed));

    // Compositionality: unfold t with a proper subterm s replaced by a stream variable bound to
    // the unfolding of s, then flatten.
    std::set<Term> subs;
    detail::proper_subterms(t, subs);
    for (const auto& s : subs) {
      std::string v = detail::fresh_stream_name(env, "sub");
      Term outer = detail::replace_subterm(t, s, Term::var(v));
      std::string what = subject + " via " + render(s);
      std::string problem = "inner unfolding did not suffice";
      for (std::size_t m = std::max<std::size_t>(n, 1); m <= 64 * std::max<std::size_t>(n, 1); m *= 2) {
        auto inner = unfold_one(attach_bases(s, env), m, env);
        if (!inner) {
          problem = "inner term did not unfold";
          break;
        }
        BaseStreamEnv env2 = env;
        env2.add_finite(v, inner->labels());
        auto outer_p = unfold_one(attach_bases(outer, env2), n, env2);
        if (!outer_p) continue;
        Substitution flat;
        for (std::size_t j = 0; j <= inner->length(); ++j) flat.emplace(color(v, j).name(), inner->node(j));
        StreamPrefix flattened = map_colors(*outer_p, [&](const Term& x) { return subst_partial(x, flat); });
        problem = detail::describe_difference(*p, flattened);
        break;
      }
      add("compositional", what, problem);
    }

    // Decompositionality: the term at position i unfolds to the suffix from i.
    for (std::size_t i = 1; i <= n; ++i) {
      auto q = unfold_one(p->node(i), n - i, env);
      std::string what = subject + " at " + std::to_string(i);
      if (!q) {
        add("decompositional", what, "suffix term did not unfold");
        continue;
      }
      add("decompositional", what, detail::describe_difference(prefix_tail(*p, i), *q));
    }

    // Naturality: renaming the base streams only renames colours.
    std::map<Symbol, Symbol> fwd, back;
    std::vector<Symbol> names;
    for (const auto& [name, b] : env.streams) names.push_back(name);
    for (std::size_t i = 0; i < names.size(); ++i) {
      Symbol to = names.size() > 1 ? names[(i + 1) % names.size()] : detail::fresh_stream_name(env, names[i] + "_r");
      fwd[names[i]] = to;
      back[to] = names[i];
    }
    BaseStreamEnv renamed;
    for (const auto& [name, b] : env.streams) renamed.streams[fwd[name]] = b;
    Substitution rn;
    for (const auto& [from, to] : fwd) rn.emplace(from, Term::var(to));
    auto r = unfold_one(attach_bases(subst_partial(t, rn), renamed), n, renamed);
    if (!r) {
      add("naturality", subject, "renamed term did not unfold");
    } else {
      StreamPrefix restored = map_colors(*r, [&](const Term& x) { return detail::rename_colors(x, back); });
      add("naturality", subject, detail::describe_difference(*p, restored));
    }
  }
  return rep;
}

// ---- forcedness ------------------------------------------------------------------------------

struct ForcednessReport {
  std::size_t checked = 0;
  std::vector<Term> not_forced;
  bool ok() const { return not_forced.empty(); }
};

// Removes each operation-term entry in turn and re-derives it from the remaining facts.
inline ForcednessReport check_forcedness(const Spec& spec, const std::vector<FactEntry>& facts, std::size_t fuel,
                                         const BaseStreamEnv* env = nullptr) {
  ForcednessReport rep;
  StreamEngine engine(spec);
  for (const auto& f : facts) {
    if (f.term.is_var()) continue;
    ++rep.checked;
    auto again = engine.rederive(facts, f.term, fuel, env);
    if (!again || again->label != f.label || !(again->next == f.next)) rep.not_forced.push_back(f.term);
  }
  return rep;
}

// Recomputes the successors of every node in the trees from fresh unfoldings of its arguments,
// never consulting the node's own entry.
inline ForcednessReport check_forcedness(const Spec& spec0, const std::vector<std::pair<Term, TreePrefix>>& trees,
                                         std::size_t fuel) {
  Spec spec = normalize(spec0);
  ForcednessReport rep;
  std::size_t need = std::max<std::size_t>(max_lookahead(spec), 1) + 1;
  std::map<Term, SuccSet> seen;
  std::function<void(const TreePrefix&)> walk = [&](const TreePrefix& t) {
    if (t.budget == 0 || t.node.is_var()) return;
    SuccSet actual;
    for (const auto& e : t.children) actual.emplace(e.label, e.subtree.node);
    if (seen.emplace(t.node, actual).second) {
      ++rep.checked;
      std::vector<TreePrefix> args;
      bool ok = true;
      for (const auto& a : t.node.args()) {
        Verdict v = unfold_lts(spec, {a}, need, fuel);
        if (!v.consistent()) {
          ok = false;
          break;
        }
        args.push_back(v.trees.front().second);
      }
      if (!ok || one_step_rho(spec, t.node.name(), args) != actual) rep.not_forced.push_back(t.node);
    }
    for (const auto& e : t.children) walk(e.subtree);
  };
  for (const auto& [seed, t] : trees) walk(t);
  return rep;
}

// ---- orchestration ---------------------------------------------------------------------------

struct ExtensionOptions {
  std::size_t size_bound = 3;
  std::size_t depth = 8;
  std::size_t fuel = 10000;
  std::size_t jobs = 1;
  std::size_t max_seeds = 256;
  std::size_t max_generic = 16;
  bool generic_seeds = true;
  bool run_diagram = true;
  bool run_axioms = true;
  // When set, only these seeds are unfolded.
  std::optional<std::vector<Term>> seeds;
};

struct SeedResult {
  Term seed;
  Verdict verdict;
};

struct ExtensionReport {
  Verdict verdict;
  std::vector<SeedResult> per_seed;
  DiagramReport diagram;
  AxiomReport axioms;
};

// Closed terms by increasing size, then lexicographically.
inline std::vector<Term> closed_terms(const Signature& sig, std::size_t max_size, std::size_t cap) {
  std::vector<std::vector<Term>> by_size(max_size + 1);
  std::vector<Term> out;
  for (std::size_t s = 1; s <= max_size; ++s) {
    for (const auto& op : sig.operations()) {
      if (op.arity == 0) {
        if (s == 1) by_size[1].push_back(Term::app(op.name));
        continue;
      }
      if (s < 1 + op.arity) continue;
      std::vector<Term> args;
      std::function<void(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t left) {
        if (by_size[s].size() > cap) return;
        if (i == op.arity) {
          if (left == 0) by_size[s].push_back(Term::app(op.name, args));
          return;
        }
        for (std::size_t k = 1; k <= left; ++k)
          for (const auto& a : by_size[k]) {
            args.push_back(a);
            go(i + 1, left - k);
            args.pop_back();
          }
      };
      go(0, s - 1);
    }
    std::sort(by_size[s].begin(), by_size[s].end());
    for (const auto& t : by_size[s]) {
      if (out.size() >= cap) return out;
      out.push_back(t);
    }
  }
  return out;
}

namespace detail {

struct GenericSeed {
  Term term;  // open term over stream names
  BaseStreamEnv env;
};

inline std::vector<GenericSeed> generic_seeds(const Spec& spec, std::size_t cap) {
  std::vector<BaseStream> patterns;
  for (const auto& a : spec.alphabet) patterns.push_back({{}, {a}});
  if (spec.alphabet.size() >= 2) patterns.push_back({{}, {spec.alphabet[0], spec.alphabet[1]}});
  std::vector<GenericSeed> out;
  for (const auto& op : spec.signature.operations()) {
    if (op.arity == 0) continue;
    std::vector<std::size_t> idx(op.arity, 0);
    for (std::size_t count = 0; count < cap; ++count) {
      GenericSeed g{Term::app("_"), {}};
      std::vector<Term> args;
      for (std::size_t i = 0; i < op.arity; ++i) {
        std::string name = "g" + std::to_string(i);
        g.env.streams[name] = patterns[idx[i]];
        args.push_back(Term::var(name));
      }
      g.term = Term::app(op.name, args);
      out.push_back(std::move(g));
      std::size_t p = 0;
      while (p < idx.size() && ++idx[p] == patterns.size()) idx[p++] = 0;
      if (p == idx.size()) break;
    }
  }
  return out;
}

inline void aggregate(Verdict& into, const Verdict& v) {
  if (severity(v.kind) > severity(into.kind)) {
    into.kind = v.kind;
    into.witness = v.witness;
  }
  into.fuel_spent += v.fuel_spent;
}

template <class F>
void parallel_for(std::size_t n, std::size_t jobs, F&& f) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::mutex mu;
  std::size_t next = 0;
  std::vector<std::thread> pool;
  for (std::size_t j = 0; j < std::min(jobs, n); ++j) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard<std::mutex> lock(mu);
          if (next == n) return;
          i = next++;
        }
        f(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

inline ExtensionReport check_extension(const Spec& spec0, const ExtensionOptions& opt) {
  Spec spec = normalize(spec0);
  ExtensionReport rep;
  rep.verdict.kind = Verdict::Kind::Unknown;
  rep.verdict.depth = opt.depth;
  std::vector<Term> seeds = opt.seeds ? *opt.seeds : closed_terms(spec.signature, opt.size_bound, opt.max_seeds);
  bool stream = spec.behavior == Behavior::Stream;
  std::vector<detail::GenericSeed> generic;
  if (stream && opt.generic_seeds && !opt.seeds) generic = detail::generic_seeds(spec, opt.max_generic);

  std::vector<Verdict> results(seeds.size() + generic.size());
  std::optional<StreamEngine> engine;
  if (stream) engine.emplace(spec);
  detail::parallel_for(results.size(), opt.jobs, [&](std::size_t i) {
    if (i < seeds.size()) {
      results[i] = stream ? engine->unfold({seeds[i]}, opt.depth, opt.fuel) : unfold_lts(spec, {seeds[i]}, opt.depth, opt.fuel);
    } else {
      const auto& g = generic[i - seeds.size()];
      results[i] = engine->unfold({attach_bases(g.term, g.env)}, opt.depth, opt.fuel, &g.env);
    }
  });

  bool all_consistent = true;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const Verdict& v = results[i];
    Term seed = i < seeds.size() ? seeds[i] : generic[i - seeds.size()].term;
    rep.per_seed.push_back({seed, v});
    if (v.consistent()) {
      for (const auto& s : v.streams) rep.verdict.streams.push_back(s);
      for (const auto& t : v.trees) rep.verdict.trees.push_back(t);
    } else {
      all_consistent = false;
    }
    detail::aggregate(rep.verdict, v);
  }
  if (rep.verdict.consistent() && !all_consistent) {
    rep.verdict.kind = Verdict::Kind::Unknown;
    rep.verdict.note = "fuel exhausted on some seeds";
  }
  if (!rep.verdict.consistent()) return rep;

  if (opt.run_diagram) {
    if (stream) {
      std::size_t len = max_lookahead(spec) + 1;
      PrefixTable table;
      for (const auto& v : results) {
        auto part = prefix_table(v.facts, len);
        table.insert(part.begin(), part.end());
      }
      rep.diagram = check_extension_diagram(spec, table);
    } else {
      std::size_t need = std::max<std::size_t>(max_lookahead(spec), 1);
      TreeTable table;
      std::set<Term> terms;
      std::function<void(const TreePrefix&, std::size_t)> walk = [&](const TreePrefix& t, std::size_t d) {
        if (d == 0) return;
        terms.insert(t.node);
        for (const auto& a : t.node.args()) terms.insert(a);
        for (const auto& e : t.children) walk(e.subtree, d - 1);
      };
      for (const auto& [s, t] : rep.verdict.trees) walk(t, opt.depth);
      for (const auto& t : terms) {
        Verdict v = unfold_lts(spec, {t}, need, opt.fuel);
        if (v.consistent()) table.emplace(t, v.trees.front().second);
      }
      rep.diagram = check_extension_diagram(spec, table);
    }
    if (!rep.diagram.ok()) {
      rep.verdict.kind = Verdict::Kind::Unknown;
      rep.verdict.note = "extension diagram mismatches";
    }
  }
  if (opt.run_axioms && stream) {
    for (const auto& g : generic) {
      auto part = check_axioms(spec, g.env, {g.term}, opt.depth);
      rep.axioms.results.insert(rep.axioms.results.end(), part.results.begin(), part.results.end());
    }
    if (!rep.axioms.ok()) {
      rep.verdict.kind = Verdict::Kind::Unknown;
      rep.verdict.note = "axiom failures";
    }
  }
  return rep;
}

inline Verdict check_extension(const Spec& spec, std::size_t size_bound, std::size_t n, std::size_t fuel) {
  ExtensionOptions opt;
  opt.size_bound = size_bound;
  opt.depth = n;
  opt.fuel = fuel;
  return check_extension(spec, opt).verdict;
}

}  // namespace bigsos

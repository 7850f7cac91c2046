#pragma once

// Command-line front end. `run` is the whole program; main only forwards to it.
//
// Exit codes: 0 success or ConsistentPrefix, 1 NoExtension or machine halted, 2 Ambiguous,
// 3 Unknown or machine still running, 64 usage, 65 malformed input, 66 unreadable input,
// 70 internal disagreement (demo mismatch, axiom failure).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bigsos/base_streams.hpp"
#include "bigsos/checks.hpp"
#include "bigsos/dsl.hpp"
#include "bigsos/format.hpp"
#include "bigsos/lts_engine.hpp"
#include "bigsos/qm.hpp"
#include "bigsos/reduction.hpp"
#include "bigsos/stream_engine.hpp"
#include "bigsos/verdict.hpp"

namespace bigsos::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNoExtension = 1;
inline constexpr int kExitAmbiguous = 2;
inline constexpr int kExitUnknown = 3;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitData = 65;
inline constexpr int kExitNoInput = 66;
inline constexpr int kExitInternal = 70;

inline int exit_code(Verdict::Kind k) {
  switch (k) {
    case Verdict::Kind::ConsistentPrefix: return kExitOk;
    case Verdict::Kind::NoExtension: return kExitNoExtension;
    case Verdict::Kind::Ambiguous: return kExitAmbiguous;
    default: return kExitUnknown;
  }
}

// Relative paths that do not exist are retried under $BIGSOS_CORPUS.
inline std::string resolve_input(const std::string& path) {
  namespace fs = std::filesystem;
  if (fs::exists(path)) return path;
  if (const char* corpus = std::getenv("BIGSOS_CORPUS"); corpus && fs::path(path).is_relative()) {
    fs::path alt = fs::path(corpus) / path;
    if (fs::exists(alt)) return alt.string();
  }
  return path;
}

inline bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// .cqm files are compiled to the three-clause form.
inline QueueMachine load_any_machine(const std::string& path) {
  if (has_suffix(path, ".cqm")) return classical_to_qm(load_classical(path));
  return load_qm(path);
}

inline void print_witness(std::ostream& out, const Witness& w, const std::string& indent = "") {
  out << indent << "witness: " << to_string(w.kind) << " at position " << w.position << " for " << render(w.term) << "\n";
  if (w.lhs && w.rhs) out << indent << "  equation: " << render_equation(w) << "\n";
  if (!w.message.empty()) out << indent << "  " << w.message << "\n";
  for (const auto& [l, t] : w.forced_when_empty) out << indent << "  forced when empty: " << l << " -> " << render(t) << "\n";
  std::size_t shown = 0;
  for (auto it = w.trace.rbegin(); it != w.trace.rend() && shown < 4; ++it, ++shown) {
    out << indent << "  by " << it->rule << ": " << render(it->head) << " -" << it->label << "-> " << render(it->target) << "\n";
  }
  for (const auto& [choice, sub] : w.cases) {
    out << indent << "  case " << choice << ":\n";
    print_witness(out, sub, indent + "    ");
  }
}

inline void print_tree(std::ostream& out, const TreePrefix& t, const std::string& indent = "") {
  out << indent << render(t.node) << "\n";
  for (const auto& e : t.children) {
    out << indent << "  -" << e.label << "->\n";
    print_tree(out, e.subtree, indent + "    ");
  }
}

inline void print_verdict(std::ostream& out, const Verdict& v) {
  out << "verdict: " << to_string(v.kind) << " (depth " << v.depth << ", fuel " << v.fuel_spent << ")\n";
  for (const auto& [seed, p] : v.streams) out << render(p) << "\n";
  for (const auto& [seed, t] : v.trees) print_tree(out, t);
  if (v.witness) print_witness(out, *v.witness);
  if (!v.note.empty()) out << "note: " << v.note << "\n";
}

struct Options {
  std::string input;
  std::size_t fuel = 10000;
  std::size_t depth = 8;
  std::size_t seed_size = 3;
  std::size_t jobs = 1;
  bool json = false;
  std::string dot;
  std::string output;
  std::string target = "stream";
  std::vector<std::string> terms;
  std::vector<std::string> bases;
};

inline void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw Error("cannot write '" + path + "'");
  f << text;
}

inline BaseStreamEnv parse_bases(const std::vector<std::string>& specs) {
  BaseStreamEnv env;
  for (const auto& s : specs) {
    auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ParseError("base stream must look like NAME=LETTERS,(LOOP)");
    env.streams[s.substr(0, eq)] = parse_base_stream(std::string_view(s).substr(eq + 1));
  }
  return env;
}

inline int cmd_fmt(const Options& o, std::ostream& out) {
  Spec spec = load_spec(resolve_input(o.input));
  auto rep = classify_spec(spec);
  auto fn = check_functionality(spec);
  if (o.json) {
    out << to_json(spec, rep, &fn).dump(2) << "\n";
    return kExitOk;
  }
  out << "verdict: " << to_string(rep.verdict) << "\n";
  for (std::size_t i = 0; i < rep.per_rule.size(); ++i) {
    auto f = to_strings(rep.per_rule[i]);
    out << "  " << spec.rule_id(i) << ": {";
    for (std::size_t k = 0; k < f.size(); ++k) out << (k ? ", " : "") << f[k];
    out << "}\n";
  }
  for (const auto& [op, f] : rep.per_op) {
    auto s = to_strings(f);
    out << "  op " << op << ":";
    for (const auto& x : s) out << " " << x;
    if (s.empty()) out << " none";
    out << "\n";
  }
  for (const auto& d : rep.diagnostics) out << to_string(d.severity) << ": " << d.message << "\n";
  for (const auto& d : fn.diagnostics) out << to_string(d.severity) << ": " << d.message << "\n";
  out << "functional: " << (fn.ok() ? "yes" : "no") << "\n";
  return kExitOk;
}

inline int cmd_qm_run(const Options& o, std::ostream& out) {
  QueueMachine m = load_any_machine(resolve_input(o.input));
  if (auto errs = qm_validate(m); !errs.empty()) throw SpecError("invalid machine: " + errs.front());
  RunResult r = qm_run(m, o.fuel, true);
  std::string outcome = r.halted() ? "HaltedAt(" + std::to_string(r.steps) + ")" : "StillRunning";
  if (o.json) {
    nlohmann::json j{{"outcome", r.halted() ? "HaltedAt" : "StillRunning"}, {"steps", r.steps}};
    j["trace"] = nlohmann::json::array();
    for (const auto& c : r.trace) j["trace"].push_back(render(c));
    out << j.dump(2) << "\n";
  } else {
    for (const auto& c : r.trace) out << render(c) << "\n";
    out << outcome << "\n";
  }
  return r.halted() ? kExitNoExtension : kExitUnknown;
}

inline int cmd_qm_compile(const Options& o, std::ostream& out) {
  QueueMachine m = load_any_machine(resolve_input(o.input));
  if (o.target != "stream" && o.target != "lts") throw ParseError("--target must be stream or lts");
  auto red = o.target == "lts" ? qm_to_lts_spec(m) : qm_to_stream_spec(m);
  write_output(o.output, render(red.spec), out);
  return kExitOk;
}

inline int cmd_qm_from_classical(const Options& o, std::ostream& out) {
  ClassicalQM cm = load_classical(resolve_input(o.input));
  QueueMachine m = classical_to_qm(cm);
  write_output(o.output, to_json(m).dump(2) + "\n", out);
  return kExitOk;
}

inline int cmd_unfold(const Options& o, std::ostream& out) {
  Spec spec = load_spec(resolve_input(o.input));
  BaseStreamEnv env = parse_bases(o.bases);
  std::vector<Term> seeds;
  for (const auto& t : o.terms) seeds.push_back(parse_term(t, spec.signature));
  if (seeds.empty()) throw ParseError("unfold needs at least one --term");
  Verdict v;
  if (spec.behavior == Behavior::Stream) {
    for (auto& s : seeds) s = attach_bases(s, env);
    v = unfold_stream(spec, seeds, o.depth, o.fuel, &env);
  } else {
    v = unfold_lts(spec, seeds, o.depth, o.fuel);
    if (!o.dot.empty()) {
      std::string dot;
      for (const auto& [seed, t] : v.trees) dot += to_dot(t, render(seed));
      write_output(o.dot, dot, out);
      if (o.dot == "-") return exit_code(v.kind);
    }
  }
  if (o.json) out << to_json(v).dump(2) << "\n";
  else print_verdict(out, v);
  return exit_code(v.kind);
}

inline int cmd_check_extension(const Options& o, std::ostream& out) {
  Spec spec = load_spec(resolve_input(o.input));
  ExtensionOptions opt;
  opt.size_bound = o.seed_size;
  opt.depth = o.depth;
  opt.fuel = o.fuel;
  opt.jobs = o.jobs;
  auto rep = check_extension(spec, opt);
  if (o.json) {
    nlohmann::json j = to_json(rep.verdict);
    j["axioms"] = to_json(rep.axioms);
    j["diagram"] = {{"checked", rep.diagram.checked}, {"mismatches", rep.diagram.mismatches.size()}};
    j["seeds"] = nlohmann::json::array();
    for (const auto& s : rep.per_seed) j["seeds"].push_back({{"seed", render(s.seed)}, {"verdict", to_string(s.verdict.kind)}});
    out << j.dump(2) << "\n";
  } else {
    out << "verdict: " << to_string(rep.verdict.kind) << " (depth " << o.depth << ", " << rep.per_seed.size() << " seeds)\n";
    if (rep.verdict.witness) print_witness(out, *rep.verdict.witness);
    out << "diagram: " << rep.diagram.checked << " checked, " << rep.diagram.mismatches.size() << " mismatches\n";
    for (const auto& m : rep.diagram.mismatches) out << "  " << render(m.term) << ": rule gives " << m.expected << ", prefix has " << m.actual << "\n";
    out << "axioms: " << rep.axioms.results.size() << " checked, " << rep.axioms.failures() << " failed\n";
    if (!rep.verdict.note.empty()) out << "note: " << rep.verdict.note << "\n";
  }
  return exit_code(rep.verdict.kind);
}

inline int cmd_axioms(const Options& o, std::ostream& out) {
  Spec spec = load_spec(resolve_input(o.input));
  BaseStreamEnv env = parse_bases(o.bases);
  std::vector<Term> terms;
  for (const auto& t : o.terms) terms.push_back(parse_term(t, spec.signature));
  if (terms.empty()) throw ParseError("axioms needs at least one --term");
  auto rep = check_axioms(spec, env, terms, o.depth);
  if (o.json) {
    out << to_json(rep).dump(2) << "\n";
  } else {
    std::map<std::string, std::pair<std::size_t, std::size_t>> per;
    for (const auto& r : rep.results) {
      auto& [ok, all] = per[r.axiom];
      ++all;
      if (r.ok) ++ok;
    }
    for (const auto& [ax, c] : per) out << ax << ": " << c.first << "/" << c.second << " passed\n";
    for (const auto& r : rep.results)
      if (!r.ok) out << "FAILED " << r.axiom << " " << r.subject << ": " << r.detail << "\n";
  }
  return rep.ok() ? kExitOk : kExitInternal;
}

struct DemoResult {
  RunResult run;
  Verdict verdict;
  bool agree = false;
};

// The machine is simulated for depth - 2 steps: it halts within that horizon exactly when the
// depth-bounded check of C has to refute an extension.
inline DemoResult demo_halting(const QueueMachine& m, bool lts, std::size_t depth, std::size_t fuel) {
  DemoResult d;
  std::size_t horizon = depth >= 2 ? depth - 2 : 0;
  d.run = qm_run(m, horizon, false);
  auto red = lts ? qm_to_lts_spec(m) : qm_to_stream_spec(m);
  std::vector<Term> seeds{Term::app(red.constant)};
  d.verdict = lts ? unfold_lts(red.spec, seeds, depth, fuel) : unfold_stream(red.spec, seeds, depth, fuel);
  d.agree = d.run.halted() ? d.verdict.no_extension() : d.verdict.consistent();
  return d;
}

inline int cmd_demo_halting(const Options& o, std::ostream& out) {
  QueueMachine m = load_any_machine(resolve_input(o.input));
  std::vector<bool> targets;
  if (o.target == "stream" || o.target == "both") targets.push_back(false);
  if (o.target == "lts" || o.target == "both") targets.push_back(true);
  if (targets.empty()) throw ParseError("--target must be stream, lts or both");
  bool all_agree = true;
  nlohmann::json j = nlohmann::json::array();
  for (bool lts : targets) {
    auto d = demo_halting(m, lts, o.depth, o.fuel);
    all_agree = all_agree && d.agree;
    std::string machine = d.run.halted() ? "HaltedAt(" + std::to_string(d.run.steps) + ")" : "StillRunning";
    if (o.json) {
      nlohmann::json e{{"target", lts ? "lts" : "stream"}, {"machine", machine}, {"spec", to_string(d.verdict.kind)}, {"agree", d.agree}};
      if (d.verdict.witness) e["witness"] = to_json(*d.verdict.witness);
      j.push_back(e);
    } else {
      out << (lts ? "[lts] " : "[stream] ") << "machine: " << machine << "; spec: " << to_string(d.verdict.kind)
          << "; verdicts " << (d.agree ? "agree" : "DISAGREE") << "\n";
      if (d.verdict.witness) print_witness(out, *d.verdict.witness, "  ");
    }
  }
  if (o.json) out << j.dump(2) << "\n";
  return all_agree ? kExitOk : kExitInternal;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Rule-format analysis and bounded extension checking for SOS specifications", "bigsos"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* c, bool engine) {
    c->add_flag("--json", o.json, "Structured output");
    c->add_option("--fuel", o.fuel, "Propagation-step budget")->capture_default_str();
    if (engine) c->add_option("--depth", o.depth, "Prefix length / tree depth")->capture_default_str();
  };

  auto* fmt = app.add_subcommand("fmt", "Classify a rule specification");
  fmt->add_option("spec", o.input, "Specification (.sos)")->required();
  fmt->add_flag("--json", o.json, "Structured output");

  auto* qm = app.add_subcommand("qm", "Queue machines");
  qm->require_subcommand(1);
  auto* qm_run_cmd = qm->add_subcommand("run", "Simulate a machine from (q1, $)");
  qm_run_cmd->add_option("machine", o.input, "Machine (.qm or .cqm)")->required();
  common(qm_run_cmd, false);
  auto* qm_compile = qm->add_subcommand("compile", "Compile a machine to a rule specification");
  qm_compile->add_option("machine", o.input, "Machine (.qm or .cqm)")->required();
  qm_compile->add_option("--target", o.target, "stream or lts")->capture_default_str();
  qm_compile->add_option("-o,--output", o.output, "Output path");
  auto* qm_classical = qm->add_subcommand("from-classical", "Compile a classical machine to the three-clause form");
  qm_classical->add_option("machine", o.input, "Classical machine (.cqm)")->required();
  qm_classical->add_option("-o,--output", o.output, "Output path");

  auto* unfold = app.add_subcommand("unfold", "Unfold terms to a bounded prefix");
  unfold->add_option("spec", o.input, "Specification (.sos)")->required();
  unfold->add_option("--term", o.terms, "Term to unfold")->required();
  unfold->add_option("--base", o.bases, "Base stream NAME=LETTERS,(LOOP)");
  unfold->add_option("--dot", o.dot, "Write LTS trees as DOT ('-' for stdout)");
  common(unfold, true);

  auto* check = app.add_subcommand("check-extension", "Bounded extension check over seed terms");
  check->add_option("spec", o.input, "Specification (.sos)")->required();
  check->add_option("--seed-size", o.seed_size, "Largest closed seed term")->capture_default_str();
  check->add_option("--jobs", o.jobs, "Parallel sessions")->capture_default_str();
  common(check, true);

  auto* axioms = app.add_subcommand("axioms", "Check distributive-law axioms over base streams");
  axioms->add_option("spec", o.input, "Stream specification (.sos)")->required();
  axioms->add_option("--term", o.terms, "Open term over the base streams")->required();
  axioms->add_option("--base", o.bases, "Base stream NAME=LETTERS,(LOOP)")->required();
  common(axioms, true);

  auto* demo = app.add_subcommand("demo", "End-to-end demonstrations");
  demo->require_subcommand(1);
  auto* halting = demo->add_subcommand("halting", "Compare machine halting with the extension check of C");
  halting->add_option("machine", o.input, "Machine (.qm or .cqm)")->required();
  halting->add_option("--target", o.target, "stream, lts or both")->capture_default_str();
  common(halting, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*fmt) return cmd_fmt(o, out);
    if (*qm_run_cmd) return cmd_qm_run(o, out);
    if (*qm_compile) return cmd_qm_compile(o, out);
    if (*qm_classical) return cmd_qm_from_classical(o, out);
    if (*unfold) return cmd_unfold(o, out);
    if (*check) return cmd_check_extension(o, out);
    if (*axioms) return cmd_axioms(o, out);
    if (*halting) return cmd_demo_halting(o, out);
  } catch (const ParseError& e) {
    err << "bigsos: " << e.what() << "\n";
    return kExitData;
  } catch (const SpecError& e) {
    err << "bigsos: " << e.what() << "\n";
    return kExitData;
  } catch (const PreconditionError& e) {
    err << "bigsos: " << e.what() << "\n";
    return kExitData;
  } catch (const Error& e) {
    err << "bigsos: " << e.what() << "\n";
    return kExitNoInput;
  }
  return kExitUsage;
}

}  // namespace bigsos::cli

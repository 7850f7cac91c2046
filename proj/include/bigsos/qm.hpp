#pragma once

// Queue machines whose every step removes zero, one or two letters (priority delta0 > delta1 >
// delta2) and appends exactly one, the classical variant (remove one, append a word), their
// simulators, and a compiler from the classical variant to the three-clause one.

#include <cstddef>
#include <deque>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "bigsos/behavior.hpp"
#include "bigsos/errors.hpp"

namespace bigsos {

using State = std::string;

struct Move {
  State state;
  Letter letter;
  bool operator==(const Move&) const = default;
};

struct QueueMachine {
  std::vector<State> states;
  std::vector<Letter> alphabet;
  Letter dollar = "$";
  State start;
  std::map<State, Move> delta0;
  std::map<std::pair<State, Letter>, Move> delta1;
  std::map<std::tuple<State, Letter, Letter>, Move> delta2;

  const Move* d0(const State& q) const {
    auto it = delta0.find(q);
    return it == delta0.end() ? nullptr : &it->second;
  }
  const Move* d1(const State& q, const Letter& a) const {
    auto it = delta1.find({q, a});
    return it == delta1.end() ? nullptr : &it->second;
  }
  const Move* d2(const State& q, const Letter& a, const Letter& b) const {
    auto it = delta2.find({q, a, b});
    return it == delta2.end() ? nullptr : &it->second;
  }

  bool operator==(const QueueMachine&) const = default;
};

struct Configuration {
  State state;
  std::deque<Letter> queue;  // front at index 0

  bool operator==(const Configuration&) const = default;
};

inline Configuration initial_configuration(const QueueMachine& m) { return {m.start, {m.dollar}}; }

inline std::string render_word(const std::deque<Letter>& w) {
  bool spaced = false;
  for (const auto& l : w) {
    std::size_t cps = 0;
    for (unsigned char c : l)
      if ((c & 0xC0) != 0x80) ++cps;
    spaced = spaced || cps != 1;
  }
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) out += (spaced && i ? " " : "") + w[i];
  return out;
}

inline std::string render(const Configuration& c) { return c.state + " | " + render_word(c.queue); }

// Empty result means the exactly-one-clause condition holds at every (q, a, b).
inline std::vector<std::string> qm_validate(const QueueMachine& m) {
  std::vector<std::string> out;
  std::set<State> qs(m.states.begin(), m.states.end());
  std::set<Letter> as(m.alphabet.begin(), m.alphabet.end());
  if (qs.size() != m.states.size()) out.push_back("duplicate state");
  if (as.size() != m.alphabet.size()) out.push_back("duplicate letter");
  if (!qs.count(m.start)) out.push_back("start state '" + m.start + "' is not a state");
  if (!as.count(m.dollar)) out.push_back("dollar '" + m.dollar + "' is not in the alphabet");
  auto check_move = [&](const Move& mv, const std::string& where) {
    if (!qs.count(mv.state)) out.push_back(where + ": unknown target state '" + mv.state + "'");
    if (!as.count(mv.letter)) out.push_back(where + ": unknown letter '" + mv.letter + "'");
  };
  for (const auto& [q, mv] : m.delta0) {
    if (!qs.count(q)) out.push_back("delta0: unknown state '" + q + "'");
    check_move(mv, "delta0(" + q + ")");
  }
  for (const auto& [k, mv] : m.delta1) {
    if (!qs.count(k.first) || !as.count(k.second)) out.push_back("delta1: unknown key (" + k.first + "," + k.second + ")");
    check_move(mv, "delta1(" + k.first + "," + k.second + ")");
  }
  for (const auto& [k, mv] : m.delta2) {
    const auto& [q, a, b] = k;
    if (!qs.count(q) || !as.count(a) || !as.count(b)) out.push_back("delta2: unknown key (" + q + "," + a + "," + b + ")");
    check_move(mv, "delta2(" + q + "," + a + "," + b + ")");
  }
  for (const auto& q : m.states)
    for (const auto& a : m.alphabet)
      for (const auto& b : m.alphabet) {
        int defined = (m.d0(q) ? 1 : 0) + (m.d1(q, a) ? 1 : 0) + (m.d2(q, a, b) ? 1 : 0);
        if (defined != 1) {
          out.push_back("(" + q + "," + a + "," + b + "): " + std::to_string(defined) + " clauses defined");
        }
      }
  return out;
}

struct StepResult {
  bool terminated = false;
  int clause = -1;  // 0, 1 or 2 when a step was taken
  Configuration next;
};

inline StepResult qm_step(const QueueMachine& m, const Configuration& c) {
  if (c.queue.empty()) throw PreconditionError("queue machine step on an empty queue");
  StepResult r;
  r.next = c;
  if (const Move* mv = m.d0(c.state)) {
    r.clause = 0;
    r.next.state = mv->state;
    r.next.queue.push_back(mv->letter);
    return r;
  }
  const Letter& a = c.queue[0];
  if (const Move* mv = m.d1(c.state, a)) {
    r.clause = 1;
    r.next.state = mv->state;
    r.next.queue.pop_front();
    r.next.queue.push_back(mv->letter);
    return r;
  }
  if (c.queue.size() == 1) {
    r.terminated = true;
    return r;
  }
  const Letter& b = c.queue[1];
  if (const Move* mv = m.d2(c.state, a, b)) {
    r.clause = 2;
    r.next.state = mv->state;
    r.next.queue.pop_front();
    r.next.queue.pop_front();
    r.next.queue.push_back(mv->letter);
    return r;
  }
  throw SpecError("no clause applies at " + render(c) + " (machine fails validation)");
}

struct RunResult {
  enum class Outcome { Halted, StillRunning };
  Outcome outcome = Outcome::StillRunning;
  std::size_t steps = 0;            // steps taken; for Halted, the k of HaltedAt(k)
  std::vector<Configuration> trace;  // c0 and every successor, when recorded
  std::vector<int> clauses;          // clause used by step i, when recorded
  Configuration final;

  bool halted() const { return outcome == Outcome::Halted; }
};

inline RunResult qm_run(const QueueMachine& m, const Configuration& c0, std::size_t fuel, bool record_trace = true) {
  RunResult r;
  r.final = c0;
  if (record_trace) r.trace.push_back(c0);
  for (;;) {
    StepResult s = qm_step(m, r.final);
    if (s.terminated) {
      r.outcome = RunResult::Outcome::Halted;
      return r;
    }
    if (r.steps == fuel) return r;
    r.final = std::move(s.next);
    ++r.steps;
    if (record_trace) {
      r.trace.push_back(r.final);
      r.clauses.push_back(s.clause);
    }
  }
}

inline RunResult qm_run(const QueueMachine& m, std::size_t fuel, bool record_trace = true) {
  return qm_run(m, initial_configuration(m), fuel, record_trace);
}

// Classical queue machine: each step removes the front letter and appends a (possibly empty)
// word; it halts exactly when the queue becomes empty.
struct ClassicalQM {
  std::vector<State> states;
  std::vector<Letter> alphabet;
  Letter dollar = "$";
  State start;
  std::map<std::pair<State, Letter>, std::pair<State, std::vector<Letter>>> delta;

  bool operator==(const ClassicalQM&) const = default;
};

inline std::vector<std::string> classical_validate(const ClassicalQM& m) {
  std::vector<std::string> out;
  std::set<State> qs(m.states.begin(), m.states.end());
  std::set<Letter> as(m.alphabet.begin(), m.alphabet.end());
  if (!qs.count(m.start)) out.push_back("start state '" + m.start + "' is not a state");
  if (!as.count(m.dollar)) out.push_back("dollar '" + m.dollar + "' is not in the alphabet");
  for (const auto& q : m.states)
    for (const auto& a : m.alphabet) {
      auto it = m.delta.find({q, a});
      if (it == m.delta.end()) {
        out.push_back("delta(" + q + "," + a + ") undefined");
        continue;
      }
      if (!qs.count(it->second.first)) out.push_back("delta(" + q + "," + a + "): unknown state");
      for (const auto& l : it->second.second)
        if (!as.count(l)) out.push_back("delta(" + q + "," + a + "): unknown letter '" + l + "'");
    }
  return out;
}

struct ClassicalRun {
  bool halted = false;
  std::size_t steps = 0;
  State state;
  std::deque<Letter> queue;
};

inline ClassicalRun classical_run(const ClassicalQM& m, std::size_t fuel) {
  ClassicalRun r{false, 0, m.start, {m.dollar}};
  while (!r.queue.empty()) {
    if (r.steps == fuel) return r;
    auto it = m.delta.find({r.state, r.queue.front()});
    if (it == m.delta.end()) throw SpecError("classical machine undefined at (" + r.state + "," + r.queue.front() + ")");
    r.queue.pop_front();
    r.state = it->second.first;
    for (const auto& l : it->second.second) r.queue.push_back(l);
    ++r.steps;
  }
  r.halted = true;
  return r;
}

namespace detail {

inline std::string fresh_name(std::string base, const std::set<std::string>& taken) {
  while (taken.count(base)) base += "'";
  return base;
}

}  // namespace detail

// Builds a three-clause machine over A + {blank} that terminates from its initial configuration
// iff the classical machine halts. A classical step delta(q,a) = (q', w) becomes delta1(q,a)
// emitting w[0] followed by a chain of delta0 appender states for the rest of w; an empty w
// appends a blank. A blank at the front is consumed together with the next letter by delta2,
// which then performs that letter's classical step; two blanks shrink to one. A lone blank has
// no applicable clause, so the machine terminates exactly when the classical queue is empty.
inline QueueMachine classical_to_qm(const ClassicalQM& cm) {
  if (auto errs = classical_validate(cm); !errs.empty()) throw SpecError("invalid classical machine: " + errs.front());
  QueueMachine m;
  m.states = cm.states;
  m.alphabet = cm.alphabet;
  m.dollar = cm.dollar;
  m.start = cm.start;
  std::set<std::string> taken_letters(cm.alphabet.begin(), cm.alphabet.end());
  const Letter blank = detail::fresh_name("\xE2\x96\xA1", taken_letters);  // U+25A1
  m.alphabet.push_back(blank);

  std::set<std::string> taken_states(cm.states.begin(), cm.states.end());
  std::map<std::pair<State, std::vector<Letter>>, State> aux_names;
  // State that appends word[from..] and then continues in target.
  auto appender = [&](const State& target, const std::vector<Letter>& word, std::size_t from) -> State {
    State next = target;
    for (std::size_t i = word.size(); i-- > from;) {
      std::vector<Letter> suffix(word.begin() + static_cast<std::ptrdiff_t>(i), word.end());
      auto key = std::make_pair(target, suffix);
      auto it = aux_names.find(key);
      if (it == aux_names.end()) {
        std::string base = target + "~";
        for (const auto& l : suffix) base += l;
        State name = detail::fresh_name(base, taken_states);
        taken_states.insert(name);
        m.states.push_back(name);
        m.delta0[name] = {next, word[i]};
        it = aux_names.emplace(key, name).first;
      }
      next = it->second;
    }
    return next;
  };
  auto classical_move = [&](const State& q, const Letter& a) -> Move {
    const auto& [target, word] = cm.delta.at({q, a});
    if (word.empty()) return {target, blank};
    return {appender(target, word, 1), word[0]};
  };
  for (const auto& q : cm.states) {
    for (const auto& a : cm.alphabet) {
      m.delta1[{q, a}] = classical_move(q, a);
      m.delta2[{q, blank, a}] = classical_move(q, a);
    }
    m.delta2[{q, blank, blank}] = {q, blank};
  }
  return m;
}

// ---- JSON machine files -------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_key(const std::string& key, std::size_t expected) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= key.size(); ++i) {
    if (i == key.size() || key[i] == ',') {
      parts.push_back(key.substr(start, i - start));
      start = i + 1;
    }
  }
  if (parts.size() != expected) throw ParseError("transition key '" + key + "' needs " + std::to_string(expected) + " components");
  return parts;
}

inline Move read_move(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw ParseError("transition value must be [state, letter]");
  return {j[0].get<std::string>(), j[1].get<std::string>()};
}

}  // namespace detail

inline QueueMachine qm_from_json(const nlohmann::json& j) {
  try {
    QueueMachine m;
    m.states = j.at("states").get<std::vector<State>>();
    m.alphabet = j.at("alphabet").get<std::vector<Letter>>();
    m.dollar = j.value("dollar", std::string("$"));
    m.start = j.at("start").get<State>();
    if (j.contains("delta0"))
      for (const auto& [k, v] : j["delta0"].items()) m.delta0[k] = detail::read_move(v);
    if (j.contains("delta1"))
      for (const auto& [k, v] : j["delta1"].items()) {
        auto p = detail::split_key(k, 2);
        m.delta1[{p[0], p[1]}] = detail::read_move(v);
      }
    if (j.contains("delta2"))
      for (const auto& [k, v] : j["delta2"].items()) {
        auto p = detail::split_key(k, 3);
        m.delta2[{p[0], p[1], p[2]}] = detail::read_move(v);
      }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("machine file: ") + e.what());
  }
}

inline nlohmann::json to_json(const QueueMachine& m) {
  nlohmann::json j;
  j["states"] = m.states;
  j["alphabet"] = m.alphabet;
  j["dollar"] = m.dollar;
  j["start"] = m.start;
  j["delta0"] = nlohmann::json::object();
  j["delta1"] = nlohmann::json::object();
  j["delta2"] = nlohmann::json::object();
  for (const auto& [q, mv] : m.delta0) j["delta0"][q] = {mv.state, mv.letter};
  for (const auto& [k, mv] : m.delta1) j["delta1"][k.first + "," + k.second] = {mv.state, mv.letter};
  for (const auto& [k, mv] : m.delta2) {
    const auto& [q, a, b] = k;
    j["delta2"][q + "," + a + "," + b] = {mv.state, mv.letter};
  }
  return j;
}

inline ClassicalQM classical_from_json(const nlohmann::json& j) {
  try {
    ClassicalQM m;
    m.states = j.at("states").get<std::vector<State>>();
    m.alphabet = j.at("alphabet").get<std::vector<Letter>>();
    m.dollar = j.value("dollar", std::string("$"));
    m.start = j.at("start").get<State>();
    for (const auto& [k, v] : j.at("delta").items()) {
      auto p = detail::split_key(k, 2);
      if (!v.is_array() || v.size() != 2) throw ParseError("classical transition value must be [state, word]");
      std::vector<Letter> word;
      if (v[1].is_array()) {
        word = v[1].get<std::vector<Letter>>();
      } else {
        // A string word is split into letters by greedy longest match against the alphabet.
        std::string s = v[1].get<std::string>();
        std::size_t pos = 0;
        while (pos < s.size()) {
          std::size_t best = 0;
          for (const auto& l : m.alphabet)
            if (l.size() > best && s.compare(pos, l.size(), l) == 0) best = l.size();
          if (best == 0) throw ParseError("word '" + s + "' is not over the alphabet");
          word.push_back(s.substr(pos, best));
          pos += best;
        }
      }
      m.delta[{p[0], p[1]}] = {v[0].get<std::string>(), word};
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("classical machine file: ") + e.what());
  }
}

inline nlohmann::json to_json(const ClassicalQM& m) {
  nlohmann::json j;
  j["states"] = m.states;
  j["alphabet"] = m.alphabet;
  j["dollar"] = m.dollar;
  j["start"] = m.start;
  j["delta"] = nlohmann::json::object();
  for (const auto& [k, v] : m.delta) j["delta"][k.first + "," + k.second] = {v.first, v.second};
  return j;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline QueueMachine load_qm(const std::string& path) { return qm_from_json(read_json_file(path)); }
inline ClassicalQM load_classical(const std::string& path) { return classical_from_json(read_json_file(path)); }

}  // namespace bigsos

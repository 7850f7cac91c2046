#pragma once

// Ambient streams for open terms. A term variable x stands for a base stream whose j-th node is
// the formal colour `x.j`; its labels are an eventually periodic word (or a finite word, beyond
// which nothing is known).

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bigsos/behavior.hpp"
#include "bigsos/errors.hpp"
#include "bigsos/terms.hpp"

namespace bigsos {

struct BaseStream {
  std::vector<Letter> prefix;
  std::vector<Letter> loop;  // empty: the stream is only known up to the end of prefix

  bool finite() const { return loop.empty(); }

  std::optional<Letter> letter(std::size_t j) const {
    if (j < prefix.size()) return prefix[j];
    if (loop.empty()) return std::nullopt;
    return loop[(j - prefix.size()) % loop.size()];
  }
};

struct BaseStreamEnv {
  std::map<Symbol, BaseStream> streams;

  void add_periodic(const Symbol& name, std::vector<Letter> prefix, std::vector<Letter> loop) {
    if (loop.empty()) throw PreconditionError("base stream '" + name + "' needs a nonempty loop");
    streams[name] = {std::move(prefix), std::move(loop)};
  }
  void add_finite(const Symbol& name, std::vector<Letter> letters) { streams[name] = {std::move(letters), {}}; }

  const BaseStream* find(const Symbol& name) const {
    auto it = streams.find(name);
    return it == streams.end() ? nullptr : &it->second;
  }
};

inline bool is_meta(const Term& t) { return t.is_var() && !t.name().empty() && t.name()[0] == '?'; }

inline Term color(const Symbol& stream, std::size_t j) { return Term::var(stream + "." + std::to_string(j)); }

inline std::optional<std::pair<Symbol, std::size_t>> parse_color(const Term& t) {
  if (!t.is_var() || is_meta(t)) return std::nullopt;
  const auto& n = t.name();
  auto dot = n.rfind('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == n.size()) return std::nullopt;
  std::size_t j = 0;
  for (std::size_t i = dot + 1; i < n.size(); ++i) {
    if (n[i] < '0' || n[i] > '9') return std::nullopt;
    j = j * 10 + static_cast<std::size_t>(n[i] - '0');
  }
  return std::make_pair(n.substr(0, dot), j);
}

// Replaces each variable x of t by the first node x.0 of its base stream.
inline Term attach_bases(const Term& t, const BaseStreamEnv& env) {
  Substitution s;
  for (const auto& v : vars(t)) {
    if (parse_color(Term::var(v))) continue;
    if (!env.find(v)) throw PreconditionError("variable '" + v + "' has no base stream");
    s.insert_or_assign(v, color(v, 0));
  }
  return subst_partial(t, s);
}

inline StreamPrefix base_prefix(const BaseStreamEnv& env, const Symbol& name, std::size_t n, std::size_t from = 0) {
  const BaseStream* b = env.find(name);
  if (!b) throw PreconditionError("unknown base stream '" + name + "'");
  StreamPrefix p{{}, color(name, from + n)};
  for (std::size_t j = from; j < from + n; ++j) {
    auto l = b->letter(j);
    if (!l) throw PreconditionError("base stream '" + name + "' is shorter than requested");
    p.steps.push_back({color(name, j), *l});
  }
  return p;
}

// `$,a,(a,b)`: letters before the parenthesised loop form the prefix. Without parentheses the
// stream is finite.
inline BaseStream parse_base_stream(std::string_view text) {
  BaseStream b;
  auto open = text.find('(');
  auto letters = [](std::string_view s) {
    std::vector<Letter> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
      if (i == s.size() || s[i] == ',') {
        std::string_view part = s.substr(start, i - start);
        while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
        while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
        if (!part.empty()) out.emplace_back(part);
        start = i + 1;
      }
    }
    return out;
  };
  if (open == std::string_view::npos) {
    b.prefix = letters(text);
    if (b.prefix.empty()) throw ParseError("empty base stream");
    return b;
  }
  auto close = text.find(')', open);
  if (close == std::string_view::npos) throw ParseError("unterminated loop in base stream '" + std::string(text) + "'");
  b.prefix = letters(text.substr(0, open));
  b.loop = letters(text.substr(open + 1, close - open - 1));
  if (b.loop.empty()) throw ParseError("empty loop in base stream '" + std::string(text) + "'");
  return b;
}

}  // namespace bigsos

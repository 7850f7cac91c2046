#pragma once

// Line-oriented rule language:
//
//   behavior stream|lts
//   alphabet a, b, $
//   start-letter $
//   op NAME/ARITY
//   rule [@name] HEAD(args): premise, ... => LABEL -> TERM [forall l, ...]
//
// Premises: `x -L-> y`, `x -L|`, `x -|`. A label is a literal when it is an alphabet letter,
// otherwise a lowercase metavariable. `#` starts a comment.

#include <cctype>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bigsos/errors.hpp"
#include "bigsos/rules.hpp"
#include "bigsos/terms.hpp"

namespace bigsos {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline bool is_identifier(std::string_view s) {
  if (s.empty() || !is_ident_start(s[0])) return false;
  for (char c : s)
    if (!is_ident_char(c)) return false;
  return true;
}

inline bool valid_letter(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) return false;
    if (c == ',' || c == '(' || c == ')' || c == '#' || c == '-' || c == '>' || c == '|' || c == ':' || c == '@') return false;
  }
  return true;
}

class SpecReader {
 public:
  explicit SpecReader(std::string_view text) {
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
      if (i == text.size() || text[i] == '\n') {
        lines_.emplace_back(text.substr(start, i - start));
        start = i + 1;
      }
    }
  }

  Spec read() {
    Spec spec;
    bool saw_behavior = false;
    // Declarations first so that rules may precede them textually.
    for (std::size_t ln = 0; ln < lines_.size(); ++ln) {
      auto [kw, rest, col] = keyword(ln);
      if (kw.empty() || kw == "rule") continue;
      if (kw == "behavior") {
        if (rest == "stream") spec.behavior = Behavior::Stream;
        else if (rest == "lts") spec.behavior = Behavior::Lts;
        else fail(ln, col, "behavior must be 'stream' or 'lts'");
        saw_behavior = true;
      } else if (kw == "alphabet") {
        for (auto part : split(rest, ',')) {
          auto l = trim(part);
          if (!valid_letter(l)) fail(ln, col, "invalid letter '" + std::string(l) + "'");
          if (spec.has_letter(std::string(l))) fail(ln, col, "letter '" + std::string(l) + "' repeated");
          spec.alphabet.emplace_back(l);
        }
      } else if (kw == "start-letter") {
        if (!valid_letter(rest)) fail(ln, col, "invalid start letter");
        spec.start_letter = std::string(rest);
      } else if (kw == "op") {
        auto slash = rest.find('/');
        if (slash == std::string_view::npos) fail(ln, col, "expected NAME/ARITY");
        auto name = trim(rest.substr(0, slash));
        auto ar = trim(rest.substr(slash + 1));
        if (!is_identifier(name)) fail(ln, col, "invalid operation name '" + std::string(name) + "'");
        if (ar.empty() || ar.find_first_not_of("0123456789") != std::string_view::npos) fail(ln, col, "invalid arity");
        try {
          spec.signature.add(std::string(name), std::stoul(std::string(ar)));
        } catch (const SpecError& e) {
          fail(ln, col, e.what());
        }
      } else {
        fail(ln, col, "unknown keyword '" + std::string(kw) + "'");
      }
    }
    if (!saw_behavior) throw ParseError("missing 'behavior' declaration", 1, 1);
    if (spec.start_letter && !spec.has_letter(*spec.start_letter)) {
      throw SpecError("start letter '" + *spec.start_letter + "' is not in the alphabet");
    }
    for (std::size_t ln = 0; ln < lines_.size(); ++ln) {
      auto [kw, rest, col] = keyword(ln);
      if (kw != "rule") continue;
      spec.rules.push_back(read_rule(spec, ln, rest, col));
      auto ds = validate_rule(spec, spec.rules.size() - 1);
      for (const auto& d : ds)
        if (d.is_error()) throw SpecError("line " + std::to_string(ln + 1) + ": " + d.message);
    }
    return normalize(std::move(spec));
  }

 private:
  struct Keyword {
    std::string_view kw;
    std::string_view rest;
    std::size_t col;
  };

  Keyword keyword(std::size_t ln) const {
    std::string_view line = lines_[ln];
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto t = trim(line);
    if (t.empty()) return {{}, {}, 0};
    auto sp = t.find_first_of(" \t");
    auto kw = t.substr(0, sp);
    auto rest = sp == std::string_view::npos ? std::string_view{} : trim(t.substr(sp));
    std::size_t col = static_cast<std::size_t>(rest.data() - lines_[ln].data());
    if (rest.empty()) col = lines_[ln].size();
    return {kw, rest, col};
  }

  [[noreturn]] static void fail(std::size_t ln, std::size_t col, const std::string& msg) {
    throw ParseError(msg, ln + 1, col + 1);
  }

  std::size_t col_of(std::size_t ln, std::string_view part) const {
    return static_cast<std::size_t>(part.data() - lines_[ln].data());
  }

  LabelExpr read_label(const Spec& spec, std::size_t ln, std::string_view text) const {
    auto t = trim(text);
    if (t.empty()) fail(ln, col_of(ln, text), "missing label");
    std::string s(t);
    if (spec.has_letter(s)) return LabelExpr::lit(s);
    if (is_identifier(t) && std::islower(static_cast<unsigned char>(t[0]))) return LabelExpr::var(s);
    fail(ln, col_of(ln, t), "'" + s + "' is neither an alphabet letter nor a lowercase metavariable");
  }

  Premise read_premise(const Spec& spec, std::size_t ln, std::string_view text) const {
    auto t = trim(text);
    auto dash = t.find('-');
    if (dash == std::string_view::npos) fail(ln, col_of(ln, t), "expected premise 'x -L-> y', 'x -L|' or 'x -|'");
    auto src = trim(t.substr(0, dash));
    if (!is_identifier(src)) fail(ln, col_of(ln, t), "invalid premise source '" + std::string(src) + "'");
    auto after = t.substr(dash + 1);
    auto stop = after.find_first_of("-|");
    if (stop == std::string_view::npos) fail(ln, col_of(ln, after), "unterminated premise");
    auto label_text = after.substr(0, stop);
    if (after[stop] == '|') {
      if (!trim(after.substr(stop + 1)).empty()) fail(ln, col_of(ln, after), "trailing text after negative premise");
      if (trim(label_text).empty()) return Premise::neg_all(std::string(src));
      return Premise::neg_label(std::string(src), read_label(spec, ln, label_text));
    }
    if (stop + 1 >= after.size() || after[stop + 1] != '>') fail(ln, col_of(ln, after), "expected '->'");
    auto tgt = trim(after.substr(stop + 2));
    if (!is_identifier(tgt)) fail(ln, col_of(ln, after), "invalid premise target '" + std::string(tgt) + "'");
    return Premise::pos(std::string(src), read_label(spec, ln, label_text), std::string(tgt));
  }

  Rule read_rule(const Spec& spec, std::size_t ln, std::string_view text, std::size_t col) const {
    Rule r;
    auto t = text;
    if (!t.empty() && t[0] == '@') {
      auto sp = t.find_first_of(" \t");
      if (sp == std::string_view::npos) fail(ln, col, "rule name without rule");
      r.name = std::string(t.substr(1, sp - 1));
      if (r.name.empty()) fail(ln, col, "empty rule name");
      t = trim(t.substr(sp));
    }
    auto arrow = t.find("=>");
    if (arrow == std::string_view::npos) fail(ln, col_of(ln, t), "expected '=>'");
    auto lhs = trim(t.substr(0, arrow));
    auto rhs = t.substr(arrow + 2);

    // head
    std::size_t i = 0;
    while (i < lhs.size() && is_ident_char(lhs[i])) ++i;
    auto head = lhs.substr(0, i);
    if (!is_identifier(head)) fail(ln, col_of(ln, lhs), "expected operation name");
    r.head_op = std::string(head);
    auto rest = trim(lhs.substr(i));
    if (!rest.empty() && rest[0] == '(') {
      auto close = rest.find(')');
      if (close == std::string_view::npos) fail(ln, col_of(ln, rest), "unterminated argument list");
      auto inner = trim(rest.substr(1, close - 1));
      if (!inner.empty()) {
        for (auto a : split(inner, ',')) {
          auto v = trim(a);
          if (!is_identifier(v)) fail(ln, col_of(ln, rest), "invalid argument variable '" + std::string(v) + "'");
          r.arg_vars.emplace_back(v);
        }
      }
      rest = trim(rest.substr(close + 1));
    }
    if (!rest.empty()) {
      if (rest[0] != ':') fail(ln, col_of(ln, rest), "expected ':' before premises");
      auto prem = trim(rest.substr(1));
      if (!prem.empty())
        for (auto p : split(prem, ',')) r.premises.push_back(read_premise(spec, ln, p));
    }

    // conclusion
    auto to = rhs.find("->");
    if (to == std::string_view::npos) fail(ln, col_of(ln, rhs), "expected 'LABEL -> TERM'");
    r.concl_label = read_label(spec, ln, rhs.substr(0, to));
    auto term_text = rhs.substr(to + 2);
    if (auto fa = term_text.find(" forall "); fa != std::string_view::npos) {
      for (auto v : split(term_text.substr(fa + 8), ',')) {
        auto s = trim(v);
        if (!is_identifier(s)) fail(ln, col_of(ln, term_text), "invalid forall variable '" + std::string(s) + "'");
        r.forall.emplace_back(s);
      }
      term_text = term_text.substr(0, fa);
    }
    TermReader reader(term_text, &spec.signature, ln + 1, col_of(ln, term_text));
    r.concl_target = reader.read_term();
    reader.expect_end();
    return r;
  }

  std::vector<std::string_view> lines_;
};

}  // namespace detail

inline Spec parse_spec(std::string_view text) { return detail::SpecReader(text).read(); }

inline Spec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str());
}

inline std::string render(const LabelExpr& l) { return l.text; }

inline std::string render(const Premise& p) {
  switch (p.kind) {
    case Premise::Kind::Pos: return p.source + " -" + p.label.text + "-> " + p.target;
    case Premise::Kind::NegLabel: return p.source + " -" + p.label.text + "|";
    default: return p.source + " -|";
  }
}

inline std::string render(const Rule& r) {
  std::string out = "rule ";
  if (!r.name.empty()) out += "@" + r.name + " ";
  out += r.head_op;
  if (!r.arg_vars.empty()) {
    out += "(";
    for (std::size_t i = 0; i < r.arg_vars.size(); ++i) out += (i ? ", " : "") + r.arg_vars[i];
    out += ")";
  }
  if (!r.premises.empty()) {
    out += ": ";
    for (std::size_t i = 0; i < r.premises.size(); ++i) out += (i ? ", " : "") + render(r.premises[i]);
  }
  out += " => " + r.concl_label.text + " -> " + render(r.concl_target);
  if (!r.forall.empty()) {
    out += " forall ";
    for (std::size_t i = 0; i < r.forall.size(); ++i) out += (i ? ", " : "") + r.forall[i];
  }
  return out;
}

inline std::string render(const Spec& spec) {
  std::string out = std::string("behavior ") + to_string(spec.behavior) + "\n";
  out += "alphabet ";
  for (std::size_t i = 0; i < spec.alphabet.size(); ++i) out += (i ? ", " : "") + spec.alphabet[i];
  out += "\n";
  if (spec.start_letter) out += "start-letter " + *spec.start_letter + "\n";
  for (const auto& op : spec.signature.operations()) out += "op " + op.name + "/" + std::to_string(op.arity) + "\n";
  for (const auto& r : spec.rules) out += render(r) + "\n";
  return out;
}

}  // namespace bigsos

#pragma once

// Signatures and terms of the free monad over a signature: variables (the unit), flat
// operations (single operation symbol over variables) and simultaneous substitution (the
// multiplication). Terms are immutable shared values with structural equality.

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bigsos/errors.hpp"

namespace bigsos {

using Symbol = std::string;

class Signature {
 public:
  struct Operation {
    Symbol name;
    std::size_t arity;
    bool operator==(const Operation&) const = default;
  };

  Signature() = default;
  Signature(std::initializer_list<Operation> ops) {
    for (const auto& op : ops) add(op.name, op.arity);
  }

  void add(const Symbol& name, std::size_t arity) {
    if (index_.count(name)) throw SpecError("duplicate operation '" + name + "'");
    index_.emplace(name, ops_.size());
    ops_.push_back({name, arity});
  }

  bool contains(const Symbol& name) const { return index_.count(name) != 0; }

  std::optional<std::size_t> arity(const Symbol& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return ops_[it->second].arity;
  }

  bool is_constant(const Symbol& name) const {
    auto a = arity(name);
    return a && *a == 0;
  }

  const std::vector<Operation>& operations() const { return ops_; }

  bool operator==(const Signature& other) const { return ops_ == other.ops_; }

 private:
  std::vector<Operation> ops_;
  std::map<Symbol, std::size_t> index_;
};

class Term {
 public:
  static Term var(Symbol name) { return Term(make_node(true, std::move(name), {})); }
  static Term app(Symbol op, std::vector<Term> args = {}) {
    return Term(make_node(false, std::move(op), std::move(args)));
  }

  bool is_var() const { return node_->is_var; }
  bool is_app() const { return !node_->is_var; }
  // Variable name for variables, operation symbol for applications.
  const Symbol& name() const { return node_->name; }
  std::span<const Term> args() const { return node_->args; }
  std::size_t arity() const { return node_->args.size(); }

  std::size_t depth() const { return node_->depth; }
  std::size_t size() const { return node_->size; }
  std::size_t hash() const { return node_->hash; }
  bool closed() const { return node_->closed; }

  friend bool operator==(const Term& a, const Term& b) {
    if (a.node_ == b.node_) return true;
    if (a.node_->hash != b.node_->hash || a.node_->size != b.node_->size) return false;
    return compare(a, b) == std::strong_ordering::equal;
  }

  friend std::strong_ordering operator<=>(const Term& a, const Term& b) {
    if (a.node_ == b.node_) return std::strong_ordering::equal;
    return compare(a, b);
  }

 private:
  struct Node {
    bool is_var;
    Symbol name;
    std::vector<Term> args;
    std::size_t depth;
    std::size_t size;
    std::size_t hash;
    bool closed;
  };

  explicit Term(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  static std::shared_ptr<const Node> make_node(bool is_var, Symbol name, std::vector<Term> args) {
    std::size_t depth = 0, size = 1;
    std::size_t h = std::hash<std::string>{}(name) ^ (is_var ? 0x9e3779b97f4a7c15ULL : 0x5bd1e995ULL);
    bool closed = !is_var;
    if (!is_var) {
      std::size_t max_child = 0;
      for (const auto& a : args) {
        max_child = std::max(max_child, a.depth());
        size += a.size();
        h = h * 1000003ULL ^ a.hash();
        closed = closed && a.closed();
      }
      depth = 1 + max_child;
    }
    return std::make_shared<const Node>(Node{is_var, std::move(name), std::move(args), depth, size, h, closed});
  }

  static std::strong_ordering compare(const Term& a, const Term& b) {
    if (a.node_ == b.node_) return std::strong_ordering::equal;
    if (a.is_var() != b.is_var()) return a.is_var() ? std::strong_ordering::less : std::strong_ordering::greater;
    if (auto c = a.name() <=> b.name(); c != 0) return c;
    if (auto c = a.arity() <=> b.arity(); c != 0) return c;
    for (std::size_t i = 0; i < a.arity(); ++i) {
      if (auto c = compare(a.args()[i], b.args()[i]); c != 0) return c;
    }
    return std::strong_ordering::equal;
  }

  std::shared_ptr<const Node> node_;
};

struct TermHash {
  std::size_t operator()(const Term& t) const { return t.hash(); }
};

using Substitution = std::map<Symbol, Term>;

inline Term var(Symbol name) { return Term::var(std::move(name)); }

// A depth-1 term: one operation over distinct-or-repeated variables.
inline Term flat_embed(const Signature& sig, const Symbol& op, const std::vector<Symbol>& args) {
  auto arity = sig.arity(op);
  if (!arity) throw SpecError("unknown operation '" + op + "'");
  if (*arity != args.size()) {
    throw SpecError("arity mismatch: '" + op + "' expects " + std::to_string(*arity) + " arguments, got " +
                    std::to_string(args.size()));
  }
  std::vector<Term> vs;
  vs.reserve(args.size());
  for (const auto& a : args) vs.push_back(Term::var(a));
  return Term::app(op, std::move(vs));
}

// Replaces variables bound in env; unbound variables are kept.
inline Term subst_partial(const Term& t, const Substitution& env) {
  if (t.is_var()) {
    auto it = env.find(t.name());
    return it == env.end() ? t : it->second;
  }
  if (t.closed()) return t;
  std::vector<Term> args;
  args.reserve(t.arity());
  for (const auto& a : t.args()) args.push_back(subst_partial(a, env));
  return Term::app(t.name(), std::move(args));
}

// Simultaneous substitution; every variable of t must be bound.
inline Term subst(const Term& t, const Substitution& env) {
  if (t.is_var()) {
    auto it = env.find(t.name());
    if (it == env.end()) throw SpecError("unbound variable '" + t.name() + "'");
    return it->second;
  }
  if (t.closed()) return t;
  std::vector<Term> args;
  args.reserve(t.arity());
  for (const auto& a : t.args()) args.push_back(subst(a, env));
  return Term::app(t.name(), std::move(args));
}

inline std::size_t depth(const Term& t) { return t.depth(); }

inline void collect_vars(const Term& t, std::set<Symbol>& out) {
  if (t.is_var()) {
    out.insert(t.name());
    return;
  }
  for (const auto& a : t.args()) collect_vars(a, out);
}

inline std::set<Symbol> vars(const Term& t) {
  std::set<Symbol> out;
  collect_vars(t, out);
  return out;
}

inline bool occurs(const Symbol& v, const Term& t) {
  if (t.is_var()) return t.name() == v;
  if (t.closed()) return false;
  return std::any_of(t.args().begin(), t.args().end(), [&](const Term& a) { return occurs(v, a); });
}

// Checks every application against the signature.
inline void check_term(const Signature& sig, const Term& t) {
  if (t.is_var()) return;
  auto arity = sig.arity(t.name());
  if (!arity) throw SpecError("unknown operation '" + t.name() + "'");
  if (*arity != t.arity()) {
    throw SpecError("arity mismatch: '" + t.name() + "' expects " + std::to_string(*arity) + " arguments, got " +
                    std::to_string(t.arity()));
  }
  for (const auto& a : t.args()) check_term(sig, a);
}

inline void render_to(const Term& t, std::string& out) {
  out += t.name();
  if (t.is_var() || t.arity() == 0) return;
  out += '(';
  for (std::size_t i = 0; i < t.arity(); ++i) {
    if (i) out += ", ";
    render_to(t.args()[i], out);
  }
  out += ')';
}

inline std::string render(const Term& t) {
  std::string out;
  render_to(t, out);
  return out;
}

namespace detail {

inline bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'' || c == '.';
}

class TermReader {
 public:
  TermReader(std::string_view text, const Signature* sig, std::size_t line = 0, std::size_t col0 = 0)
      : text_(text), sig_(sig), line_(line), col0_(col0) {}

  Term read_term() {
    skip_ws();
    Symbol name = read_ident();
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      ++pos_;
      std::vector<Term> args;
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == ')') {
        ++pos_;
      } else {
        for (;;) {
          args.push_back(read_term());
          skip_ws();
          if (pos_ >= text_.size()) fail("unterminated argument list");
          if (text_[pos_] == ',') {
            ++pos_;
            continue;
          }
          if (text_[pos_] == ')') {
            ++pos_;
            break;
          }
          fail(std::string("unexpected '") + text_[pos_] + "' in argument list");
        }
      }
      if (sig_) check_arity(name, args.size());
      return Term::app(std::move(name), std::move(args));
    }
    if (sig_ && sig_->contains(name)) {
      check_arity(name, 0);
      return Term::app(std::move(name));
    }
    return Term::var(std::move(name));
  }

  void expect_end() {
    skip_ws();
    if (pos_ != text_.size()) fail(std::string("trailing input '") + std::string(text_.substr(pos_)) + "'");
  }

  std::size_t pos() const { return pos_; }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  Symbol read_ident() {
    if (pos_ >= text_.size() || !is_ident_start(text_[pos_])) fail("expected identifier");
    std::size_t start = pos_;
    while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
    return Symbol(text_.substr(start, pos_ - start));
  }

  void check_arity(const Symbol& name, std::size_t n) {
    auto arity = sig_->arity(name);
    if (!arity) fail("unknown operation '" + name + "'");
    if (*arity != n) {
      fail("arity mismatch: '" + name + "' expects " + std::to_string(*arity) + " arguments, got " +
           std::to_string(n));
    }
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, col0_ + pos_ + 1); }

  std::string_view text_;
  const Signature* sig_;
  std::size_t line_;
  std::size_t col0_;
  std::size_t pos_ = 0;
};

}  // namespace detail

// Bare identifiers declared as constants in sig parse as constants, all others as variables.
inline Term parse_term(std::string_view text, const Signature* sig = nullptr) {
  detail::TermReader r(text, sig);
  Term t = r.read_term();
  r.expect_end();
  return t;
}

inline Term parse_term(std::string_view text, const Signature& sig) { return parse_term(text, &sig); }

}  // namespace bigsos

#pragma once

// Finite truncations of cofree-comonad elements for the stream behaviour (A x X) and the
// finitely branching LTS behaviour (P_w(A x X)). Nodes carry a colour; for the engine the
// colour is a term, for decorated prefixes it is again a prefix.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "bigsos/errors.hpp"
#include "bigsos/terms.hpp"

namespace bigsos {

using Letter = std::string;

template <class Color>
struct BasicStreamPrefix {
  struct Step {
    Color node;
    Letter label;
    bool operator==(const Step&) const = default;
    auto operator<=>(const Step&) const = default;
  };

  // t0 -a0-> t1 -a1-> ... -a(n-1)-> tn, steps holds (t_i, a_i) for i < n.
  std::vector<Step> steps;
  Color tail_node;

  std::size_t length() const { return steps.size(); }

  const Color& node(std::size_t i) const {
    if (i > steps.size()) throw PreconditionError("node index beyond prefix");
    return i == steps.size() ? tail_node : steps[i].node;
  }

  const Letter& label(std::size_t i) const {
    if (i >= steps.size()) throw PreconditionError("label index beyond prefix");
    return steps[i].label;
  }

  std::vector<Letter> labels() const {
    std::vector<Letter> out;
    out.reserve(steps.size());
    for (const auto& s : steps) out.push_back(s.label);
    return out;
  }

  // Truncates to the first k transitions.
  BasicStreamPrefix take(std::size_t k) const {
    if (k >= steps.size()) return *this;
    BasicStreamPrefix out{{}, steps[k].node};
    out.steps.assign(steps.begin(), steps.begin() + static_cast<std::ptrdiff_t>(k));
    return out;
  }

  bool operator==(const BasicStreamPrefix&) const = default;
  auto operator<=>(const BasicStreamPrefix&) const = default;
};

using StreamPrefix = BasicStreamPrefix<Term>;

template <class Color>
BasicStreamPrefix<Color> make_stream(std::vector<Color> nodes, std::vector<Letter> labels) {
  if (nodes.size() != labels.size() + 1) throw PreconditionError("a stream prefix needs one more node than labels");
  BasicStreamPrefix<Color> p{{}, nodes.back()};
  for (std::size_t i = 0; i < labels.size(); ++i) p.steps.push_back({nodes[i], labels[i]});
  return p;
}

template <class Color>
const Color& prefix_head(const BasicStreamPrefix<Color>& p) {
  return p.node(0);
}

template <class Color>
std::pair<Letter, Color> prefix_step(const BasicStreamPrefix<Color>& p) {
  if (p.steps.empty()) throw PreconditionError("step of an empty stream prefix");
  return {p.steps[0].label, p.node(1)};
}

template <class Color>
BasicStreamPrefix<Color> prefix_tail(const BasicStreamPrefix<Color>& p, std::size_t k) {
  if (k > p.length()) {
    throw PreconditionError("tail " + std::to_string(k) + " of a prefix of length " + std::to_string(p.length()));
  }
  BasicStreamPrefix<Color> out{{}, p.tail_node};
  out.steps.assign(p.steps.begin() + static_cast<std::ptrdiff_t>(k), p.steps.end());
  return out;
}

// Recolours node i with the suffix starting at i.
template <class Color>
BasicStreamPrefix<BasicStreamPrefix<Color>> prefix_decorate(const BasicStreamPrefix<Color>& p) {
  BasicStreamPrefix<BasicStreamPrefix<Color>> out{{}, prefix_tail(p, p.length())};
  out.steps.reserve(p.length());
  for (std::size_t i = 0; i < p.length(); ++i) out.steps.push_back({prefix_tail(p, i), p.steps[i].label});
  return out;
}

template <class Color, class F>
auto map_colors(const BasicStreamPrefix<Color>& p, F&& f) {
  using Out = std::decay_t<std::invoke_result_t<F&, const Color&>>;
  BasicStreamPrefix<Out> out{{}, f(p.tail_node)};
  out.steps.reserve(p.length());
  for (const auto& s : p.steps) out.steps.push_back({f(s.node), s.label});
  return out;
}

inline std::string render(const StreamPrefix& p) {
  std::string out;
  for (const auto& s : p.steps) {
    out += render(s.node);
    out += " -" + s.label + "-> ";
  }
  out += render(p.tail_node);
  return out;
}

template <class Color>
struct BasicTreePrefix {
  struct Edge;

  Color node;
  // Number of levels below this node that are known; 0 means the children are not recorded.
  std::size_t budget = 0;
  std::vector<Edge> children;

  bool operator==(const BasicTreePrefix& o) const {
    return budget == o.budget && node == o.node && children == o.children;
  }
  std::strong_ordering operator<=>(const BasicTreePrefix& o) const {
    if (auto c = node <=> o.node; c != 0) return c;
    if (auto c = budget <=> o.budget; c != 0) return c;
    return std::lexicographical_compare_three_way(children.begin(), children.end(), o.children.begin(),
                                                  o.children.end());
  }
};

template <class Color>
struct BasicTreePrefix<Color>::Edge {
  Letter label;
  BasicTreePrefix subtree;

  bool operator==(const Edge& o) const { return label == o.label && subtree == o.subtree; }
  std::strong_ordering operator<=>(const Edge& o) const {
    if (auto c = label <=> o.label; c != 0) return c;
    return subtree <=> o.subtree;
  }
};

using TreePrefix = BasicTreePrefix<Term>;

template <class Color>
BasicTreePrefix<Color> tree_leaf(Color node, std::size_t budget = 1) {
  return BasicTreePrefix<Color>{std::move(node), budget, {}};
}

// Children with their labels; requires a recorded level below the root.
template <class Color>
const std::vector<typename BasicTreePrefix<Color>::Edge>& tree_children(const BasicTreePrefix<Color>& t) {
  if (t.budget == 0) throw PreconditionError("tree prefix has no recorded level below its root");
  return t.children;
}

template <class Color>
BasicTreePrefix<BasicTreePrefix<Color>> tree_decorate(const BasicTreePrefix<Color>& t) {
  BasicTreePrefix<BasicTreePrefix<Color>> out{t, t.budget, {}};
  out.children.reserve(t.children.size());
  for (const auto& e : t.children) out.children.push_back({e.label, tree_decorate(e.subtree)});
  return out;
}

template <class Color, class F>
auto map_colors(const BasicTreePrefix<Color>& t, F&& f) {
  using Out = std::decay_t<std::invoke_result_t<F&, const Color&>>;
  BasicTreePrefix<Out> out{f(t.node), t.budget, {}};
  out.children.reserve(t.children.size());
  for (const auto& e : t.children) out.children.push_back({e.label, map_colors(e.subtree, f)});
  return out;
}

// Canonical representative of the depth-d bounded-bisimilarity class: truncate, canonicalize
// children, sort, drop duplicates.
template <class Color>
BasicTreePrefix<Color> tree_canon(const BasicTreePrefix<Color>& t, std::size_t d) {
  BasicTreePrefix<Color> out{t.node, std::min(t.budget, d), {}};
  if (out.budget == 0) return out;
  out.children.reserve(t.children.size());
  for (const auto& e : t.children) out.children.push_back({e.label, tree_canon(e.subtree, out.budget - 1)});
  std::sort(out.children.begin(), out.children.end());
  out.children.erase(std::unique(out.children.begin(), out.children.end()), out.children.end());
  return out;
}

template <class Color>
std::size_t tree_max_branching(const BasicTreePrefix<Color>& t) {
  std::size_t b = t.children.size();
  for (const auto& e : t.children) b = std::max(b, tree_max_branching(e.subtree));
  return b;
}

// Follows first children; meaningful for degenerate (branching <= 1) trees.
inline StreamPrefix tree_spine(const TreePrefix& t) {
  StreamPrefix out{{}, t.node};
  const TreePrefix* cur = &t;
  while (!cur->children.empty()) {
    out.steps.push_back({cur->node, cur->children.front().label});
    cur = &cur->children.front().subtree;
  }
  out.tail_node = cur->node;
  return out;
}

namespace detail {

inline std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

inline void dot_walk(const TreePrefix& t, std::size_t& next_id, std::ostringstream& os) {
  std::size_t me = next_id++;
  os << "  n" << me << " [label=\"" << dot_escape(render(t.node)) << "\"];\n";
  for (const auto& e : t.children) {
    std::size_t child = next_id;
    dot_walk(e.subtree, next_id, os);
    os << "  n" << me << " -> n" << child << " [label=\"" << dot_escape(e.label) << "\"];\n";
  }
}

}  // namespace detail

inline std::string to_dot(const TreePrefix& t, const std::string& name = "tree") {
  std::ostringstream os;
  os << "digraph \"" << detail::dot_escape(name) << "\" {\n";
  std::size_t id = 0;
  detail::dot_walk(t, id, os);
  os << "}\n";
  return os.str();
}

}  // namespace bigsos

#pragma once

// Bounded construction of the stream that a distributive law extending a stream specification
// must assign to a term. Every demanded term t gets an entry (label of its first transition,
// successor term). Unknown labels are union-find variables, unknown successors are metavariables
// `?k`. An entry is fixed once exactly one rule is compatible with what is known about the
// entries of the arguments; the rule's conclusion is then unified with the entry. Unifying a
// metavariable with a term strictly containing it is the occurs-check contradiction.

#include <algorithm>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bigsos/base_streams.hpp"
#include "bigsos/behavior.hpp"
#include "bigsos/errors.hpp"
#include "bigsos/format.hpp"
#include "bigsos/rules.hpp"
#include "bigsos/terms.hpp"
#include "bigsos/verdict.hpp"

namespace bigsos {

struct OutOfFuel {};

namespace detail {

struct FuelPool {
  std::size_t limit = 0;
  std::size_t spent = 0;

  void tick() {
    if (++spent > limit) throw OutOfFuel{};
  }
};

// Union-find over label variables with an undo trail for trial unification.
class LabelStore {
 public:
  int fresh() {
    parent_.push_back(static_cast<int>(parent_.size()));
    value_.emplace_back();
    return parent_.back();
  }

  int find(int x) const {
    while (parent_[x] != x) x = parent_[x];
    return x;
  }

  const std::optional<Letter>& value(int x) const { return value_[find(x)]; }

  bool bind(int x, const Letter& l) {
    int r = find(x);
    if (value_[r]) return *value_[r] == l;
    trail_.push_back({r, parent_[r], value_[r]});
    value_[r] = l;
    return true;
  }

  bool unify(int a, int b) {
    int ra = find(a), rb = find(b);
    if (ra == rb) return true;
    if (value_[ra] && value_[rb] && *value_[ra] != *value_[rb]) return false;
    trail_.push_back({rb, parent_[rb], value_[rb]});
    trail_.push_back({ra, parent_[ra], value_[ra]});
    parent_[rb] = ra;
    if (!value_[ra]) value_[ra] = value_[rb];
    return true;
  }

  struct Mark {
    std::size_t trail, size;
  };
  Mark mark() const { return {trail_.size(), parent_.size()}; }
  void undo(Mark m) {
    while (trail_.size() > m.trail) {
      auto& t = trail_.back();
      parent_[t.index] = t.parent;
      value_[t.index] = t.value;
      trail_.pop_back();
    }
    parent_.resize(m.size);
    value_.resize(m.size);
  }
  // Committed changes need no undo information.
  void commit() { trail_.clear(); }

  std::string render(int x) const {
    const auto& v = value(x);
    return v ? *v : "?L" + std::to_string(find(x));
  }

 private:
  struct Change {
    int index;
    int parent;
    std::optional<Letter> value;
  };
  std::vector<int> parent_;
  std::vector<std::optional<Letter>> value_;
  std::vector<Change> trail_;
};

struct Contradiction {
  Witness::Kind kind;
  std::optional<Term> lhs;
  std::optional<Term> rhs;
  std::string message;
};

struct ContradictionAt {
  Contradiction c;
  std::size_t entry;
};

inline bool has_meta(const Term& t) {
  if (t.closed()) return false;
  if (t.is_var()) return is_meta(t);
  return std::any_of(t.args().begin(), t.args().end(), [](const Term& a) { return has_meta(a); });
}

}  // namespace detail

class StreamSession {
 public:
  enum class Status { Pending, Derived, Fact, Opaque, Merged };

  struct Outcome {
    Verdict::Kind kind = Verdict::Kind::Unknown;
    StreamPrefix prefix{{}, Term::app("_")};
    std::optional<Witness> witness;
  };

  StreamSession(const Spec& spec, const BaseStreamEnv* env, std::shared_ptr<detail::FuelPool> fuel)
      : spec_(&spec), env_(env), fuel_(std::move(fuel)) {
    for (std::size_t i = 0; i < spec.rules.size(); ++i) rules_by_op_[spec.rules[i].head_op].push_back(i);
  }

  // Demands the first n transitions of seed; may replace the session by the unique surviving
  // branch of a case split.
  Outcome run(const Term& seed, std::size_t n) {
    try {
      for (;;) {
        chain_.assign(1, resolve(seed));
        std::vector<Letter> labels;
        std::optional<std::size_t> stuck;
        for (std::size_t i = 0; i < n; ++i) {
          std::size_t id = ensure_entry(chain_[i]);
          saturate();
          id = find_entry(id);
          const auto& lv = labels_.value(entries_[id].label);
          Term nx = resolve(entries_[id].next);
          if (!lv || detail::has_meta(nx)) {
            stuck = i;
            break;
          }
          labels.push_back(*lv);
          chain_.push_back(nx);
        }
        if (!stuck) return {Verdict::Kind::ConsistentPrefix, make_stream(chain_, labels), std::nullopt};
        auto split = pick_split();
        if (!split) {
          Witness w = snapshot(seed);
          w.kind = Witness::Kind::Unforced;
          w.term = chain_[*stuck];
          w.position = *stuck;
          w.message = "no derivation forces the transition of " + render(chain_[*stuck]);
          return {Verdict::Kind::Ambiguous, {{}, chain_[*stuck]}, w};
        }
        return branch(seed, n, *split);
      }
    } catch (const detail::ContradictionAt& c) {
      return {Verdict::Kind::NoExtension, {{}, chain_.empty() ? seed : chain_.back()}, contradiction_witness(seed, c)};
    }
  }

  // Installs (label, next) as known behaviour of key.
  void add_fact(const Term& key, const Letter& label, const Term& next) {
    std::size_t id = ensure_entry(key);
    Entry& e = entries_[id];
    if (!labels_.bind(e.label, label)) throw detail::ContradictionAt{{Witness::Kind::Clash, {}, {}, "fact label clash"}, id};
    if (e.status == Status::Pending) e.status = Status::Fact;
    if (auto c = unify(entries_[id].next, next)) throw detail::ContradictionAt{*c, id};
    labels_.commit();
    rekey();
  }

  // Behaviour of key if it is known after propagation.
  std::optional<FactEntry> lookup(const Term& key) {
    std::size_t id = ensure_entry(key);
    saturate();
    id = find_entry(id);
    const auto& lv = labels_.value(entries_[id].label);
    Term nx = resolve(entries_[id].next);
    if (!lv || detail::has_meta(nx)) return std::nullopt;
    return FactEntry{resolve(entries_[id].key), *lv, nx};
  }

  bool derived(const Term& key) {
    auto it = index_.find(resolve(key));
    return it != index_.end() && entries_[find_entry(it->second)].status == Status::Derived;
  }

  std::vector<FactEntry> resolved_facts() const {
    std::vector<FactEntry> out;
    for (const auto& e : entries_) {
      if (e.status == Status::Merged) continue;
      const auto& lv = labels_.value(e.label);
      Term nx = resolve(e.next);
      if (!lv || detail::has_meta(nx) || detail::has_meta(e.key)) continue;
      out.push_back({resolve(e.key), *lv, nx});
    }
    return out;
  }

 private:
  struct Entry {
    Term key;
    int label;
    Term next;
    Status status = Status::Pending;
    std::size_t rule = 0;
    std::size_t merged_into = 0;
    std::size_t candidates = 0;
    bool nonground = false;
  };

  struct Match {
    std::size_t rule;
    std::map<Symbol, Term> vars;
    std::vector<std::size_t> sources;  // entry per premise
  };

  struct TraceRec {
    std::size_t rule;
    Term head;
    std::size_t entry;
    std::map<Symbol, Term> vars;
    std::map<Symbol, int> lenv;
    Term target;
  };

  // ---- terms ----------------------------------------------------------------------------

  Term fresh_meta() { return Term::var("?" + std::to_string(meta_count_++)); }

  Term resolve(const Term& t) const {
    if (t.closed()) return t;
    if (t.is_var()) {
      if (!is_meta(t)) return t;
      auto it = bindings_.find(t.name());
      return it == bindings_.end() ? t : resolve(it->second);
    }
    std::vector<Term> args;
    args.reserve(t.arity());
    bool changed = false;
    for (const auto& a : t.args()) {
      args.push_back(resolve(a));
      changed = changed || !(args.back() == a);
    }
    return changed ? Term::app(t.name(), std::move(args)) : t;
  }

  std::optional<detail::Contradiction> unify(const Term& a0, const Term& b0) {
    Term a = resolve(a0), b = resolve(b0);
    if (a == b) return std::nullopt;
    if (is_meta(a)) return bind(a, b);
    if (is_meta(b)) return bind(b, a);
    if (a.is_var() || b.is_var() || a.name() != b.name() || a.arity() != b.arity()) {
      return detail::Contradiction{Witness::Kind::Clash, a, b, "cannot equate " + render(a) + " and " + render(b)};
    }
    for (std::size_t i = 0; i < a.arity(); ++i)
      if (auto c = unify(a.args()[i], b.args()[i])) return c;
    return std::nullopt;
  }

  std::optional<detail::Contradiction> bind(const Term& meta, const Term& t) {
    if (occurs(meta.name(), t)) {
      return detail::Contradiction{Witness::Kind::OccursCheck, meta, t,
                                   "no finite term satisfies " + render(meta) + " = " + render(t)};
    }
    bindings_.emplace(meta.name(), t);
    rekey_needed_ = true;
    return std::nullopt;
  }

  // ---- entries --------------------------------------------------------------------------

  std::size_t find_entry(std::size_t id) const {
    while (entries_[id].status == Status::Merged) id = entries_[id].merged_into;
    return id;
  }

  std::size_t ensure_entry(const Term& t0) {
    Term t = resolve(t0);
    auto it = index_.find(t);
    if (it != index_.end()) return find_entry(it->second);
    fuel_->tick();
    std::size_t id = entries_.size();
    entries_.push_back(Entry{t, labels_.fresh(), fresh_meta()});
    entries_[id].nonground = detail::has_meta(t);
    index_.emplace(t, id);
    if (t.is_var() && !is_meta(t)) load_color(id);
    return id;
  }

  void load_color(std::size_t id) {
    Term key = entries_[id].key;
    auto c = parse_color(key);
    const BaseStream* b = (c && env_) ? env_->find(c->first) : nullptr;
    if (!b) throw PreconditionError("term variable '" + key.name() + "' has no base stream");
    auto l = b->letter(c->second);
    if (!l) {
      entries_[id].status = Status::Opaque;
      return;
    }
    entries_[id].status = Status::Fact;
    if (!labels_.bind(entries_[id].label, *l)) {
      throw detail::ContradictionAt{{Witness::Kind::Clash, {}, {}, "label of " + render(key) + " is " + *l}, id};
    }
    if (auto e = unify(entries_[id].next, color(c->first, c->second + 1))) throw detail::ContradictionAt{*e, id};
  }

  void rekey() {
    while (rekey_needed_) {
      rekey_needed_ = false;
      for (std::size_t id = 0; id < entries_.size(); ++id) {
        if (entries_[id].status == Status::Merged || !entries_[id].nonground) continue;
        Term nk = resolve(entries_[id].key);
        if (nk == entries_[id].key) continue;
        if (auto it = index_.find(entries_[id].key); it != index_.end() && it->second == id) index_.erase(it);
        entries_[id].key = nk;
        entries_[id].nonground = detail::has_meta(nk);
        auto [it, inserted] = index_.emplace(nk, id);
        if (!inserted) {
          merge(id, find_entry(it->second));
        } else if (nk.is_var() && !is_meta(nk)) {
          Status was = entries_[id].status;
          load_color(id);
          if (was == Status::Derived) entries_[id].status = Status::Derived;
        }
      }
    }
    labels_.commit();
  }

  void merge(std::size_t from, std::size_t into) {
    if (from == into) return;
    Status st = entries_[from].status;
    std::size_t rule = entries_[from].rule;
    entries_[from].status = Status::Merged;
    entries_[from].merged_into = into;
    if (entries_[into].status == Status::Pending && (st == Status::Derived || st == Status::Fact)) {
      entries_[into].status = st;
      entries_[into].rule = rule;
    }
    if (!labels_.unify(entries_[from].label, entries_[into].label)) {
      throw detail::ContradictionAt{{Witness::Kind::Clash, {}, {}, "two transitions with different labels for " +
                                                                       render(entries_[into].key)}, into};
    }
    if (auto c = unify(entries_[from].next, entries_[into].next)) throw detail::ContradictionAt{*c, into};
  }

  // ---- rules ----------------------------------------------------------------------------

  Match collect(std::size_t ridx, const Term& key) {
    const Rule& r = spec_->rules[ridx];
    Match m{ridx, {}, {}};
    for (std::size_t i = 0; i < r.arg_vars.size(); ++i) m.vars.emplace(r.arg_vars[i], key.args()[i]);
    for (const auto& p : r.premises) {
      std::size_t src = ensure_entry(m.vars.at(p.source));
      m.sources.push_back(src);
      m.vars.insert_or_assign(p.target, resolve(entries_[src].next));
    }
    return m;
  }

  bool unify_label(int var, const LabelExpr& l, std::map<Symbol, int>& lenv) {
    if (l.is_lit()) return labels_.bind(var, l.text);
    auto it = lenv.find(l.text);
    if (it == lenv.end()) it = lenv.emplace(l.text, labels_.fresh()).first;
    return labels_.unify(var, it->second);
  }

  bool unify_labels(const Match& m, std::size_t head, std::map<Symbol, int>& lenv) {
    const Rule& r = spec_->rules[m.rule];
    for (std::size_t k = 0; k < r.premises.size(); ++k)
      if (!unify_label(entries_[find_entry(m.sources[k])].label, r.premises[k].label, lenv)) return false;
    return unify_label(entries_[find_entry(head)].label, r.concl_label, lenv);
  }

  std::vector<Match> candidates(std::size_t id, const Term& key) {
    std::vector<Match> out;
    auto it = rules_by_op_.find(key.name());
    if (it == rules_by_op_.end()) return out;
    for (std::size_t ridx : it->second) {
      Match m = collect(ridx, key);
      auto mark = labels_.mark();
      std::map<Symbol, int> lenv;
      bool ok = unify_labels(m, id, lenv);
      labels_.undo(mark);
      if (ok) out.push_back(std::move(m));
    }
    return out;
  }

  void apply(std::size_t id, const Match& m) {
    const Rule& r = spec_->rules[m.rule];
    fuel_->tick();
    std::map<Symbol, int> lenv;
    bool ok = unify_labels(m, id, lenv);
    Term target = subst(r.concl_target, m.vars);
    trace_.push_back({m.rule, resolve(entries_[id].key), id, m.vars, lenv, target});
    if (!ok) {
      throw detail::ContradictionAt{{Witness::Kind::Clash, {}, {}, "labels required by " + spec_->rule_id(m.rule) +
                                                                        " clash at " + render(resolve(entries_[id].key))}, id};
    }
    entries_[id].status = Status::Derived;
    entries_[id].rule = m.rule;
    if (auto c = unify(entries_[id].next, target)) throw detail::ContradictionAt{*c, id};
    rekey();
  }

  // True when something changed.
  bool try_entry(std::size_t id) {
    if (entries_[id].status != Status::Pending) return false;
    Term key = resolve(entries_[id].key);
    if (key.is_var()) return false;
    std::size_t before = entries_.size();
    auto cands = candidates(id, key);
    id = find_entry(id);
    entries_[id].candidates = cands.size();
    if (cands.empty()) {
      throw detail::ContradictionAt{{Witness::Kind::NoRule, {}, {}, "no rule of '" + key.name() + "' is compatible with " +
                                                                        "the behaviour of the arguments of " + render(key)}, id};
    }
    if (cands.size() > 1) return entries_.size() != before;
    apply(id, cands.front());
    return true;
  }

  void saturate() {
    bool progress = true;
    while (progress) {
      progress = false;
      for (std::size_t id = 0; id < entries_.size(); ++id) progress = try_entry(id) || progress;
    }
  }

  std::optional<std::size_t> pick_split() const {
    for (std::size_t id = 0; id < entries_.size(); ++id)
      if (entries_[id].status == Status::Pending && entries_[id].candidates > 1) return id;
    return std::nullopt;
  }

  Outcome branch(const Term& seed, std::size_t n, std::size_t sid) {
    Term skey = resolve(entries_[sid].key);
    std::size_t pos = position_of(skey);
    auto cands = candidates(sid, skey);
    std::vector<std::pair<std::string, Witness>> refuted;
    std::vector<std::string> alive;
    std::optional<StreamSession> survivor;
    Outcome survivor_outcome;
    bool unknown = false;
    for (const auto& m : cands) {
      StreamSession b = *this;
      Outcome o;
      try {
        b.apply(sid, m);
        o = b.run(seed, n);
      } catch (const detail::ContradictionAt& c) {
        o = {Verdict::Kind::NoExtension, {{}, skey}, b.contradiction_witness(seed, c)};
      }
      std::string choice = spec_->rule_id(m.rule);
      if (o.kind == Verdict::Kind::NoExtension) {
        refuted.emplace_back(choice, *o.witness);
        continue;
      }
      unknown = unknown || o.kind == Verdict::Kind::Unknown;
      alive.push_back(choice);
      survivor.emplace(std::move(b));
      survivor_outcome = std::move(o);
    }
    if (alive.size() == 1 && !unknown) {
      StreamSession s = std::move(*survivor);
      *this = std::move(s);
      return survivor_outcome;
    }
    Witness w = snapshot(seed);
    w.term = skey;
    w.position = pos + 1;
    if (alive.empty()) {
      w.kind = Witness::Kind::CaseSplit;
      w.message = "every rule that could define the transition of " + render(skey) + " leads to a contradiction";
      w.cases = std::move(refuted);
      return {Verdict::Kind::NoExtension, {{}, skey}, w};
    }
    if (unknown) return {Verdict::Kind::Unknown, {{}, skey}, std::nullopt};
    w.kind = Witness::Kind::Multiple;
    w.position = pos;
    w.message = "rules";
    for (std::size_t i = 0; i < alive.size(); ++i) w.message += (i ? ", " : " ") + alive[i];
    w.message += " each give a consistent transition of " + render(skey);
    w.cases = std::move(refuted);
    return {Verdict::Kind::Ambiguous, {{}, skey}, w};
  }

  // ---- witnesses ------------------------------------------------------------------------

  std::size_t position_of(const Term& t) const {
    Term r = resolve(t);
    for (std::size_t i = 0; i < chain_.size(); ++i)
      if (resolve(chain_[i]) == r) return i;
    return chain_.empty() ? 0 : chain_.size() - 1;
  }

  Witness snapshot(const Term& seed) const {
    Witness w;
    w.seed = seed;
    for (const auto& e : entries_) {
      if (e.status == Status::Merged) continue;
      w.facts.push_back({resolve(e.key), labels_.render(e.label), resolve(e.next)});
    }
    for (const auto& t : trace_) {
      TraceStep s;
      s.rule = spec_->rule_id(t.rule);
      s.head = resolve(t.head);
      for (const auto& [v, term] : t.vars) s.vars.emplace(v, resolve(term));
      for (const auto& [v, l] : t.lenv) s.labels.emplace(v, labels_.render(l));
      s.label = labels_.render(entries_[find_entry(t.entry)].label);
      s.target = resolve(t.target);
      w.trace.push_back(std::move(s));
    }
    return w;
  }

  Witness contradiction_witness(const Term& seed, const detail::ContradictionAt& c) const {
    Witness w = snapshot(seed);
    w.kind = c.c.kind;
    w.lhs = c.c.lhs;
    w.rhs = c.c.rhs;
    w.message = c.c.message;
    Term key = resolve(entries_[find_entry(c.entry)].key);
    w.position = position_of(key) + 1;
    w.term = (c.c.kind == Witness::Kind::OccursCheck && c.c.lhs) ? *c.c.lhs : key;
    return w;
  }

  const Spec* spec_;
  const BaseStreamEnv* env_;
  std::shared_ptr<detail::FuelPool> fuel_;
  std::map<Symbol, std::vector<std::size_t>> rules_by_op_;
  detail::LabelStore labels_;
  std::map<std::string, Term> bindings_;
  std::size_t meta_count_ = 0;
  std::vector<Entry> entries_;
  std::unordered_map<Term, std::size_t, TermHash> index_;
  bool rekey_needed_ = false;
  std::vector<TraceRec> trace_;
  std::vector<Term> chain_;
};

class StreamEngine {
 public:
  explicit StreamEngine(Spec spec) : spec_(normalize(std::move(spec))) {
    if (spec_.behavior != Behavior::Stream) throw SpecError("stream unfolding needs a stream specification");
    auto fn = check_functionality(spec_);
    for (const auto& d : fn.diagnostics)
      if (d.is_error()) throw SpecError("specification is not functional: " + d.message);
  }

  const Spec& spec() const { return spec_; }

  // Seeds are closed terms or terms over base-stream colours `x.j`.
  Verdict unfold(const std::vector<Term>& seeds, std::size_t n, std::size_t fuel,
                 const BaseStreamEnv* env = nullptr) const {
    for (const auto& s : seeds) check_term(spec_.signature, s);
    auto pool = std::make_shared<detail::FuelPool>(detail::FuelPool{fuel, 0});
    StreamSession session(spec_, env, pool);
    Verdict v;
    v.depth = n;
    std::optional<Witness> ambiguous;
    try {
      for (const auto& seed : seeds) {
        auto o = session.run(seed, n);
        if (o.kind == Verdict::Kind::ConsistentPrefix) {
          v.streams.emplace_back(seed, std::move(o.prefix));
        } else if (o.kind == Verdict::Kind::NoExtension) {
          v.kind = Verdict::Kind::NoExtension;
          v.witness = std::move(o.witness);
          v.fuel_spent = pool->spent;
          return v;
        } else if (o.kind == Verdict::Kind::Ambiguous) {
          if (!ambiguous) ambiguous = std::move(o.witness);
        } else {
          throw OutOfFuel{};
        }
      }
    } catch (const OutOfFuel&) {
      v.fuel_spent = std::min(pool->spent, pool->limit);
      v.kind = ambiguous ? Verdict::Kind::Ambiguous : Verdict::Kind::Unknown;
      v.witness = std::move(ambiguous);
      v.note = "fuel exhausted";
      return v;
    }
    v.fuel_spent = pool->spent;
    v.kind = ambiguous ? Verdict::Kind::Ambiguous : Verdict::Kind::ConsistentPrefix;
    v.witness = std::move(ambiguous);
    v.facts = session.resolved_facts();
    return v;
  }

  // Re-derives the behaviour of key from the other facts alone. Returns nothing when the
  // facts do not force it or contradict.
  std::optional<FactEntry> rederive(const std::vector<FactEntry>& facts, const Term& key, std::size_t fuel,
                                    const BaseStreamEnv* env = nullptr) const {
    auto pool = std::make_shared<detail::FuelPool>(detail::FuelPool{fuel, 0});
    StreamSession session(spec_, env, pool);
    try {
      for (const auto& f : facts) {
        if (f.term == key || parse_color(f.term)) continue;
        session.add_fact(f.term, f.label, f.next);
      }
      auto out = session.lookup(key);
      if (out && !session.derived(key)) return std::nullopt;
      return out;
    } catch (const detail::ContradictionAt&) {
      return std::nullopt;
    } catch (const OutOfFuel&) {
      return std::nullopt;
    }
  }

 private:
  Spec spec_;
};

inline Verdict unfold_stream(const Spec& spec, const std::vector<Term>& seeds, std::size_t n, std::size_t fuel,
                             const BaseStreamEnv* env = nullptr) {
  return StreamEngine(spec).unfold(seeds, n, fuel, env);
}

}  // namespace bigsos

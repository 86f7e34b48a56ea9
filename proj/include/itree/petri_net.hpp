#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "itree/error.hpp"
#include "itree/process_tree.hpp"
#include "itree/xml.hpp"

namespace itree {

using PlaceId = std::size_t;
using TransitionId = std::size_t;

struct Transition {
  std::string name;
  std::optional<std::string> label;  // nullopt: silent
  std::vector<PlaceId> preset;
  std::vector<PlaceId> postset;
  NodePath node;  // tree node this transition was generated for

  bool silent() const noexcept { return !label.has_value(); }
};

/// Places owned by the translation of one tree node.
struct NodeBlock {
  PlaceId entry = 0;
  PlaceId exit = 0;
  std::vector<PlaceId> internal;
};

struct Arc {
  bool place_to_transition;
  PlaceId place;
  TransitionId transition;
};

class Marking {
 public:
  Marking() = default;
  explicit Marking(std::size_t places) : tokens_(places, 0) {}

  std::uint32_t operator[](PlaceId p) const { return tokens_.at(p); }
  void add(PlaceId p, std::uint32_t n = 1) { tokens_.at(p) += n; }
  void remove(PlaceId p) {
    if (tokens_.at(p) == 0) fail(ErrorCode::NotEnabled, "no token to consume");
    --tokens_[p];
  }
  std::size_t size() const noexcept { return tokens_.size(); }
  std::uint64_t total() const {
    std::uint64_t n = 0;
    for (auto t : tokens_) n += t;
    return n;
  }
  const std::vector<std::uint32_t>& tokens() const noexcept { return tokens_; }

  friend bool operator==(const Marking&, const Marking&) = default;
  friend auto operator<=>(const Marking&, const Marking&) = default;

 private:
  std::vector<std::uint32_t> tokens_;
};

struct MarkingHash {
  std::size_t operator()(const Marking& m) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (auto t : m.tokens()) {
      h ^= t + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
  }
};

class LabeledPetriNet {
 public:
  PlaceId add_place(std::string name) {
    place_names_.push_back(std::move(name));
    return place_names_.size() - 1;
  }

  TransitionId add_transition(std::optional<std::string> label, std::vector<PlaceId> pre, std::vector<PlaceId> post,
                              NodePath node) {
    Transition t;
    t.name = "t" + std::to_string(transitions_.size());
    t.label = std::move(label);
    t.preset = std::move(pre);
    t.postset = std::move(post);
    t.node = std::move(node);
    transitions_.push_back(std::move(t));
    return transitions_.size() - 1;
  }

  std::size_t place_count() const noexcept { return place_names_.size(); }
  const std::string& place_name(PlaceId p) const { return place_names_.at(p); }
  const std::vector<Transition>& transitions() const noexcept { return transitions_; }
  const Transition& transition(TransitionId t) const { return transitions_.at(t); }

  PlaceId source() const noexcept { return source_; }
  PlaceId sink() const noexcept { return sink_; }
  void set_source(PlaceId p) { source_ = p; }
  void set_sink(PlaceId p) { sink_ = p; }

  const std::map<NodePath, NodeBlock>& blocks() const noexcept { return blocks_; }
  const NodeBlock& block(const NodePath& p) const {
    auto it = blocks_.find(p);
    if (it == blocks_.end()) fail(ErrorCode::InvalidPath, "no net block for " + to_string(p));
    return it->second;
  }
  void set_block(const NodePath& p, NodeBlock b) { blocks_[p] = std::move(b); }

  std::vector<Arc> arcs() const {
    std::vector<Arc> out;
    for (TransitionId t = 0; t < transitions_.size(); ++t) {
      for (PlaceId p : transitions_[t].preset) out.push_back({true, p, t});
      for (PlaceId p : transitions_[t].postset) out.push_back({false, p, t});
    }
    return out;
  }

  std::set<std::string> visible_labels() const {
    std::set<std::string> out;
    for (const auto& t : transitions_) {
      if (t.label) out.insert(*t.label);
    }
    return out;
  }

  Marking initial_marking() const {
    Marking m(place_count());
    m.add(source_);
    return m;
  }

  Marking final_marking() const {
    Marking m(place_count());
    m.add(sink_);
    return m;
  }

 private:
  std::vector<std::string> place_names_;
  std::vector<Transition> transitions_;
  std::map<NodePath, NodeBlock> blocks_;
  PlaceId source_ = 0;
  PlaceId sink_ = 0;
};

// ---------------------------------------------------------------------------
// Token game

inline bool is_enabled(const LabeledPetriNet& net, const Marking& m, TransitionId t) {
  const auto& pre = net.transition(t).preset;
  for (PlaceId p : pre) {
    if (m[p] == 0) return false;
  }
  return true;
}

inline std::vector<TransitionId> enabled(const LabeledPetriNet& net, const Marking& m) {
  std::vector<TransitionId> out;
  for (TransitionId t = 0; t < net.transitions().size(); ++t) {
    if (is_enabled(net, m, t)) out.push_back(t);
  }
  return out;
}

inline Marking fire(const LabeledPetriNet& net, const Marking& m, TransitionId t) {
  if (t >= net.transitions().size()) fail(ErrorCode::NotEnabled, "unknown transition");
  if (!is_enabled(net, m, t)) {
    fail(ErrorCode::NotEnabled, "transition " + net.transition(t).name + " is not enabled");
  }
  Marking next = m;
  for (PlaceId p : net.transition(t).preset) next.remove(p);
  for (PlaceId p : net.transition(t).postset) next.add(p);
  return next;
}

// ---------------------------------------------------------------------------
// Translation

namespace detail {

class NetBuilder {
 public:
  explicit NetBuilder(LabeledPetriNet& net) : net_(net) {}

  void build(const TreeNode& node, const NodePath& path, PlaceId entry, PlaceId exit) {
    const std::size_t first_place = net_.place_count();
    const auto& kids = node.children();
    switch (node.kind()) {
      case NodeKind::Activity:
        net_.add_transition(node.label(), {entry}, {exit}, path);
        break;
      case NodeKind::Tau:
        net_.add_transition(std::nullopt, {entry}, {exit}, path);
        break;
      case NodeKind::Sequence: {
        PlaceId from = entry;
        for (std::size_t i = 0; i < kids.size(); ++i) {
          const PlaceId to = i + 1 == kids.size() ? exit : fresh();
          build(*kids[i], path.child(i), from, to);
          from = to;
        }
        break;
      }
      case NodeKind::Choice:
        for (std::size_t i = 0; i < kids.size(); ++i) build(*kids[i], path.child(i), entry, exit);
        break;
      case NodeKind::Parallel: {
        std::vector<PlaceId> ins;
        std::vector<PlaceId> outs;
        for (std::size_t i = 0; i < kids.size(); ++i) {
          ins.push_back(fresh());
          outs.push_back(fresh());
        }
        net_.add_transition(std::nullopt, {entry}, ins, path);
        for (std::size_t i = 0; i < kids.size(); ++i) build(*kids[i], path.child(i), ins[i], outs[i]);
        net_.add_transition(std::nullopt, outs, {exit}, path);
        break;
      }
      case NodeKind::Loop: {
        // The redo arc runs backwards, so the loop body gets private places;
        // sharing entry/exit with a choice sibling would let the redo part
        // re-enter from the sibling's exit.
        const PlaceId body_in = fresh();
        const PlaceId body_out = fresh();
        net_.add_transition(std::nullopt, {entry}, {body_in}, path);
        build(*kids[0], path.child(0), body_in, body_out);
        build(*kids[1], path.child(1), body_out, body_in);
        net_.add_transition(std::nullopt, {body_out}, {exit}, path);
        break;
      }
    }
    NodeBlock block{entry, exit, {}};
    for (PlaceId p = first_place; p < net_.place_count(); ++p) block.internal.push_back(p);
    net_.set_block(path, std::move(block));
  }

 private:
  PlaceId fresh() { return net_.add_place("p" + std::to_string(net_.place_count())); }

  LabeledPetriNet& net_;
};

}  // namespace detail

/// Block-structured WF-net with the same visible language as `tree`.
/// Every transition remembers the tree node it came from.
inline LabeledPetriNet tree_to_petri_net(const ProcessTree& tree) {
  require_valid(tree);
  LabeledPetriNet net;
  const PlaceId source = net.add_place("source");
  const PlaceId sink = net.add_place("sink");
  net.set_source(source);
  net.set_sink(sink);
  detail::NetBuilder(net).build(tree.root(), NodePath{}, source, sink);
  return net;
}

/// Checks the WF-net shape: source without inputs, sink without outputs,
/// every node on a source-to-sink path.
inline bool is_workflow_net(const LabeledPetriNet& net) {
  const std::size_t np = net.place_count();
  const std::size_t nt = net.transitions().size();
  // Nodes: places [0, np), transitions [np, np + nt).
  std::vector<std::vector<std::size_t>> fwd(np + nt);
  std::vector<std::vector<std::size_t>> bwd(np + nt);
  for (const auto& a : net.arcs()) {
    const std::size_t p = a.place;
    const std::size_t t = np + a.transition;
    if (a.place_to_transition) {
      fwd[p].push_back(t);
      bwd[t].push_back(p);
    } else {
      fwd[t].push_back(p);
      bwd[p].push_back(t);
    }
  }
  if (!bwd[net.source()].empty() || !fwd[net.sink()].empty()) return false;
  auto reach = [&](std::size_t start, const std::vector<std::vector<std::size_t>>& g) {
    std::vector<char> seen(np + nt, 0);
    std::deque<std::size_t> queue{start};
    seen[start] = 1;
    while (!queue.empty()) {
      auto n = queue.front();
      queue.pop_front();
      for (auto m : g[n]) {
        if (!seen[m]) {
          seen[m] = 1;
          queue.push_back(m);
        }
      }
    }
    return seen;
  };
  const auto from_source = reach(net.source(), fwd);
  const auto to_sink = reach(net.sink(), bwd);
  for (std::size_t n = 0; n < np + nt; ++n) {
    if (!from_source[n] || !to_sink[n]) return false;
  }
  return true;
}

/// Visible label sequences of length <= max_len leading from the initial to
/// the final marking, by breadth-first exploration of (marking, prefix).
inline std::set<ActivitySequence> visible_language(const LabeledPetriNet& net, std::size_t max_len,
                                                   std::size_t state_cap = 2'000'000,
                                                   std::uint32_t token_cap = 64) {
  struct State {
    Marking marking;
    ActivitySequence prefix;
    bool operator==(const State&) const = default;
  };
  struct StateHash {
    std::size_t operator()(const State& s) const noexcept {
      std::size_t h = MarkingHash{}(s.marking);
      for (const auto& a : s.prefix) h = h * 31 + std::hash<std::string>{}(a);
      return h;
    }
  };
  std::set<ActivitySequence> out;
  const Marking final_marking = net.final_marking();
  std::unordered_set<State, StateHash> seen;
  std::deque<State> queue;
  State init{net.initial_marking(), {}};
  seen.insert(init);
  queue.push_back(std::move(init));
  while (!queue.empty()) {
    State s = std::move(queue.front());
    queue.pop_front();
    if (s.marking == final_marking) out.insert(s.prefix);
    for (TransitionId t : enabled(net, s.marking)) {
      const auto& tr = net.transition(t);
      if (tr.label && s.prefix.size() == max_len) continue;
      State next{fire(net, s.marking, t), s.prefix};
      if (tr.label) next.prefix.push_back(*tr.label);
      for (auto tokens : next.marking.tokens()) {
        if (tokens > token_cap) fail(ErrorCode::BudgetExceeded, "token cap exceeded during reachability");
      }
      if (seen.insert(next).second) {
        if (seen.size() > state_cap) fail(ErrorCode::BudgetExceeded, "reachability state cap exceeded");
        queue.push_back(std::move(next));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// PNML export (pnmlcoremodel)

inline std::string serialize_pnml(const LabeledPetriNet& net, std::string_view name = "net") {
  xml::Writer w;
  w.open("pnml");
  w.open("net", {{"id", "net1"}, {"type", "http://www.pnml.org/version-2009/grammar/pnmlcoremodel"}});
  w.open("name").text_element("text", name).close();
  w.open("page", {{"id", "n0"}});
  for (PlaceId p = 0; p < net.place_count(); ++p) {
    w.open("place", {{"id", net.place_name(p)}});
    w.open("name").text_element("text", net.place_name(p)).close();
    if (p == net.source()) w.open("initialMarking").text_element("text", "1").close();
    w.close();
  }
  for (const auto& t : net.transitions()) {
    w.open("transition", {{"id", t.name}});
    if (t.label) {
      w.open("name").text_element("text", *t.label).close();
    } else {
      w.leaf("toolspecific", {{"tool", "ProM"}, {"version", "6.4"}, {"activity", "$invisible$"}});
    }
    w.close();
  }
  std::size_t arc_id = 0;
  for (const auto& a : net.arcs()) {
    const auto& pname = net.place_name(a.place);
    const auto& tname = net.transition(a.transition).name;
    w.leaf("arc", {{"id", "a" + std::to_string(arc_id++)},
                   {"source", a.place_to_transition ? pname : tname},
                   {"target", a.place_to_transition ? tname : pname}});
  }
  w.close();  // page
  w.open("finalmarkings").open("marking");
  w.open("place", {{"idref", net.place_name(net.sink())}}).text_element("text", "1").close();
  w.close().close();
  return std::move(w).str();
}

}  // namespace itree

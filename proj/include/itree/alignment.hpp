#pragma once

#include <algorithm>
#include <cstdint>
#include <future>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "itree/error.hpp"
#include "itree/event_log.hpp"
#include "itree/petri_net.hpp"
#include "itree/process_tree.hpp"

namespace itree {

enum class MoveKind { Synchronous, LogMove, ModelMove };

constexpr std::string_view to_string(MoveKind k) {
  switch (k) {
    case MoveKind::Synchronous: return "sync";
    case MoveKind::LogMove: return "log";
    case MoveKind::ModelMove: return "model";
  }
  return "?";
}

struct Move {
  MoveKind kind;
  std::optional<std::string> log_activity;
  std::optional<TransitionId> transition;

  friend bool operator==(const Move&, const Move&) = default;
};

/// Standard unit costs: sync 0, silent model move 0, visible model move 1,
/// log move 1.
inline std::uint64_t move_cost(const LabeledPetriNet& net, const Move& m) {
  switch (m.kind) {
    case MoveKind::Synchronous: return 0;
    case MoveKind::LogMove: return 1;
    case MoveKind::ModelMove: return net.transition(*m.transition).silent() ? 0 : 1;
  }
  return 0;
}

struct Alignment {
  std::vector<Move> moves;
  std::uint64_t cost = 0;

  ActivitySequence log_projection() const {
    ActivitySequence out;
    for (const auto& m : moves) {
      if (m.log_activity) out.push_back(*m.log_activity);
    }
    return out;
  }

  std::vector<TransitionId> model_projection() const {
    std::vector<TransitionId> out;
    for (const auto& m : moves) {
      if (m.transition) out.push_back(*m.transition);
    }
    return out;
  }
};

struct AlignmentOptions {
  std::size_t state_cap = 1'000'000;  // expanded states
};

namespace detail {

struct ProductKey {
  Marking marking;
  std::size_t index;
  bool operator==(const ProductKey&) const = default;
};

struct ProductKeyHash {
  std::size_t operator()(const ProductKey& k) const noexcept {
    return MarkingHash{}(k.marking) * 1000003u ^ k.index;
  }
};

// Lower rank wins among equal f-scores.
inline int move_rank(const LabeledPetriNet& net, const Move& m) {
  switch (m.kind) {
    case MoveKind::Synchronous: return 0;
    case MoveKind::ModelMove: return net.transition(*m.transition).silent() ? 1 : 2;
    case MoveKind::LogMove: return 3;
  }
  return 4;
}

}  // namespace detail

/// Cost-minimal alignment of `trace` against the WF-net, by A* over the
/// synchronous product (marking x trace position). The heuristic counts the
/// remaining trace activities that label no transition at all; each of those
/// forces a log move, so it never overestimates.
inline Alignment align(const LabeledPetriNet& net, std::span<const std::string> trace,
                       const AlignmentOptions& options = {}) {
  const std::size_t n = trace.size();
  const auto labels = net.visible_labels();
  std::vector<std::uint64_t> unmatched_suffix(n + 1, 0);
  for (std::size_t i = n; i-- > 0;) {
    unmatched_suffix[i] = unmatched_suffix[i + 1] + (labels.contains(trace[i]) ? 0 : 1);
  }

  struct SearchNode {
    detail::ProductKey key;
    std::uint64_t g;
    std::int64_t parent;
    std::optional<Move> via;
    bool closed = false;
  };
  struct Entry {
    std::uint64_t f;
    int rank;
    std::uint64_t seq;
    std::size_t node;
    std::uint64_t g;
    bool operator>(const Entry& o) const {
      if (f != o.f) return f > o.f;
      if (rank != o.rank) return rank > o.rank;
      return seq > o.seq;
    }
  };

  std::vector<SearchNode> nodes;
  std::unordered_map<detail::ProductKey, std::size_t, detail::ProductKeyHash> index;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::uint64_t seq = 0;

  auto relax = [&](std::size_t from, detail::ProductKey key, Move move) {
    const std::uint64_t g = nodes[from].g + move_cost(net, move);
    const int rank = detail::move_rank(net, move);
    auto [it, inserted] = index.try_emplace(key, nodes.size());
    if (inserted) {
      nodes.push_back({std::move(key), g, static_cast<std::int64_t>(from), std::move(move)});
    } else {
      SearchNode& existing = nodes[it->second];
      if (existing.closed || existing.g <= g) return;
      existing.g = g;
      existing.parent = static_cast<std::int64_t>(from);
      existing.via = std::move(move);
    }
    const std::size_t id = it->second;
    open.push({g + unmatched_suffix[nodes[id].key.index], rank, seq++, id, g});
  };

  const Marking final_marking = net.final_marking();
  nodes.push_back({{net.initial_marking(), 0}, 0, -1, std::nullopt});
  index.emplace(nodes[0].key, 0);
  open.push({unmatched_suffix[0], 0, seq++, 0, 0});

  std::size_t expanded = 0;
  while (!open.empty()) {
    const Entry top = open.top();
    open.pop();
    SearchNode& cur = nodes[top.node];
    if (cur.closed || top.g != cur.g) continue;
    cur.closed = true;

    if (cur.key.index == n && cur.key.marking == final_marking) {
      Alignment result;
      result.cost = cur.g;
      for (std::int64_t at = static_cast<std::int64_t>(top.node); nodes[static_cast<std::size_t>(at)].via;
           at = nodes[static_cast<std::size_t>(at)].parent) {
        result.moves.push_back(*nodes[static_cast<std::size_t>(at)].via);
      }
      std::reverse(result.moves.begin(), result.moves.end());
      return result;
    }

    if (++expanded > options.state_cap) {
      fail(ErrorCode::SearchBudgetExceeded,
           "alignment search exceeded " + std::to_string(options.state_cap) + " states");
    }

    // Copies: relax() may reallocate `nodes`.
    const Marking marking = cur.key.marking;
    const std::size_t idx = cur.key.index;
    const std::size_t from = top.node;

    for (TransitionId t : enabled(net, marking)) {
      const auto& tr = net.transition(t);
      Marking next = fire(net, marking, t);
      if (tr.label && idx < n && *tr.label == trace[idx]) {
        relax(from, {next, idx + 1}, Move{MoveKind::Synchronous, trace[idx], t});
      }
      relax(from, {std::move(next), idx}, Move{MoveKind::ModelMove, std::nullopt, t});
    }
    if (idx < n) {
      relax(from, {marking, idx + 1}, Move{MoveKind::LogMove, trace[idx], std::nullopt});
    }
  }
  // Unreachable for WF-nets produced from valid trees.
  fail(ErrorCode::InvalidTree, "final marking unreachable");
}

/// Cost 0 alignment exists. Agrees with accepts() by construction of the net.
inline bool is_fitting(const ProcessTree& tree, std::span<const std::string> trace,
                       const AlignmentOptions& options = {}) {
  return align(tree_to_petri_net(tree), trace, options).cost == 0;
}

enum class Verdict { Accepted, Rejected, Unknown };

constexpr std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Accepted: return "accepted";
    case Verdict::Rejected: return "rejected";
    case Verdict::Unknown: return "unknown";
  }
  return "?";
}

struct VariantVerdict {
  std::size_t variant_id;
  Verdict verdict;

  friend bool operator==(const VariantVerdict&, const VariantVerdict&) = default;
};

/// One verdict per variant, in input order. A variant whose alignment runs
/// out of budget is reported Unknown, never guessed.
inline std::vector<VariantVerdict> conformance_report(const ProcessTree& tree, std::span<const TraceVariant> variants,
                                                      const AlignmentOptions& options = {},
                                                      unsigned threads = std::thread::hardware_concurrency()) {
  const LabeledPetriNet net = tree_to_petri_net(tree);
  std::vector<VariantVerdict> out(variants.size());
  auto judge = [&](std::size_t i) {
    Verdict v = Verdict::Unknown;
    try {
      v = align(net, variants[i].activities, options).cost == 0 ? Verdict::Accepted : Verdict::Rejected;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SearchBudgetExceeded) throw;
    }
    out[i] = {variants[i].variant_id, v};
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(variants.size())));
  if (threads <= 1) {
    for (std::size_t i = 0; i < variants.size(); ++i) judge(i);
    return out;
  }
  std::vector<std::future<void>> workers;
  for (unsigned w = 0; w < threads; ++w) {
    workers.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < variants.size(); i += threads) judge(i);
    }));
  }
  for (auto& f : workers) f.get();
  return out;
}

}  // namespace itree

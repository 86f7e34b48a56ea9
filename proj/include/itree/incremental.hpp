#pragma once

// Incremental discovery: extend a process tree so that it additionally
// accepts one new trace while every previously added trace stays accepted.
//
//  1. Align the new trace against the tree's net.
//  2. The deviation scope is the lowest common ancestor of every tree node
//     involved in a deviation. A visible model move counts its own node; a
//     log move next to one is taken as a substitution and adds nothing, any
//     other log move counts the node of the next model-side move (or the
//     previous one at the end of the trace).
//  3. Replay every trace through its alignment and cut out the sub-traces
//     produced inside the scope, one per entry-to-exit traversal.
//  4. Rediscover the scope subtree from those sub-traces and splice it in.
//  5. Verify all traces by alignment. On failure retry one level up; at the
//     root the whole tree is rediscovered, which always fits.

#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "itree/alignment.hpp"
#include "itree/error.hpp"
#include "itree/inductive_miner.hpp"
#include "itree/petri_net.hpp"
#include "itree/process_tree.hpp"

namespace itree {

using AddedTraceSet = std::set<ActivitySequence>;

struct AddTraceResult {
  ProcessTree tree;
  bool changed = false;
  NodePath initial_scope;                // where the deviations were located
  std::optional<NodePath> replaced_at;   // subtree actually replaced
  std::size_t escalations = 0;           // levels climbed after failed verification
};

namespace detail {

inline NodePath deviation_scope(const LabeledPetriNet& net, const Alignment& alignment) {
  std::optional<NodePath> scope;
  auto include = [&](const NodePath& p) { scope = scope ? common_ancestor(*scope, p) : p; };
  const auto& moves = alignment.moves;
  for (std::size_t i = 0; i < moves.size(); ++i) {
    const Move& m = moves[i];
    if (m.kind == MoveKind::ModelMove && !net.transition(*m.transition).silent()) {
      include(net.transition(*m.transition).node);
    } else if (m.kind == MoveKind::LogMove) {
      // Nearest model-side moves around this run of log moves.
      std::optional<std::size_t> prev;
      std::optional<std::size_t> next;
      for (std::size_t j = i; j-- > 0;) {
        if (moves[j].transition) {
          prev = j;
          break;
        }
      }
      for (std::size_t k = i + 1; k < moves.size(); ++k) {
        if (moves[k].transition) {
          next = k;
          break;
        }
      }
      auto visible_model_move = [&](std::optional<std::size_t> at) {
        return at && moves[*at].kind == MoveKind::ModelMove && !net.transition(*moves[*at].transition).silent();
      };
      if (visible_model_move(prev) || visible_model_move(next)) continue;  // substitution, already counted
      if (next) {
        include(net.transition(*moves[*next].transition).node);
      } else if (prev) {
        include(net.transition(*moves[*prev].transition).node);
      } else {
        include(NodePath{});
      }
    }
  }
  return scope.value_or(NodePath{});
}

/// Sub-traces observed inside the subtree at `scope`, one per traversal of
/// its block from entry to exit place, following the alignment's firing
/// sequence. Log moves adjacent to the block are attached to the traversal
/// they border.
inline std::vector<ActivitySequence> segments_through(const LabeledPetriNet& net, const Alignment& alignment,
                                                      const NodePath& scope) {
  const NodeBlock& block = net.block(scope);
  auto inside = [&](TransitionId t) { return scope.is_prefix_of(net.transition(t).node); };
  const auto& moves = alignment.moves;

  std::vector<ActivitySequence> out;
  ActivitySequence current;
  ActivitySequence pending;
  bool active = false;
  Marking marking = net.initial_marking();

  for (std::size_t i = 0; i < moves.size(); ++i) {
    const Move& m = moves[i];
    if (m.kind == MoveKind::LogMove) {
      if (active) {
        current.push_back(*m.log_activity);
        continue;
      }
      std::optional<bool> prev_inside;
      for (std::size_t j = i; j-- > 0;) {
        if (moves[j].transition) {
          prev_inside = inside(*moves[j].transition);
          break;
        }
      }
      std::optional<bool> next_inside;
      for (std::size_t k = i + 1; k < moves.size(); ++k) {
        if (moves[k].transition) {
          next_inside = inside(*moves[k].transition);
          break;
        }
      }
      if (prev_inside.value_or(false) && !out.empty()) {
        out.back().push_back(*m.log_activity);
      } else if (next_inside.value_or(false)) {
        pending.push_back(*m.log_activity);
      }
      continue;
    }

    const TransitionId t = *m.transition;
    marking = fire(net, marking, t);
    if (!inside(t)) continue;
    if (!active) {
      active = true;
      current = std::move(pending);
      pending.clear();
    }
    if (m.kind == MoveKind::Synchronous) current.push_back(*m.log_activity);
    const auto& post = net.transition(t).postset;
    const bool reaches_exit = std::find(post.begin(), post.end(), block.exit) != post.end();
    const bool drained = std::all_of(block.internal.begin(), block.internal.end(),
                                     [&](PlaceId p) { return marking[p] == 0; });
    if (reaches_exit && drained) {
      out.push_back(std::move(current));
      current.clear();
      active = false;
    }
  }
  if (active) out.push_back(std::move(current));
  return out;
}

inline bool all_fit(const ProcessTree& tree, const std::vector<ActivitySequence>& traces,
                    const AlignmentOptions& options) {
  const LabeledPetriNet net = tree_to_petri_net(tree);
  for (const auto& t : traces) {
    if (align(net, t, options).cost != 0) return false;
  }
  return true;
}

}  // namespace detail

/// Path of the smallest subtree containing every deviation of `new_trace`.
/// Throws TraceFits when there is nothing to locate.
inline NodePath locate_deviation_scope(const ProcessTree& model, std::span<const std::string> new_trace,
                                       const AlignmentOptions& options = {}) {
  const LabeledPetriNet net = tree_to_petri_net(model);
  const Alignment alignment = align(net, new_trace, options);
  if (alignment.cost == 0) fail(ErrorCode::TraceFits, "trace already fits the model");
  return detail::deviation_scope(net, alignment);
}

inline AddTraceResult add_trace_detailed(const ProcessTree& model, const AddedTraceSet& previously_added,
                                         const ActivitySequence& new_trace, const AlignmentOptions& options = {}) {
  const LabeledPetriNet net = tree_to_petri_net(model);

  std::vector<ActivitySequence> traces;
  std::vector<Alignment> alignments;
  for (const auto& sigma : previously_added) {
    Alignment a = align(net, sigma, options);
    if (a.cost != 0) {
      fail(ErrorCode::InconsistentInput, "a previously added trace does not fit the model");
    }
    traces.push_back(sigma);
    alignments.push_back(std::move(a));
  }

  Alignment deviating = align(net, new_trace, options);
  if (deviating.cost == 0) return {model, false, NodePath{}, std::nullopt, 0};

  const NodePath scope = detail::deviation_scope(net, deviating);
  if (!previously_added.contains(new_trace)) {
    traces.push_back(new_trace);
    alignments.push_back(std::move(deviating));
  }

  NodePath target = scope;
  std::size_t escalations = 0;
  while (true) {
    ProcessTree candidate = model;
    if (target.is_root()) {
      candidate = discover(std::set<ActivitySequence>(traces.begin(), traces.end()));
    } else {
      std::set<ActivitySequence> sublog;
      for (const auto& a : alignments) {
        for (auto& seg : detail::segments_through(net, a, target)) sublog.insert(std::move(seg));
      }
      if (!sublog.empty()) candidate = model.replace(target, discover(sublog).root_ptr());
    }
    if (detail::all_fit(candidate, traces, options)) {
      return {std::move(candidate), true, scope, target, escalations};
    }
    // Root rediscovery fits by the miner's guarantee; reaching this is a bug.
    if (target.is_root()) fail(ErrorCode::InvalidTree, "rediscovered model fails verification");
    target = target.parent();
    ++escalations;
  }
}

/// Returns a tree accepting `new_trace` and every trace of
/// `previously_added`. Unchanged when `new_trace` already fits.
inline ProcessTree add_trace(const ProcessTree& model, const AddedTraceSet& previously_added,
                             const ActivitySequence& new_trace, const AlignmentOptions& options = {}) {
  return add_trace_detailed(model, previously_added, new_trace, options).tree;
}

}  // namespace itree

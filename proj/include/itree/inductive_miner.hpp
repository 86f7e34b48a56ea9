#pragma once

// Inductive Miner (plain, no noise filtering). Recursively finds a cut in the
// directly-follows graph of the current sublog, splits the traces according
// to it and recurses. Cut order: exclusive choice, sequence, parallel, loop;
// when none applies, the flower model *(X(a1..ak), tau) is emitted.
// Every input trace is in the language of the result.

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "itree/error.hpp"
#include "itree/event_log.hpp"
#include "itree/process_tree.hpp"

namespace itree {

struct Dfg {
  std::set<std::string> activities;
  std::set<std::pair<std::string, std::string>> edges;
  std::set<std::string> start_activities;
  std::set<std::string> end_activities;
  bool contains_empty_trace = false;
};

template <typename Range>
Dfg build_dfg(const Range& traces) {
  Dfg dfg;
  for (const auto& trace : traces) {
    if (trace.empty()) {
      dfg.contains_empty_trace = true;
      continue;
    }
    dfg.start_activities.insert(trace.front());
    dfg.end_activities.insert(trace.back());
    for (std::size_t i = 0; i < trace.size(); ++i) {
      dfg.activities.insert(trace[i]);
      if (i + 1 < trace.size()) dfg.edges.emplace(trace[i], trace[i + 1]);
    }
  }
  return dfg;
}

namespace detail {

/// Works on activity indices; index order equals label order, which keeps
/// every iteration (and thus the output tree) deterministic.
class InductiveMiner {
 public:
  using Word = std::vector<int>;
  using Log = std::set<Word>;

  explicit InductiveMiner(const std::set<ActivitySequence>& traces) {
    std::set<std::string> alphabet;
    for (const auto& t : traces) alphabet.insert(t.begin(), t.end());
    names_.assign(alphabet.begin(), alphabet.end());
    std::map<std::string, int> ids;
    for (std::size_t i = 0; i < names_.size(); ++i) ids[names_[i]] = static_cast<int>(i);
    for (const auto& t : traces) {
      Word w;
      w.reserve(t.size());
      for (const auto& a : t) w.push_back(ids[a]);
      log_.insert(std::move(w));
    }
  }

  NodePtr run() { return mine(log_); }

 private:
  using Group = std::vector<int>;  // sorted activity ids

  struct Graph {
    std::vector<int> acts;  // sorted
    std::map<int, std::size_t> pos;
    std::vector<std::vector<char>> edge;  // edge[i][j] over positions
    std::set<int> starts;
    std::set<int> ends;
  };

  static Graph graph_of(const Log& log) {
    Graph g;
    std::set<int> acts;
    for (const auto& w : log) acts.insert(w.begin(), w.end());
    g.acts.assign(acts.begin(), acts.end());
    for (std::size_t i = 0; i < g.acts.size(); ++i) g.pos[g.acts[i]] = i;
    g.edge.assign(g.acts.size(), std::vector<char>(g.acts.size(), 0));
    for (const auto& w : log) {
      if (w.empty()) continue;
      g.starts.insert(w.front());
      g.ends.insert(w.back());
      for (std::size_t i = 0; i + 1 < w.size(); ++i) g.edge[g.pos[w[i]]][g.pos[w[i + 1]]] = 1;
    }
    return g;
  }

  NodePtr mine(const Log& log) {
    Log nonempty;
    bool has_empty = false;
    for (const auto& w : log) {
      if (w.empty()) {
        has_empty = true;
      } else {
        nonempty.insert(w);
      }
    }
    if (nonempty.empty()) return tau();
    NodePtr inner = mine_nonempty(nonempty);
    return has_empty ? choice({inner, tau()}) : inner;
  }

  NodePtr mine_nonempty(const Log& log) {
    const Graph g = graph_of(log);
    if (g.acts.size() == 1 &&
        std::all_of(log.begin(), log.end(), [](const Word& w) { return w.size() == 1; })) {
      return activity(names_[static_cast<std::size_t>(g.acts[0])]);
    }
    if (auto groups = xor_cut(g); groups.size() > 1) return split_xor(log, groups);
    if (auto groups = sequence_cut(g); groups.size() > 1) return split_sequence(log, groups);
    if (auto groups = parallel_cut(g); groups.size() > 1) return split_parallel(log, groups);
    if (auto groups = loop_cut(g); groups.size() > 1) return split_loop(log, groups);
    return flower(g);
  }

  // -- cut detection ---------------------------------------------------------

  static std::vector<Group> components(const Graph& g, const std::vector<std::vector<char>>& adjacent,
                                       const std::vector<char>& include) {
    const std::size_t n = g.acts.size();
    std::vector<int> comp(n, -1);
    std::vector<Group> out;
    for (std::size_t s = 0; s < n; ++s) {
      if (!include[s] || comp[s] >= 0) continue;
      const int c = static_cast<int>(out.size());
      out.emplace_back();
      std::vector<std::size_t> stack{s};
      comp[s] = c;
      while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        out[static_cast<std::size_t>(c)].push_back(g.acts[u]);
        for (std::size_t v = 0; v < n; ++v) {
          if (include[v] && comp[v] < 0 && adjacent[u][v]) {
            comp[v] = c;
            stack.push_back(v);
          }
        }
      }
      std::sort(out.back().begin(), out.back().end());
    }
    return out;
  }

  static std::vector<Group> xor_cut(const Graph& g) {
    const std::size_t n = g.acts.size();
    std::vector<std::vector<char>> undirected(n, std::vector<char>(n, 0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) undirected[i][j] = g.edge[i][j] || g.edge[j][i];
    }
    return components(g, undirected, std::vector<char>(n, 1));
  }

  static std::vector<std::vector<char>> closure(const Graph& g) {
    const std::size_t n = g.acts.size();
    auto reach = g.edge;
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        if (!reach[i][k]) continue;
        for (std::size_t j = 0; j < n; ++j) {
          if (reach[k][j]) reach[i][j] = 1;
        }
      }
    }
    return reach;
  }

  static std::vector<Group> sequence_cut(const Graph& g) {
    const std::size_t n = g.acts.size();
    const auto reach = closure(g);
    // Union-find over positions: start from strongly connected components,
    // then merge any two groups that are not strictly ordered.
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (reach[i][j] && reach[j][i]) parent[find(i)] = find(j);
      }
    }
    bool changed = true;
    while (changed) {
      changed = false;
      std::map<std::size_t, std::vector<std::size_t>> groups;
      for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(i);
      for (auto a = groups.begin(); a != groups.end() && !changed; ++a) {
        for (auto b = std::next(a); b != groups.end() && !changed; ++b) {
          bool forward = true;
          bool backward = true;
          for (auto x : a->second) {
            for (auto y : b->second) {
              forward = forward && reach[x][y] && !reach[y][x];
              backward = backward && reach[y][x] && !reach[x][y];
            }
          }
          if (!forward && !backward) {
            parent[find(a->first)] = find(b->first);
            changed = true;
          }
        }
      }
    }
    std::map<std::size_t, Group> by_root;
    for (std::size_t i = 0; i < n; ++i) by_root[find(i)].push_back(g.acts[i]);
    std::vector<Group> out;
    for (auto& [_, grp] : by_root) out.push_back(std::move(grp));
    if (out.size() < 2) return out;
    // Total order: a group precedes exactly as many groups as come after it.
    auto successors = [&](const Group& grp) {
      const std::size_t x = g.pos.at(grp.front());
      std::size_t count = 0;
      for (const auto& other : out) {
        if (&other != &grp && reach[x][g.pos.at(other.front())]) ++count;
      }
      return count;
    };
    std::vector<std::pair<std::size_t, Group>> keyed;
    for (const auto& grp : out) keyed.emplace_back(successors(grp), grp);
    std::sort(keyed.begin(), keyed.end(), [](const auto& l, const auto& r) { return l.first > r.first; });
    out.clear();
    for (auto& [_, grp] : keyed) out.push_back(std::move(grp));
    return out;
  }

  static std::vector<Group> parallel_cut(const Graph& g) {
    const std::size_t n = g.acts.size();
    std::vector<std::vector<char>> apart(n, std::vector<char>(n, 0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) apart[i][j] = !(g.edge[i][j] && g.edge[j][i]);
      }
    }
    auto groups = components(g, apart, std::vector<char>(n, 1));
    if (groups.size() < 2) return groups;
    auto complete = [&](const Group& grp) {
      bool has_start = false;
      bool has_end = false;
      for (int a : grp) {
        has_start = has_start || g.starts.contains(a);
        has_end = has_end || g.ends.contains(a);
      }
      return has_start && has_end;
    };
    std::vector<Group> good;
    std::vector<Group> deficient;
    for (auto& grp : groups) (complete(grp) ? good : deficient).push_back(std::move(grp));
    if (good.empty()) return {};
    for (const auto& d : deficient) good.front().insert(good.front().end(), d.begin(), d.end());
    std::sort(good.front().begin(), good.front().end());
    std::sort(good.begin(), good.end());
    return good;
  }

  /// Returns {do, redo...} or fewer than two groups when no loop cut exists.
  static std::vector<Group> loop_cut(const Graph& g) {
    const std::size_t n = g.acts.size();
    std::vector<char> in_do(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      in_do[i] = g.starts.contains(g.acts[i]) || g.ends.contains(g.acts[i]);
    }
    auto is_start = [&](std::size_t i) { return g.starts.contains(g.acts[i]); };
    auto is_end = [&](std::size_t i) { return g.ends.contains(g.acts[i]); };

    bool changed = true;
    std::vector<Group> redo;
    while (changed) {
      changed = false;
      std::vector<char> rest(n, 0);
      for (std::size_t i = 0; i < n; ++i) rest[i] = !in_do[i];
      std::vector<std::vector<char>> undirected(n, std::vector<char>(n, 0));
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) undirected[i][j] = g.edge[i][j] || g.edge[j][i];
      }
      redo = components(g, undirected, rest);
      for (const auto& comp : redo) {
        bool ok = true;
        for (int a : comp) {
          const std::size_t c = g.pos.at(a);
          bool entered_from_end = false;
          bool exits_to_start = false;
          for (std::size_t x = 0; x < n && ok; ++x) {
            if (!in_do[x]) continue;
            if (g.edge[x][c]) {
              if (!is_end(x)) ok = false;
              entered_from_end = true;
            }
            if (g.edge[c][x]) {
              if (!is_start(x)) ok = false;
              exits_to_start = true;
            }
          }
          // An entry point of the redo part must follow every end activity;
          // an exit point must precede every start activity.
          for (std::size_t x = 0; x < n && ok; ++x) {
            if (entered_from_end && is_end(x) && !g.edge[x][c]) ok = false;
            if (exits_to_start && is_start(x) && !g.edge[c][x]) ok = false;
          }
          if (!ok) break;
        }
        if (!ok) {
          for (int a : comp) in_do[g.pos.at(a)] = 1;
          changed = true;
          break;
        }
      }
    }
    if (redo.empty()) return {};
    Group body;
    for (std::size_t i = 0; i < n; ++i) {
      if (in_do[i]) body.push_back(g.acts[i]);
    }
    std::vector<Group> out{body};
    out.insert(out.end(), redo.begin(), redo.end());
    return out;
  }

  // -- log splitting ---------------------------------------------------------

  static std::map<int, std::size_t> owner_map(const std::vector<Group>& groups) {
    std::map<int, std::size_t> owner;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      for (int a : groups[i]) owner[a] = i;
    }
    return owner;
  }

  NodePtr split_xor(const Log& log, const std::vector<Group>& groups) {
    const auto owner = owner_map(groups);
    std::vector<Log> sub(groups.size());
    for (const auto& w : log) sub[owner.at(w.front())].insert(w);
    std::vector<NodePtr> kids;
    for (const auto& s : sub) kids.push_back(mine(s));
    return choice(std::move(kids));
  }

  NodePtr split_sequence(const Log& log, const std::vector<Group>& groups) {
    const auto owner = owner_map(groups);
    std::vector<Log> sub(groups.size());
    for (const auto& w : log) {
      std::vector<Word> parts(groups.size());
      for (int a : w) parts[owner.at(a)].push_back(a);
      for (std::size_t i = 0; i < groups.size(); ++i) sub[i].insert(std::move(parts[i]));
    }
    std::vector<NodePtr> kids;
    for (const auto& s : sub) kids.push_back(mine(s));
    return sequence(std::move(kids));
  }

  NodePtr split_parallel(const Log& log, const std::vector<Group>& groups) {
    // Projection onto each group; identical to the sequence split.
    const auto owner = owner_map(groups);
    std::vector<Log> sub(groups.size());
    for (const auto& w : log) {
      std::vector<Word> parts(groups.size());
      for (int a : w) parts[owner.at(a)].push_back(a);
      for (std::size_t i = 0; i < groups.size(); ++i) sub[i].insert(std::move(parts[i]));
    }
    std::vector<NodePtr> kids;
    for (const auto& s : sub) kids.push_back(mine(s));
    return parallel(std::move(kids));
  }

  NodePtr split_loop(const Log& log, const std::vector<Group>& groups) {
    const std::set<int> body(groups.front().begin(), groups.front().end());
    Log do_log;
    Log redo_log;
    for (const auto& w : log) {
      Word segment;
      bool in_body = true;
      for (int a : w) {
        const bool a_in_body = body.contains(a);
        if (a_in_body != in_body) {
          (in_body ? do_log : redo_log).insert(std::move(segment));
          segment.clear();
          in_body = a_in_body;
        }
        segment.push_back(a);
      }
      (in_body ? do_log : redo_log).insert(std::move(segment));
    }
    return loop(mine(do_log), mine(redo_log));
  }

  NodePtr flower(const Graph& g) {
    std::vector<NodePtr> leaves;
    for (int a : g.acts) leaves.push_back(activity(names_[static_cast<std::size_t>(a)]));
    NodePtr body = leaves.size() == 1 ? leaves.front() : choice(std::move(leaves));
    return loop(std::move(body), tau());
  }

  std::vector<std::string> names_;
  Log log_;
};

}  // namespace detail

/// Discovers a process tree whose language contains every trace. Trace
/// frequencies play no role; duplicates collapse.
inline ProcessTree discover(const std::set<ActivitySequence>& traces) {
  if (traces.empty()) fail(ErrorCode::EmptyInput, "cannot discover a model from zero traces");
  return ProcessTree(detail::InductiveMiner(traces).run());
}

inline ProcessTree discover_from_variants(std::span<const TraceVariant> variants) {
  if (variants.empty()) fail(ErrorCode::EmptySelection, "no variants selected");
  std::set<ActivitySequence> traces;
  for (const auto& v : variants) traces.insert(v.activities);
  return discover(traces);
}

}  // namespace itree

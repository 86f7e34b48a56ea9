#pragma once

// Interactive sessions: a loaded log, the tree under construction, the set
// of explicitly added variants, per-variant verdicts and a linear
// undo/redo history.
//
// Every operation works on a copy of the session state and commits it only
// after it succeeded, so a failing request leaves the session untouched.
// Requests on one session are serialized by its mutex.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "itree/alignment.hpp"
#include "itree/error.hpp"
#include "itree/event_log.hpp"
#include "itree/incremental.hpp"
#include "itree/inductive_miner.hpp"
#include "itree/io.hpp"
#include "itree/petri_net.hpp"
#include "itree/process_tree.hpp"
#include "itree/ptml.hpp"
#include "itree/wire.hpp"

namespace itree {

struct Snapshot {
  std::optional<ProcessTree> tree;
  std::set<std::size_t> added_variant_ids;
};

struct SessionState {
  std::string session_id;
  std::shared_ptr<const EventLog> log;
  std::shared_ptr<const std::vector<TraceVariant>> variants;
  std::optional<ProcessTree> tree;
  std::set<std::size_t> added_variant_ids;
  std::map<std::size_t, Verdict> flags;  // every variant id has an entry
  std::vector<Snapshot> history;          // history[history_cursor] is current
  std::size_t history_cursor = 0;

  const std::vector<TraceVariant>& variant_list() const {
    static const std::vector<TraceVariant> none;
    return variants ? *variants : none;
  }
  bool can_undo() const { return history_cursor > 0; }
  bool can_redo() const { return history_cursor + 1 < history.size(); }
};

struct TreeEdit {
  enum class Op { Insert, Remove, Shift, SetLabel };
  Op op = Op::Insert;
  NodePath path;
  InsertPosition position = InsertPosition::Below;
  NodePtr node;
  ShiftDirection direction = ShiftDirection::Left;
  std::string label;
};

struct SessionOptions {
  AlignmentOptions alignment{};
  std::size_t history_cap = 100;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  // Called with the operation name right before a commit; throwing from it
  // aborts the operation. Used to inject faults in tests.
  std::function<void(std::string_view)> before_commit;
};

namespace wire {

inline json variant_to_json(const TraceVariant& v, std::size_t total_cases, const SessionState* s = nullptr) {
  json out = {{"variant_id", v.variant_id},
              {"activities", v.activities},
              {"case_count", v.case_count},
              {"share", decimal_fraction(v.case_count, total_cases)}};
  if (s) {
    out["added"] = s->added_variant_ids.contains(v.variant_id);
    auto it = s->flags.find(v.variant_id);
    out["verdict"] = to_string(it == s->flags.end() ? Verdict::Unknown : it->second);
  }
  return out;
}

inline json variants_to_json(const SessionState& s) {
  std::size_t total = 0;
  for (const auto& v : s.variant_list()) total += v.case_count;
  json rows = json::array();
  for (const auto& v : s.variant_list()) rows.push_back(variant_to_json(v, total, &s));
  return {{"total_cases", total}, {"variants", std::move(rows)}};
}

inline json verdicts_to_json(const SessionState& s) {
  json out = json::array();
  for (const auto& [id, v] : s.flags) out.push_back({{"variant_id", id}, {"verdict", to_string(v)}});
  return out;
}

/// What most mutating endpoints answer with.
inline json session_payload(const SessionState& s) {
  json out = {{"session_id", s.session_id},
              {"tree", s.tree ? tree_to_json(*s.tree) : json(nullptr)},
              {"violations", s.tree ? violations_to_json(validate(*s.tree)) : json::array()},
              {"added_variant_ids", s.added_variant_ids},
              {"verdicts", verdicts_to_json(s)},
              {"history", {{"cursor", s.history_cursor}, {"size", s.history.size()},
                           {"can_undo", s.can_undo()}, {"can_redo", s.can_redo()}}}};
  return out;
}

inline json snapshot_to_json(const Snapshot& s) {
  return {{"tree", s.tree ? tree_to_json(*s.tree) : json(nullptr)}, {"added_variant_ids", s.added_variant_ids}};
}

inline Snapshot snapshot_from_json(const json& j) {
  Snapshot s;
  if (!j.at("tree").is_null()) s.tree = tree_from_json(j.at("tree"));
  s.added_variant_ids = j.at("added_variant_ids").get<std::set<std::size_t>>();
  return s;
}

/// Full state for persistence. The log is kept as its variants (activities,
/// counts, case ids); event attributes are not persisted.
inline json state_to_json(const SessionState& s) {
  json variants = json::array();
  for (const auto& v : s.variant_list()) {
    variants.push_back({{"variant_id", v.variant_id},
                        {"activities", v.activities},
                        {"case_count", v.case_count},
                        {"case_ids", v.case_ids}});
  }
  json history = json::array();
  for (const auto& h : s.history) history.push_back(snapshot_to_json(h));
  json flags = json::object();
  for (const auto& [id, v] : s.flags) flags[std::to_string(id)] = to_string(v);
  return {{"session_id", s.session_id},
          {"has_log", static_cast<bool>(s.log)},
          {"source_name", s.log ? s.log->source_name : ""},
          {"variants", std::move(variants)},
          {"tree", s.tree ? tree_to_json(*s.tree) : json(nullptr)},
          {"added_variant_ids", s.added_variant_ids},
          {"flags", std::move(flags)},
          {"history", std::move(history)},
          {"history_cursor", s.history_cursor}};
}

inline SessionState state_from_json(const json& j) {
  SessionState s;
  s.session_id = j.at("session_id").get<std::string>();
  if (j.at("has_log").get<bool>()) {
    auto variants = std::make_shared<std::vector<TraceVariant>>();
    auto log = std::make_shared<EventLog>();
    log->source_name = j.at("source_name").get<std::string>();
    std::size_t total = 0;
    for (const auto& v : j.at("variants")) total += v.at("case_count").get<std::size_t>();
    for (const auto& v : j.at("variants")) {
      TraceVariant tv;
      tv.variant_id = v.at("variant_id").get<std::size_t>();
      tv.activities = v.at("activities").get<ActivitySequence>();
      tv.case_count = v.at("case_count").get<std::size_t>();
      tv.case_ids = v.at("case_ids").get<std::vector<std::string>>();
      tv.frequency_share = static_cast<double>(tv.case_count) / static_cast<double>(total);
      for (const auto& id : tv.case_ids) {
        Trace t;
        t.case_id = id;
        for (const auto& a : tv.activities) {
          t.events.push_back({id, a, std::nullopt, {}});
          log->activity_alphabet.insert(a);
        }
        log->traces.push_back(std::move(t));
      }
      variants->push_back(std::move(tv));
    }
    s.log = std::move(log);
    s.variants = std::move(variants);
  }
  if (!j.at("tree").is_null()) s.tree = tree_from_json(j.at("tree"));
  s.added_variant_ids = j.at("added_variant_ids").get<std::set<std::size_t>>();
  for (const auto& [k, v] : j.at("flags").items()) s.flags[std::stoull(k)] = verdict_from_string(v.get<std::string>());
  for (const auto& h : j.at("history")) s.history.push_back(snapshot_from_json(h));
  s.history_cursor = j.at("history_cursor").get<std::size_t>();
  if (s.history.empty() || s.history_cursor >= s.history.size()) {
    fail(ErrorCode::InvalidRequest, "persisted session " + s.session_id + " has a broken history");
  }
  return s;
}

}  // namespace wire

/// Stable digest of everything a client can observe about a session.
inline std::size_t state_fingerprint(const SessionState& s) {
  return std::hash<std::string>{}(wire::state_to_json(s).dump());
}

class SessionService {
 public:
  explicit SessionService(SessionOptions options = {}) : options_(std::move(options)) {}

  const SessionOptions& options() const { return options_; }
  SessionOptions& options() { return options_; }

  std::string create_session() {
    auto session = std::make_shared<Session>();
    std::lock_guard lock(map_mutex_);
    std::string id;
    do {
      id = fresh_id();
    } while (sessions_.contains(id));
    session->state.session_id = id;
    session->state.history.push_back(Snapshot{});
    sessions_.emplace(id, std::move(session));
    return id;
  }

  std::vector<std::string> session_ids() const {
    std::lock_guard lock(map_mutex_);
    std::vector<std::string> out;
    for (const auto& [id, s] : sessions_) out.push_back(id);
    return out;
  }

  SessionState state(const std::string& id) const {
    auto s = find(id);
    std::lock_guard lock(s->mutex);
    return s->state;
  }

  std::size_t fingerprint(const std::string& id) const { return state_fingerprint(state(id)); }

  /// Replaces the log; tree, added set, verdicts and history are reset.
  SessionState upload_log(const std::string& id, std::string_view xes_bytes, std::string source_name = "") {
    auto log = std::make_shared<const EventLog>(parse_xes(xes_bytes, std::move(source_name)));
    auto variants = std::make_shared<const std::vector<TraceVariant>>(extract_variants(*log));
    return mutate(id, "upload_log", [&](SessionState& s) {
      s.log = log;
      s.variants = variants;
      s.tree.reset();
      s.added_variant_ids.clear();
      s.flags.clear();
      for (const auto& v : *variants) s.flags[v.variant_id] = Verdict::Unknown;
      s.history.assign(1, Snapshot{});
      s.history_cursor = 0;
    });
  }

  SessionState discover_initial(const std::string& id, const std::vector<std::size_t>& variant_ids) {
    return mutate(id, "discover", [&](SessionState& s) {
      const auto selected = select(s, variant_ids);
      s.tree = discover_from_variants(selected);
      s.added_variant_ids.clear();
      for (const auto& v : selected) s.added_variant_ids.insert(v.variant_id);
      recompute_flags(s, true);
      push_snapshot(s);
    });
  }

  /// Adds the selected variants one at a time, in variant id order.
  SessionState extend_model(const std::string& id, const std::vector<std::size_t>& variant_ids) {
    return mutate(id, "extend", [&](SessionState& s) {
      require_log(s);
      if (!s.tree) fail(ErrorCode::NoModel, "no model to extend; discover or import one first");
      require_valid(*s.tree);
      auto selected = select(s, variant_ids);
      std::sort(selected.begin(), selected.end(),
                [](const TraceVariant& a, const TraceVariant& b) { return a.variant_id < b.variant_id; });

      AddedTraceSet added;
      const LabeledPetriNet net = tree_to_petri_net(*s.tree);
      for (auto vid : s.added_variant_ids) {
        const auto& v = s.variant_list().at(vid);
        if (align(net, v.activities, options_.alignment).cost != 0) {
          fail(ErrorCode::InconsistentModel,
               "added variant " + std::to_string(vid) + " no longer fits the model; re-discover or edit first");
        }
        added.insert(v.activities);
      }
      ProcessTree model = *s.tree;
      for (const auto& v : selected) {
        try {
          model = add_trace(model, added, v.activities, options_.alignment);
        } catch (const Error& e) {
          if (e.code() == ErrorCode::InconsistentInput) fail(ErrorCode::InconsistentModel, e.what());
          throw;
        }
        added.insert(v.activities);
        s.added_variant_ids.insert(v.variant_id);
      }
      s.tree = std::move(model);
      recompute_flags(s, true);
      push_snapshot(s);
    });
  }

  SessionState edit_tree(const std::string& id, const TreeEdit& edit) {
    return mutate(id, "edit", [&](SessionState& s) {
      if (!s.tree) fail(ErrorCode::NoModel, "no model to edit");
      switch (edit.op) {
        case TreeEdit::Op::Insert:
          if (!edit.node) fail(ErrorCode::InvalidRequest, "insert needs a node");
          s.tree = insert_node(*s.tree, edit.path, edit.position, edit.node);
          break;
        case TreeEdit::Op::Remove: s.tree = remove_subtree(*s.tree, edit.path); break;
        case TreeEdit::Op::Shift: s.tree = shift_subtree(*s.tree, edit.path, edit.direction); break;
        case TreeEdit::Op::SetLabel: s.tree = set_label(*s.tree, edit.path, edit.label); break;
      }
      mark_unknown(s);
      push_snapshot(s);
    });
  }

  SessionState conformance_check(const std::string& id) {
    return mutate(id, "conformance", [&](SessionState& s) {
      if (!s.tree) fail(ErrorCode::NoModel, "no model to check against");
      require_valid(*s.tree);
      recompute_flags(s, false);
    });
  }

  SessionState undo(const std::string& id) {
    return mutate(id, "undo", [&](SessionState& s) {
      if (!s.can_undo()) fail(ErrorCode::NothingToUndo, "already at the oldest step");
      --s.history_cursor;
      restore(s);
    });
  }

  SessionState redo(const std::string& id) {
    return mutate(id, "redo", [&](SessionState& s) {
      if (!s.can_redo()) fail(ErrorCode::NothingToRedo, "already at the newest step");
      ++s.history_cursor;
      restore(s);
    });
  }

  SessionState import_tree(const std::string& id, std::string_view ptml_bytes) {
    return import_tree(id, parse_ptml(ptml_bytes));
  }

  SessionState import_tree(const std::string& id, const ProcessTree& tree) {
    return mutate(id, "import", [&](SessionState& s) {
      s.tree = tree;
      s.added_variant_ids.clear();
      mark_unknown(s);
      push_snapshot(s);
    });
  }

  std::string export_model(const std::string& id, std::string_view format) const {
    const SessionState s = state(id);
    if (!s.tree) fail(ErrorCode::NoModel, "no model to export");
    if (format == "ptml") return serialize_ptml(*s.tree);
    if (format == "pnml") {
      require_valid(*s.tree);
      return serialize_pnml(tree_to_petri_net(*s.tree));
    }
    fail(ErrorCode::InvalidRequest, "unknown export format '" + std::string(format) + "' (ptml|pnml)");
  }

  std::vector<ActivityStat> activities(const std::string& id) const {
    const SessionState s = state(id);
    require_log(s);
    return list_activities(*s.log, s.tree ? &*s.tree : nullptr);
  }

  // -- persistence --------------------------------------------------------

  void save_all(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    for (const auto& id : session_ids()) {
      io::write_file(dir / (id + ".json"), wire::state_to_json(state(id)).dump());
    }
  }

  std::size_t load_all(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) return 0;
    std::size_t n = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.path().extension() != ".json") continue;
      SessionState st;
      try {
        st = wire::state_from_json(nlohmann::json::parse(io::read_file(entry.path())));
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::InvalidRequest, entry.path().string() + ": " + e.what());
      }
      auto session = std::make_shared<Session>();
      session->state = std::move(st);
      std::lock_guard lock(map_mutex_);
      sessions_[session->state.session_id] = std::move(session);
      ++n;
    }
    return n;
  }

 private:
  struct Session {
    mutable std::mutex mutex;
    SessionState state;
  };

  std::shared_ptr<Session> find(const std::string& id) const {
    std::lock_guard lock(map_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) fail(ErrorCode::UnknownSession, "no session '" + id + "'");
    return it->second;
  }

  template <typename Fn>
  SessionState mutate(const std::string& id, std::string_view op, Fn&& fn) {
    auto session = find(id);
    std::lock_guard lock(session->mutex);
    SessionState next = session->state;
    fn(next);
    if (options_.before_commit) options_.before_commit(op);
    session->state = next;
    return next;
  }

  static void require_log(const SessionState& s) {
    if (!s.log) fail(ErrorCode::NoLog, "no event log loaded");
  }

  static std::vector<TraceVariant> select(const SessionState& s, const std::vector<std::size_t>& ids) {
    require_log(s);
    if (ids.empty()) fail(ErrorCode::EmptySelection, "no variants selected");
    std::vector<TraceVariant> out;
    std::set<std::size_t> seen;
    for (auto vid : ids) {
      if (vid >= s.variant_list().size()) fail(ErrorCode::UnknownVariant, "no variant " + std::to_string(vid));
      if (seen.insert(vid).second) out.push_back(s.variant_list()[vid]);
    }
    return out;
  }

  // Added variants fit by construction after discover/extend; everything
  // else is decided by alignments.
  void recompute_flags(SessionState& s, bool added_fit) const {
    std::vector<TraceVariant> todo;
    for (const auto& v : s.variant_list()) {
      if (added_fit && s.added_variant_ids.contains(v.variant_id)) {
        s.flags[v.variant_id] = Verdict::Accepted;
      } else {
        todo.push_back(v);
      }
    }
    for (const auto& r : conformance_report(*s.tree, todo, options_.alignment, options_.threads)) {
      s.flags[r.variant_id] = r.verdict;
    }
  }

  static void mark_unknown(SessionState& s) {
    for (auto& [id, v] : s.flags) v = Verdict::Unknown;
  }

  void push_snapshot(SessionState& s) const {
    s.history.resize(s.history_cursor + 1);
    s.history.push_back(Snapshot{s.tree, s.added_variant_ids});
    while (s.history.size() > std::max<std::size_t>(1, options_.history_cap)) s.history.erase(s.history.begin());
    s.history_cursor = s.history.size() - 1;
  }

  static void restore(SessionState& s) {
    const Snapshot& snap = s.history[s.history_cursor];
    s.tree = snap.tree;
    s.added_variant_ids = snap.added_variant_ids;
    mark_unknown(s);
  }

  static std::string fresh_id() {
    static std::atomic<std::uint64_t> counter{0};
    thread_local std::mt19937_64 rng{std::random_device{}()};
    const std::uint64_t x = rng() ^ (counter++ * 0x9e3779b97f4a7c15ULL);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 0; i < 16; ++i) out[static_cast<std::size_t>(i)] = hex[(x >> (4 * i)) & 0xF];
    return out;
  }

  SessionOptions options_;
  mutable std::mutex map_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace itree

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "itree/error.hpp"
#include "itree/io.hpp"
#include "itree/process_tree.hpp"
#include "itree/xml.hpp"

namespace itree {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;
using AttributeValue = std::variant<std::string, std::int64_t, double, bool, Timestamp>;

struct Event {
  std::string case_id;
  std::string activity;
  std::optional<Timestamp> complete_time;
  std::map<std::string, AttributeValue> attributes;  // everything except concept:name / time:timestamp
};

struct Trace {
  std::string case_id;
  std::vector<Event> events;

  ActivitySequence activities() const {
    ActivitySequence out;
    out.reserve(events.size());
    for (const auto& e : events) out.push_back(e.activity);
    return out;
  }
};

struct EventLog {
  std::vector<Trace> traces;
  std::set<std::string> activity_alphabet;
  std::string source_name;
};

struct TraceVariant {
  std::size_t variant_id = 0;
  ActivitySequence activities;
  std::size_t case_count = 0;
  std::vector<std::string> case_ids;
  double frequency_share = 0.0;
};

// ---------------------------------------------------------------------------
// ISO-8601 timestamps as they appear in XES date attributes.

namespace detail {

inline bool read_digits(std::string_view s, std::size_t& pos, std::size_t n, int& out) {
  if (pos + n > s.size()) return false;
  int v = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  pos += n;
  return true;
}

}  // namespace detail

/// Parses YYYY-MM-DD[Thh:mm[:ss[.fff]]][Z|+hh:mm|+hhmm] into UTC milliseconds.
inline std::optional<Timestamp> parse_timestamp(std::string_view s) {
  using namespace std::chrono;
  std::size_t pos = 0;
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  if (!detail::read_digits(s, pos, 4, y) || pos >= s.size() || s[pos++] != '-' ||
      !detail::read_digits(s, pos, 2, mo) || pos >= s.size() || s[pos++] != '-' ||
      !detail::read_digits(s, pos, 2, d)) {
    return std::nullopt;
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  std::int64_t millis = 0;
  if (pos < s.size() && (s[pos] == 'T' || s[pos] == ' ')) {
    ++pos;
    if (!detail::read_digits(s, pos, 2, h) || pos >= s.size() || s[pos++] != ':' ||
        !detail::read_digits(s, pos, 2, mi)) {
      return std::nullopt;
    }
    if (pos < s.size() && s[pos] == ':') {
      ++pos;
      if (!detail::read_digits(s, pos, 2, sec)) return std::nullopt;
      if (pos < s.size() && (s[pos] == '.' || s[pos] == ',')) {
        ++pos;
        int scale = 100;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
          millis += (s[pos] - '0') * scale;
          scale /= 10;
          ++pos;
        }
      }
    }
  }
  if (h > 24 || mi > 59 || sec > 60) return std::nullopt;
  int offset_minutes = 0;
  if (pos < s.size()) {
    if (s[pos] == 'Z') {
      ++pos;
    } else if (s[pos] == '+' || s[pos] == '-') {
      const int sign = s[pos] == '-' ? -1 : 1;
      ++pos;
      int oh = 0, om = 0;
      if (!detail::read_digits(s, pos, 2, oh)) return std::nullopt;
      if (pos < s.size() && s[pos] == ':') ++pos;
      if (pos < s.size() && !detail::read_digits(s, pos, 2, om)) return std::nullopt;
      offset_minutes = sign * (oh * 60 + om);
    } else {
      return std::nullopt;
    }
  }
  if (pos != s.size()) return std::nullopt;
  const auto local = sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec} + milliseconds{millis};
  return time_point_cast<milliseconds>(local - minutes{offset_minutes});
}

inline std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  auto rest = t - day_point;
  const auto h = duration_cast<hours>(rest);
  rest -= h;
  const auto m = duration_cast<minutes>(rest);
  rest -= m;
  const auto s = duration_cast<seconds>(rest);
  rest -= s;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(h.count()),
                static_cast<int>(m.count()), static_cast<int>(s.count()), static_cast<int>(rest.count()));
  return buf;
}

// ---------------------------------------------------------------------------
// XES

namespace detail {

class XesHandler final : public xml::SaxHandler {
 public:
  explicit XesHandler(EventLog& log) : log_(log) {}

  void start_element(std::string_view name, const xml::Attributes& attrs) override {
    const bool under_log = stack_.size() == 1 && stack_.back() == "log";
    const bool under_trace = !stack_.empty() && stack_.back() == "trace";
    const bool under_event = !stack_.empty() && stack_.back() == "event";
    stack_.emplace_back(name);
    if (stack_.size() == 1) {
      if (name != "log") fail(ErrorCode::MalformedXml, "XES root element must be <log>");
      return;
    }
    if (name == "trace" && under_log) {
      in_trace_ = true;
      trace_ = Trace{};
      trace_case_id_.reset();
      return;
    }
    if (name == "event" && under_trace && in_trace_) {
      in_event_ = true;
      event_ = Event{};
      return;
    }
    if (under_event && in_event_) {
      attribute(name, attrs, true);
    } else if (under_trace && in_trace_) {
      attribute(name, attrs, false);
    }
  }

  void end_element(std::string_view name) override {
    const bool direct_child_of_trace = stack_.size() >= 2 && stack_[stack_.size() - 2] == "trace";
    stack_.pop_back();
    if (name == "event" && in_event_ && direct_child_of_trace) {
      in_event_ = false;
      if (event_.activity.empty()) {
        fail(ErrorCode::MissingActivity,
             "event " + std::to_string(trace_.events.size()) + " of trace " + std::to_string(trace_index_) +
                 " has no concept:name");
      }
      trace_.events.push_back(std::move(event_));
      return;
    }
    if (name == "trace" && in_trace_ && stack_.size() == 1) {
      in_trace_ = false;
      trace_.case_id = trace_case_id_.value_or("case_" + std::to_string(trace_index_));
      for (auto& e : trace_.events) {
        e.case_id = trace_.case_id;
        log_.activity_alphabet.insert(e.activity);
      }
      order_events(trace_.events);
      log_.traces.push_back(std::move(trace_));
      ++trace_index_;
    }
  }

 private:
  // Sort by completion time when every event carries one; keep file order
  // otherwise. stable_sort keeps file order among equal timestamps.
  static void order_events(std::vector<Event>& events) {
    const bool all_timed = std::all_of(events.begin(), events.end(), [](const Event& e) { return e.complete_time.has_value(); });
    if (!all_timed) return;
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return *a.complete_time < *b.complete_time; });
  }

  void attribute(std::string_view type, const xml::Attributes& attrs, bool on_event) {
    const auto key = xml::find_attribute(attrs, "key");
    const auto value = xml::find_attribute(attrs, "value");
    if (!key || !value) return;
    if (!on_event) {
      if (*key == "concept:name" && type == "string" && !trace_case_id_) trace_case_id_ = std::string(*value);
      return;
    }
    if (*key == "concept:name" && type == "string") {
      if (event_.activity.empty()) event_.activity = std::string(*value);
      return;
    }
    if (*key == "time:timestamp" && type == "date") {
      if (!event_.complete_time) {
        event_.complete_time = parse_timestamp(*value);
        if (event_.complete_time) return;
      } else {
        return;
      }
    }
    AttributeValue v;
    if (type == "int") {
      try {
        v = static_cast<std::int64_t>(std::stoll(std::string(*value)));
      } catch (...) {
        v = std::string(*value);
      }
    } else if (type == "float") {
      try {
        v = std::stod(std::string(*value));
      } catch (...) {
        v = std::string(*value);
      }
    } else if (type == "boolean") {
      v = (*value == "true" || *value == "TRUE" || *value == "True" || *value == "1");
    } else if (type == "date") {
      if (auto ts = parse_timestamp(*value)) {
        v = *ts;
      } else {
        v = std::string(*value);
      }
    } else {
      v = std::string(*value);
    }
    event_.attributes.try_emplace(std::string(*key), std::move(v));
  }

  EventLog& log_;
  std::vector<std::string> stack_;
  bool in_trace_ = false;
  bool in_event_ = false;
  Trace trace_;
  Event event_;
  std::optional<std::string> trace_case_id_;
  std::size_t trace_index_ = 0;
};

}  // namespace detail

/// Parses XES (plain or gzip-compressed). A trace without concept:name gets
/// the synthetic id "case_<index>"; an event without one rejects the input.
inline EventLog parse_xes(std::string_view bytes, std::string source_name = "") {
  std::string inflated;
  if (io::is_gzip(bytes)) {
    inflated = io::gunzip(bytes);
    bytes = inflated;
  }
  EventLog log;
  log.source_name = std::move(source_name);
  detail::XesHandler handler(log);
  xml::parse_sax(bytes, handler);
  return log;
}

// ---------------------------------------------------------------------------

/// Distinct activity sequences, most frequent first; equal counts are ordered
/// lexicographically by their activity sequence. Ids are ranks.
inline std::vector<TraceVariant> extract_variants(const EventLog& log) {
  std::map<ActivitySequence, std::vector<std::string>> groups;
  for (const auto& trace : log.traces) groups[trace.activities()].push_back(trace.case_id);

  std::vector<TraceVariant> out;
  out.reserve(groups.size());
  for (auto& [activities, cases] : groups) {
    TraceVariant v;
    v.activities = activities;
    v.case_count = cases.size();
    v.case_ids = std::move(cases);
    v.frequency_share = static_cast<double>(v.case_count) / static_cast<double>(log.traces.size());
    out.push_back(std::move(v));
  }
  // groups is already lexicographic, so a stable sort on count is enough.
  std::stable_sort(out.begin(), out.end(),
                   [](const TraceVariant& a, const TraceVariant& b) { return a.case_count > b.case_count; });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].variant_id = i;
  return out;
}

struct ActivityStat {
  std::string activity;
  std::size_t count = 0;
  bool in_model = false;

  friend bool operator==(const ActivityStat&, const ActivityStat&) = default;
};

/// One row per activity of the log, alphabetical, flagged when some leaf of
/// the model carries the label.
inline std::vector<ActivityStat> list_activities(const EventLog& log, const ProcessTree* model = nullptr) {
  std::map<std::string, std::size_t> counts;
  for (const auto& a : log.activity_alphabet) counts[a] = 0;
  for (const auto& t : log.traces) {
    for (const auto& e : t.events) ++counts[e.activity];
  }
  const std::set<std::string> in_model = model ? model->activities() : std::set<std::string>{};
  std::vector<ActivityStat> out;
  for (const auto& [a, n] : counts) out.push_back({a, n, in_model.contains(a)});
  return out;
}

}  // namespace itree

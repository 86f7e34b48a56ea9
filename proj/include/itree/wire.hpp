#pragma once

// JSON shapes shared by the HTTP API, the CLI and session persistence.
//
//   tree:  {"kind": "sequence|xor|and|loop|activity|tau", "label": "a", "children": [...]}
//   path:  [0, 2]
//   error: {"error": {"code": "NoModel", "message": "..."}}
//
// Shares go out as decimal strings computed from the exact fraction.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "itree/alignment.hpp"
#include "itree/error.hpp"
#include "itree/event_log.hpp"
#include "itree/process_tree.hpp"

namespace itree::wire {

using nlohmann::json;

inline json tree_to_json(const TreeNode& n) {
  json out = {{"kind", to_string(n.kind())}};
  if (n.kind() == NodeKind::Activity) out["label"] = n.label();
  json kids = json::array();
  for (const auto& c : n.children()) kids.push_back(tree_to_json(*c));
  out["children"] = std::move(kids);
  return out;
}

inline json tree_to_json(const ProcessTree& t) { return tree_to_json(t.root()); }

inline NodePtr node_from_json(const json& j, std::size_t depth = 0) {
  if (depth > 1000) fail(ErrorCode::InvalidRequest, "tree nesting too deep");
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    fail(ErrorCode::InvalidRequest, "tree node needs a string \"kind\"");
  }
  const NodeKind kind = node_kind_from_string(j["kind"].get<std::string>());
  if (kind == NodeKind::Tau) return tau();
  if (kind == NodeKind::Activity) {
    if (!j.contains("label") || !j["label"].is_string()) fail(ErrorCode::InvalidLabel, "activity needs a label");
    return activity(j["label"].get<std::string>());
  }
  std::vector<NodePtr> kids;
  if (j.contains("children")) {
    if (!j["children"].is_array()) fail(ErrorCode::InvalidRequest, "\"children\" must be an array");
    for (const auto& c : j["children"]) kids.push_back(node_from_json(c, depth + 1));
  }
  return make_operator(kind, std::move(kids));
}

inline ProcessTree tree_from_json(const json& j) { return ProcessTree(node_from_json(j)); }

inline json path_to_json(const NodePath& p) { return p.indices; }

inline NodePath path_from_json(const json& j) {
  if (!j.is_array()) fail(ErrorCode::InvalidRequest, "path must be an array of indices");
  std::vector<std::size_t> out;
  for (const auto& x : j) {
    if (!x.is_number_unsigned()) fail(ErrorCode::InvalidPath, "path indices must be non-negative integers");
    out.push_back(x.get<std::size_t>());
  }
  return NodePath(std::move(out));
}

/// num/den rounded half-up to `digits` decimals, e.g. 56482/150370 -> "0.375620".
inline std::string decimal_fraction(std::uint64_t num, std::uint64_t den, int digits = 6) {
  if (den == 0) return "0";
  std::uint64_t scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  __extension__ using u128 = unsigned __int128;
  const u128 scaled = (static_cast<u128>(num) * scale * 2 + den) / (2 * den);
  const auto whole = static_cast<std::uint64_t>(scaled / scale);
  auto frac = std::to_string(static_cast<std::uint64_t>(scaled % scale));
  frac.insert(0, static_cast<std::size_t>(digits) - frac.size(), '0');
  return std::to_string(whole) + "." + frac;
}

inline json violation_to_json(const Violation& v) {
  return {{"path", path_to_json(v.path)},
          {"code", to_string(v.code)},
          {"severity", v.severity == Severity::Error ? "error" : "warning"}};
}

inline json violations_to_json(const std::vector<Violation>& vs) {
  json out = json::array();
  for (const auto& v : vs) out.push_back(violation_to_json(v));
  return out;
}

inline json error_envelope(ErrorCode code, std::string_view message) {
  return {{"error", {{"code", to_string(code)}, {"message", message}}}};
}

inline std::vector<std::size_t> ids_from_json(const json& body, const char* key = "variant_ids") {
  if (!body.is_object() || !body.contains(key) || !body[key].is_array()) {
    fail(ErrorCode::InvalidRequest, std::string("expected {\"") + key + "\": [...]}");
  }
  std::vector<std::size_t> out;
  for (const auto& x : body[key]) {
    if (!x.is_number_unsigned()) fail(ErrorCode::UnknownVariant, "variant ids are non-negative integers");
    out.push_back(x.get<std::size_t>());
  }
  return out;
}

inline Verdict verdict_from_string(std::string_view s) {
  if (s == "accepted") return Verdict::Accepted;
  if (s == "rejected") return Verdict::Rejected;
  return Verdict::Unknown;
}

}  // namespace itree::wire

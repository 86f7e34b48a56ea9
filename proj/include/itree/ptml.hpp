#pragma once

// PTML: the XML process-tree dialect used by ProM and PM4Py.
//
//   <ptml>
//     <processTree id="..." name="..." root="ROOT">
//       <sequence|xor|and|xorLoop id="..." name=""/>
//       <manualTask id="..." name="label"/>
//       <automaticTask id="..." name=""/>
//       <parentsNode id="..." sourceId="PARENT" targetId="CHILD"/>
//     </processTree>
//   </ptml>
//
// Child order follows the document order of parentsNode elements.

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "itree/error.hpp"
#include "itree/process_tree.hpp"
#include "itree/xml.hpp"

namespace itree {

inline std::string serialize_ptml(const ProcessTree& tree, std::string_view name = "process tree") {
  for (const auto& v : validate(tree)) {
    if (v.severity == Severity::Error) {
      fail(ErrorCode::InvalidTree, "cannot export tree with " + std::string(to_string(v.code)) + " at " +
                                       to_string(v.path));
    }
  }

  // Deterministic ids: pre-order index.
  std::vector<std::pair<const TreeNode*, std::string>> nodes;
  std::vector<std::pair<std::string, std::string>> edges;
  std::map<const TreeNode*, std::string> ids;
  tree.visit([&](const TreeNode& n, const NodePath&) {
    std::string id = "n" + std::to_string(nodes.size());
    ids[&n] = id;
    nodes.emplace_back(&n, id);
  });
  tree.visit([&](const TreeNode& n, const NodePath&) {
    for (const auto& c : n.children()) edges.emplace_back(ids[&n], ids[c.get()]);
  });

  xml::Writer w;
  w.open("ptml");
  w.open("processTree", {{"id", "tree"}, {"name", std::string(name)}, {"root", ids[&tree.root()]}});
  for (const auto& [node, id] : nodes) {
    std::string element;
    std::string label;
    switch (node->kind()) {
      case NodeKind::Sequence: element = "sequence"; break;
      case NodeKind::Choice: element = "xor"; break;
      case NodeKind::Parallel: element = "and"; break;
      case NodeKind::Loop: element = "xorLoop"; break;
      case NodeKind::Activity:
        element = "manualTask";
        label = node->label();
        break;
      case NodeKind::Tau: element = "automaticTask"; break;
    }
    w.leaf(element, {{"id", id}, {"name", label}});
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    w.leaf("parentsNode", {{"id", "e" + std::to_string(i)}, {"sourceId", edges[i].first}, {"targetId", edges[i].second}});
  }
  return std::move(w).str();
}

inline ProcessTree parse_ptml(std::string_view bytes) {
  xml::Element doc;
  try {
    doc = xml::parse_document(bytes);
  } catch (const Error& e) {
    fail(ErrorCode::MalformedPtml, e.what());
  }
  const xml::Element* pt = doc.name == "processTree" ? &doc : doc.child("processTree");
  if (doc.name != "ptml" && doc.name != "processTree") fail(ErrorCode::MalformedPtml, "root element is not <ptml>");
  if (!pt) fail(ErrorCode::MalformedPtml, "missing <processTree>");
  const auto root_id = pt->attribute("root");
  if (!root_id) fail(ErrorCode::MalformedPtml, "<processTree> lacks a root attribute");

  struct Proto {
    NodeKind kind;
    std::string label;
    std::vector<std::string> children;
  };
  std::map<std::string, Proto, std::less<>> protos;
  std::vector<std::pair<std::string, std::string>> edges;

  for (const auto& e : pt->children) {
    if (e.name == "parentsNode") {
      auto src = e.attribute("sourceId");
      auto dst = e.attribute("targetId");
      if (!src || !dst) fail(ErrorCode::MalformedPtml, "parentsNode needs sourceId and targetId");
      edges.emplace_back(std::string(*src), std::string(*dst));
      continue;
    }
    NodeKind kind{};
    if (e.name == "sequence") {
      kind = NodeKind::Sequence;
    } else if (e.name == "xor") {
      kind = NodeKind::Choice;
    } else if (e.name == "and") {
      kind = NodeKind::Parallel;
    } else if (e.name == "xorLoop") {
      kind = NodeKind::Loop;
    } else if (e.name == "manualTask") {
      kind = NodeKind::Activity;
    } else if (e.name == "automaticTask") {
      kind = NodeKind::Tau;
    } else {
      fail(ErrorCode::UnknownNodeKind, "unsupported PTML node <" + e.name + ">");
    }
    auto id = e.attribute("id");
    if (!id) fail(ErrorCode::MalformedPtml, "<" + e.name + "> without id");
    std::string label(e.attribute("name").value_or(""));
    if (kind == NodeKind::Activity && label.empty()) {
      fail(ErrorCode::MalformedPtml, "manualTask " + std::string(*id) + " has an empty name");
    }
    if (!protos.try_emplace(std::string(*id), Proto{kind, std::move(label), {}}).second) {
      fail(ErrorCode::MalformedPtml, "duplicate node id " + std::string(*id));
    }
  }

  std::map<std::string, int, std::less<>> parents;
  for (const auto& [src, dst] : edges) {
    auto p = protos.find(src);
    auto c = protos.find(dst);
    if (p == protos.end() || c == protos.end()) {
      fail(ErrorCode::DanglingEdge, "parentsNode references unknown id " + (p == protos.end() ? src : dst));
    }
    if (!is_operator(p->second.kind)) fail(ErrorCode::MalformedPtml, "leaf " + src + " has children");
    if (++parents[dst] > 1) fail(ErrorCode::MalformedPtml, "node " + dst + " has several parents");
    p->second.children.push_back(dst);
  }
  if (!protos.contains(*root_id)) fail(ErrorCode::DanglingEdge, "root id " + std::string(*root_id) + " is unknown");
  if (parents.contains(*root_id)) fail(ErrorCode::MalformedPtml, "root has a parent");

  std::size_t built = 0;
  std::function<NodePtr(const std::string&, std::size_t)> make = [&](const std::string& id, std::size_t depth) {
    if (depth > protos.size()) fail(ErrorCode::MalformedPtml, "cycle in parentsNode edges");
    ++built;
    const Proto& proto = protos.at(id);
    if (proto.kind == NodeKind::Activity) return activity(proto.label);
    if (proto.kind == NodeKind::Tau) return tau();
    std::vector<NodePtr> kids;
    for (const auto& c : proto.children) kids.push_back(make(c, depth + 1));
    return make_operator(proto.kind, std::move(kids));
  };
  ProcessTree tree(make(std::string(*root_id), 0));
  if (built != protos.size()) fail(ErrorCode::MalformedPtml, "nodes unreachable from the root");
  return tree;
}

}  // namespace itree

#pragma once

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "itree/error.hpp"

namespace itree {

/// An observed (or produced) sequence of activity labels.
using ActivitySequence = std::vector<std::string>;

enum class NodeKind { Sequence, Choice, Parallel, Loop, Activity, Tau };

constexpr bool is_operator(NodeKind k) { return k != NodeKind::Activity && k != NodeKind::Tau; }

constexpr std::string_view to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Sequence: return "sequence";
    case NodeKind::Choice: return "xor";
    case NodeKind::Parallel: return "and";
    case NodeKind::Loop: return "loop";
    case NodeKind::Activity: return "activity";
    case NodeKind::Tau: return "tau";
  }
  return "?";
}

inline NodeKind node_kind_from_string(std::string_view s) {
  if (s == "sequence") return NodeKind::Sequence;
  if (s == "xor") return NodeKind::Choice;
  if (s == "and") return NodeKind::Parallel;
  if (s == "loop") return NodeKind::Loop;
  if (s == "activity") return NodeKind::Activity;
  if (s == "tau") return NodeKind::Tau;
  fail(ErrorCode::UnknownNodeKind, "unknown node kind '" + std::string(s) + "'");
}

class TreeNode;
using NodePtr = std::shared_ptr<const TreeNode>;

/// Immutable tree vertex. Trees share unchanged subtrees between versions,
/// so every edit is a path copy.
class TreeNode {
 public:
  TreeNode(NodeKind kind, std::string label, std::vector<NodePtr> children)
      : kind_(kind), label_(std::move(label)), children_(std::move(children)) {}

  NodeKind kind() const noexcept { return kind_; }
  const std::string& label() const noexcept { return label_; }
  const std::vector<NodePtr>& children() const noexcept { return children_; }
  const TreeNode& child(std::size_t i) const { return *children_.at(i); }

  bool is_operator() const noexcept { return itree::is_operator(kind_); }
  bool is_leaf() const noexcept { return !is_operator(); }

 private:
  NodeKind kind_;
  std::string label_;
  std::vector<NodePtr> children_;
};

inline bool structurally_equal(const TreeNode& a, const TreeNode& b) {
  if (&a == &b) return true;
  if (a.kind() != b.kind() || a.label() != b.label() ||
      a.children().size() != b.children().size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.children().size(); ++i) {
    if (!structurally_equal(*a.children()[i], *b.children()[i])) return false;
  }
  return true;
}

// Node factories.

inline NodePtr activity(std::string label) {
  if (label.empty()) fail(ErrorCode::InvalidLabel, "activity label must be non-empty");
  return std::make_shared<const TreeNode>(NodeKind::Activity, std::move(label), std::vector<NodePtr>{});
}

inline NodePtr tau() { return std::make_shared<const TreeNode>(NodeKind::Tau, "", std::vector<NodePtr>{}); }

inline NodePtr make_operator(NodeKind kind, std::vector<NodePtr> children = {}) {
  if (!is_operator(kind)) fail(ErrorCode::InvalidRequest, "not an operator kind");
  return std::make_shared<const TreeNode>(kind, "", std::move(children));
}

inline NodePtr sequence(std::vector<NodePtr> children) { return make_operator(NodeKind::Sequence, std::move(children)); }
inline NodePtr choice(std::vector<NodePtr> children) { return make_operator(NodeKind::Choice, std::move(children)); }
inline NodePtr parallel(std::vector<NodePtr> children) { return make_operator(NodeKind::Parallel, std::move(children)); }
inline NodePtr loop(NodePtr do_part, NodePtr redo_part) {
  return make_operator(NodeKind::Loop, {std::move(do_part), std::move(redo_part)});
}

/// Child indices from the root; empty addresses the root.
struct NodePath {
  std::vector<std::size_t> indices;

  NodePath() = default;
  NodePath(std::initializer_list<std::size_t> il) : indices(il) {}
  explicit NodePath(std::vector<std::size_t> v) : indices(std::move(v)) {}

  bool is_root() const noexcept { return indices.empty(); }
  std::size_t depth() const noexcept { return indices.size(); }

  NodePath parent() const {
    NodePath p = *this;
    if (!p.indices.empty()) p.indices.pop_back();
    return p;
  }

  NodePath child(std::size_t i) const {
    NodePath p = *this;
    p.indices.push_back(i);
    return p;
  }

  /// True if this path addresses `other` or one of its ancestors.
  bool is_prefix_of(const NodePath& other) const {
    return indices.size() <= other.indices.size() &&
           std::equal(indices.begin(), indices.end(), other.indices.begin());
  }

  friend bool operator==(const NodePath&, const NodePath&) = default;
  friend auto operator<=>(const NodePath&, const NodePath&) = default;
};

inline NodePath common_ancestor(const NodePath& a, const NodePath& b) {
  NodePath out;
  for (std::size_t i = 0; i < std::min(a.depth(), b.depth()) && a.indices[i] == b.indices[i]; ++i) {
    out.indices.push_back(a.indices[i]);
  }
  return out;
}

inline std::string to_string(const NodePath& p) {
  std::string s = "[";
  for (std::size_t i = 0; i < p.indices.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(p.indices[i]);
  }
  return s + "]";
}

class ProcessTree {
 public:
  explicit ProcessTree(NodePtr root) : root_(std::move(root)) {
    if (!root_) fail(ErrorCode::InvalidTree, "process tree needs a root");
  }

  const TreeNode& root() const noexcept { return *root_; }
  const NodePtr& root_ptr() const noexcept { return root_; }

  const TreeNode* find(const NodePath& path) const {
    const TreeNode* node = root_.get();
    for (std::size_t idx : path.indices) {
      if (idx >= node->children().size()) return nullptr;
      node = node->children()[idx].get();
    }
    return node;
  }

  const TreeNode& at(const NodePath& path) const {
    const TreeNode* node = find(path);
    if (!node) fail(ErrorCode::InvalidPath, "path " + to_string(path) + " does not resolve");
    return *node;
  }

  NodePtr ptr_at(const NodePath& path) const {
    NodePtr node = root_;
    for (std::size_t idx : path.indices) {
      if (idx >= node->children().size()) {
        fail(ErrorCode::InvalidPath, "path " + to_string(path) + " does not resolve");
      }
      node = node->children()[idx];
    }
    return node;
  }

  /// New tree with the subtree at `path` swapped for `replacement`.
  ProcessTree replace(const NodePath& path, NodePtr replacement) const {
    at(path);
    return ProcessTree(rebuild(root_, path.indices, 0, [&](const NodePtr&) { return replacement; }));
  }

  /// New tree with `fn` applied to the node at `path` (path copy above it).
  template <typename Fn>
  ProcessTree update(const NodePath& path, Fn&& fn) const {
    at(path);
    return ProcessTree(rebuild(root_, path.indices, 0, std::forward<Fn>(fn)));
  }

  std::size_t node_count() const {
    std::size_t n = 0;
    visit([&](const TreeNode&, const NodePath&) { ++n; });
    return n;
  }

  std::set<std::string> activities() const {
    std::set<std::string> out;
    visit([&](const TreeNode& n, const NodePath&) {
      if (n.kind() == NodeKind::Activity) out.insert(n.label());
    });
    return out;
  }

  /// Pre-order traversal.
  template <typename Fn>
  void visit(Fn&& fn) const {
    NodePath path;
    visit_rec(*root_, path, fn);
  }

  friend bool operator==(const ProcessTree& a, const ProcessTree& b) {
    return structurally_equal(*a.root_, *b.root_);
  }

 private:
  template <typename Fn>
  static NodePtr rebuild(const NodePtr& node, const std::vector<std::size_t>& path, std::size_t depth, Fn&& fn) {
    if (depth == path.size()) return fn(node);
    std::vector<NodePtr> kids = node->children();
    kids[path[depth]] = rebuild(kids[path[depth]], path, depth + 1, fn);
    return std::make_shared<const TreeNode>(node->kind(), node->label(), std::move(kids));
  }

  template <typename Fn>
  static void visit_rec(const TreeNode& node, NodePath& path, Fn& fn) {
    fn(node, path);
    for (std::size_t i = 0; i < node.children().size(); ++i) {
      path.indices.push_back(i);
      visit_rec(*node.children()[i], path, fn);
      path.indices.pop_back();
    }
  }

  NodePtr root_;
};

// ---------------------------------------------------------------------------
// Validation

enum class ViolationCode { LoopArity, EmptyOperator, SingleChildWarning };
enum class Severity { Error, Warning };

constexpr std::string_view to_string(ViolationCode c) {
  switch (c) {
    case ViolationCode::LoopArity: return "LoopArity";
    case ViolationCode::EmptyOperator: return "EmptyOperator";
    case ViolationCode::SingleChildWarning: return "SingleChildWarning";
  }
  return "?";
}

struct Violation {
  NodePath path;
  ViolationCode code;
  Severity severity;

  friend bool operator==(const Violation&, const Violation&) = default;
};

inline std::vector<Violation> validate(const ProcessTree& tree) {
  std::vector<Violation> out;
  tree.visit([&](const TreeNode& n, const NodePath& p) {
    if (!n.is_operator()) return;
    const auto arity = n.children().size();
    if (n.kind() == NodeKind::Loop) {
      if (arity != 2) out.push_back({p, ViolationCode::LoopArity, Severity::Error});
    } else if (arity == 0) {
      out.push_back({p, ViolationCode::EmptyOperator, Severity::Error});
    } else if (arity == 1) {
      out.push_back({p, ViolationCode::SingleChildWarning, Severity::Warning});
    }
  });
  return out;
}

inline bool has_errors(const std::vector<Violation>& violations) {
  return std::any_of(violations.begin(), violations.end(),
                     [](const Violation& v) { return v.severity == Severity::Error; });
}

inline void require_valid(const ProcessTree& tree) {
  for (const auto& v : validate(tree)) {
    if (v.severity == Severity::Error) {
      fail(ErrorCode::InvalidTree,
           std::string(to_string(v.code)) + " at " + to_string(v.path));
    }
  }
}

// ---------------------------------------------------------------------------
// Editor operations. All return a new tree; the input is never touched.

enum class InsertPosition { Left, Right, Below };
enum class ShiftDirection { Left, Right };

inline ProcessTree insert_node(const ProcessTree& tree, const NodePath& anchor, InsertPosition position,
                               NodePtr node) {
  const TreeNode& target = tree.at(anchor);
  if (position == InsertPosition::Below) {
    if (!target.is_operator()) {
      fail(ErrorCode::BelowLeaf, "cannot insert below leaf at " + to_string(anchor));
    }
    return tree.update(anchor, [&](const NodePtr& n) {
      auto kids = n->children();
      kids.push_back(node);
      return std::make_shared<const TreeNode>(n->kind(), n->label(), std::move(kids));
    });
  }
  if (anchor.is_root()) fail(ErrorCode::LeftOfRoot, "the root has no siblings");
  const std::size_t idx = anchor.indices.back() + (position == InsertPosition::Right ? 1 : 0);
  return tree.update(anchor.parent(), [&](const NodePtr& n) {
    auto kids = n->children();
    kids.insert(kids.begin() + static_cast<std::ptrdiff_t>(idx), node);
    return std::make_shared<const TreeNode>(n->kind(), n->label(), std::move(kids));
  });
}

inline ProcessTree remove_subtree(const ProcessTree& tree, const NodePath& target) {
  tree.at(target);
  if (target.is_root()) fail(ErrorCode::CannotRemoveRoot, "cannot remove the root");
  const std::size_t idx = target.indices.back();
  return tree.update(target.parent(), [&](const NodePtr& n) {
    auto kids = n->children();
    kids.erase(kids.begin() + static_cast<std::ptrdiff_t>(idx));
    return std::make_shared<const TreeNode>(n->kind(), n->label(), std::move(kids));
  });
}

inline ProcessTree shift_subtree(const ProcessTree& tree, const NodePath& target, ShiftDirection direction) {
  tree.at(target);
  if (target.is_root()) fail(ErrorCode::NoSibling, "the root has no siblings");
  const std::size_t idx = target.indices.back();
  const std::size_t siblings = tree.at(target.parent()).children().size();
  if ((direction == ShiftDirection::Left && idx == 0) ||
      (direction == ShiftDirection::Right && idx + 1 >= siblings)) {
    fail(ErrorCode::NoSibling, "no sibling to the " +
                                   std::string(direction == ShiftDirection::Left ? "left" : "right") +
                                   " of " + to_string(target));
  }
  const std::size_t other = direction == ShiftDirection::Left ? idx - 1 : idx + 1;
  return tree.update(target.parent(), [&](const NodePtr& n) {
    auto kids = n->children();
    std::swap(kids[idx], kids[other]);
    return std::make_shared<const TreeNode>(n->kind(), n->label(), std::move(kids));
  });
}

/// Relabels a leaf. An activity or tau leaf becomes an activity with `label`.
inline ProcessTree set_label(const ProcessTree& tree, const NodePath& target, std::string label) {
  if (tree.at(target).is_operator()) {
    fail(ErrorCode::NotALeaf, "only leaves carry labels (" + to_string(target) + ")");
  }
  NodePtr leaf = activity(std::move(label));
  return tree.replace(target, leaf);
}

// ---------------------------------------------------------------------------
// Text notation: ->(a, X(b, tau), c), +(..) parallel, *(do, redo) loop.
// Labels may be bare or single-quoted; bare `tau` is the silent leaf.

namespace detail {

inline bool needs_quotes(std::string_view label) {
  if (label == "tau" || label.empty()) return true;
  if (label.front() == ' ' || label.back() == ' ') return true;
  return label.find_first_of(",()'\\") != std::string_view::npos;
}

inline void write_notation(const TreeNode& n, std::string& out) {
  switch (n.kind()) {
    case NodeKind::Activity:
      if (needs_quotes(n.label())) {
        out += '\'';
        for (char c : n.label()) {
          if (c == '\'' || c == '\\') out += '\\';
          out += c;
        }
        out += '\'';
      } else {
        out += n.label();
      }
      return;
    case NodeKind::Tau: out += "tau"; return;
    case NodeKind::Sequence: out += "->("; break;
    case NodeKind::Choice: out += "X("; break;
    case NodeKind::Parallel: out += "+("; break;
    case NodeKind::Loop: out += "*("; break;
  }
  for (std::size_t i = 0; i < n.children().size(); ++i) {
    if (i) out += ", ";
    write_notation(*n.children()[i], out);
  }
  out += ')';
}

class NotationParser {
 public:
  explicit NotationParser(std::string_view s) : s_(s) {}

  NodePtr parse() {
    NodePtr n = node();
    skip_ws();
    if (pos_ != s_.size()) error("trailing input");
    return n;
  }

 private:
  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorCode::InvalidRequest, "tree notation: " + what + " at offset " + std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool followed_by_paren(std::size_t after) const {
    while (after < s_.size() && std::isspace(static_cast<unsigned char>(s_[after]))) ++after;
    return after < s_.size() && s_[after] == '(';
  }

  NodePtr node() {
    skip_ws();
    if (pos_ >= s_.size()) error("unexpected end");
    NodeKind kind{};
    std::size_t op_len = 0;
    if (s_.substr(pos_, 2) == "->") {
      kind = NodeKind::Sequence;
      op_len = 2;
    } else if (s_[pos_] == 'X' || s_[pos_] == '+' || s_[pos_] == '*') {
      kind = s_[pos_] == 'X' ? NodeKind::Choice : s_[pos_] == '+' ? NodeKind::Parallel : NodeKind::Loop;
      op_len = 1;
    }
    if (op_len && followed_by_paren(pos_ + op_len)) {
      pos_ += op_len;
      skip_ws();
      ++pos_;  // '('
      std::vector<NodePtr> kids;
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == ')') {
        ++pos_;
        return make_operator(kind, {});
      }
      while (true) {
        kids.push_back(node());
        skip_ws();
        if (pos_ >= s_.size()) error("unterminated operator");
        if (s_[pos_] == ',') {
          ++pos_;
          continue;
        }
        if (s_[pos_] == ')') {
          ++pos_;
          break;
        }
        error("expected ',' or ')'");
      }
      return make_operator(kind, std::move(kids));
    }
    if (s_[pos_] == '\'') {
      ++pos_;
      std::string label;
      while (pos_ < s_.size() && s_[pos_] != '\'') {
        if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) ++pos_;
        label += s_[pos_++];
      }
      if (pos_ >= s_.size()) error("unterminated quote");
      ++pos_;
      return activity(std::move(label));
    }
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ')' && s_[pos_] != '(') ++pos_;
    std::string label(s_.substr(start, pos_ - start));
    while (!label.empty() && std::isspace(static_cast<unsigned char>(label.back()))) label.pop_back();
    if (label.empty()) error("empty label");
    if (label == "tau") return tau();
    return activity(std::move(label));
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string to_string(const ProcessTree& tree) {
  std::string out;
  detail::write_notation(tree.root(), out);
  return out;
}

inline ProcessTree parse_tree(std::string_view notation) {
  return ProcessTree(detail::NotationParser(notation).parse());
}

}  // namespace itree

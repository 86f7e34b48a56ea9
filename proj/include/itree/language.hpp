#pragma once

// Language semantics of process trees, computed two unrelated ways:
//
//  * accepts() runs Antimirov partial derivatives over a regular expression
//    with shuffle (sequence -> concatenation, xor -> union, and -> shuffle,
//    loop(do, redo) -> do (redo do)*). One derivative step per activity.
//  * enumerate_language() builds the bounded language bottom-up as explicit
//    word sets (concatenate, union, shuffle, loop unrolling), truncated at
//    max_len.
//
// The test suites cross-check them against each other and against the
// reachability language of the translated Petri net.

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "itree/error.hpp"
#include "itree/process_tree.hpp"

namespace itree {

namespace detail {

class DerivativeMachine {
 public:
  explicit DerivativeMachine(const ProcessTree& tree) {
    require_valid(tree);
    eps_ = intern({Kind::Eps, -1, -1, -1, {}});
    start_ = build(tree.root());
  }

  bool accepts(std::span<const std::string> trace) {
    std::vector<int> current{start_};
    for (const auto& activity : trace) {
      auto it = symbols_.find(activity);
      if (it == symbols_.end()) return false;
      std::set<int> next;
      for (int term : current) {
        const auto& d = derive(term, it->second);
        next.insert(d.begin(), d.end());
      }
      if (next.empty()) return false;
      current.assign(next.begin(), next.end());
    }
    for (int term : current) {
      if (terms_[static_cast<std::size_t>(term)].nullable) return true;
    }
    return false;
  }

 private:
  enum class Kind { Eps, Sym, Seq, Alt, Shuf, Star };

  struct Term {
    Kind kind;
    int sym;
    int lhs;
    int rhs;
    std::vector<int> alts;
    bool nullable = false;
  };

  using Key = std::tuple<int, int, int, int, std::vector<int>>;

  int intern(Term t) {
    Key key{static_cast<int>(t.kind), t.sym, t.lhs, t.rhs, t.alts};
    auto [it, inserted] = index_.try_emplace(std::move(key), static_cast<int>(terms_.size()));
    if (!inserted) return it->second;
    switch (t.kind) {
      case Kind::Eps: t.nullable = true; break;
      case Kind::Sym: t.nullable = false; break;
      case Kind::Seq:
      case Kind::Shuf: t.nullable = nullable(t.lhs) && nullable(t.rhs); break;
      case Kind::Alt:
        t.nullable = false;
        for (int a : t.alts) t.nullable = t.nullable || nullable(a);
        break;
      case Kind::Star: t.nullable = true; break;
    }
    terms_.push_back(std::move(t));
    return it->second;
  }

  bool nullable(int t) const { return terms_[static_cast<std::size_t>(t)].nullable; }

  int seq(int a, int b) {
    if (a == eps_) return b;
    if (b == eps_) return a;
    return intern({Kind::Seq, -1, a, b, {}});
  }

  int shuf(int a, int b) {
    if (a == eps_) return b;
    if (b == eps_) return a;
    return intern({Kind::Shuf, -1, a, b, {}});
  }

  int alt(std::vector<int> xs) {
    std::set<int> flat;
    for (int x : xs) {
      const auto& t = terms_[static_cast<std::size_t>(x)];
      if (t.kind == Kind::Alt) {
        flat.insert(t.alts.begin(), t.alts.end());
      } else {
        flat.insert(x);
      }
    }
    if (flat.size() == 1) return *flat.begin();
    return intern({Kind::Alt, -1, -1, -1, std::vector<int>(flat.begin(), flat.end())});
  }

  int star(int x) {
    if (x == eps_) return eps_;
    return intern({Kind::Star, -1, x, -1, {}});
  }

  int build(const TreeNode& n) {
    const auto& kids = n.children();
    switch (n.kind()) {
      case NodeKind::Tau: return eps_;
      case NodeKind::Activity: {
        auto [it, _] = symbols_.try_emplace(n.label(), static_cast<int>(symbols_.size()));
        return intern({Kind::Sym, it->second, -1, -1, {}});
      }
      case NodeKind::Sequence: {
        int acc = build(*kids.back());
        for (std::size_t i = kids.size() - 1; i-- > 0;) acc = seq(build(*kids[i]), acc);
        return acc;
      }
      case NodeKind::Parallel: {
        int acc = build(*kids.back());
        for (std::size_t i = kids.size() - 1; i-- > 0;) acc = shuf(build(*kids[i]), acc);
        return acc;
      }
      case NodeKind::Choice: {
        std::vector<int> xs;
        for (const auto& k : kids) xs.push_back(build(*k));
        return alt(std::move(xs));
      }
      case NodeKind::Loop: {
        const int body = build(*kids[0]);
        const int redo = build(*kids[1]);
        return seq(body, star(seq(redo, body)));
      }
    }
    return eps_;
  }

  const std::vector<int>& derive(int term, int sym) {
    auto key = std::make_pair(term, sym);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    std::set<int> out;
    const Term t = terms_[static_cast<std::size_t>(term)];
    switch (t.kind) {
      case Kind::Eps: break;
      case Kind::Sym:
        if (t.sym == sym) out.insert(eps_);
        break;
      case Kind::Alt:
        for (int a : t.alts) {
          const auto d = derive(a, sym);
          out.insert(d.begin(), d.end());
        }
        break;
      case Kind::Seq: {
        const auto dl = derive(t.lhs, sym);
        for (int x : dl) out.insert(seq(x, t.rhs));
        if (nullable(t.lhs)) {
          const auto dr = derive(t.rhs, sym);
          out.insert(dr.begin(), dr.end());
        }
        break;
      }
      case Kind::Shuf: {
        const auto dl = derive(t.lhs, sym);
        for (int x : dl) out.insert(shuf(x, t.rhs));
        const auto dr = derive(t.rhs, sym);
        for (int x : dr) out.insert(shuf(t.lhs, x));
        break;
      }
      case Kind::Star: {
        const auto d = derive(t.lhs, sym);
        for (int x : d) out.insert(seq(x, term));
        break;
      }
    }
    return cache_[key] = std::vector<int>(out.begin(), out.end());
  }

  std::vector<Term> terms_;
  std::map<Key, int> index_;
  std::map<std::pair<int, int>, std::vector<int>> cache_;
  std::unordered_map<std::string, int> symbols_;
  int eps_ = -1;
  int start_ = -1;
};

}  // namespace detail

/// Membership test: is `trace` in the language of `tree`? Throws InvalidTree
/// when the tree has structural errors.
inline bool accepts(const ProcessTree& tree, std::span<const std::string> trace) {
  return detail::DerivativeMachine(tree).accepts(trace);
}

/// Reusable acceptor for many traces against one tree; derivatives are cached.
class Acceptor {
 public:
  explicit Acceptor(const ProcessTree& tree) : machine_(tree) {}
  bool operator()(std::span<const std::string> trace) { return machine_.accepts(trace); }

 private:
  detail::DerivativeMachine machine_;
};

inline constexpr std::size_t kMaxEnumerationLength = 12;

namespace detail {

using Word = std::vector<int>;
using WordSet = std::set<Word>;

class LanguageBuilder {
 public:
  LanguageBuilder(std::size_t max_len, std::size_t cap) : max_len_(max_len), cap_(cap) {}

  WordSet build(const TreeNode& n) {
    const auto& kids = n.children();
    switch (n.kind()) {
      case NodeKind::Tau: return {Word{}};
      case NodeKind::Activity: {
        if (max_len_ == 0) return {};
        auto [it, _] = symbols_.try_emplace(n.label(), static_cast<int>(names_.size()));
        if (it->second == static_cast<int>(names_.size())) names_.push_back(n.label());
        return {Word{it->second}};
      }
      case NodeKind::Choice: {
        WordSet out;
        for (const auto& k : kids) {
          auto l = build(*k);
          out.insert(l.begin(), l.end());
          charge(out.size());
        }
        return out;
      }
      case NodeKind::Sequence: {
        WordSet acc = build(*kids[0]);
        for (std::size_t i = 1; i < kids.size(); ++i) acc = concat(acc, build(*kids[i]));
        return acc;
      }
      case NodeKind::Parallel: {
        WordSet acc = build(*kids[0]);
        for (std::size_t i = 1; i < kids.size(); ++i) acc = shuffle(acc, build(*kids[i]));
        return acc;
      }
      case NodeKind::Loop: {
        const WordSet body = build(*kids[0]);
        const WordSet redo_body = concat(build(*kids[1]), body);
        WordSet out = body;
        WordSet frontier = body;
        while (!frontier.empty()) {
          WordSet next;
          for (const auto& w : concat(frontier, redo_body)) {
            if (!out.contains(w)) next.insert(w);
          }
          out.insert(next.begin(), next.end());
          charge(out.size());
          frontier = std::move(next);
        }
        return out;
      }
    }
    return {};
  }

  const std::vector<std::string>& names() const { return names_; }

 private:
  void charge(std::size_t n) {
    if (n > cap_) {
      fail(ErrorCode::BudgetExceeded,
           "language enumeration exceeded " + std::to_string(cap_) + " intermediate words");
    }
  }

  WordSet concat(const WordSet& a, const WordSet& b) {
    WordSet out;
    for (const auto& u : a) {
      for (const auto& v : b) {
        if (u.size() + v.size() > max_len_) continue;
        Word w = u;
        w.insert(w.end(), v.begin(), v.end());
        out.insert(std::move(w));
      }
      charge(out.size());
    }
    return out;
  }

  void interleave(const Word& u, std::size_t i, const Word& v, std::size_t j, Word& prefix, WordSet& out) {
    if (i == u.size() && j == v.size()) {
      out.insert(prefix);
      return;
    }
    if (i < u.size()) {
      prefix.push_back(u[i]);
      interleave(u, i + 1, v, j, prefix, out);
      prefix.pop_back();
    }
    if (j < v.size()) {
      prefix.push_back(v[j]);
      interleave(u, i, v, j + 1, prefix, out);
      prefix.pop_back();
    }
  }

  WordSet shuffle(const WordSet& a, const WordSet& b) {
    WordSet out;
    Word prefix;
    for (const auto& u : a) {
      for (const auto& v : b) {
        if (u.size() + v.size() > max_len_) continue;
        interleave(u, 0, v, 0, prefix, out);
      }
      charge(out.size());
    }
    return out;
  }

  std::size_t max_len_;
  std::size_t cap_;
  std::unordered_map<std::string, int> symbols_;
  std::vector<std::string> names_;
};

}  // namespace detail

/// Every member of L(tree) of length <= max_len. Loops are unrolled until no
/// new word within the bound appears. Throws BudgetExceeded if an
/// intermediate word set grows beyond `word_cap`.
inline std::set<ActivitySequence> enumerate_language(const ProcessTree& tree, std::size_t max_len,
                                                     std::size_t word_cap = 1'000'000) {
  if (max_len > kMaxEnumerationLength) {
    fail(ErrorCode::BudgetExceeded, "max_len above " + std::to_string(kMaxEnumerationLength));
  }
  require_valid(tree);
  detail::LanguageBuilder builder(max_len, word_cap);
  const auto words = builder.build(tree.root());
  std::set<ActivitySequence> out;
  for (const auto& w : words) {
    ActivitySequence seq;
    seq.reserve(w.size());
    for (int s : w) seq.push_back(builder.names()[static_cast<std::size_t>(s)]);
    out.insert(std::move(seq));
  }
  return out;
}

}  // namespace itree

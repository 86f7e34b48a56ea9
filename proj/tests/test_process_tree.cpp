#include <gtest/gtest.h>

#include <random>
#include <set>
#include <string>
#include <vector>

#include "itree/language.hpp"
#include "itree/process_tree.hpp"
#include "itree/ptml.hpp"
#include "support/generators.hpp"

using namespace itree;

namespace {

ProcessTree T(std::string_view s) { return parse_tree(s); }

bool acc(const ProcessTree& t, std::vector<std::string> trace) { return accepts(t, trace); }

std::set<ActivitySequence> words(std::initializer_list<ActivitySequence> ws) { return {ws}; }

// Every sequence over `letters` of length <= n.
std::vector<ActivitySequence> all_words(const std::vector<std::string>& letters, std::size_t n) {
  std::vector<ActivitySequence> out{{}};
  std::vector<ActivitySequence> layer{{}};
  for (std::size_t len = 1; len <= n; ++len) {
    std::vector<ActivitySequence> next;
    for (const auto& w : layer) {
      for (const auto& l : letters) {
        auto v = w;
        v.push_back(l);
        next.push_back(v);
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    layer = std::move(next);
  }
  return out;
}

}  // namespace

TEST(Notation, RoundTrip) {
  for (const char* s : {"->(a, X(b, tau), c)", "+(a, b)", "*(a, b)", "a", "tau", "X('tau', 'x,y')"}) {
    EXPECT_EQ(to_string(T(s)), s);
  }
  EXPECT_THROW(T("->(a, b"), Error);
}

TEST(Accepts, ParallelAnyOrder) {
  EXPECT_TRUE(acc(T("+(a, b)"), {"b", "a"}));
  EXPECT_TRUE(acc(T("+(a, b)"), {"a", "b"}));
  EXPECT_FALSE(acc(T("+(a, b)"), {"a"}));
}

TEST(Accepts, LoopMustCloseOnDo) {
  EXPECT_FALSE(acc(T("*(a, b)"), {"a", "b"}));
  EXPECT_TRUE(acc(T("*(a, b)"), {"a", "b", "a"}));
  EXPECT_TRUE(acc(T("*(a, b)"), {"a"}));
}

TEST(Accepts, OptionalMiddle) {
  // Brute force over {a,b,c}^<=3: exactly <a,c> and <a,b,c> are members.
  const auto t = T("->(a, X(b, tau), c)");
  std::set<ActivitySequence> members;
  for (const auto& w : all_words({"a", "b", "c"}, 3)) {
    if (accepts(t, w)) members.insert(w);
  }
  EXPECT_EQ(members, words({{"a", "c"}, {"a", "b", "c"}}));
  EXPECT_TRUE(acc(t, {"a", "c"}));
}

TEST(Accepts, Leaves) {
  EXPECT_TRUE(acc(T("tau"), {}));
  EXPECT_FALSE(acc(T("tau"), {"a"}));
  const auto a = T("a");
  for (const auto& w : all_words({"a", "b"}, 2)) {
    EXPECT_EQ(accepts(a, w), w == ActivitySequence{"a"});
  }
}

TEST(Accepts, SingleChildOperatorBehavesLikeChild) {
  EXPECT_TRUE(acc(T("X(a)"), {"a"}));
  EXPECT_FALSE(acc(T("X(a)"), {}));
}

TEST(Accepts, RejectsInvalidTree) {
  EXPECT_THROW(acc(ProcessTree(make_operator(NodeKind::Loop, {activity("a")})), {"a"}), Error);
}

TEST(Enumerate, Examples) {
  EXPECT_EQ(enumerate_language(T("X(a, tau)"), 2), words({{}, {"a"}}));
  EXPECT_EQ(enumerate_language(T("+(a, b)"), 2), words({{"a", "b"}, {"b", "a"}}));
  EXPECT_EQ(enumerate_language(T("*(a, b)"), 5), words({{"a"}, {"a", "b", "a"}, {"a", "b", "a", "b", "a"}}));
}

TEST(Enumerate, LengthGuard) {
  EXPECT_THROW(enumerate_language(T("a"), 13), Error);
  try {
    enumerate_language(T("*(+(a, b, c, d), +(e, f, g, h))"), 12, 1000);
    FAIL() << "expected BudgetExceeded";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BudgetExceeded);
  }
}

TEST(Enumerate, NestedLoopWithSilentDo) {
  EXPECT_EQ(enumerate_language(T("*(tau, a)"), 2), words({{}, {"a"}, {"a", "a"}}));
}

// Both implementations must agree on every short word.
TEST(Property, AcceptsMatchesEnumeration) {
  std::mt19937 rng(7);
  support::TreeGenerator gen(rng, {.max_depth = 4, .max_leaves = 6, .activities = 3});
  const auto letters = support::alphabet(3);
  const auto candidates = all_words(letters, 6);
  for (int i = 0; i < 150; ++i) {
    const auto tree = gen();
    const auto lang = enumerate_language(tree, 8);
    Acceptor acceptor(tree);
    for (const auto& w : lang) ASSERT_TRUE(acceptor(w)) << to_string(tree);
    for (const auto& w : candidates) {
      ASSERT_EQ(acceptor(w), lang.contains(w)) << to_string(tree);
    }
    std::mt19937 r2(i);
    for (int k = 0; k < 20; ++k) {
      auto w = support::random_trace(r2, letters, 8);
      ASSERT_EQ(acceptor(w), lang.contains(w)) << to_string(tree);
    }
  }
}

TEST(Edit, InsertBelowAppends) {
  EXPECT_EQ(insert_node(T("+(a, b)"), {}, InsertPosition::Below, activity("c")), T("+(a, b, c)"));
}

TEST(Edit, InsertLeftRight) {
  EXPECT_EQ(insert_node(T("->(a, c)"), {1}, InsertPosition::Left, activity("b")), T("->(a, b, c)"));
  EXPECT_EQ(insert_node(T("->(a, c)"), {0}, InsertPosition::Right, activity("b")), T("->(a, b, c)"));
  EXPECT_EQ(insert_node(T("->(a, c)"), {1}, InsertPosition::Right, tau()), T("->(a, c, tau)"));
}

TEST(Edit, InsertErrors) {
  auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidRequest;
  };
  EXPECT_EQ(code([] { insert_node(T("->(a)"), {0}, InsertPosition::Below, activity("x")); }), ErrorCode::BelowLeaf);
  EXPECT_EQ(code([] { insert_node(T("->(a)"), {}, InsertPosition::Left, activity("x")); }), ErrorCode::LeftOfRoot);
  EXPECT_EQ(code([] { insert_node(T("->(a)"), {3}, InsertPosition::Left, activity("x")); }), ErrorCode::InvalidPath);
  EXPECT_EQ(code([] { insert_node(T("->(a)"), {0, 0}, InsertPosition::Left, activity("x")); }), ErrorCode::InvalidPath);
}

TEST(Edit, NewOperatorStartsEmpty) {
  const auto t = insert_node(T("->(a)"), {}, InsertPosition::Below, make_operator(NodeKind::Loop));
  EXPECT_EQ(to_string(t), "->(a, *())");
  const auto v = validate(t);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].code, ViolationCode::LoopArity);
  EXPECT_EQ(v[0].path, (NodePath{1}));
}

TEST(Edit, Remove) {
  EXPECT_EQ(remove_subtree(T("->(a, b, c)"), {1}), T("->(a, c)"));
  const auto half = remove_subtree(T("*(a, b)"), {1});
  EXPECT_EQ(to_string(half), "*(a)");
  const auto v = validate(half);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].code, ViolationCode::LoopArity);
  EXPECT_TRUE(v[0].path.is_root());
  try {
    remove_subtree(T("a"), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CannotRemoveRoot);
  }
}

TEST(Edit, Shift) {
  const auto t = T("->(a, b, c)");
  EXPECT_EQ(shift_subtree(t, {0}, ShiftDirection::Right), T("->(b, a, c)"));
  EXPECT_EQ(shift_subtree(shift_subtree(t, {0}, ShiftDirection::Right), {1}, ShiftDirection::Left), t);
  try {
    shift_subtree(t, {0}, ShiftDirection::Left);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoSibling);
  }
  EXPECT_THROW(shift_subtree(t, {2}, ShiftDirection::Right), Error);
}

TEST(Edit, SetLabel) {
  EXPECT_EQ(set_label(T("->(a, b)"), {1}, "z"), T("->(a, z)"));
  EXPECT_EQ(set_label(T("->(a, tau)"), {1}, "z"), T("->(a, z)"));
  EXPECT_THROW(set_label(T("->(a, b)"), {}, "z"), Error);
  EXPECT_THROW(set_label(T("->(a, b)"), {0}, ""), Error);
}

TEST(Edit, InputUnchanged) {
  const auto t = T("->(a, X(b, c), d)");
  const auto before = to_string(t);
  (void)insert_node(t, {1}, InsertPosition::Below, activity("e"));
  (void)remove_subtree(t, {1, 0});
  (void)shift_subtree(t, {1}, ShiftDirection::Left);
  (void)set_label(t, {2}, "q");
  EXPECT_EQ(to_string(t), before);
}

TEST(Edit, SharesUntouchedSubtrees) {
  const auto t = T("->(X(a, b), +(c, d))");
  const auto u = set_label(t, {1, 0}, "e");
  EXPECT_EQ(t.ptr_at({0}).get(), u.ptr_at({0}).get());
  EXPECT_NE(t.ptr_at({1}).get(), u.ptr_at({1}).get());
}

TEST(Validate, Examples) {
  const auto loop1 = validate(ProcessTree(make_operator(NodeKind::Loop, {activity("a")})));
  ASSERT_EQ(loop1.size(), 1u);
  EXPECT_EQ(loop1[0].code, ViolationCode::LoopArity);
  EXPECT_TRUE(loop1[0].path.is_root());
  EXPECT_TRUE(validate(T("->(a, b)")).empty());
  const auto x1 = validate(T("X(a)"));
  ASSERT_EQ(x1.size(), 1u);
  EXPECT_EQ(x1[0].code, ViolationCode::SingleChildWarning);
  EXPECT_EQ(x1[0].severity, Severity::Warning);
  EXPECT_FALSE(has_errors(x1));
  const auto empty = validate(T("->(a, +())"));
  ASSERT_EQ(empty.size(), 1u);
  EXPECT_EQ(empty[0].code, ViolationCode::EmptyOperator);
  EXPECT_EQ(empty[0].path, (NodePath{1}));
}

TEST(Ptml, RoundTripSmall) {
  const auto t = T("->(a, tau)");
  EXPECT_EQ(parse_ptml(serialize_ptml(t)), t);
}

TEST(Ptml, CanonicalReemission) {
  const auto t = T("*(->(a, X(b, tau)), +(c, d))");
  const auto bytes = serialize_ptml(t);
  EXPECT_EQ(serialize_ptml(parse_ptml(bytes)), bytes);
}

TEST(Ptml, ExportRefusesInvalidTree) {
  EXPECT_THROW(serialize_ptml(ProcessTree(make_operator(NodeKind::Loop, {activity("a")}))), Error);
  EXPECT_NO_THROW(serialize_ptml(T("X(a)")));
}

TEST(Ptml, ThreeChildLoopParsesButIsInvalid) {
  const char* doc = R"(<?xml version='1.0' encoding='UTF-8'?>
<ptml>
  <processTree id="t" name="x" root="L">
    <xorLoop id="L" name=""/>
    <manualTask id="A" name="a"/>
    <manualTask id="B" name="b"/>
    <automaticTask id="C" name=""/>
    <parentsNode id="1" sourceId="L" targetId="A"/>
    <parentsNode id="2" sourceId="L" targetId="B"/>
    <parentsNode id="3" sourceId="L" targetId="C"/>
  </processTree>
</ptml>)";
  const auto t = parse_ptml(doc);
  EXPECT_EQ(t.root().children().size(), 3u);
  const auto v = validate(t);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].code, ViolationCode::LoopArity);
}

TEST(Ptml, ChildOrderFollowsEdgeOrder) {
  const char* doc = R"(<ptml><processTree id="t" name="x" root="S">
    <manualTask id="B" name="b"/><sequence id="S" name=""/><manualTask id="A" name="a"/>
    <parentsNode id="1" sourceId="S" targetId="B"/>
    <parentsNode id="2" sourceId="S" targetId="A"/>
  </processTree></ptml>)";
  EXPECT_EQ(parse_ptml(doc), T("->(b, a)"));
}

// Shape written by PM4Py's exporter: uuid ids, breadth-first nodes.
TEST(Ptml, ReadsToolkitExport) {
  const char* doc = R"(<?xml version='1.0' encoding='UTF-8'?>
<ptml>
  <processTree name="3c0f2a4e-7c55-4c2e-9d1a-8f0f3b6f1c11" root="0b8f4c52-8a0e-4a43-a1f3-1e2b1b3c9d01" id="5a6b7c8d-0000-4000-8000-000000000001">
    <sequence name="" id="0b8f4c52-8a0e-4a43-a1f3-1e2b1b3c9d01"/>
    <manualTask name="Create Fine" id="11111111-1111-4111-8111-111111111111"/>
    <xor name="" id="22222222-2222-4222-8222-222222222222"/>
    <manualTask name="Send Fine" id="33333333-3333-4333-8333-333333333333"/>
    <automaticTask name="" id="44444444-4444-4444-8444-444444444444"/>
    <parentsNode id="a1" sourceId="0b8f4c52-8a0e-4a43-a1f3-1e2b1b3c9d01" targetId="11111111-1111-4111-8111-111111111111"/>
    <parentsNode id="a2" sourceId="0b8f4c52-8a0e-4a43-a1f3-1e2b1b3c9d01" targetId="22222222-2222-4222-8222-222222222222"/>
    <parentsNode id="a3" sourceId="22222222-2222-4222-8222-222222222222" targetId="33333333-3333-4333-8333-333333333333"/>
    <parentsNode id="a4" sourceId="22222222-2222-4222-8222-222222222222" targetId="44444444-4444-4444-8444-444444444444"/>
  </processTree>
</ptml>)";
  EXPECT_EQ(parse_ptml(doc), T("->('Create Fine', X('Send Fine', tau))"));
}

TEST(Ptml, Errors) {
  auto code = [](const char* doc) {
    try {
      parse_ptml(doc);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidRequest;
  };
  EXPECT_EQ(code(R"(<ptml><processTree id="t" name="" root="S"><sequence id="S" name=""/>
    <parentsNode id="1" sourceId="S" targetId="nope"/></processTree></ptml>)"),
            ErrorCode::DanglingEdge);
  EXPECT_EQ(code(R"(<ptml><processTree id="t" name="" root="S"><or id="S" name=""/></processTree></ptml>)"),
            ErrorCode::UnknownNodeKind);
  EXPECT_EQ(code("<ptml><processTree"), ErrorCode::MalformedPtml);
  EXPECT_EQ(code(R"(<ptml><processTree id="t" name=""><sequence id="S" name=""/></processTree></ptml>)"),
            ErrorCode::MalformedPtml);
  EXPECT_EQ(code(R"(<ptml><processTree id="t" name="" root="S"><sequence id="S" name=""/>
    <manualTask id="A" name="a"/></processTree></ptml>)"),
            ErrorCode::MalformedPtml);
  EXPECT_EQ(code(R"(<ptml><processTree id="t" name="" root="S"><sequence id="S" name=""/><xor id="X" name=""/>
    <manualTask id="A" name="a"/>
    <parentsNode id="1" sourceId="S" targetId="A"/><parentsNode id="2" sourceId="X" targetId="A"/>
    <parentsNode id="3" sourceId="S" targetId="X"/></processTree></ptml>)"),
            ErrorCode::MalformedPtml);
}

TEST(Ptml, LabelsWithMarkup) {
  const auto t = ProcessTree(sequence({activity("a<b & \"c\""), activity("é")}));
  EXPECT_EQ(parse_ptml(serialize_ptml(t)), t);
}

TEST(Property, PtmlRoundTrip) {
  std::mt19937 rng(11);
  support::TreeGenerator gen(rng, {.max_depth = 5, .max_leaves = 10, .activities = 8});
  for (int i = 0; i < 300; ++i) {
    const auto t = gen();
    ASSERT_EQ(parse_ptml(serialize_ptml(t)), t) << to_string(t);
  }
}

#include <gtest/gtest.h>

#include <deque>
#include <random>
#include <set>

#include "itree/language.hpp"
#include "itree/petri_net.hpp"
#include "itree/xml.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace itree;

namespace {

LabeledPetriNet net_of(std::string_view s) { return tree_to_petri_net(parse_tree(s)); }

std::size_t silent_count(const LabeledPetriNet& net) {
  std::size_t n = 0;
  for (const auto& t : net.transitions()) n += t.silent();
  return n;
}

// All reachable markings by the oracle's own token game.
std::set<support::ArcTable::Tokens> reachable(const LabeledPetriNet& net) {
  const support::ArcTable table(net);
  std::set<support::ArcTable::Tokens> seen{table.initial()};
  std::deque<support::ArcTable::Tokens> queue{table.initial()};
  support::ArcTable::Tokens next;
  while (!queue.empty()) {
    auto m = queue.front();
    queue.pop_front();
    for (std::size_t t = 0; t < table.transitions(); ++t) {
      if (table.try_fire(m, t, next) && seen.insert(next).second) queue.push_back(next);
    }
  }
  return seen;
}

}  // namespace

TEST(Translate, SingleActivity) {
  const auto net = net_of("a");
  EXPECT_EQ(net.place_count(), 2u);
  ASSERT_EQ(net.transitions().size(), 1u);
  EXPECT_EQ(net.transition(0).label, "a");
  EXPECT_EQ(net.arcs().size(), 2u);
  EXPECT_TRUE(is_workflow_net(net));
}

TEST(Translate, ParallelHasSilentSplitJoin) {
  const auto net = net_of("+(a, b)");
  EXPECT_EQ(net.place_count(), 6u);
  EXPECT_EQ(silent_count(net), 2u);
  EXPECT_EQ(net.transitions().size(), 4u);
  EXPECT_EQ(visible_language(net, 8), (std::set<ActivitySequence>{{"a", "b"}, {"b", "a"}}));
}

TEST(Translate, LoopLanguage) {
  const auto net = net_of("*(a, b)");
  EXPECT_EQ(visible_language(net, 5),
            (std::set<ActivitySequence>{{"a"}, {"a", "b", "a"}, {"a", "b", "a", "b", "a"}}));
  EXPECT_EQ(visible_language(net, 5), enumerate_language(parse_tree("*(a, b)"), 5));
}

TEST(Translate, LoopUnderChoiceDoesNotLeak) {
  // A redo arc wired straight onto shared choice places would allow <c, b, a>.
  const auto t = parse_tree("X(*(a, b), c)");
  const auto net = tree_to_petri_net(t);
  EXPECT_EQ(visible_language(net, 6), enumerate_language(t, 6));
  EXPECT_FALSE(visible_language(net, 3).contains(ActivitySequence{"c", "b", "a"}));
}

TEST(Translate, TransitionsRememberTreeNodes) {
  const auto t = parse_tree("->(a, X(b, tau), c)");
  const auto net = tree_to_petri_net(t);
  for (const auto& tr : net.transitions()) {
    const auto& node = t.at(tr.node);
    if (tr.label) {
      EXPECT_EQ(node.kind(), NodeKind::Activity);
      EXPECT_EQ(node.label(), *tr.label);
    }
  }
  const auto& block = net.block({1});
  EXPECT_NE(block.entry, block.exit);
  EXPECT_EQ(net.block({}).entry, net.source());
  EXPECT_EQ(net.block({}).exit, net.sink());
}

TEST(Translate, RejectsInvalidTree) {
  EXPECT_THROW(tree_to_petri_net(ProcessTree(make_operator(NodeKind::Loop, {activity("a")}))), Error);
  EXPECT_THROW(tree_to_petri_net(parse_tree("->(a, X())")), Error);
}

TEST(TokenGame, EnabledAndFire) {
  const auto net = net_of("a");
  const auto m0 = net.initial_marking();
  EXPECT_EQ(enabled(net, m0), std::vector<TransitionId>{0});
  const auto m1 = fire(net, m0, 0);
  EXPECT_EQ(m1, net.final_marking());
  try {
    fire(net, m1, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotEnabled);
  }
}

TEST(TokenGame, FireConservesPerArc) {
  const auto net = net_of("+(a, ->(b, c))");
  auto m = net.initial_marking();
  const auto t = enabled(net, m).at(0);
  const auto next = fire(net, m, t);
  EXPECT_EQ(next.total(), m.total() - net.transition(t).preset.size() + net.transition(t).postset.size());
  for (PlaceId p : net.transition(t).preset) EXPECT_EQ(next[p] + 1, m[p]);
  for (PlaceId p : net.transition(t).postset) EXPECT_EQ(next[p], m[p] + 1);
  EXPECT_EQ(fire(net, m, t), next);
}

TEST(TokenGame, ReplayOfAcceptedTraceEndsOnSink) {
  const auto t = parse_tree("->(a, +(b, *(c, d)), X(e, tau))");
  const auto net = tree_to_petri_net(t);
  for (const auto& word : enumerate_language(t, 6)) {
    // Depth-first replay of the visible word with silent moves in between.
    std::function<bool(const Marking&, std::size_t, int)> run = [&](const Marking& m, std::size_t i, int budget) {
      if (i == word.size() && m == net.final_marking()) return true;
      if (budget == 0) return false;
      for (TransitionId tr : enabled(net, m)) {
        const auto& label = net.transition(tr).label;
        if (!label) {
          if (run(fire(net, m, tr), i, budget - 1)) return true;
        } else if (i < word.size() && *label == word[i]) {
          if (run(fire(net, m, tr), i + 1, budget - 1)) return true;
        }
      }
      return false;
    };
    EXPECT_TRUE(run(net.initial_marking(), 0, 40)) << ::testing::PrintToString(word);
  }
}

TEST(Pnml, SingleNamedTransition) {
  const auto doc = xml::parse_document(serialize_pnml(net_of("a")));
  ASSERT_EQ(doc.name, "pnml");
  const auto* net = doc.child("net");
  ASSERT_NE(net, nullptr);
  const auto* page = net->child("page");
  ASSERT_NE(page, nullptr);
  int named = 0;
  for (const auto& e : page->children) {
    if (e.name == "transition" && e.child("name")) {
      ++named;
      EXPECT_EQ(e.child("name")->child("text")->text, "a");
    }
  }
  EXPECT_EQ(named, 1);
}

TEST(Pnml, SilentTransitionsHaveNoName) {
  const auto doc = xml::parse_document(serialize_pnml(net_of("+(a, b)")));
  const auto* page = doc.child("net")->child("page");
  int silent = 0;
  for (const auto& e : page->children) {
    if (e.name == "transition" && !e.child("name")) {
      ++silent;
      ASSERT_NE(e.child("toolspecific"), nullptr);
    }
  }
  EXPECT_EQ(silent, 2);
}

TEST(Pnml, MarkingsAndReferences) {
  const auto net = net_of("->(a, *(b, tau), +(c, d))");
  const auto doc = xml::parse_document(serialize_pnml(net));
  EXPECT_EQ(doc.child("net")->attribute("type"), "http://www.pnml.org/version-2009/grammar/pnmlcoremodel");
  const auto* page = doc.child("net")->child("page");
  std::set<std::string> places;
  std::set<std::string> transitions;
  std::vector<std::string> marked;
  for (const auto& e : page->children) {
    if (e.name == "place") {
      places.insert(std::string(*e.attribute("id")));
      if (e.child("initialMarking")) {
        marked.emplace_back(*e.attribute("id"));
        EXPECT_EQ(e.child("initialMarking")->child("text")->text, "1");
      }
    }
    if (e.name == "transition") transitions.insert(std::string(*e.attribute("id")));
  }
  EXPECT_EQ(marked, std::vector<std::string>{"source"});
  for (const auto& e : page->children) {
    if (e.name != "arc") continue;
    const std::string s(*e.attribute("source"));
    const std::string t(*e.attribute("target"));
    EXPECT_TRUE((places.contains(s) && transitions.contains(t)) || (transitions.contains(s) && places.contains(t)));
  }
  const auto* fm = doc.child("net")->child("finalmarkings");
  ASSERT_NE(fm, nullptr);
  const auto* place = fm->child("marking")->child("place");
  EXPECT_EQ(place->attribute("idref"), "sink");
  EXPECT_EQ(place->child("text")->text, "1");
}

TEST(Pnml, EscapesLabels) {
  const auto net = tree_to_petri_net(ProcessTree(activity("x<y&\"z\"")));
  const auto doc = xml::parse_document(serialize_pnml(net));
  for (const auto& e : doc.child("net")->child("page")->children) {
    if (e.name == "transition") {
      EXPECT_EQ(e.child("name")->child("text")->text, "x<y&\"z\"");
    }
  }
}

TEST(Property, LanguageEquivalence) {
  std::mt19937 rng(5);
  support::TreeGenerator gen(rng, {.max_depth = 4, .max_leaves = 6, .activities = 6});
  for (int i = 0; i < 120; ++i) {
    const auto t = gen();
    const auto net = tree_to_petri_net(t);
    ASSERT_TRUE(is_workflow_net(net)) << to_string(t);
    ASSERT_EQ(visible_language(net, 8), enumerate_language(t, 8)) << to_string(t);
  }
}

TEST(Property, SafeAndTokenBounded) {
  std::mt19937 rng(6);
  support::TreeGenerator gen(rng, {.max_depth = 5, .max_leaves = 8, .activities = 4});
  for (int i = 0; i < 100; ++i) {
    const auto t = gen();
    std::size_t bound = 1;
    t.visit([&](const TreeNode& n, const NodePath&) {
      if (n.kind() == NodeKind::Parallel) bound += n.children().size() - 1;
    });
    const auto net = tree_to_petri_net(t);
    for (const auto& m : reachable(net)) {
      std::size_t total = 0;
      for (int x : m) {
        ASSERT_LE(x, 1) << to_string(t);
        total += static_cast<std::size_t>(x);
      }
      ASSERT_LE(total, bound) << to_string(t);
    }
  }
}

TEST(Property, FiringDeterministic) {
  std::mt19937 rng(8);
  support::TreeGenerator gen(rng, {});
  for (int i = 0; i < 50; ++i) {
    const auto net = tree_to_petri_net(gen());
    auto m = net.initial_marking();
    for (int step = 0; step < 20; ++step) {
      const auto en = enabled(net, m);
      if (en.empty()) break;
      const auto t = en[static_cast<std::size_t>(step) % en.size()];
      const auto a = fire(net, m, t);
      ASSERT_EQ(a, fire(net, m, t));
      m = a;
    }
  }
}

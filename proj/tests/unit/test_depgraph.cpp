#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "dot_parse.hpp"
#include "fixtures.hpp"
#include "random_spec.hpp"
#include "mlfsm/depgraph.hpp"

using namespace mlfsm;
using namespace mlfsm::testing;

using Edges = std::set<std::pair<std::string, std::string>>;

TEST(BuildGraph, TwoClause) {
  const auto g = build_graph(two_clause());
  EXPECT_EQ(g.nodes, (std::vector<std::string>{"a0", "a1"}));
  EXPECT_EQ(g.edges, (Edges{{"a1", "a0"}}));
  EXPECT_EQ(g.dependencies_of("a1"), std::vector<std::string>{"a0"});
  EXPECT_EQ(g.dependents_of("a0"), std::vector<std::string>{"a1"});
}

TEST(BuildGraph, FanIn) {
  const auto g = build_graph(load_spec_file(fixture("specs/fan_in.json")));
  EXPECT_TRUE(g.edges.contains({"c2", "c0"}));
  EXPECT_TRUE(g.edges.contains({"c2", "c5"}));
}

TEST(BuildGraph, NoAutomataConditions) {
  EXPECT_TRUE(build_graph(load_spec_file(fixture("invalid/dup_trigger.json"))).edges.empty());
}

TEST(BuildGraph, DuplicateConditionsCollapse) {
  const auto spec = load_contract_spec(R"({
    "A": {"states": ["s0","s1"], "transitions": []},
    "B": {"states": ["s0","s1","s2"], "transitions": [
      {"source":"s0","destination":"s1","trigger":"x","conditions":["automata__a0_iscompleted","automata__a0_iscompleted"]},
      {"source":"s1","destination":"s2","trigger":"y","conditions":["automata__a0_iscompleted","automata__a1_iscompleted","automata__a5_iscompleted"]}]}})",
                                       "d.json");
  EXPECT_EQ(build_graph(spec).edges, (Edges{{"a1", "a0"}}));
}

TEST(TopoOrder, Examples) {
  EXPECT_EQ(topo_order(build_graph(two_clause())), (std::vector<std::string>{"a0", "a1"}));
  const auto three = load_contract_spec(R"({"A": {"states": ["s"], "transitions": []},
      "B": {"states": ["s"], "transitions": []}, "C": {"states": ["s"], "transitions": []}})",
                                        "t.json");
  EXPECT_EQ(topo_order(build_graph(three)), (std::vector<std::string>{"a0", "a1", "a2"}));
}

TEST(TopoOrder, FanInPutsDependenciesFirst) {
  const auto order = topo_order(build_graph(load_spec_file(fixture("specs/fan_in.json"))));
  auto pos = [&](const std::string& id) { return std::find(order.begin(), order.end(), id) - order.begin(); };
  EXPECT_LT(pos("c0"), pos("c2"));
  EXPECT_LT(pos("c5"), pos("c2"));
  EXPECT_EQ(order, (std::vector<std::string>{"c0", "c1", "c4", "c5", "c2", "c3"}));
}

TEST(TopoOrder, TwoCycleWitness) {
  try {
    topo_order(build_graph(load_spec_file(fixture("invalid/cycle.json"))));
    FAIL();
  } catch (const CycleError& e) {
    EXPECT_EQ(e.witness(), (std::vector<std::string>{"a0", "a1", "a0"}));
    EXPECT_EQ(format_witness(e.witness()), "a0 -> a1 -> a0");
  }
}

// Soundness on DAGs and cycle-detection completeness against a brute-force
// search, over random graphs.
TEST(TopoOrder, RandomGraphsAgainstBruteForce) {
  std::mt19937_64 rng(99);
  int cyclic = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 8);
    const double p = std::uniform_real_distribution<double>(0.0, 0.35)(rng);
    const auto edges = random_edges(rng, n, p);
    const auto graph = build_graph(spec_from_edges(n, edges));
    const bool expected_cycle = has_cycle_bruteforce(n, edges);
    try {
      const auto order = topo_order(graph);
      ASSERT_FALSE(expected_cycle) << "missed a cycle, trial " << trial;
      ASSERT_EQ(order.size(), static_cast<std::size_t>(n));
      std::map<std::string, std::size_t> pos;
      for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
      for (const auto& [dependent, dependency] : graph.edges) EXPECT_LT(pos[dependency], pos[dependent]);
    } catch (const CycleError& e) {
      ASSERT_TRUE(expected_cycle) << "spurious cycle, trial " << trial;
      ++cyclic;
      const auto& w = e.witness();
      ASSERT_GE(w.size(), 3u);
      EXPECT_EQ(w.front(), w.back());
      for (std::size_t i = 0; i + 1 < w.size(); ++i) EXPECT_TRUE(graph.edges.contains({w[i], w[i + 1]}));
    }
  }
  EXPECT_GT(cyclic, 50);
  EXPECT_LT(cyclic, 450);
}

// Among peers the earliest declared clause goes first: a brute-force
// reference builds the order by repeatedly taking the lowest ready index.
TEST(TopoOrder, TieBreakMatchesReference) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 7);
    std::vector<std::pair<int, int>> edges;
    for (const auto& [a, b] : random_edges(rng, n, 0.3))
      if (a > b) edges.emplace_back(a, b);  // acyclic by construction
    std::vector<int> ref;
    std::vector<bool> placed(static_cast<std::size_t>(n), false);
    while (static_cast<int>(ref.size()) < n) {
      for (int v = 0; v < n; ++v) {
        if (placed[static_cast<std::size_t>(v)]) continue;
        const bool ready = std::all_of(edges.begin(), edges.end(), [&](const auto& e) {
          return e.first != v || placed[static_cast<std::size_t>(e.second)];
        });
        if (ready) {
          placed[static_cast<std::size_t>(v)] = true;
          ref.push_back(v);
          break;
        }
      }
    }
    std::vector<std::string> expected;
    for (int v : ref) expected.push_back("a" + std::to_string(v));
    EXPECT_EQ(topo_order(build_graph(spec_from_edges(n, edges))), expected);
  }
}

TEST(ToDot, TwoClauseNoFocus) {
  const auto spec = two_clause();
  const auto dot = parse_dot(to_dot(build_graph(spec), spec));
  EXPECT_EQ(dot.open_braces, 0);
  EXPECT_EQ(dot.top.nodes, (std::vector<std::string>{"a0", "a1"}));
  ASSERT_EQ(dot.top.edges.size(), 1u);
  EXPECT_EQ(dot.top.edges[0].from, "a0");
  EXPECT_EQ(dot.top.edges[0].to, "a1");
  EXPECT_TRUE(dot.clusters.empty());
}

TEST(ToDot, TwoClauseFocusA1) {
  const auto spec = two_clause();
  const auto dot = parse_dot(to_dot(build_graph(spec), spec, "a1"));
  ASSERT_TRUE(dot.clusters.contains("a1"));
  const auto& c = dot.clusters.at("a1");
  EXPECT_EQ(c.nodes.size(), 3u);
  ASSERT_EQ(c.edges.size(), 2u);
  for (const auto& e : c.edges) EXPECT_FALSE(e.label.empty());
  EXPECT_NE(c.edges[1].label.find("package__p1_c2"), std::string::npos);
  EXPECT_EQ(dot.top.edges.size(), 1u);
}

TEST(ToDot, UnknownFocus) {
  const auto spec = two_clause();
  EXPECT_THROW(to_dot(build_graph(spec), spec, "a9"), UnknownFocus);
}

TEST(ToDot, FanInFocusC2) {
  const auto spec = load_spec_file(fixture("specs/fan_in.json"));
  const std::string text = to_dot(build_graph(spec), spec, "c2");
  EXPECT_EQ(text, to_dot(build_graph(spec), spec, "c2"));
  const auto dot = parse_dot(text);
  ASSERT_TRUE(dot.clusters.contains("c2"));
  int into_c2 = 0;
  for (const auto& e : dot.top.edges)
    if (e.to.rfind("c2/", 0) == 0) ++into_c2;
  EXPECT_EQ(into_c2, 2);
}

TEST(ToDot, QuotesAwkwardNames) {
  const auto spec = load_contract_spec(R"({"Say \"hi\"": {"states": ["s0"], "transitions": []}})", "q.json");
  const auto text = to_dot(build_graph(spec), spec);
  EXPECT_NE(text.find(R"(label="Say \"hi\"")"), std::string::npos) << text;
}

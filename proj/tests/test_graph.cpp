#include <algorithm>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "anatgraph/graph.hpp"
#include "anatgraph/json_lines.hpp"

using namespace anatgraph;

TEST(Graph, OpptDefaultsHaveOverlappingUpperArmEdges) {
  const SensorGraph g = build_graph(SensorLayout::oppt(), RelationRules::defaults(DatasetId::oppt));
  EXPECT_EQ(g.node_count(), 5);
  EXPECT_EQ(g.edge_count(), 16);
  // Both arm chains carry an interconnected and a lateral edge in each direction.
  std::map<std::pair<Index, Index>, int> multiplicity;
  for (const auto& e : g.edges()) ++multiplicity[{e.src, e.dst}];
  const Index rua = *g.layout().find("rua"), rla = *g.layout().find("Right Lower Arm");
  EXPECT_EQ((multiplicity[{rua, rla}]), 2);
  EXPECT_EQ((multiplicity[{rla, rua}]), 2);
}

TEST(Graph, EdgesSortedByTypeThenEndpoints) {
  const SensorGraph g = build_graph(SensorLayout::dsads(), RelationRules::defaults(DatasetId::dsads));
  EXPECT_TRUE(std::is_sorted(g.edges().begin(), g.edges().end(), [](const Edge& a, const Edge& b) {
    return std::tuple(code_of(a.type), a.src, a.dst) < std::tuple(code_of(b.type), b.src, b.dst);
  }));
  const auto codes = g.relation_codes();
  EXPECT_EQ(std::count(codes.begin(), codes.end(), 0), 8);
  EXPECT_EQ(std::count(codes.begin(), codes.end(), 1), 4);
  EXPECT_EQ(std::count(codes.begin(), codes.end(), 2), 8);
}

TEST(Graph, CrossLateralToggle) {
  const SensorGraph with = build_graph(SensorLayout::dsads(), RelationRules::defaults(DatasetId::dsads, true));
  const SensorGraph without = build_graph(SensorLayout::dsads(), RelationRules::defaults(DatasetId::dsads, false));
  EXPECT_EQ(with.edge_count() - without.edge_count(), 4);
}

TEST(Graph, EveryRelationIsBidirectional) {
  const SensorGraph g = build_graph(SensorLayout::oppt(), RelationRules::defaults(DatasetId::oppt));
  std::multiset<std::tuple<Index, Index, int>> edges;
  for (const auto& e : g.edges()) edges.insert({e.src, e.dst, code_of(e.type)});
  for (const auto& e : g.edges()) EXPECT_EQ(edges.count({e.dst, e.src, code_of(e.type)}), 1u);
}

TEST(Graph, NeighborsListIncomingEdges) {
  const SensorGraph g = build_graph(SensorLayout::oppt(), RelationRules::defaults(DatasetId::oppt));
  const Index back = *g.layout().find("back");
  const auto n = g.neighbors(back);
  ASSERT_EQ(n.size(), 2u);
  for (const auto& nb : n) EXPECT_EQ(g.edge(nb.edge).dst, back);
  EXPECT_EQ(g.edge_name(n[0].edge), g.layout().at(n[0].node).name + "->Back");
  EXPECT_THROW(g.neighbors(5), std::out_of_range);
}

TEST(Graph, RejectsBrokenRules) {
  const SensorLayout l = SensorLayout::oppt();
  using R = RelationType;
  EXPECT_THROW(build_graph(l, {{{"back", "back", R::lateral}}}), LayoutError);
  EXPECT_THROW(build_graph(l, {{{"back", "nose", R::lateral}}}), LayoutError);
  EXPECT_THROW(build_graph(l, {{{"back", "rua", R::lateral}, {"rua", "back", R::lateral}}}), LayoutError);
  // lla, lua, rla isolated
  EXPECT_THROW(build_graph(l, {{{"back", "rua", R::lateral}}}), LayoutError);
  EXPECT_THROW(build_graph(l, RelationRules{}), ConfigError);
  EXPECT_THROW(RelationRules::defaults(DatasetId::custom), LayoutError);
}

TEST(Graph, LayoutValidation) {
  EXPECT_THROW(SensorLayout(DatasetId::custom, {}), LayoutError);
  EXPECT_THROW(SensorLayout(DatasetId::custom, {{"a_b", "A"}}), LayoutError);
  EXPECT_THROW(SensorLayout(DatasetId::custom, {{"a", "A"}, {"a", "B"}}), LayoutError);
}

TEST(RulesFile, RoundTrip) {
  const SensorLayout l = SensorLayout::dsads();
  const RelationRules r = RelationRules::defaults(DatasetId::dsads);
  const RulesDocument doc = parse_rules(rules_to_json(l, r));
  const SensorGraph a = build_graph(l, r), b = build_graph(doc.layout, doc.rules);
  ASSERT_EQ(a.edge_count(), b.edge_count());
  for (Index e = 0; e < a.edge_count(); ++e) {
    EXPECT_EQ(a.edge(e).src, b.edge(e).src);
    EXPECT_EQ(a.edge(e).dst, b.edge(e).dst);
    EXPECT_EQ(a.edge(e).type, b.edge(e).type);
  }
}

TEST(RulesFile, ErrorsNameTheLine) {
  const std::string text = R"({
  "dataset": "custom",
  "positions": [
    {"key": "a", "side": "left", "region": "torso"},
    {"key": "b", "side": "right", "region": "torso"}
  ],
  "relations": {
    "lateral": [["a", "b"]],
    "analogous": [["a", "zz"]]
  }
})";
  try {
    parse_rules(text, "rules.json");
    FAIL() << "expected LayoutError";
  } catch (const LayoutError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("rules.json:9"), std::string::npos) << msg;
    EXPECT_NE(msg.find("zz"), std::string::npos) << msg;
  }
}

TEST(RulesFile, RejectsUnknownFieldsAndTypes) {
  EXPECT_THROW(parse_rules(R"({"dataset": "oppt", "positions": [], "relations": {}, "extra": 1})"), LayoutError);
  EXPECT_THROW(parse_rules(R"({"dataset": "oppt",
    "positions": [{"key": "a", "side": "up", "region": "torso"}], "relations": {}})"),
               LayoutError);
  EXPECT_THROW(parse_rules("{\n\"dataset\": \n"), LayoutError);
}

TEST(JsonLines, LocatesValues) {
  const LocatedJson j = parse_json_with_lines("{\n  \"a\": 1,\n  \"b\": [\n    true\n  ]\n}");
  EXPECT_EQ(j.line_of("/a"), 2);
  EXPECT_EQ(j.line_of("/b/0"), 4);
  EXPECT_EQ(j.line_of("/b/7"), 3);
  EXPECT_THROW(parse_json_with_lines("{\n\n  \"a\": ]"), JsonSyntaxError);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "support/graph_oracle.hpp"
#include "support/temp_dir.hpp"
#include "trafficmon/errors.hpp"
#include "trafficmon/routing.hpp"

using namespace trafficmon;
using testsupport::enumerate_best_route;

namespace {

RoadGraph make_graph(const std::vector<std::string>& nodes, const std::vector<RoadEdge>& edges) {
  RoadGraph g;
  for (const auto& n : nodes) g.add_node(n);
  for (const auto& e : edges) g.add_edge(e);
  g.finalize();
  return g;
}

RoadEdge edge(std::string id, std::string from, std::string to, double length, double speed,
              std::optional<std::string> segment = std::nullopt) {
  RoadEdge e;
  e.edge_id = std::move(id);
  e.from = std::move(from);
  e.to = std::move(to);
  e.segment_id = std::move(segment);
  e.length_m = length;
  e.free_flow_speed_mps = speed;
  return e;
}

RoadGraph random_graph(std::mt19937_64& rng, int max_nodes, RatioSnapshot& ratios) {
  const int n = 2 + static_cast<int>(rng() % (max_nodes - 1));
  std::vector<std::string> nodes;
  for (int i = 0; i < n; ++i) nodes.push_back("n" + std::to_string(i));

  std::uniform_real_distribution<double> length(50.0, 500.0);
  std::uniform_real_distribution<double> speed(5.0, 30.0);
  std::uniform_real_distribution<double> ratio(0.0, 2.0);
  std::vector<RoadEdge> edges;
  int eid = 0;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a == b || rng() % 5 >= 2) continue;
      std::optional<std::string> segment;
      if (rng() % 2 == 0) {
        segment = "seg" + std::to_string(eid);
        ratios[*segment] = ratio(rng);
      }
      edges.push_back(edge("e" + std::to_string(eid++), nodes[a], nodes[b], length(rng),
                           speed(rng), segment));
    }
  }
  return make_graph(nodes, edges);
}

}  // namespace

TEST_CASE("BPR travel time and delay") {
  const auto e = edge("e", "a", "b", 3000, 10);  // t0 = 300 s
  CHECK(free_flow_time(e) == doctest::Approx(300.0));
  CHECK(edge_travel_time(e, 0.0) == 300.0);  // free flow exactly
  CHECK(edge_travel_time(e, 1.0) == doctest::Approx(345.0).epsilon(1e-9));
  CHECK(edge_travel_time(e, 2.0) == doctest::Approx(1020.0).epsilon(1e-9));  // 300*(1+0.15*16)
  CHECK(estimated_delay(e, 0.0) == 0.0);
  CHECK(estimated_delay(e, 1.0) == doctest::Approx(45.0).epsilon(1e-9));
}

TEST_CASE("delay is non-decreasing in the ratio") {
  const auto e = edge("e", "a", "b", 1234, 13.9);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 3.0);
  for (int i = 0; i < 300; ++i) {
    double r1 = unit(rng), r2 = unit(rng);
    if (r1 > r2) std::swap(r1, r2);
    CHECK(estimated_delay(e, r1) <= estimated_delay(e, r2));
    CHECK(estimated_delay(e, r1) >= 0.0);
  }
}

TEST_CASE("single-edge graph routes over that edge") {
  const auto g = make_graph({"a", "b"}, {edge("only", "a", "b", 100, 10)});
  const auto route = best_route(g, "a", "b", {});
  REQUIRE(route.edge_ids.size() == 1);
  CHECK(route.edge_ids[0] == "only");
  CHECK(route.nodes == std::vector<std::string>{"a", "b"});
  CHECK(route.total_time_s == doctest::Approx(10.0));
  CHECK(route.total_length_m == 100.0);
}

TEST_CASE("congested shortcut loses to the free detour") {
  // Diamond: a->b->d is shorter but overcrowded; a->c->d is longer but free.
  const auto g = make_graph({"a", "b", "c", "d"},
                            {edge("e1", "a", "b", 500, 10, "main"),
                             edge("e2", "b", "d", 500, 10, "main"),
                             edge("e3", "a", "c", 800, 10),
                             edge("e4", "c", "d", 800, 10)});
  RatioSnapshot congested{{"main", 2.0}};

  const auto route = best_route(g, "a", "d", congested);
  CHECK(route.edge_ids == std::vector<std::string>{"e3", "e4"});

  const auto oracle = enumerate_best_route(g, "a", "d", congested);
  REQUIRE(oracle.has_value());
  CHECK(route.total_time_s == oracle->cost);
  CHECK(route.edge_ids == oracle->edge_ids);

  // Free-flow favors the short path again.
  const auto free_route = best_route(g, "a", "d", {});
  CHECK(free_route.edge_ids == std::vector<std::string>{"e1", "e2"});
  const auto free_oracle = enumerate_best_route(g, "a", "d", {});
  CHECK(free_route.total_time_s == free_oracle->cost);
}

TEST_CASE("gridlock still yields a best answer") {
  const auto g = make_graph({"a", "b", "c", "d"},
                            {edge("e1", "a", "b", 500, 10, "s1"), edge("e2", "b", "d", 500, 10, "s1"),
                             edge("e3", "a", "c", 800, 10, "s2"), edge("e4", "c", "d", 800, 10, "s2")});
  RatioSnapshot all_jammed{{"s1", 2.0}, {"s2", 2.0}};
  const auto route = best_route(g, "a", "d", all_jammed);
  CHECK(route.edge_ids == std::vector<std::string>{"e1", "e2"});  // still the lesser evil
}

TEST_CASE("equal-cost parallel edges pick the smaller edge_id") {
  const auto g = make_graph(
      {"a", "b"}, {edge("zz", "a", "b", 100, 10), edge("aa", "a", "b", 100, 10)});
  CHECK(best_route(g, "a", "b", {}).edge_ids == std::vector<std::string>{"aa"});
}

TEST_CASE("equal-cost paths pick the lexicographically smaller sequence") {
  const auto g = make_graph({"a", "m", "n", "b"},
                            {edge("p1", "a", "m", 100, 10), edge("p2", "m", "b", 100, 10),
                             edge("q1", "a", "n", 100, 10), edge("q2", "n", "b", 100, 10)});
  const auto route = best_route(g, "a", "b", {});
  CHECK(route.edge_ids == std::vector<std::string>{"p1", "p2"});
}

TEST_CASE("missing endpoints and unreachable destinations") {
  const auto g = make_graph({"a", "b", "c"}, {edge("e", "a", "b", 100, 10)});
  CHECK_THROWS_AS(best_route(g, "zz", "b", {}), TrafficError);
  CHECK_THROWS_AS(best_route(g, "a", "zz", {}), TrafficError);
  try {
    best_route(g, "a", "c", {});
    FAIL("expected NoPath");
  } catch (const TrafficError& e) {
    CHECK(e.code() == Errc::no_path);
  }
}

TEST_CASE("origin equal to destination is an empty route") {
  const auto g = make_graph({"a", "b"}, {edge("e", "a", "b", 100, 10)});
  const auto route = best_route(g, "a", "a", {});
  CHECK(route.edge_ids.empty());
  CHECK(route.total_time_s == 0.0);
}

TEST_CASE("random graphs match exhaustive enumeration") {
  std::mt19937_64 rng(101);
  int compared = 0;
  for (int trial = 0; trial < 60; ++trial) {
    RatioSnapshot ratios;
    const auto g = random_graph(rng, 8, ratios);
    const std::string origin = "n0";
    const std::string dest = "n" + std::to_string(g.node_count() - 1);
    const auto oracle = enumerate_best_route(g, origin, dest, ratios);
    if (!oracle) {
      CHECK_THROWS_AS(best_route(g, origin, dest, ratios), TrafficError);
      continue;
    }
    const auto route = best_route(g, origin, dest, ratios);
    CHECK(route.total_time_s == oracle->cost);  // exact float equality
    CHECK(route.edge_ids == oracle->edge_ids);
    ++compared;
  }
  CHECK(compared > 20);
}

TEST_CASE("raising one ratio never lowers the optimal cost") {
  std::mt19937_64 rng(103);
  for (int trial = 0; trial < 40; ++trial) {
    RatioSnapshot ratios;
    const auto g = random_graph(rng, 7, ratios);
    const std::string origin = "n0";
    const std::string dest = "n" + std::to_string(g.node_count() - 1);
    if (ratios.empty()) continue;
    double before;
    try {
      before = best_route(g, origin, dest, ratios).total_time_s;
    } catch (const TrafficError&) {
      continue;
    }
    auto raised = ratios;
    auto it = raised.begin();
    std::advance(it, rng() % raised.size());
    it->second += 1.0;
    CHECK(best_route(g, origin, dest, raised).total_time_s >= before);
  }
}

TEST_CASE("route totals equal the sum over its edges") {
  std::mt19937_64 rng(107);
  for (int trial = 0; trial < 40; ++trial) {
    RatioSnapshot ratios;
    const auto g = random_graph(rng, 8, ratios);
    const std::string origin = "n0";
    const std::string dest = "n" + std::to_string(g.node_count() - 1);
    Route route;
    try {
      route = best_route(g, origin, dest, ratios);
    } catch (const TrafficError&) {
      continue;
    }
    double time = 0, length = 0;
    for (const auto& id : route.edge_ids) {
      const RoadEdge& e = g.edge(id);
      double r = 0;
      if (e.segment_id && ratios.count(*e.segment_id)) r = ratios.at(*e.segment_id);
      time += edge_travel_time(e, r);
      length += e.length_m;
    }
    CHECK(route.total_time_s == doctest::Approx(time).epsilon(1e-9));
    CHECK(route.total_length_m == doctest::Approx(length).epsilon(1e-9));
    // Consecutive edges must chain through shared nodes.
    for (std::size_t i = 0; i + 1 < route.edge_ids.size(); ++i) {
      CHECK(g.edge(route.edge_ids[i]).to == g.edge(route.edge_ids[i + 1]).from);
    }
  }
}

TEST_CASE("graph file loading and validation") {
  testsupport::TempDir dir;
  const auto good = dir.write("g.json", R"({
    "nodes":["a","b"],
    "edges":[{"edge_id":"e1","from":"a","to":"b","segment_id":"s1",
              "length_m":100,"free_flow_speed_mps":10}]
  })");
  const auto g = RoadGraph::load_file(good);
  CHECK(g.node_count() == 2);
  CHECK(g.edges().size() == 1);
  CHECK(g.edge("e1").segment_id == std::optional<std::string>("s1"));

  const auto missing_node = dir.write("bad1.json", R"({
    "nodes":["a"],
    "edges":[{"edge_id":"e1","from":"a","to":"zz","length_m":100,"free_flow_speed_mps":10}]
  })");
  CHECK_THROWS_AS(RoadGraph::load_file(missing_node), TrafficError);

  const auto dup_edge = dir.write("bad2.json", R"({
    "nodes":["a","b"],
    "edges":[{"edge_id":"e1","from":"a","to":"b","length_m":100,"free_flow_speed_mps":10},
             {"edge_id":"e1","from":"b","to":"a","length_m":100,"free_flow_speed_mps":10}]
  })");
  CHECK_THROWS_AS(RoadGraph::load_file(dup_edge), TrafficError);
}

#include "graph_oracle.hpp"

#include <set>

namespace testsupport {

using trafficmon::RatioSnapshot;
using trafficmon::RoadEdge;
using trafficmon::RoadGraph;

namespace {

double weight(const RoadEdge& e, const RatioSnapshot& ratios) {
  double ratio = 0;
  if (e.segment_id) {
    const auto it = ratios.find(*e.segment_id);
    if (it != ratios.end()) ratio = it->second;
  }
  return trafficmon::edge_travel_time(e, ratio);
}

struct Search {
  const RoadGraph* graph;
  const RatioSnapshot* ratios;
  std::string dest;
  std::set<std::string> visited;
  std::vector<std::string> path;
  std::optional<EnumeratedRoute> best;

  void dfs(const std::string& node, double cost) {
    if (node == dest) {
      if (!best || cost < best->cost || (cost == best->cost && path < best->edge_ids)) {
        best = EnumeratedRoute{path, cost};
      }
      return;
    }
    for (std::size_t ei : graph->out_edges(node)) {
      const RoadEdge& e = graph->edges()[ei];
      if (visited.count(e.to)) continue;
      visited.insert(e.to);
      path.push_back(e.edge_id);
      dfs(e.to, cost + weight(e, *ratios));
      path.pop_back();
      visited.erase(e.to);
    }
  }
};

}  // namespace

std::optional<EnumeratedRoute> enumerate_best_route(const RoadGraph& graph,
                                                    const std::string& origin,
                                                    const std::string& dest,
                                                    const RatioSnapshot& ratios) {
  Search s;
  s.graph = &graph;
  s.ratios = &ratios;
  s.dest = dest;
  s.visited.insert(origin);
  s.dfs(origin, 0.0);
  return s.best;
}

}  // namespace testsupport

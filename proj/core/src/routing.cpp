#include "trafficmon/routing.hpp"

#include <algorithm>
#include <fstream>
#include <queue>

#include <json.hpp>

#include "trafficmon/errors.hpp"

namespace trafficmon {

RoadGraph RoadGraph::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::io_error, "cannot open graph file " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    raise(Errc::config_error, "graph file " + path.string() + " is not a JSON object");
  }
  RoadGraph g;
  try {
    for (const auto& n : j.at("nodes")) g.add_node(n.get<std::string>());
    for (const auto& e : j.at("edges")) {
      RoadEdge edge;
      edge.edge_id = e.at("edge_id").get<std::string>();
      edge.from = e.at("from").get<std::string>();
      edge.to = e.at("to").get<std::string>();
      if (e.contains("segment_id") && !e["segment_id"].is_null()) {
        edge.segment_id = e["segment_id"].get<std::string>();
      }
      edge.length_m = e.at("length_m").get<double>();
      edge.free_flow_speed_mps = e.at("free_flow_speed_mps").get<double>();
      g.add_edge(std::move(edge));
    }
  } catch (const nlohmann::json::exception& ex) {
    raise(Errc::config_error, "graph file " + path.string() + ": " + ex.what());
  }
  g.finalize();
  return g;
}

void RoadGraph::add_node(const std::string& node_id) { adjacency_.try_emplace(node_id); }

void RoadGraph::add_edge(RoadEdge edge) {
  if (!has_node(edge.from) || !has_node(edge.to)) {
    raise(Errc::config_error, "edge '" + edge.edge_id + "' references a missing node");
  }
  if (edge.length_m <= 0 || edge.free_flow_speed_mps <= 0) {
    raise(Errc::config_error, "edge '" + edge.edge_id + "' has non-positive geometry");
  }
  if (edge.edge_id.find('\x1f') != std::string::npos) {
    raise(Errc::config_error, "edge id must not contain control characters");
  }
  if (!edge_by_id_.emplace(edge.edge_id, edges_.size()).second) {
    raise(Errc::config_error, "duplicate edge_id '" + edge.edge_id + "'");
  }
  adjacency_[edge.from].push_back(edges_.size());
  edges_.push_back(std::move(edge));
}

void RoadGraph::finalize() {
  for (auto& [node, out] : adjacency_) {
    std::sort(out.begin(), out.end(), [this](std::size_t a, std::size_t b) {
      return edges_[a].edge_id < edges_[b].edge_id;
    });
  }
}

const RoadEdge& RoadGraph::edge(const std::string& edge_id) const {
  const auto it = edge_by_id_.find(edge_id);
  if (it == edge_by_id_.end()) raise(Errc::config_error, "unknown edge '" + edge_id + "'");
  return edges_[it->second];
}

const std::vector<std::size_t>& RoadGraph::out_edges(const std::string& node_id) const {
  static const std::vector<std::size_t> empty;
  const auto it = adjacency_.find(node_id);
  return it == adjacency_.end() ? empty : it->second;
}

double free_flow_time(const RoadEdge& edge) { return edge.length_m / edge.free_flow_speed_mps; }

double edge_travel_time(const RoadEdge& edge, double ratio) {
  const double r2 = ratio * ratio;
  return free_flow_time(edge) * (1.0 + 0.15 * r2 * r2);
}

double estimated_delay(const RoadEdge& edge, double ratio) {
  return edge_travel_time(edge, ratio) - free_flow_time(edge);
}

namespace {

double edge_ratio(const RoadEdge& edge, const RatioSnapshot& ratios) {
  if (!edge.segment_id) return 0.0;
  const auto it = ratios.find(*edge.segment_id);
  return it == ratios.end() ? 0.0 : it->second;
}

// Dijkstra label: path cost plus its edge_id sequence joined with \x1f.
// With strictly positive edge times, (cost, seq) comparison is preserved
// under extension, so settling nodes by smallest label yields the minimal
// cost and, among minimal-cost paths, the lexicographically smallest
// edge_id sequence.
struct Label {
  double cost = 0;
  std::string seq;

  bool operator<(const Label& o) const {
    if (cost != o.cost) return cost < o.cost;
    return seq < o.seq;
  }
};

}  // namespace

Route best_route(const RoadGraph& graph, const std::string& origin, const std::string& dest,
                 const RatioSnapshot& ratios) {
  if (!graph.has_node(origin)) raise(Errc::unknown_node, "origin '" + origin + "'");
  if (!graph.has_node(dest)) raise(Errc::unknown_node, "dest '" + dest + "'");

  struct NodeInfo {
    Label label;
    bool settled = false;
    bool reached = false;
    std::string prev_node;
    std::size_t prev_edge = SIZE_MAX;
  };
  std::unordered_map<std::string, NodeInfo> info;

  struct QueueEntry {
    Label label;
    std::string node;
    std::string prev_node;
    std::size_t prev_edge;

    bool operator>(const QueueEntry& o) const { return o.label < label; }
  };
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> queue;
  queue.push(QueueEntry{Label{0.0, ""}, origin, "", SIZE_MAX});

  while (!queue.empty()) {
    QueueEntry top = queue.top();
    queue.pop();
    NodeInfo& ni = info[top.node];
    if (ni.settled) continue;
    if (ni.reached && ni.label < top.label) continue;
    ni.settled = true;
    ni.reached = true;
    ni.label = top.label;
    ni.prev_node = top.prev_node;
    ni.prev_edge = top.prev_edge;
    if (top.node == dest) break;

    for (std::size_t ei : graph.out_edges(top.node)) {
      const RoadEdge& e = graph.edges()[ei];
      NodeInfo& target = info[e.to];
      if (target.settled) continue;
      Label cand;
      cand.cost = top.label.cost + edge_travel_time(e, edge_ratio(e, ratios));
      cand.seq = top.label.seq.empty() ? e.edge_id : top.label.seq + '\x1f' + e.edge_id;
      if (!target.reached || cand < target.label) {
        target.reached = true;
        target.label = cand;
        queue.push(QueueEntry{std::move(cand), e.to, top.node, ei});
      }
    }
  }

  const auto dest_it = info.find(dest);
  if (dest_it == info.end() || !dest_it->second.settled) {
    raise(Errc::no_path, "no route from '" + origin + "' to '" + dest + "'");
  }

  Route route;
  route.total_time_s = dest_it->second.label.cost;
  std::string node = dest;
  while (node != origin) {
    const NodeInfo& ni = info.at(node);
    const RoadEdge& e = graph.edges()[ni.prev_edge];
    route.edge_ids.push_back(e.edge_id);
    route.nodes.push_back(node);
    route.total_length_m += e.length_m;
    node = ni.prev_node;
  }
  route.nodes.push_back(origin);
  std::reverse(route.edge_ids.begin(), route.edge_ids.end());
  std::reverse(route.nodes.begin(), route.nodes.end());
  return route;
}

}  // namespace trafficmon

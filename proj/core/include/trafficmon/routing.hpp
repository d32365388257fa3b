#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace trafficmon {

struct RoadEdge {
  std::string edge_id;
  std::string from;
  std::string to;
  std::optional<std::string> segment_id;  // link to a monitored street, if any
  double length_m = 0;
  double free_flow_speed_mps = 0;
};

// Directed road graph. Edge ids are unique; adjacency is kept sorted by
// edge_id so traversal order is reproducible.
class RoadGraph {
 public:
  static RoadGraph load_file(const std::filesystem::path& path);

  void add_node(const std::string& node_id);
  void add_edge(RoadEdge edge);  // validates endpoints and geometry
  void finalize();               // sorts adjacency; called by loaders

  bool has_node(const std::string& node_id) const { return adjacency_.count(node_id) > 0; }
  std::size_t node_count() const { return adjacency_.size(); }
  const std::vector<RoadEdge>& edges() const { return edges_; }
  const RoadEdge& edge(const std::string& edge_id) const;

  // Outgoing edge indices for a node, sorted by edge_id.
  const std::vector<std::size_t>& out_edges(const std::string& node_id) const;

 private:
  std::vector<RoadEdge> edges_;
  std::unordered_map<std::string, std::vector<std::size_t>> adjacency_;
  std::unordered_map<std::string, std::size_t> edge_by_id_;
};

// segment_id -> occupancy ratio, captured once per routing query. Edges
// whose segment is absent (or unmonitored) ride at ratio 0.
using RatioSnapshot = std::unordered_map<std::string, double>;

double free_flow_time(const RoadEdge& edge);

// BPR volume-delay: t0 * (1 + 0.15 * ratio^4).
double edge_travel_time(const RoadEdge& edge, double ratio);

// edge_travel_time - t0, always >= 0.
double estimated_delay(const RoadEdge& edge, double ratio);

struct Route {
  std::vector<std::string> edge_ids;
  std::vector<std::string> nodes;  // origin first
  double total_time_s = 0;
  double total_length_m = 0;
};

// Minimal-travel-time route under the snapshot. Equal-cost ties resolve to
// the lexicographically smallest edge_id sequence (well-defined because all
// edge times are strictly positive). Throws Errc::unknown_node for missing
// endpoints and Errc::no_path when dest is unreachable.
Route best_route(const RoadGraph& graph, const std::string& origin, const std::string& dest,
                 const RatioSnapshot& ratios);

}  // namespace trafficmon

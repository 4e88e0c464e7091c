#pragma once

// Road-network mobility: a directed/bidirectional edge graph, Dijkstra
// routing and a single-vehicle bounded-acceleration cruise model.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "hvsim/geometry.hpp"

namespace hvsim {

using NodeId = std::int64_t;
using EdgeId = std::int64_t;

struct RoadEdge {
  EdgeId id = 0;
  NodeId from = 0;
  NodeId to = 0;
  double length = 0.0;       // m
  double speed_limit = 0.0;  // m/s
  bool bidirectional = true;
};

class RoadNetwork {
 public:
  /// Throws std::invalid_argument on duplicate ids or non-finite coordinates.
  void add_node(NodeId id, Point2 position);

  /// Length <= 0 means "use the straight-line node distance". An explicit
  /// length shorter than the straight-line distance is rejected.
  void add_edge(RoadEdge edge);

  bool has_node(NodeId id) const { return nodes_.contains(id); }
  Point2 node(NodeId id) const;
  const RoadEdge& edge(EdgeId id) const;
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  std::vector<NodeId> node_ids() const;

  struct Arc {
    EdgeId edge;
    NodeId head;
    bool forward;
  };
  /// Outgoing arcs of a node, sorted by edge id.
  std::span<const Arc> arcs(NodeId from) const;

 private:
  std::unordered_map<NodeId, Point2> nodes_;
  std::unordered_map<EdgeId, RoadEdge> edges_;
  std::unordered_map<NodeId, std::vector<Arc>> out_;
};

RoadNetwork network_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RoadNetwork& net);
RoadNetwork load_network(const std::filesystem::path& file);

/// One traversal of an edge; forward means from -> to.
struct Hop {
  EdgeId edge = 0;
  bool forward = true;

  friend bool operator==(const Hop&, const Hop&) = default;
};

struct Route {
  NodeId start = 0;
  std::vector<Hop> hops;

  std::vector<EdgeId> edge_ids() const;
  double length(const RoadNetwork& net) const;
};

/// Minimal-length route. Among equal-length routes the one taking the
/// smallest edge id at each successive node is returned. std::nullopt when the
/// target is unreachable; throws std::invalid_argument for unknown nodes.
std::optional<Route> shortest_path(const RoadNetwork& net, NodeId from, NodeId to);

/// Chains shortest paths through the waypoints. Throws std::runtime_error if
/// any leg is unroutable.
Route route_through(const RoadNetwork& net, std::span<const NodeId> waypoints);

struct KinematicParams {
  double max_accel = 2.5;  // m/s^2
  double max_decel = 4.0;  // m/s^2, used to stop at the route end
};

struct VehicleState {
  Point2 position;
  double velocity = 0.0;     // m/s
  std::size_t hop = 0;       // index of the current hop in route.hops
  double edge_offset = 0.0;  // m along the current hop
  Route route;
  std::vector<double> remaining_after;  // route length left after hop k
  double traveled = 0.0;                // m since the trip start

  bool finished() const { return hop >= route.hops.size(); }
  /// Current edge, or nothing when the trip is complete.
  std::optional<EdgeId> current_edge() const;
  /// Distance to the end of the route.
  double remaining(const RoadNetwork& net) const;
};

VehicleState start_trip(const RoadNetwork& net, Route route);

/// Advances the vehicle by dt seconds. The velocity is updated first (ramp
/// toward the edge limit at max_accel, capped by the braking curve
/// sqrt(2 * max_decel * remaining)), then the offset advances by v * dt,
/// rolling over hop boundaries. Reaching the end sets velocity to 0.
VehicleState step(const VehicleState& state, const RoadNetwork& net, double dt, const KinematicParams& params = {});

struct TrajectoryPoint {
  double t = 0.0;
  Point2 position;
  double velocity = 0.0;
};

/// Samples t = 0, dt, 2dt, ... up to duration (floor(duration / dt) + 1 points).
std::vector<TrajectoryPoint> sample_trajectory(const VehicleState& state0, const RoadNetwork& net, double dt,
                                               double duration, const KinematicParams& params = {});

}  // namespace hvsim

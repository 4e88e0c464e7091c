#include "hvsim/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>

namespace hvsim {

namespace {

constexpr double kLengthTolerance = 1e-6;

}  // namespace

void RoadNetwork::add_node(NodeId id, Point2 position) {
  if (!is_finite(position)) throw std::invalid_argument("node " + std::to_string(id) + " has non-finite coordinates");
  if (!nodes_.emplace(id, position).second) throw std::invalid_argument("duplicate node id " + std::to_string(id));
}

void RoadNetwork::add_edge(RoadEdge edge) {
  const std::string tag = "edge " + std::to_string(edge.id);
  if (edges_.contains(edge.id)) throw std::invalid_argument("duplicate " + tag);
  if (!nodes_.contains(edge.from)) throw std::invalid_argument(tag + " references missing node " + std::to_string(edge.from));
  if (!nodes_.contains(edge.to)) throw std::invalid_argument(tag + " references missing node " + std::to_string(edge.to));
  if (!(edge.speed_limit > 0.0) || !std::isfinite(edge.speed_limit)) throw std::invalid_argument(tag + ": speed_limit must be > 0");
  const double straight = distance(nodes_.at(edge.from), nodes_.at(edge.to));
  if (!(edge.length > 0.0)) {
    edge.length = straight;
  } else if (!std::isfinite(edge.length) || edge.length < straight - kLengthTolerance) {
    throw std::invalid_argument(tag + ": length shorter than the straight-line node distance");
  }
  edges_.emplace(edge.id, edge);

  auto insert = [this](NodeId at, Arc arc) {
    auto& list = out_[at];
    list.insert(std::upper_bound(list.begin(), list.end(), arc, [](const Arc& a, const Arc& b) { return a.edge < b.edge; }),
                arc);
  };
  insert(edge.from, {edge.id, edge.to, true});
  if (edge.bidirectional) insert(edge.to, {edge.id, edge.from, false});
}

Point2 RoadNetwork::node(NodeId id) const {
  const auto it = nodes_.find(id);
  if (it == nodes_.end()) throw std::invalid_argument("unknown node " + std::to_string(id));
  return it->second;
}

const RoadEdge& RoadNetwork::edge(EdgeId id) const {
  const auto it = edges_.find(id);
  if (it == edges_.end()) throw std::invalid_argument("unknown edge " + std::to_string(id));
  return it->second;
}

std::vector<NodeId> RoadNetwork::node_ids() const {
  std::vector<NodeId> ids;
  ids.reserve(nodes_.size());
  for (const auto& [id, p] : nodes_) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::span<const RoadNetwork::Arc> RoadNetwork::arcs(NodeId from) const {
  const auto it = out_.find(from);
  if (it == out_.end()) return {};
  return it->second;
}

RoadNetwork network_from_json(const nlohmann::json& j) {
  RoadNetwork net;
  try {
    for (const auto& n : j.at("nodes")) {
      net.add_node(n.at("id").get<NodeId>(), {n.at("x").get<double>(), n.at("y").get<double>()});
    }
    for (const auto& e : j.at("edges")) {
      RoadEdge edge;
      edge.id = e.at("id").get<EdgeId>();
      edge.from = e.at("from").get<NodeId>();
      edge.to = e.at("to").get<NodeId>();
      edge.length = e.value("length", 0.0);
      edge.speed_limit = e.at("speed_limit").get<double>();
      edge.bidirectional = e.value("bidir", true);
      net.add_edge(edge);
    }
  } catch (const nlohmann::json::exception& ex) {
    throw std::invalid_argument(std::string("malformed road network: ") + ex.what());
  }
  return net;
}

nlohmann::json to_json(const RoadNetwork& net) {
  nlohmann::json nodes = nlohmann::json::array();
  std::vector<EdgeId> edge_ids;
  for (NodeId id : net.node_ids()) {
    const Point2 p = net.node(id);
    nodes.push_back({{"id", id}, {"x", p.x}, {"y", p.y}});
    for (const auto& arc : net.arcs(id)) {
      if (arc.forward) edge_ids.push_back(arc.edge);
    }
  }
  std::sort(edge_ids.begin(), edge_ids.end());
  nlohmann::json edges = nlohmann::json::array();
  for (EdgeId id : edge_ids) {
    const auto& e = net.edge(id);
    edges.push_back({{"id", e.id},
                     {"from", e.from},
                     {"to", e.to},
                     {"length", e.length},
                     {"speed_limit", e.speed_limit},
                     {"bidir", e.bidirectional}});
  }
  return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

RoadNetwork load_network(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open road network " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(file.string() + ": " + e.what());
  }
  return network_from_json(j);
}

std::vector<EdgeId> Route::edge_ids() const {
  std::vector<EdgeId> ids;
  ids.reserve(hops.size());
  for (const auto& h : hops) ids.push_back(h.edge);
  return ids;
}

double Route::length(const RoadNetwork& net) const {
  double total = 0.0;
  for (const auto& h : hops) total += net.edge(h.edge).length;
  return total;
}

std::optional<Route> shortest_path(const RoadNetwork& net, NodeId from, NodeId to) {
  if (!net.has_node(from)) throw std::invalid_argument("unknown route origin " + std::to_string(from));
  if (!net.has_node(to)) throw std::invalid_argument("unknown route target " + std::to_string(to));
  if (from == to) return Route{from, {}};

  // Distances to the target over reversed arcs, then a greedy forward walk
  // that takes the smallest edge id among the arcs on a shortest path.
  struct InArc {
    NodeId tail;
    double length;
  };
  std::unordered_map<NodeId, std::vector<InArc>> incoming;
  for (NodeId u : net.node_ids()) {
    for (const auto& arc : net.arcs(u)) incoming[arc.head].push_back({u, net.edge(arc.edge).length});
  }

  std::unordered_map<NodeId, double> dist;
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[to] = 0.0;
  queue.push({0.0, to});
  while (!queue.empty()) {
    const auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[v]) continue;
    for (const auto& in : incoming[v]) {
      const double nd = d + in.length;
      auto it = dist.find(in.tail);
      if (it == dist.end() || nd < it->second) {
        dist[in.tail] = nd;
        queue.push({nd, in.tail});
      }
    }
  }
  if (!dist.contains(from)) return std::nullopt;

  Route route{from, {}};
  NodeId at = from;
  while (at != to) {
    const double here = dist.at(at);
    const double tol = 1e-9 * std::max(1.0, here);
    const RoadNetwork::Arc* chosen = nullptr;
    for (const auto& arc : net.arcs(at)) {  // sorted by edge id
      const auto it = dist.find(arc.head);
      if (it == dist.end()) continue;
      if (std::fabs(net.edge(arc.edge).length + it->second - here) <= tol && it->second < here) {
        chosen = &arc;
        break;
      }
    }
    if (chosen == nullptr) throw std::logic_error("shortest path reconstruction failed");
    route.hops.push_back({chosen->edge, chosen->forward});
    at = chosen->head;
  }
  return route;
}

Route route_through(const RoadNetwork& net, std::span<const NodeId> waypoints) {
  if (waypoints.empty()) throw std::invalid_argument("route needs at least one waypoint");
  Route full{waypoints.front(), {}};
  for (std::size_t k = 1; k < waypoints.size(); ++k) {
    auto leg = shortest_path(net, waypoints[k - 1], waypoints[k]);
    if (!leg) {
      throw std::runtime_error("no route from node " + std::to_string(waypoints[k - 1]) + " to node " +
                               std::to_string(waypoints[k]));
    }
    full.hops.insert(full.hops.end(), leg->hops.begin(), leg->hops.end());
  }
  return full;
}

namespace {

Point2 position_on(const RoadNetwork& net, const Hop& hop, double offset) {
  const auto& e = net.edge(hop.edge);
  const Point2 a = net.node(hop.forward ? e.from : e.to);
  const Point2 b = net.node(hop.forward ? e.to : e.from);
  const double f = e.length > 0.0 ? offset / e.length : 0.0;
  return a + (b - a) * f;
}

}  // namespace

std::optional<EdgeId> VehicleState::current_edge() const {
  if (finished()) return std::nullopt;
  return route.hops[hop].edge;
}

double VehicleState::remaining(const RoadNetwork& net) const {
  if (finished()) return 0.0;
  return net.edge(route.hops[hop].edge).length - edge_offset + remaining_after[hop];
}

VehicleState start_trip(const RoadNetwork& net, Route route) {
  VehicleState s;
  s.position = net.node(route.start);
  s.remaining_after.assign(route.hops.size(), 0.0);
  for (std::size_t k = route.hops.size(); k-- > 1;) {
    s.remaining_after[k - 1] = s.remaining_after[k] + net.edge(route.hops[k].edge).length;
  }
  s.route = std::move(route);
  return s;
}

VehicleState step(const VehicleState& state, const RoadNetwork& net, double dt, const KinematicParams& params) {
  if (!(dt > 0.0)) throw std::invalid_argument("mobility step needs dt > 0");
  VehicleState next = state;
  if (next.finished()) {
    next.velocity = 0.0;
    return next;
  }

  const double remaining = next.remaining(net);
  const double limit = net.edge(next.route.hops[next.hop].edge).speed_limit;
  const double target = std::min(limit, std::sqrt(2.0 * params.max_decel * remaining));
  const double v = next.velocity < target ? std::min(next.velocity + params.max_accel * dt, target) : target;
  const double advance = v * dt;

  if (advance >= remaining) {
    next.traveled += remaining;
    next.hop = next.route.hops.size();
    next.edge_offset = 0.0;
    next.velocity = 0.0;
    const auto& last = next.route.hops.back();
    const auto& e = net.edge(last.edge);
    next.position = net.node(last.forward ? e.to : e.from);
    return next;
  }

  next.velocity = v;
  next.traveled += advance;
  next.edge_offset += advance;
  while (next.edge_offset > net.edge(next.route.hops[next.hop].edge).length) {
    next.edge_offset -= net.edge(next.route.hops[next.hop].edge).length;
    ++next.hop;
  }
  next.position = position_on(net, next.route.hops[next.hop], next.edge_offset);
  return next;
}

std::vector<TrajectoryPoint> sample_trajectory(const VehicleState& state0, const RoadNetwork& net, double dt,
                                               double duration, const KinematicParams& params) {
  if (!(dt > 0.0)) throw std::invalid_argument("trajectory sampling needs dt > 0");
  if (duration < 0.0) throw std::invalid_argument("trajectory duration must be >= 0");
  const auto steps = static_cast<std::size_t>(std::floor(duration / dt + 1e-9));
  std::vector<TrajectoryPoint> out;
  out.reserve(steps + 1);
  VehicleState s = state0;
  out.push_back({0.0, s.position, s.velocity});
  for (std::size_t k = 1; k <= steps; ++k) {
    s = step(s, net, dt, params);
    out.push_back({static_cast<double>(k) * dt, s.position, s.velocity});
  }
  return out;
}

}  // namespace hvsim

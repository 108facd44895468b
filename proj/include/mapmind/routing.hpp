#pragma once

#include <array>
#include <deque>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "mapmind/grid_map.hpp"

namespace mapmind {

struct Route {
  std::vector<Coordinate> cells;
  int length = 0;
  std::vector<int> via_intersections;
  // Index into `cells` of each entry of via_intersections.
  std::vector<std::size_t> via_steps;

  friend bool operator==(const Route&, const Route&) = default;
};

// Undirected cell-to-cell moves excluded from a search.
class ForbiddenMoves {
 public:
  void add(Coordinate a, Coordinate b) { moves_.insert(key(a, b)); }
  bool contains(Coordinate a, Coordinate b) const { return !moves_.empty() && moves_.count(key(a, b)) > 0; }
  bool empty() const { return moves_.empty(); }

 private:
  static std::pair<Coordinate, Coordinate> key(Coordinate a, Coordinate b) {
    return a < b ? std::pair{a, b} : std::pair{b, a};
  }
  std::set<std::pair<Coordinate, Coordinate>> moves_;
};

namespace detail {

// Moore offsets in row-major order of the neighbor they reach.
inline constexpr std::array<Offset, 8> moore_offsets{{
    {-1, -1}, {0, -1}, {1, -1}, {-1, 0}, {1, 0}, {-1, 1}, {0, 1}, {1, 1}}};

inline constexpr int unreached = -1;

// Walks the road network from `origin`. POI cells other than the origin are
// terminal: they are entered only from their own linked road and never left.
template <typename Visit>
void for_each_move(const GridMap& map, Coordinate u, Coordinate origin, const ForbiddenMoves& forbidden,
                   Visit&& visit) {
  const CellKind ku = map.at(u);
  if (ku == CellKind::poi) {
    if (!(u == origin)) return;
    const Poi* p = map.poi_at(u);
    if (p && map.in_bounds(p->linked_road) && navigable(map.at(p->linked_road)) &&
        !forbidden.contains(u, p->linked_road))
      visit(p->linked_road);
    return;
  }
  if (!navigable(ku)) return;
  for (const auto& d : moore_offsets) {
    const Coordinate v{u.col + d.dcol, u.row + d.drow};
    if (!map.in_bounds(v) || forbidden.contains(u, v)) continue;
    const CellKind kv = map.at(v);
    if (navigable(kv)) {
      visit(v);
    } else if (kv == CellKind::poi) {
      const Poi* p = map.poi_at(v);
      if (p && p->linked_road == u) visit(v);
    }
  }
}

}  // namespace detail

// Breadth-first move counts from a POI over the road network.
class DistanceField {
 public:
  DistanceField(const GridMap& map, Coordinate origin, const ForbiddenMoves& forbidden = {})
      : map_(&map), dist_(map.cells.size(), detail::unreached) {
    std::deque<Coordinate> queue{origin};
    dist_[map.index(origin)] = 0;
    while (!queue.empty()) {
      const Coordinate u = queue.front();
      queue.pop_front();
      const int du = dist_[map.index(u)];
      detail::for_each_move(map, u, origin, forbidden, [&](Coordinate v) {
        int& dv = dist_[map.index(v)];
        if (dv == detail::unreached) {
          dv = du + 1;
          queue.push_back(v);
        }
      });
    }
  }

  // -1 when unreachable.
  int at(Coordinate c) const { return dist_[map_->index(c)]; }
  int to_poi(int poi_id) const { return at(map_->poi(poi_id).at); }

 private:
  const GridMap* map_;
  std::vector<int> dist_;
};

// Minimum-move route between two POIs; among equal-length routes the
// lexicographically smallest cell sequence (row-major) is returned.
inline Route shortest_route(const GridMap& map, int from_poi, int to_poi, const ForbiddenMoves& forbidden = {}) {
  const Poi& src = map.poi(from_poi);
  const Poi& dst = map.poi(to_poi);
  Route route;
  if (from_poi == to_poi) {
    route.cells = {src.at};
    return route;
  }
  const DistanceField to_dst(map, dst.at, forbidden);
  const int total = to_dst.at(src.at);
  if (total < 0)
    throw error("unreachable", "no road path from P" + std::to_string(from_poi) + " to P" + std::to_string(to_poi));

  route.cells.reserve(static_cast<std::size_t>(total) + 1);
  route.cells.push_back(src.at);
  Coordinate u = src.at;
  for (int remaining = total; remaining > 0; --remaining) {
    std::optional<Coordinate> best;
    detail::for_each_move(map, u, src.at, forbidden, [&](Coordinate v) {
      if (to_dst.at(v) != remaining - 1) return;
      if (map.at(v) == CellKind::poi && !(v == dst.at)) return;
      if (!best || v < *best) best = v;
    });
    u = *best;
    route.cells.push_back(u);
  }
  route.length = total;
  for (std::size_t i = 0; i < route.cells.size(); ++i) {
    if (const Intersection* x = map.intersection_at(route.cells[i])) {
      route.via_intersections.push_back(x->id);
      route.via_steps.push_back(i);
    }
  }
  return route;
}

// Ordered nodes of a route: source POI, intersections passed, destination POI.
inline std::vector<NodeRef> route_nodes(const Route& route, int from_poi, int to_poi) {
  std::vector<NodeRef> nodes{NodeRef::poi(from_poi)};
  for (int x : route.via_intersections) nodes.push_back(NodeRef::intersection(x));
  if (from_poi != to_poi) nodes.push_back(NodeRef::poi(to_poi));
  return nodes;
}

// ---------------------------------------------------------------------------
// Ground-truth topological graph: POIs and intersections joined whenever a
// path through plain road cells connects them.
// ---------------------------------------------------------------------------

using NodeEdge = std::pair<NodeRef, NodeRef>;  // first < second

inline NodeEdge make_edge(NodeRef a, NodeRef b) { return a < b ? NodeEdge{a, b} : NodeEdge{b, a}; }

struct NodeGraph {
  std::set<NodeRef> nodes;
  std::map<NodeEdge, int> edges;  // edge -> length in moves
};

inline NodeGraph ground_truth_graph(const GridMap& map) {
  NodeGraph g;
  std::vector<std::pair<NodeRef, Coordinate>> all;
  for (const auto& p : map.pois) all.emplace_back(NodeRef::poi(p.id), p.at);
  for (const auto& x : map.intersections) all.emplace_back(NodeRef::intersection(x.id), x.at);
  const ForbiddenMoves none;
  for (const auto& [node, at] : all) {
    g.nodes.insert(node);
    std::vector<int> dist(map.cells.size(), detail::unreached);
    std::deque<Coordinate> queue{at};
    dist[map.index(at)] = 0;
    while (!queue.empty()) {
      const Coordinate u = queue.front();
      queue.pop_front();
      const int du = dist[map.index(u)];
      detail::for_each_move(map, u, at, none, [&](Coordinate v) {
        int& dv = dist[map.index(v)];
        if (dv != detail::unreached) return;
        dv = du + 1;
        if (auto other = map.node_at(v)) {
          auto [it, inserted] = g.edges.try_emplace(make_edge(node, *other), dv);
          if (!inserted && dv < it->second) it->second = dv;
          return;
        }
        queue.push_back(v);
      });
    }
  }
  return g;
}

}  // namespace mapmind

#pragma once

#include <deque>
#include <map>
#include <stdexcept>

#include "mapmind/memory.hpp"
#include "support.hpp"

namespace testsupport {

inline Coordinate node_cell(const GridMap& m, NodeRef n) {
  if (n.is_poi()) return m.poi(n.id).at;
  for (const auto& x : m.intersections)
    if (x.id == n.id) return x.at;
  throw std::runtime_error("no such node");
}

// Nodes reachable from `n` through plain road cells, with move counts. The
// search stays within Chebyshev `radius` of `n` (pass a large radius for the
// whole map). POIs are left and entered only through their own link cell.
inline std::map<NodeRef, int> oracle_links(const GridMap& m, NodeRef n, int radius) {
  const Coordinate origin = node_cell(m, n);
  std::map<Coordinate, int> dist{{origin, 0}};
  std::deque<Coordinate> q{origin};
  std::map<NodeRef, int> out;
  auto poi_at = [&](Coordinate c) -> const Poi* {
    for (const auto& p : m.pois)
      if (p.at == c) return &p;
    return nullptr;
  };
  while (!q.empty()) {
    const Coordinate u = q.front();
    q.pop_front();
    std::vector<Coordinate> next;
    if (u == origin && n.is_poi()) {
      next.push_back(m.poi(n.id).linked_road);
    } else {
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc)
          if (dr || dc) next.push_back({u.col + dc, u.row + dr});
    }
    for (const auto& v : next) {
      if (!m.in_bounds(v) || chebyshev(v, origin) > radius || dist.count(v)) continue;
      const CellKind k = m.at(v);
      if (k == CellKind::background) continue;
      if (k == CellKind::poi) {
        const Poi* p = poi_at(v);
        if (!(p->linked_road == u)) continue;
        dist[v] = dist[u] + 1;
        out.try_emplace(NodeRef::poi(p->id), dist[v]);
        continue;
      }
      dist[v] = dist[u] + 1;
      if (k == CellKind::intersection) {
        for (const auto& x : m.intersections)
          if (x.at == v) out.try_emplace(NodeRef::intersection(x.id), dist[v]);
        continue;
      }
      q.push_back(v);
    }
  }
  out.erase(n);
  return out;
}

}  // namespace testsupport

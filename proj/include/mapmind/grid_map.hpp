#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mapmind/core.hpp"

namespace mapmind {

struct Poi {
  int id = 0;
  std::string name;
  Coordinate at;
  Coordinate linked_road;
};

struct Intersection {
  int id = 0;
  Coordinate at;
};

enum class RoadClass : std::uint8_t { main, auxiliary };

inline std::string_view road_class_name(RoadClass c) { return c == RoadClass::main ? "main" : "auxiliary"; }

struct RoadSegment {
  std::vector<Coordinate> cells;
  RoadClass road_class = RoadClass::main;
};

// The symbolic world. Dense cell grid plus the labelled elements on it.
struct GridMap {
  int width = 20;
  int height = 20;
  std::vector<CellKind> cells;
  std::vector<Poi> pois;
  std::vector<Intersection> intersections;
  std::vector<RoadSegment> segments;
  std::string city_name;

  static GridMap blank(int width, int height, std::string city = {}) {
    GridMap m;
    m.width = width;
    m.height = height;
    m.cells.assign(static_cast<std::size_t>(width) * height, CellKind::background);
    m.city_name = std::move(city);
    return m;
  }

  bool in_bounds(Coordinate c) const { return c.col >= 0 && c.row >= 0 && c.col < width && c.row < height; }

  std::size_t index(Coordinate c) const { return static_cast<std::size_t>(c.row) * width + c.col; }
  Coordinate coord(std::size_t i) const {
    return {static_cast<int>(i % width), static_cast<int>(i / width)};
  }

  CellKind at(Coordinate c) const { return cells[index(c)]; }
  void set(Coordinate c, CellKind k) { cells[index(c)] = k; }

  const Poi* find_poi(int id) const {
    for (const auto& p : pois)
      if (p.id == id) return &p;
    return nullptr;
  }
  const Poi& poi(int id) const {
    if (const Poi* p = find_poi(id)) return *p;
    throw error("unknown-poi", "no POI with id " + std::to_string(id));
  }
  const Intersection* find_intersection(int id) const {
    for (const auto& x : intersections)
      if (x.id == id) return &x;
    return nullptr;
  }

  const Poi* poi_at(Coordinate c) const {
    for (const auto& p : pois)
      if (p.at == c) return &p;
    return nullptr;
  }
  const Intersection* intersection_at(Coordinate c) const {
    for (const auto& x : intersections)
      if (x.at == c) return &x;
    return nullptr;
  }

  std::optional<NodeRef> node_at(Coordinate c) const {
    if (const Poi* p = poi_at(c)) return NodeRef::poi(p->id);
    if (const Intersection* x = intersection_at(c)) return NodeRef::intersection(x->id);
    return std::nullopt;
  }

  Coordinate node_coordinate(NodeRef n) const {
    if (n.is_poi()) return poi(n.id).at;
    if (const Intersection* x = find_intersection(n.id)) return x->at;
    throw error("unknown-intersection", "no intersection with id " + std::to_string(n.id));
  }

  std::vector<int> poi_ids() const {
    std::vector<int> ids;
    ids.reserve(pois.size());
    for (const auto& p : pois) ids.push_back(p.id);
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  std::size_t main_road_count() const {
    return static_cast<std::size_t>(std::count_if(segments.begin(), segments.end(),
                                                  [](const RoadSegment& s) { return s.road_class == RoadClass::main; }));
  }

  friend bool operator==(const GridMap& a, const GridMap& b) {
    auto same_poi = [](const Poi& x, const Poi& y) {
      return x.id == y.id && x.name == y.name && x.at == y.at && x.linked_road == y.linked_road;
    };
    auto same_x = [](const Intersection& x, const Intersection& y) { return x.id == y.id && x.at == y.at; };
    auto same_seg = [](const RoadSegment& x, const RoadSegment& y) {
      return x.road_class == y.road_class && x.cells == y.cells;
    };
    return a.width == b.width && a.height == b.height && a.cells == b.cells && a.city_name == b.city_name &&
           std::equal(a.pois.begin(), a.pois.end(), b.pois.begin(), b.pois.end(), same_poi) &&
           std::equal(a.intersections.begin(), a.intersections.end(), b.intersections.begin(),
                      b.intersections.end(), same_x) &&
           std::equal(a.segments.begin(), a.segments.end(), b.segments.begin(), b.segments.end(), same_seg);
  }
};

inline double euclidean_distance(Coordinate a, Coordinate b) {
  const double dc = a.col - b.col;
  const double dr = a.row - b.row;
  return std::sqrt(dc * dc + dr * dr);
}

// ---------------------------------------------------------------------------
// Local observation
// ---------------------------------------------------------------------------

struct Offset {
  int dcol = 0;
  int drow = 0;
  friend bool operator==(const Offset&, const Offset&) = default;
};

struct ObservationEntry {
  Offset offset;
  CellKind kind = CellKind::road;
  std::optional<int> id;
  std::optional<std::string> name;
  // POIs only: where the POI's access road lies, relative to the observer.
  std::optional<Offset> link;

  friend bool operator==(const ObservationEntry&, const ObservationEntry&) = default;
};

struct Observation {
  Coordinate agent_at;
  int radius = 2;
  std::vector<ObservationEntry> entries;  // row-major, background omitted

  friend bool operator==(const Observation&, const Observation&) = default;

  std::vector<int> visible_pois() const {
    std::vector<int> ids;
    for (const auto& e : entries)
      if (e.kind == CellKind::poi && e.id) ids.push_back(*e.id);
    return ids;
  }
};

inline Observation observe(const GridMap& map, Coordinate at, int radius = 2) {
  if (!map.in_bounds(at))
    throw error("out-of-bounds", "observation point (" + std::to_string(at.col) + "," + std::to_string(at.row) +
                                     ") outside the map");
  if (radius < 1) throw error("bad-radius", "observation radius must be >= 1");
  Observation obs{at, radius, {}};
  const int r0 = std::max(0, at.row - radius), r1 = std::min(map.height - 1, at.row + radius);
  const int c0 = std::max(0, at.col - radius), c1 = std::min(map.width - 1, at.col + radius);
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const Coordinate cell{c, r};
      const CellKind k = map.at(cell);
      if (k == CellKind::background) continue;
      ObservationEntry e;
      e.offset = {c - at.col, r - at.row};
      e.kind = k;
      if (k == CellKind::poi) {
        if (const Poi* p = map.poi_at(cell)) {
          e.id = p->id;
          e.name = p->name;
          e.link = Offset{p->linked_road.col - at.col, p->linked_road.row - at.row};
        }
      } else if (k == CellKind::intersection) {
        if (const Intersection* x = map.intersection_at(cell)) e.id = x->id;
      }
      obs.entries.push_back(std::move(e));
    }
  }
  return obs;
}

}  // namespace mapmind

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mapmind/map_io.hpp"
#include "mapmind/validate.hpp"

namespace mapmind {

// ---------------------------------------------------------------------------
// Vector input
// ---------------------------------------------------------------------------

struct Point2 {
  double x = 0;
  double y = 0;
};

struct Bounds {
  double min_x = 0, min_y = 0, max_x = 1, max_y = 1;
};

struct VectorRoad {
  RoadClass road_class = RoadClass::main;
  std::vector<Point2> points;
};

struct VectorPoi {
  std::string name;
  Point2 at;
};

// Road polylines and POI points in a planar frame where y grows northward.
struct VectorMapSource {
  Bounds bounds;
  std::vector<VectorRoad> roads;
  std::vector<VectorPoi> pois;
  std::string city;
};

inline VectorMapSource vector_source_from_json(const std::string& text) {
  VectorMapSource src;
  try {
    const auto doc = ojson::parse(text);
    const auto& b = doc.at("bounds");
    src.bounds = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(), b.at(3).get<double>()};
    src.city = doc.value("city", std::string{});
    for (const auto& r : doc.at("roads")) {
      VectorRoad road;
      road.road_class = r.value("class", std::string("main")) == "auxiliary" ? RoadClass::auxiliary : RoadClass::main;
      for (const auto& p : r.at("points")) road.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      src.roads.push_back(std::move(road));
    }
    for (const auto& p : doc.at("pois"))
      src.pois.push_back({p.at("name").get<std::string>(), {p.at("x").get<double>(), p.at("y").get<double>()}});
  } catch (const nlohmann::json::exception& e) {
    throw error("bad-vector-file", e.what());
  }
  return src;
}

inline std::string vector_source_to_json(const VectorMapSource& src) {
  ojson doc;
  if (!src.city.empty()) doc["city"] = src.city;
  doc["bounds"] = {src.bounds.min_x, src.bounds.min_y, src.bounds.max_x, src.bounds.max_y};
  doc["roads"] = ojson::array();
  for (const auto& r : src.roads) {
    ojson pts = ojson::array();
    for (const auto& p : r.points) pts.push_back({p.x, p.y});
    doc["roads"].push_back({{"class", std::string(road_class_name(r.road_class))}, {"points", pts}});
  }
  doc["pois"] = ojson::array();
  for (const auto& p : src.pois) doc["pois"].push_back({{"name", p.name}, {"x", p.at.x}, {"y", p.at.y}});
  return doc.dump(1) + "\n";
}

// ---------------------------------------------------------------------------
// Rasterization
// ---------------------------------------------------------------------------

// Cells whose closed unit square meets the segment a-b (grid units, x east,
// y south), ordered by where the segment first touches them. Out-of-grid
// cells are dropped.
inline std::vector<Coordinate> supercover(Point2 a, Point2 b, int width, int height) {
  std::vector<double> ts{0.0, 1.0};
  const double dx = b.x - a.x, dy = b.y - a.y;
  auto add_crossings = [&](double p0, double d) {
    if (d == 0) return;
    const double lo = std::min(p0, p0 + d), hi = std::max(p0, p0 + d);
    for (double k = std::ceil(lo); k <= hi; k += 1.0) {
      const double t = (k - p0) / d;
      if (t > 0 && t < 1) ts.push_back(t);
    }
  };
  add_crossings(a.x, dx);
  add_crossings(a.y, dy);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

  // Sample points: every crossing plus the midpoint of every gap between them.
  std::vector<double> samples;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    samples.push_back(ts[i]);
    if (i + 1 < ts.size()) samples.push_back(0.5 * (ts[i] + ts[i + 1]));
  }

  std::vector<Coordinate> out;
  std::set<Coordinate> seen;
  constexpr double eps = 1e-9;
  for (double t : samples) {
    const double x = a.x + t * dx, y = a.y + t * dy;
    const double fx = std::floor(x + eps), fy = std::floor(y + eps);
    const bool on_x = std::abs(x - std::round(x)) < eps;
    const bool on_y = std::abs(y - std::round(y)) < eps;
    std::vector<Coordinate> group;
    for (int ox = on_x ? -1 : 0; ox <= 0; ++ox)
      for (int oy = on_y ? -1 : 0; oy <= 0; ++oy) {
        const int col = static_cast<int>(on_x ? std::round(x) : fx) + ox;
        const int row = static_cast<int>(on_y ? std::round(y) : fy) + oy;
        group.push_back({col, row});
      }
    std::sort(group.begin(), group.end());
    for (const auto& c : group) {
      if (c.col < 0 || c.row < 0 || c.col >= width || c.row >= height) continue;
      if (seen.insert(c).second) out.push_back(c);
    }
  }
  return out;
}

namespace detail {

inline Point2 to_grid(const Bounds& b, Point2 p, int width, int height) {
  return {(p.x - b.min_x) / (b.max_x - b.min_x) * width, (b.max_y - p.y) / (b.max_y - b.min_y) * height};
}

inline Coordinate grid_cell(Point2 g, int width, int height) {
  const int c = std::clamp(static_cast<int>(std::floor(g.x)), 0, width - 1);
  const int r = std::clamp(static_cast<int>(std::floor(g.y)), 0, height - 1);
  return {c, r};
}

}  // namespace detail

// Polyline cell chain: concatenated supercovers with repeated cells removed
// where consecutive.
inline std::vector<Coordinate> rasterize_polyline(const VectorRoad& road, const Bounds& b, int width, int height) {
  std::vector<Coordinate> chain;
  if (road.points.size() == 1) {
    chain.push_back(detail::grid_cell(detail::to_grid(b, road.points[0], width, height), width, height));
    return chain;
  }
  for (std::size_t i = 0; i + 1 < road.points.size(); ++i) {
    const auto piece = supercover(detail::to_grid(b, road.points[i], width, height),
                                  detail::to_grid(b, road.points[i + 1], width, height), width, height);
    for (const auto& c : piece)
      if (chain.empty() || !(chain.back() == c)) chain.push_back(c);
  }
  return chain;
}

// Builds the pre-link map: road cells, POI cells and derived intersections.
// POI links are left unset (equal to the POI cell) until normalize_and_link.
inline GridMap rasterize(const VectorMapSource& source, int width = 20, int height = 20) {
  if (width < 5 || height < 5) throw error("bad-size", "grid must be at least 5x5");
  if (source.roads.empty()) throw error("bad-source", "vector source has no roads");
  if (source.pois.empty()) throw error("bad-source", "vector source has no POIs");
  const Bounds& b = source.bounds;
  if (!(b.max_x > b.min_x) || !(b.max_y > b.min_y)) throw error("bad-source", "degenerate bounds");

  GridMap map = GridMap::blank(width, height, source.city);
  std::map<Coordinate, std::set<Coordinate>> arms;
  std::map<Coordinate, std::set<std::size_t>> main_owners;
  for (std::size_t r = 0; r < source.roads.size(); ++r) {
    const auto& road = source.roads[r];
    if (road.points.empty()) throw error("bad-source", "road polyline without points");
    auto chain = rasterize_polyline(road, b, width, height);
    for (std::size_t i = 0; i < chain.size(); ++i) {
      map.set(chain[i], CellKind::road);
      if (i > 0) arms[chain[i]].insert(chain[i - 1]);
      if (i + 1 < chain.size()) arms[chain[i]].insert(chain[i + 1]);
      if (road.road_class == RoadClass::main) main_owners[chain[i]].insert(r);
    }
    map.segments.push_back(RoadSegment{std::move(chain), road.road_class});
  }

  std::set<Coordinate> junctions;
  for (const auto& [cell, a] : arms)
    if (a.size() >= 3) junctions.insert(cell);
  for (const auto& [cell, owners] : main_owners)
    if (owners.size() >= 2) junctions.insert(cell);
  int next_x = 1;
  for (const auto& cell : junctions) {  // row-major
    map.set(cell, CellKind::intersection);
    map.intersections.push_back({next_x++, cell});
  }

  int next_poi = 1;
  for (const auto& vp : source.pois) {
    Coordinate cell = detail::grid_cell(detail::to_grid(b, vp.at, width, height), width, height);
    if (map.at(cell) != CellKind::background) {
      // Displace to the nearest free background cell in the Moore neighborhood.
      std::optional<Coordinate> best;
      long best_d2 = 0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const Coordinate c{cell.col + dc, cell.row + dr};
          if ((dr == 0 && dc == 0) || !map.in_bounds(c) || map.at(c) != CellKind::background) continue;
          const long d2 = dr * dr + dc * dc;
          if (!best || d2 < best_d2 || (d2 == best_d2 && c < *best)) {
            best = c;
            best_d2 = d2;
          }
        }
      if (!best) throw error("poi-collision", "no free cell for POI '" + vp.name + "' near " + describe(cell));
      cell = *best;
    }
    map.set(cell, CellKind::poi);
    map.pois.push_back(Poi{next_poi++, vp.name, cell, cell});
  }
  return map;
}

// Shortest Moore path from a POI to a road cell through background cells.
// The first step prefers the neighbor closest to the POI.
inline std::vector<Coordinate> access_path(const GridMap& map, Coordinate poi, Coordinate target) {
  std::vector<int> dist(map.cells.size(), -1);
  std::deque<Coordinate> queue{target};
  dist[map.index(target)] = 0;
  while (!queue.empty()) {
    const Coordinate u = queue.front();
    queue.pop_front();
    for (const auto& d : detail::moore_offsets) {
      const Coordinate v{u.col + d.dcol, u.row + d.drow};
      if (!map.in_bounds(v) || dist[map.index(v)] >= 0) continue;
      if (v == poi) {
        dist[map.index(v)] = dist[map.index(u)] + 1;
        continue;
      }
      if (map.at(v) != CellKind::background) continue;
      dist[map.index(v)] = dist[map.index(u)] + 1;
      queue.push_back(v);
    }
  }
  if (dist[map.index(poi)] < 0) return {};
  std::vector<Coordinate> path;
  Coordinate u = poi;
  while (!(u == target)) {
    std::optional<Coordinate> best;
    double best_e = 0;
    for (const auto& d : detail::moore_offsets) {
      const Coordinate v{u.col + d.dcol, u.row + d.drow};
      if (!map.in_bounds(v) || dist[map.index(v)] != dist[map.index(u)] - 1) continue;
      if (!(v == target) && map.at(v) != CellKind::background) continue;
      const double e = euclidean_distance(v, poi);
      if (!best || e < best_e - 1e-12 || (std::abs(e - best_e) < 1e-12 && v < *best)) {
        best = v;
        best_e = e;
      }
    }
    u = *best;
    path.push_back(u);
  }
  return path;
}

// Links every POI to its nearest road cell, inserting auxiliary access roads
// for POIs not adjacent to one. Idempotent.
inline GridMap normalize_and_link(GridMap map) {
  const std::size_t rounds = map.pois.size() + 2;
  bool changed = true;
  for (std::size_t round = 0; changed && round < rounds; ++round) {
    changed = false;
    for (auto& p : map.pois) {
      auto nearest = nearest_road_cell(map, p.at);
      if (!nearest) throw error("unlinkable-poi", "no road cell for POI P" + std::to_string(p.id));
      if (!moore_adjacent(*nearest, p.at)) {
        auto path = access_path(map, p.at, *nearest);
        if (path.empty()) throw error("unlinkable-poi", "no access path for POI P" + std::to_string(p.id));
        for (const auto& c : path)
          if (map.at(c) == CellKind::background) map.set(c, CellKind::road);
        map.segments.push_back(RoadSegment{path, RoadClass::auxiliary});
        nearest = nearest_road_cell(map, p.at);
        changed = true;
      }
      if (!(p.linked_road == *nearest)) {
        p.linked_road = *nearest;
        changed = true;
      }
    }
  }
  std::set<Coordinate> linked;
  for (const auto& p : map.pois) linked.insert(p.linked_road);
  std::erase_if(map.segments, [&](const RoadSegment& s) {
    return s.road_class == RoadClass::auxiliary && !s.cells.empty() && !linked.count(s.cells.front()) &&
           !linked.count(s.cells.back());
  });
  return map;
}

// Tags road cells with at least three road neighbors as intersections when a
// map carries no intersection data of its own.
inline void derive_intersections(GridMap& map) {
  if (!map.intersections.empty()) return;
  std::vector<Coordinate> found;
  for (std::size_t i = 0; i < map.cells.size(); ++i) {
    const Coordinate u = map.coord(i);
    if (map.at(u) != CellKind::road) continue;
    int degree = 0;
    for (const auto& d : detail::moore_offsets) {
      const Coordinate v{u.col + d.dcol, u.row + d.drow};
      if (map.in_bounds(v) && navigable(map.at(v))) ++degree;
    }
    if (degree >= 3) found.push_back(u);
  }
  int id = 1;
  for (const auto& c : found) {
    map.set(c, CellKind::intersection);
    map.intersections.push_back({id++, c});
  }
}

inline GridMap ingest(const VectorMapSource& source, int width = 20, int height = 20) {
  return normalize_and_link(rasterize(source, width, height));
}

// ---------------------------------------------------------------------------
// City catalog
// ---------------------------------------------------------------------------

struct CatalogEntry {
  std::string city;
  int poi_count = 0;
  int intersection_count = 0;
  int main_road_count = 0;
};

inline const std::vector<CatalogEntry>& builtin_catalog() {
  static const std::vector<CatalogEntry> entries{
      {"Beijing", 21, 22, 4},       {"Shanghai", 9, 10, 4},      {"Guangzhou", 17, 13, 9},
      {"Changsha", 12, 19, 4},      {"Wuhan", 20, 23, 10},       {"New York", 15, 26, 7},
      {"Los Angeles", 15, 17, 6},   {"San Francisco", 15, 30, 12}, {"Chicago", 15, 26, 6},
      {"Toronto", 15, 23, 6},       {"London", 15, 25, 8},       {"Paris", 15, 17, 9},
      {"Rome", 15, 16, 6},          {"Berlin", 15, 23, 9},       {"Vienna", 15, 24, 15},
  };
  return entries;
}

inline std::string catalog_to_csv(const std::vector<CatalogEntry>& entries) {
  std::ostringstream out;
  out << "city,poi_count,intersection_count,main_road_count\n";
  for (const auto& e : entries)
    out << e.city << ',' << e.poi_count << ',' << e.intersection_count << ',' << e.main_road_count << '\n';
  return out.str();
}

inline std::vector<CatalogEntry> catalog_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (line.rfind("city,poi_count,intersection_count,main_road_count", 0) != 0)
    throw error("bad-catalog", "unexpected catalog header");
  std::vector<CatalogEntry> entries;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    CatalogEntry e;
    std::string field;
    std::getline(row, e.city, ',');
    std::getline(row, field, ',');
    e.poi_count = std::stoi(field);
    std::getline(row, field, ',');
    e.intersection_count = std::stoi(field);
    std::getline(row, field, ',');
    e.main_road_count = std::stoi(field);
    if (e.poi_count <= 0 || e.intersection_count <= 0 || e.main_road_count <= 0)
      throw error("bad-catalog", "non-positive count for " + e.city);
    entries.push_back(std::move(e));
  }
  return entries;
}

inline const CatalogEntry* find_catalog_entry(const std::vector<CatalogEntry>& entries, std::string_view city) {
  for (const auto& e : entries)
    if (e.city == city) return &e;
  return nullptr;
}

struct CatalogReport {
  CatalogEntry expected;
  int poi_count = 0;
  int intersection_count = 0;
  int main_road_count = 0;

  bool poi_match() const { return poi_count == expected.poi_count; }
  bool intersection_match() const { return intersection_count == expected.intersection_count; }
  bool main_road_match() const { return main_road_count == expected.main_road_count; }
  bool ok() const { return poi_match() && intersection_match() && main_road_match(); }
};

// Auxiliary segments are excluded from the road count.
inline CatalogReport check_catalog(const GridMap& map, const CatalogEntry& entry) {
  return CatalogReport{entry, static_cast<int>(map.pois.size()), static_cast<int>(map.intersections.size()),
                       static_cast<int>(map.main_road_count())};
}

}  // namespace mapmind

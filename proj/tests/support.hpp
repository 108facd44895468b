#pragma once

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "mapmind/ingest.hpp"
#include "mapmind/validate.hpp"

namespace testsupport {

using namespace mapmind;

inline std::string data_dir() { return MAPMIND_DATA_DIR; }

inline std::vector<std::string> catalog_map_paths() {
  std::vector<std::string> out;
  for (const auto& e : builtin_catalog()) {
    std::string slug;
    for (char c : e.city) slug += c == ' ' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.push_back(data_dir() + "/maps/" + slug + ".json");
  }
  return out;
}

inline std::vector<GridMap> catalog_maps() {
  std::vector<GridMap> maps;
  for (const auto& p : catalog_map_paths()) maps.push_back(load_map(p));
  return maps;
}

// Random polylines and POIs in a w x h frame.
inline VectorMapSource random_source(std::uint64_t seed, int w, int h, int roads, int pois) {
  Rng rng(seed);
  auto coord = [&](int extent) { return (static_cast<double>(rng.uniform_index(1000)) + 0.5) / 1000.0 * extent; };
  VectorMapSource src;
  src.bounds = {0, 0, static_cast<double>(w), static_cast<double>(h)};
  for (int i = 0; i < roads; ++i) {
    VectorRoad road;
    const int points = 2 + static_cast<int>(rng.uniform_index(2));
    for (int k = 0; k < points; ++k) road.points.push_back({coord(w), coord(h)});
    src.roads.push_back(std::move(road));
  }
  for (int i = 0; i < pois; ++i) src.pois.push_back({"Place " + std::to_string(i + 1), {coord(w), coord(h)}});
  return src;
}

// A valid map ingested from a random source, or nothing if this seed fails.
inline std::optional<GridMap> random_valid_map(std::uint64_t seed, int w, int h, int roads, int pois) {
  try {
    GridMap map = ingest(random_source(seed, w, h, roads, pois), w, h);
    if (validate_map(map).ok()) return map;
  } catch (const error&) {
  }
  return std::nullopt;
}

inline std::vector<GridMap> random_valid_maps(std::size_t count, int w, int h, std::uint64_t first_seed = 1) {
  std::vector<GridMap> out;
  for (std::uint64_t s = first_seed; out.size() < count && s < first_seed + 100000; ++s) {
    Rng pick(s * 7919);
    const int roads = 1 + static_cast<int>(pick.uniform_index(3));
    const int pois = 2 + static_cast<int>(pick.uniform_index(static_cast<std::size_t>(std::max(2, w / 2))));
    if (auto m = random_valid_map(s, w, h, roads, pois)) out.push_back(std::move(*m));
  }
  return out;
}

// Plain breadth-first search over grid cells, written without the routing
// module: POI cells may be left only from the source and entered only as the
// destination, in both cases through their own linked road cell.
inline int bfs_route_length(const GridMap& map, int from, int to) {
  const Poi& src = map.poi(from);
  const Poi& dst = map.poi(to);
  if (from == to) return 0;
  std::vector<int> dist(static_cast<std::size_t>(map.width * map.height), -1);
  auto idx = [&](Coordinate c) { return static_cast<std::size_t>(c.row * map.width + c.col); };
  std::deque<Coordinate> q{src.at};
  dist[idx(src.at)] = 0;
  while (!q.empty()) {
    const Coordinate u = q.front();
    q.pop_front();
    if (u == dst.at) return dist[idx(u)];
    std::vector<Coordinate> next;
    if (u == src.at) {
      next.push_back(src.linked_road);
    } else {
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          if (!dr && !dc) continue;
          const Coordinate v{u.col + dc, u.row + dr};
          if (v.col < 0 || v.row < 0 || v.col >= map.width || v.row >= map.height) continue;
          const CellKind k = map.cells[idx(v)];
          if (k == CellKind::road || k == CellKind::intersection) next.push_back(v);
          if (v == dst.at && u == dst.linked_road) next.push_back(v);
        }
    }
    for (const auto& v : next)
      if (dist[idx(v)] < 0) {
        dist[idx(v)] = dist[idx(u)] + 1;
        q.push_back(v);
      }
  }
  return -1;
}

// Builds a map from row strings ('.', 'r', 'x', 'p'); POIs and intersections
// are numbered in row-major order and POIs link to their nearest road cell.
inline GridMap grid_from_rows(const std::vector<std::string>& rows, std::string city = "test") {
  GridMap map = GridMap::blank(static_cast<int>(rows[0].size()), static_cast<int>(rows.size()), std::move(city));
  for (int r = 0; r < map.height; ++r)
    for (int c = 0; c < map.width; ++c) map.set({c, r}, cell_kind_from_code(rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]));
  for (int r = 0; r < map.height; ++r)
    for (int c = 0; c < map.width; ++c) {
      if (map.at({c, r}) == CellKind::poi) {
        const int id = static_cast<int>(map.pois.size()) + 1;
        map.pois.push_back({id, "Place " + std::to_string(id), {c, r}, {c, r}});
      } else if (map.at({c, r}) == CellKind::intersection) {
        map.intersections.push_back({static_cast<int>(map.intersections.size()) + 1, {c, r}});
      }
    }
  for (auto& p : map.pois)
    if (auto near = nearest_road_cell(map, p.at)) p.linked_road = *near;
  return map;
}

}  // namespace testsupport

#pragma once

#include <set>
#include <string>
#include <vector>

#include "mapmind/routing.hpp"

namespace mapmind {

struct Violation {
  std::string rule;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(std::string_view rule) const {
    for (const auto& v : violations)
      if (v.rule == rule) return true;
    return false;
  }
};

inline std::string describe(Coordinate c) { return "(" + std::to_string(c.col) + "," + std::to_string(c.row) + ")"; }

// Nearest road or intersection cell to `at` by Euclidean distance between cell
// centers; ties go to the row-major smaller cell.
inline std::optional<Coordinate> nearest_road_cell(const GridMap& map, Coordinate at) {
  std::optional<Coordinate> best;
  long best_d2 = 0;
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) {
      const Coordinate cell{c, r};
      if (!navigable(map.at(cell))) continue;
      const long d2 = static_cast<long>(c - at.col) * (c - at.col) + static_cast<long>(r - at.row) * (r - at.row);
      if (!best || d2 < best_d2) {
        best = cell;
        best_d2 = d2;
      }
    }
  }
  return best;
}

inline ValidationReport validate_map(const GridMap& map) {
  ValidationReport report;
  auto flag = [&](std::string rule, std::string detail) {
    report.violations.push_back({std::move(rule), std::move(detail)});
  };

  if (map.width < 1 || map.height < 1 ||
      map.cells.size() != static_cast<std::size_t>(map.width) * static_cast<std::size_t>(map.height)) {
    flag("grid-shape", "cell count does not match width x height");
    return report;
  }

  std::set<int> poi_ids;
  std::set<Coordinate> poi_cells;
  for (const auto& p : map.pois) {
    const std::string tag = "P" + std::to_string(p.id);
    if (!poi_ids.insert(p.id).second) flag("duplicate-poi-id", tag);
    if (!map.in_bounds(p.at)) {
      flag("poi-out-of-bounds", tag + " at " + describe(p.at));
      continue;
    }
    poi_cells.insert(p.at);
    if (map.at(p.at) != CellKind::poi) flag("poi-cell-not-poi", tag + " at " + describe(p.at));
    if (!map.in_bounds(p.linked_road) || !navigable(map.at(p.linked_road))) {
      flag("poi-link-not-road", tag + " linked to " + describe(p.linked_road));
      continue;
    }
    if (auto nearest = nearest_road_cell(map, p.at); nearest && !(*nearest == p.linked_road))
      flag("poi-link-not-nearest", tag + " linked to " + describe(p.linked_road) + ", nearest is " + describe(*nearest));
  }

  std::set<int> x_ids;
  std::set<Coordinate> x_cells;
  for (const auto& x : map.intersections) {
    const std::string tag = "I" + std::to_string(x.id);
    if (!x_ids.insert(x.id).second) flag("duplicate-intersection-id", tag);
    if (!map.in_bounds(x.at) || map.at(x.at) != CellKind::intersection) {
      flag("intersection-cell-not-intersection", tag + " at " + describe(x.at));
      continue;
    }
    x_cells.insert(x.at);
  }

  for (std::size_t i = 0; i < map.cells.size(); ++i) {
    const Coordinate c = map.coord(i);
    if (map.cells[i] == CellKind::poi && !poi_cells.count(c)) flag("unlabelled-poi-cell", describe(c));
    if (map.cells[i] == CellKind::intersection && !x_cells.count(c)) flag("unlabelled-intersection-cell", describe(c));
  }

  std::set<Coordinate> linked;
  for (const auto& p : map.pois) linked.insert(p.linked_road);
  for (std::size_t s = 0; s < map.segments.size(); ++s) {
    const auto& seg = map.segments[s];
    const std::string tag = "segment " + std::to_string(s);
    if (seg.cells.empty()) {
      flag("segment-empty", tag);
      continue;
    }
    for (std::size_t i = 0; i < seg.cells.size(); ++i) {
      const Coordinate c = seg.cells[i];
      if (!map.in_bounds(c) || !navigable(map.at(c))) flag("segment-cell-not-road", tag + " cell " + describe(c));
      if (i > 0 && !moore_adjacent(seg.cells[i - 1], c))
        flag("segment-not-adjacent", tag + " between " + describe(seg.cells[i - 1]) + " and " + describe(c));
    }
    if (seg.road_class == RoadClass::auxiliary && !linked.count(seg.cells.front()) && !linked.count(seg.cells.back()))
      flag("auxiliary-segment-unanchored", tag);
  }

  const bool placed = std::all_of(map.pois.begin(), map.pois.end(), [&](const Poi& p) { return map.in_bounds(p.at); });
  if (placed && !map.pois.empty()) {
    const DistanceField field(map, map.pois.front().at);
    for (const auto& p : map.pois) {
      if (field.at(p.at) < 0) {
        flag("pois-not-mutually-reachable",
             "P" + std::to_string(p.id) + " unreachable from P" + std::to_string(map.pois.front().id));
      }
    }
  }
  return report;
}

}  // namespace mapmind

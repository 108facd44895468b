#pragma once

#include <cmath>
#include <cstdio>
#include <string>

#include "mapmind/tasks.hpp"
#include "support.hpp"

namespace testsupport {

// Compass bearing from slope comparisons alone: within 22.5 degrees of an
// axis means cardinal, otherwise diagonal. tan(22.5) is irrational, so
// integer offsets never sit on a sector edge.
inline std::string slope_bearing(Coordinate a, Coordinate b) {
  const double e = b.col - a.col, n = a.row - b.row;
  const double t = std::sqrt(2.0) - 1.0;
  if (std::abs(e) <= t * std::abs(n)) return n > 0 ? "North" : "South";
  if (std::abs(n) <= t * std::abs(e)) return e > 0 ? "East" : "West";
  return std::string(n > 0 ? "North" : "South") + (e > 0 ? "east" : "west");
}

inline double straight(const GridMap& m, int a, int b) {
  return std::hypot(m.poi(a).at.col - m.poi(b).at.col, m.poi(a).at.row - m.poi(b).at.row);
}

inline std::string interval_text(double lo, double hi, bool closed) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "[%.2f, %.2f%s", lo, hi, closed ? "]" : ")");
  return buf;
}

// Recomputes the answer of a non-degenerate item from the map; returns an
// empty string when the stored correct option agrees, else a description.
inline std::string check_item(const GridMap& m, const TaskItem& item) {
  if (item.options.size() != 4) return "option count";
  if (item.correct < 0 || item.correct > 3) return "correct index";
  const std::string& stored = item.options[static_cast<std::size_t>(item.correct)];
  switch (item.category) {
    case Category::DJ: {
      const auto truth = slope_bearing(m.poi(item.meta.pois[0]).at, m.poi(item.meta.pois[1]).at);
      if (stored != truth) return "DJ " + item.id + ": stored " + stored + ", oracle " + truth;
      for (std::size_t i = 0; i < 4; ++i)
        if (static_cast<int>(i) != item.correct && item.options[i] == truth) return "DJ duplicate truth";
      return {};
    }
    case Category::DS: {
      const double d = straight(m, item.meta.pois[0], item.meta.pois[1]);
      const double diag = std::hypot(m.width - 1, m.height - 1);
      int k = 0;
      while (k < 3 && d >= diag * (k + 1) / 4) ++k;
      const auto truth = interval_text(diag * k / 4, diag * (k + 1) / 4, k == 3);
      if (stored != truth) return "DS " + item.id + ": stored " + stored + ", oracle " + truth;
      return {};
    }
    case Category::PJ: {
      const int ref = item.meta.pois[0];
      int best = -1;
      double best_d = 1e9, second = 1e9;
      for (std::size_t i = 1; i < item.meta.pois.size(); ++i) {
        const double d = straight(m, ref, item.meta.pois[i]);
        if (d < best_d) second = best_d, best_d = d, best = item.meta.pois[i];
        else if (d < second) second = d;
      }
      if (second - best_d < 0.5) return "PJ ambiguous";
      const auto truth = "P" + std::to_string(best) + " (" + m.poi(best).name + ")";
      if (stored != truth) return "PJ " + item.id + ": stored " + stored + ", oracle " + truth;
      return {};
    }
    case Category::PDR: {
      int counts[4] = {0, 0, 0, 0};
      for (const auto& p : m.pois) counts[(p.at.row >= m.height / 2 ? 2 : 0) + (p.at.col >= m.width / 2 ? 1 : 0)]++;
      const bool highest = item.meta.flag == "highest";
      int pick = 0;
      for (int q = 1; q < 4; ++q)
        if (highest ? counts[q] > counts[pick] : counts[q] < counts[pick]) pick = q;
      const char* names[4] = {"Northwest quadrant", "Northeast quadrant", "Southwest quadrant", "Southeast quadrant"};
      if (stored != names[pick]) return "PDR " + item.id + ": stored " + stored + ", oracle " + names[pick];
      return {};
    }
    case Category::PP: {
      // Walk the stored route: its cells must be a shortest path by BFS, and
      // the intersections met along it must be the ones listed, in order.
      const int from = item.meta.pois[0], to = item.meta.pois[1];
      const Route r = shortest_route(m, from, to);
      if (r.length != bfs_route_length(m, from, to)) return "PP length";
      std::string text = "P" + std::to_string(from);
      for (const auto& c : r.cells)
        for (const auto& x : m.intersections)
          if (x.at == c) text += " -> I" + std::to_string(x.id);
      text += " -> P" + std::to_string(to);
      if (stored != text) return "PP " + item.id + ": stored " + stored + ", oracle " + text;
      for (std::size_t i = 0; i < 4; ++i)
        if (static_cast<int>(i) != item.correct && item.options[i] == text) return "PP duplicate truth";
      return {};
    }
  }
  return "category";
}

}  // namespace testsupport

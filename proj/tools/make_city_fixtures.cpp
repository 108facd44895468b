// Generates the 15 catalog city blocks as vector sources, ingests them and
// keeps the first layout whose counts match the catalog exactly.
//
//   make_city_fixtures <out-dir>
//
// Writes <out-dir>/vector/<slug>.json, <out-dir>/maps/<slug>.json and
// <out-dir>/catalog.csv.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>

#include "mapmind/ingest.hpp"
#include "mapmind/tasks.hpp"

namespace {

using namespace mapmind;

constexpr int kSize = 20;
constexpr double kCell = 50.0;

Point2 center(int col, int row) { return {(col + 0.5) * kCell, kSize * kCell - (row + 0.5) * kCell}; }

// Road layout counts: full horizontals/verticals, U-shaped roads (each leg
// crosses every horizontal), border stubs, stubs between two horizontals and
// POI spurs. Intersections = h*v + 2*h*u + b + 2*t + s.
struct Plan {
  int h = 0, v = 0, u = 0, b = 0, t = 0, s = 0;
  int roads() const { return h + v + u + b + t; }
  int intersections() const { return h * v + 2 * h * u + b + 2 * t + s; }
};

std::optional<Plan> plan_for(const CatalogEntry& e) {
  std::optional<Plan> best;
  int best_score = 0;
  for (int h = 1; h <= 5; ++h)
    for (int v = 0; v <= 5; ++v)
      for (int u = 0; u <= 2; ++u)
        for (int t = 0; t <= 2; ++t)
          for (int b = 0; b <= 12; ++b) {
            Plan p{h, v, u, b, t, 0};
            if (p.roads() != e.main_road_count) continue;
            const int base = p.intersections();
            const int s = e.intersection_count - base;
            if (s < 0 || s > e.poi_count) continue;
            p.s = s;
            // Prefer grids with some spurs and few stubs.
            const int score = 3 * b + 4 * t + 5 * u + std::abs(h - v) + std::abs(s - e.poi_count / 2);
            if (!best || score < best_score) {
              best = p;
              best_score = score;
            }
          }
  return best;
}

std::vector<int> spread(int count, int lo, int hi, Rng& rng) {
  // Evenly spaced lines with small jitter, at least 3 apart.
  std::vector<int> out;
  if (count == 0) return out;
  const double step = static_cast<double>(hi - lo) / count;
  for (int i = 0; i < count; ++i) {
    int base = lo + static_cast<int>(step * (i + 0.5));
    int jitter = static_cast<int>(rng.uniform_index(3)) - 1;
    out.push_back(std::clamp(base + jitter, lo, hi));
  }
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i] - out[i - 1] < 3) return {};
  return out;
}

const std::vector<std::string> kPoiNames{
    "Central Library", "City Museum",    "Grand Hotel",    "Railway Station", "Market Hall",  "Police Station",
    "Fire Station",    "General Hospital", "Town Hall",    "Art Gallery",     "Concert Hall", "Post Office",
    "Science Center",  "Old Cathedral",  "City Park",      "Bookshop",        "Bakery",       "Pharmacy",
    "Cinema",          "University",     "High School",    "Stadium",         "Bank",         "Tea House",
    "Flower Market",   "Bus Terminal",   "Harbor Office",  "Sports Hall",     "Theater",      "Food Court"};

std::optional<VectorMapSource> try_layout(const CatalogEntry& e, const Plan& plan, std::uint64_t seed) {
  Rng rng(seed);
  VectorMapSource src;
  src.city = e.city;
  src.bounds = {0, 0, kSize * kCell, kSize * kCell};

  const auto rows = spread(plan.h, 3, 16, rng);
  if (rows.size() != static_cast<std::size_t>(plan.h)) return std::nullopt;
  const int vertical_lines = plan.v + 2 * plan.u;
  auto cols = spread(vertical_lines, 2, 17, rng);
  if (cols.size() != static_cast<std::size_t>(vertical_lines)) return std::nullopt;

  std::set<Coordinate> occupied;
  auto mark = [&](int c0, int r0, int c1, int r1) {
    for (int r = std::min(r0, r1); r <= std::max(r0, r1); ++r)
      for (int c = std::min(c0, c1); c <= std::max(c0, c1); ++c) occupied.insert({c, r});
  };
  auto add_main = [&](std::vector<Point2> pts) { src.roads.push_back({RoadClass::main, std::move(pts)}); };

  for (int r : rows) {
    add_main({center(0, r), center(kSize - 1, r)});
    mark(0, r, kSize - 1, r);
  }
  // U roads take adjacent pairs of the column slots; plain verticals the rest.
  std::vector<int> plain;
  std::vector<std::pair<int, int>> us;
  {
    std::size_t i = 0;
    int u_left = plan.u;
    while (i < cols.size()) {
      if (u_left > 0 && i + 1 < cols.size()) {
        us.emplace_back(cols[i], cols[i + 1]);
        i += 2;
        --u_left;
      } else {
        plain.push_back(cols[i++]);
      }
    }
  }
  for (int c : plain) {
    add_main({center(c, 0), center(c, kSize - 1)});
    mark(c, 0, c, kSize - 1);
  }
  const int below = rows.back() + 2;
  for (auto [c0, c1] : us) {
    if (below >= kSize) return std::nullopt;
    for (int c : plain)
      if (c > c0 && c < c1) return std::nullopt;
    add_main({center(c0, 0), center(c0, below), center(c1, below), center(c1, 0)});
    mark(c0, 0, c0, below);
    mark(c0, below, c1, below);
    mark(c1, 0, c1, below);
  }

  std::set<Coordinate> crossings;
  for (int r : rows)
    for (int c : cols) crossings.insert({c, r});
  for (auto [c0, c1] : us) {
    crossings.insert({c0, below});
    crossings.insert({c1, below});
  }

  auto column_free = [&](int c, int r0, int r1) {
    for (int r = r0; r <= r1; ++r)
      for (int dc = -1; dc <= 1; ++dc)
        if (occupied.count({c + dc, r})) return false;
    return true;
  };
  auto row_free = [&](int r, int c0, int c1) {
    for (int c = c0; c <= c1; ++c)
      for (int dr = -1; dr <= 1; ++dr)
        if (occupied.count({c, r + dr})) return false;
    return true;
  };

  // Border stubs: vertical from the north or south edge to the nearest
  // horizontal, or horizontal from the west or east edge to a vertical.
  for (int k = 0; k < plan.b; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < 60 && !placed; ++attempt) {
      const int side = static_cast<int>(rng.uniform_index(plain.empty() ? 2 : 4));
      if (side < 2) {
        const int c = 1 + static_cast<int>(rng.uniform_index(kSize - 2));
        if (std::find(cols.begin(), cols.end(), c) != cols.end()) continue;
        const int r_edge = side == 0 ? 0 : kSize - 1;
        const int r_road = side == 0 ? rows.front() : rows.back();
        const int r_first = side == 0 ? 0 : r_road + 1, r_last = side == 0 ? r_road - 1 : kSize - 1;
        if (r_first > r_last || !column_free(c, r_first, r_last)) continue;
        add_main({center(c, r_edge), center(c, r_road)});
        mark(c, r_first, c, r_last);
        crossings.insert({c, r_road});
        placed = true;
      } else {
        const int r = 1 + static_cast<int>(rng.uniform_index(kSize - 2));
        if (std::find(rows.begin(), rows.end(), r) != rows.end()) continue;
        const int c_edge = side == 2 ? 0 : kSize - 1;
        const int c_road = side == 2 ? plain.front() : plain.back();
        const int c_first = side == 2 ? 0 : c_road + 1, c_last = side == 2 ? c_road - 1 : kSize - 1;
        if (c_first > c_last || !row_free(r, c_first, c_last)) continue;
        add_main({center(c_edge, r), center(c_road, r)});
        mark(c_first, r, c_last, r);
        crossings.insert({c_road, r});
        placed = true;
      }
    }
    if (!placed) return std::nullopt;
  }
  for (int k = 0; k < plan.t; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < 60 && !placed; ++attempt) {
      if (rows.size() < 2) return std::nullopt;
      const std::size_t i = rng.uniform_index(rows.size() - 1);
      const int c = 1 + static_cast<int>(rng.uniform_index(kSize - 2));
      if (std::find(cols.begin(), cols.end(), c) != cols.end()) continue;
      if (!column_free(c, rows[i] + 1, rows[i + 1] - 1)) continue;
      add_main({center(c, rows[i]), center(c, rows[i + 1])});
      mark(c, rows[i] + 1, c, rows[i + 1] - 1);
      crossings.insert({c, rows[i]});
      crossings.insert({c, rows[i + 1]});
      placed = true;
    }
    if (!placed) return std::nullopt;
  }

  // Candidate road cells for POIs: plain cells of full horizontals and
  // verticals, away from every line crossing.
  auto near_crossing = [&](Coordinate c) {
    for (const auto& x : crossings)
      if (chebyshev(x, c) <= 1) return true;
    return false;
  };
  std::set<Coordinate> halo;  // cells kept free around placed POIs
  auto clear = [&](Coordinate c, int margin) {
    if (c.col < 0 || c.row < 0 || c.col >= kSize || c.row >= kSize) return false;
    for (int dr = -margin; dr <= margin; ++dr)
      for (int dc = -margin; dc <= margin; ++dc)
        if (occupied.count({c.col + dc, c.row + dr}) || halo.count({c.col + dc, c.row + dr})) return false;
    return true;
  };

  auto names = kPoiNames;
  rng.shuffle(names);
  int placed_pois = 0;
  int spurs = 0;
  std::set<Coordinate> junctions;
  for (int attempt = 0; attempt < 4000 && placed_pois < e.poi_count; ++attempt) {
    const bool want_spur = spurs < plan.s;
    const bool on_row = rng.uniform_index(3) != 0;
    Coordinate base;
    Offset out;
    if (on_row) {
      base = {static_cast<int>(rng.uniform_index(kSize - 2)) + 1, rows[rng.uniform_index(rows.size())]};
      out = rng.uniform_index(2) ? Offset{0, 1} : Offset{0, -1};
    } else {
      base = {cols[rng.uniform_index(cols.size())], static_cast<int>(rng.uniform_index(kSize - 2)) + 1};
      out = rng.uniform_index(2) ? Offset{1, 0} : Offset{-1, 0};
    }
    if (near_crossing(base) || !occupied.count(base)) continue;
    bool junction_clash = false;
    for (const auto& j : junctions)
      if (chebyshev(j, base) <= 1) junction_clash = true;
    if (junction_clash) continue;

    const int length = want_spur ? 1 + static_cast<int>(rng.uniform_index(2)) : 0;
    std::vector<Coordinate> cells;
    for (int k = 1; k <= length + 1; ++k) cells.push_back({base.col + out.dcol * k, base.row + out.drow * k});
    // The first cell off the road may touch it; everything beyond must be
    // clear of all roads by one cell.
    bool ok = true;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const Coordinate c = cells[k];
      if (c.col < 0 || c.row < 0 || c.col >= kSize || c.row >= kSize || occupied.count(c) || halo.count(c))
        ok = false;
      if (k > 0 && !clear(c, 1)) ok = false;
    }
    if (!ok) continue;
    // The first cell off the road touches exactly the straight road: `base`
    // and its two neighbors along the road.
    int touching = 0;
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        if (occupied.count({cells[0].col + dc, cells[0].row + dr})) ++touching;
        if (halo.count({cells[0].col + dc, cells[0].row + dr})) touching += 10;
      }
    if (touching != 3) continue;
    const Coordinate poi = cells.back();
    if (length > 0) {
      src.roads.push_back({RoadClass::auxiliary, {center(base.col, base.row), center(cells[length - 1].col, cells[length - 1].row)}});
      junctions.insert(base);
      ++spurs;
    }
    src.pois.push_back({names[static_cast<std::size_t>(placed_pois) % names.size()], center(poi.col, poi.row)});
    ++placed_pois;
    // Reserve the spur and a one-cell halo around the POI.
    for (std::size_t k = 0; k + 1 < cells.size(); ++k) occupied.insert(cells[k]);
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc)
        if (!occupied.count({poi.col + dc, poi.row + dr})) halo.insert({poi.col + dc, poi.row + dr});
  }
  if (placed_pois != e.poi_count || spurs != plan.s) return std::nullopt;
  return src;
}

std::string slug(const std::string& city) {
  std::string s;
  for (char c : city) s += c == ' ' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_city_fixtures <out-dir>\n";
    return 2;
  }
  const std::filesystem::path out = argv[1];
  std::filesystem::create_directories(out / "vector");
  std::filesystem::create_directories(out / "maps");
  int failures = 0;
  for (const auto& entry : builtin_catalog()) {
    const auto plan = plan_for(entry);
    if (!plan) {
      std::cerr << entry.city << ": no layout plan\n";
      ++failures;
      continue;
    }
    bool done = false;
    for (std::uint64_t seed = 1; seed < 20000 && !done; ++seed) {
      auto src = try_layout(entry, *plan, derive_seed(seed, entry.city));
      if (!src) continue;
      GridMap map;
      try {
        map = ingest(*src);
      } catch (const error&) {
        continue;
      }
      map.city_name = entry.city;
      if (!validate_map(map).ok() || !check_catalog(map, entry).ok()) continue;
      // Density questions need a unique busiest and a unique emptiest quadrant.
      const auto q = quadrant_counts(map);
      const auto [lo, hi] = std::minmax_element(q.begin(), q.end());
      if (std::count(q.begin(), q.end(), *lo) != 1 || std::count(q.begin(), q.end(), *hi) != 1) continue;
      detail::write_text_file((out / "vector" / (slug(entry.city) + ".json")).string(), vector_source_to_json(*src));
      save_map(map, (out / "maps" / (slug(entry.city) + ".json")).string());
      std::printf("%-14s h=%d v=%d u=%d b=%d t=%d s=%d seed=%llu\n", entry.city.c_str(), plan->h, plan->v, plan->u,
                  plan->b, plan->t, plan->s, static_cast<unsigned long long>(seed));
      done = true;
    }
    if (!done) {
      std::cerr << entry.city << ": no matching layout found\n";
      ++failures;
    }
  }
  detail::write_text_file((out / "catalog.csv").string(), catalog_to_csv(builtin_catalog()));
  return failures == 0 ? 0 : 1;
}

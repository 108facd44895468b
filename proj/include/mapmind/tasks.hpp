#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mapmind/map_io.hpp"
#include "mapmind/routing.hpp"

namespace mapmind {

enum class Category : std::uint8_t { DJ, DS, PJ, PDR, PP };

inline constexpr std::array<Category, 5> all_categories{Category::DJ, Category::DS, Category::PJ, Category::PDR,
                                                        Category::PP};

inline std::string_view category_name(Category c) {
  switch (c) {
    case Category::DJ: return "DJ";
    case Category::DS: return "DS";
    case Category::PJ: return "PJ";
    case Category::PDR: return "PDR";
    case Category::PP: return "PP";
  }
  return "?";
}

inline Category parse_category(std::string_view s) {
  for (auto c : all_categories)
    if (category_name(c) == s) return c;
  throw error("unknown-category", std::string(s));
}

inline char option_letter(std::size_t i) { return static_cast<char>('A' + i); }

struct TaskMeta {
  std::vector<int> pois;
  std::optional<int> pair_link;  // DJ: shared by a forward item and its reverse
  bool degenerate = false;
  std::string flag;  // "short"/"long" for DS and PP, "highest"/"lowest" for PDR
  friend bool operator==(const TaskMeta&, const TaskMeta&) = default;
};

struct TaskItem {
  std::string id;
  Category category = Category::DJ;
  std::string question;
  std::vector<std::string> options;
  int correct = 0;
  TaskMeta meta;

  std::string prompt() const {
    std::string out = question + "\n";
    for (std::size_t i = 0; i < options.size(); ++i) out += std::string(1, option_letter(i)) + ". " + options[i] + "\n";
    return out;
  }
  char correct_letter() const { return option_letter(static_cast<std::size_t>(correct)); }
  friend bool operator==(const TaskItem&, const TaskItem&) = default;
};

enum class DistanceMetric : std::uint8_t { euclidean, road };

struct TaskConfig {
  DistanceMetric metric = DistanceMetric::euclidean;
  double ds_margin = 0.25;
  double pj_margin = 0.5;
  int max_retries = 500;
};

// ---------------------------------------------------------------------------
// Compass bearings
// ---------------------------------------------------------------------------

enum class CompassDirection : std::uint8_t { N, NE, E, SE, S, SW, W, NW };

inline constexpr std::array<std::string_view, 8> compass_words{"North",     "Northeast", "East",      "Southeast",
                                                               "South",     "Southwest", "West",      "Northwest"};

inline std::string_view compass_word(CompassDirection d) { return compass_words[static_cast<std::size_t>(d)]; }

inline CompassDirection rotate(CompassDirection d, int steps) {
  return static_cast<CompassDirection>(((static_cast<int>(d) + steps) % 8 + 8) % 8);
}

inline CompassDirection opposite(CompassDirection d) { return rotate(d, 4); }

// Bearing of b seen from a. Row 0 is north, so a smaller row is further north.
// Sectors are 45 degrees wide and centred on the bearings; a bearing exactly
// on a sector edge goes to the cardinal neighbour.
inline CompassDirection oracle_direction(Coordinate a, Coordinate b) {
  if (a == b) throw error("undefined-direction", "identical coordinates");
  const double east = b.col - a.col;
  const double north = a.row - b.row;
  double deg = std::atan2(east, north) * 180.0 / std::numbers::pi;
  if (deg < 0) deg += 360.0;
  const double scaled = deg / 45.0;
  const double lower = std::floor(scaled);
  const double frac = scaled - lower;
  int sector;
  if (std::abs(frac - 0.5) < 1e-9) {
    const int lo = static_cast<int>(lower) % 8;
    sector = lo % 2 == 0 ? lo : (lo + 1) % 8;
  } else {
    sector = static_cast<int>(std::lround(scaled)) % 8;
  }
  return static_cast<CompassDirection>(sector);
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

namespace detail {

inline std::string poi_text(const GridMap& map, int id) {
  const Poi& p = map.poi(id);
  return "P" + std::to_string(id) + " (" + p.name + ")";
}

inline std::string item_id(const GridMap& map, Category c, int index) {
  std::string slug;
  for (char ch : map.city_name) slug += ch == ' ' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (slug.empty()) slug = "map";
  return slug + "-" + std::string(category_name(c)) + "-" + std::to_string(index);
}

// Shuffles options and keeps track of where the correct one lands.
inline void shuffle_options(TaskItem& item, Rng& rng) {
  std::vector<std::size_t> order(item.options.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  const auto was = static_cast<std::size_t>(item.correct);
  std::vector<std::string> shuffled;
  for (std::size_t i = 0; i < order.size(); ++i) {
    shuffled.push_back(item.options[order[i]]);
    if (order[i] == was) item.correct = static_cast<int>(i);
  }
  item.options = std::move(shuffled);
}

inline void require_pois(const GridMap& map, std::size_t n, std::string_view what) {
  if (map.pois.size() < n)
    throw error("too-few-pois", std::string(what) + " needs at least " + std::to_string(n) + " POIs");
}

inline std::vector<std::pair<int, int>> unordered_pairs(const GridMap& map) {
  const auto ids = map.poi_ids();
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = i + 1; j < ids.size(); ++j) pairs.emplace_back(ids[i], ids[j]);
  return pairs;
}

}  // namespace detail

inline double poi_distance(const GridMap& map, int a, int b, DistanceMetric metric) {
  if (metric == DistanceMetric::road) return shortest_route(map, a, b).length;
  return euclidean_distance(map.poi(a).at, map.poi(b).at);
}

inline double grid_diagonal(const GridMap& map) { return std::hypot(map.width - 1, map.height - 1); }

// ---------------------------------------------------------------------------
// DJ: direction judgement
// ---------------------------------------------------------------------------

inline std::vector<TaskItem> gen_direction_items(const GridMap& map, std::uint64_t seed) {
  if (map.pois.size() < 2) throw error("too-few-pois", "direction items need at least 2 POIs");
  Rng rng(derive_seed(seed, "DJ"));
  auto pairs = detail::unordered_pairs(map);
  rng.shuffle(pairs);
  std::vector<TaskItem> items;
  for (int link = 0; link < 4; ++link) {
    auto [a, b] = pairs[static_cast<std::size_t>(link) % pairs.size()];
    if (rng.uniform_index(2)) std::swap(a, b);
    for (int reverse = 0; reverse < 2; ++reverse) {
      const int from = reverse ? b : a;
      const int to = reverse ? a : b;
      const CompassDirection truth = oracle_direction(map.poi(from).at, map.poi(to).at);
      std::vector<CompassDirection> pool;
      for (int s = 2; s <= 6; ++s) pool.push_back(rotate(truth, s));
      rng.shuffle(pool);
      TaskItem item;
      item.id = detail::item_id(map, Category::DJ, static_cast<int>(items.size()) + 1);
      item.category = Category::DJ;
      item.question = "In which direction is " + detail::poi_text(map, to) + " relative to " +
                      detail::poi_text(map, from) + "?";
      item.options.emplace_back(compass_word(truth));
      for (int k = 0; k < 3; ++k) item.options.emplace_back(compass_word(pool[static_cast<std::size_t>(k)]));
      item.correct = 0;
      item.meta.pois = {from, to};
      item.meta.pair_link = link + 1;
      item.meta.flag = reverse ? "reverse" : "forward";
      detail::shuffle_options(item, rng);
      items.push_back(std::move(item));
    }
  }
  return items;
}

// ---------------------------------------------------------------------------
// DS: distance interval
// ---------------------------------------------------------------------------

inline std::array<double, 5> distance_bounds(const GridMap& map) {
  const double d = grid_diagonal(map);
  return {0.0, d / 4, d / 2, 3 * d / 4, d};
}

inline std::string format_interval(double lo, double hi, bool closed) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "[%.2f, %.2f%s", lo, hi, closed ? "]" : ")");
  return buf;
}

// Index of the interval holding `dist`; the last interval is closed.
inline int interval_index(const std::array<double, 5>& bounds, double dist) {
  for (int i = 0; i < 3; ++i)
    if (dist < bounds[static_cast<std::size_t>(i) + 1]) return i;
  return 3;
}

inline std::vector<TaskItem> gen_distance_items(const GridMap& map, std::uint64_t seed, const TaskConfig& cfg = {}) {
  detail::require_pois(map, 2, "distance items");
  Rng rng(derive_seed(seed, "DS"));
  const auto bounds = distance_bounds(map);
  auto pairs = detail::unordered_pairs(map);
  rng.shuffle(pairs);

  std::vector<std::pair<int, int>> shorts, longs;
  for (const auto& [a, b] : pairs) {
    const double d = poi_distance(map, a, b, cfg.metric);
    bool near_edge = false;
    for (std::size_t k = 1; k < 4; ++k)
      if (std::abs(d - bounds[k]) < cfg.ds_margin) near_edge = true;
    if (near_edge || d > bounds[4]) continue;
    (interval_index(bounds, d) < 2 ? shorts : longs).emplace_back(a, b);
  }

  std::vector<TaskItem> items;
  for (int k = 0; k < 4; ++k) {
    const bool is_long = k >= 2;
    const auto& pool = is_long ? longs : shorts;
    const std::size_t slot = static_cast<std::size_t>(k % 2);
    TaskItem item;
    item.id = detail::item_id(map, Category::DS, k + 1);
    item.category = Category::DS;
    for (int i = 0; i < 4; ++i) item.options.push_back(format_interval(bounds[static_cast<std::size_t>(i)], bounds[static_cast<std::size_t>(i) + 1], i == 3));
    item.meta.flag = is_long ? "long" : "short";
    if (slot < pool.size()) {
      auto [a, b] = pool[slot];
      if (rng.uniform_index(2)) std::swap(a, b);
      item.question = "Which interval is closest to the straight-line distance, in cells, between " +
                      detail::poi_text(map, a) + " and " + detail::poi_text(map, b) + "?";
      if (cfg.metric == DistanceMetric::road)
        item.question = "Which interval is closest to the road distance, in moves, between " + detail::poi_text(map, a) +
                        " and " + detail::poi_text(map, b) + "?";
      item.correct = interval_index(bounds, poi_distance(map, a, b, cfg.metric));
      item.meta.pois = {a, b};
    } else {
      item.question = "No qualifying pair exists for this distance item.";
      item.meta.degenerate = true;
    }
    items.push_back(std::move(item));
  }
  return items;
}

// ---------------------------------------------------------------------------
// PJ: proximity judgement
// ---------------------------------------------------------------------------

inline std::vector<TaskItem> gen_proximity_items(const GridMap& map, std::uint64_t seed, const TaskConfig& cfg = {}) {
  detail::require_pois(map, 5, "proximity items");
  Rng rng(derive_seed(seed, "PJ"));
  const auto ids = map.poi_ids();
  std::vector<TaskItem> items;
  for (int k = 0; k < 4; ++k) {
    TaskItem item;
    item.id = detail::item_id(map, Category::PJ, k + 1);
    item.category = Category::PJ;
    bool found = false;
    for (int attempt = 0; attempt < cfg.max_retries && !found; ++attempt) {
      auto pool = ids;
      rng.shuffle(pool);
      const int ref = pool[0];
      std::vector<int> alts(pool.begin() + 1, pool.begin() + 5);
      std::vector<double> dist;
      for (int a : alts) dist.push_back(poi_distance(map, ref, a, cfg.metric));
      auto sorted = dist;
      std::sort(sorted.begin(), sorted.end());
      if (sorted[1] - sorted[0] < cfg.pj_margin) continue;
      found = true;
      item.question = "Which of the following places is closest to " + detail::poi_text(map, ref) + "?";
      for (std::size_t i = 0; i < alts.size(); ++i) {
        item.options.push_back(detail::poi_text(map, alts[i]));
        if (dist[i] == sorted[0]) item.correct = static_cast<int>(i);
      }
      item.meta.pois = {ref};
      item.meta.pois.insert(item.meta.pois.end(), alts.begin(), alts.end());
    }
    if (!found) {
      item.question = "No unambiguous proximity configuration exists.";
      for (std::size_t i = 0; i < 4; ++i) item.options.push_back(detail::poi_text(map, ids[i]));
      item.meta.degenerate = true;
    }
    items.push_back(std::move(item));
  }
  return items;
}

// ---------------------------------------------------------------------------
// PDR: POI density by quadrant
// ---------------------------------------------------------------------------

inline constexpr std::array<std::string_view, 4> quadrant_names{"Northwest quadrant", "Northeast quadrant",
                                                                "Southwest quadrant", "Southeast quadrant"};

inline int quadrant_of(const GridMap& map, Coordinate c) {
  const int east = c.col >= map.width / 2 ? 1 : 0;
  const int south = c.row >= map.height / 2 ? 1 : 0;
  return south * 2 + east;
}

inline std::array<int, 4> quadrant_counts(const GridMap& map) {
  std::array<int, 4> counts{};
  for (const auto& p : map.pois) ++counts[static_cast<std::size_t>(quadrant_of(map, p.at))];
  return counts;
}

inline std::vector<TaskItem> gen_density_items(const GridMap& map, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "PDR"));
  const auto counts = quadrant_counts(map);
  std::vector<TaskItem> items;
  for (int k = 0; k < 4; ++k) {
    const bool highest = k < 2;
    const auto it = highest ? std::max_element(counts.begin(), counts.end())
                            : std::min_element(counts.begin(), counts.end());
    TaskItem item;
    item.id = detail::item_id(map, Category::PDR, k + 1);
    item.category = Category::PDR;
    item.question = std::string("Which region contains the ") + (highest ? "most" : "fewest") +
                    " points of interest? The map is split into four equal quadrants.";
    for (auto q : quadrant_names) item.options.emplace_back(q);
    item.correct = static_cast<int>(it - counts.begin());
    item.meta.flag = highest ? "highest" : "lowest";
    item.meta.degenerate = std::count(counts.begin(), counts.end(), *it) > 1;
    detail::shuffle_options(item, rng);
    items.push_back(std::move(item));
  }
  return items;
}

// ---------------------------------------------------------------------------
// PP: path planning
// ---------------------------------------------------------------------------

inline std::string render_route(const Route& route, int from, int to) {
  std::string out = "P" + std::to_string(from);
  for (int x : route.via_intersections) out += " -> I" + std::to_string(x);
  return out + " -> P" + std::to_string(to);
}

struct RouteCandidate {
  Route route;
  std::string text;
};

// Strictly longer detours whose renderings differ from the shortest route
// and from each other, found by forbidding one route move, then two.
inline std::vector<RouteCandidate> detour_candidates(const GridMap& map, int from, int to, const Route& best,
                                                     std::size_t wanted) {
  std::vector<RouteCandidate> out;
  std::set<std::string> seen{render_route(best, from, to)};
  const std::size_t moves = best.cells.size() - 1;
  auto attempt = [&](const ForbiddenMoves& forbidden) {
    try {
      Route r = shortest_route(map, from, to, forbidden);
      if (r.length <= best.length) return;
      auto text = render_route(r, from, to);
      if (!seen.insert(text).second) return;
      out.push_back({std::move(r), std::move(text)});
    } catch (const error&) {
    }
  };
  for (std::size_t i = 0; i < moves && out.size() < wanted; ++i) {
    ForbiddenMoves f;
    f.add(best.cells[i], best.cells[i + 1]);
    attempt(f);
  }
  for (std::size_t i = 0; i < moves && out.size() < wanted; ++i)
    for (std::size_t j = i + 1; j < moves && out.size() < wanted; ++j) {
      ForbiddenMoves f;
      f.add(best.cells[i], best.cells[i + 1]);
      f.add(best.cells[j], best.cells[j + 1]);
      attempt(f);
    }
  return out;
}

inline std::vector<TaskItem> gen_path_items(const GridMap& map, std::uint64_t seed) {
  detail::require_pois(map, 2, "path items");
  Rng rng(derive_seed(seed, "PP"));
  struct Ranked {
    int length;
    int a, b;
    auto operator<=>(const Ranked&) const = default;
  };
  std::vector<Ranked> ranked;
  for (const auto& [a, b] : detail::unordered_pairs(map)) ranked.push_back({shortest_route(map, a, b).length, a, b});
  std::sort(ranked.begin(), ranked.end());
  const std::size_t third = std::max<std::size_t>(1, ranked.size() / 3);
  std::vector<Ranked> low(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(third));
  std::vector<Ranked> high(ranked.end() - static_cast<std::ptrdiff_t>(third), ranked.end());
  rng.shuffle(low);
  rng.shuffle(high);

  std::vector<TaskItem> items;
  for (int k = 0; k < 4; ++k) {
    const bool is_long = k < 2;
    const Ranked pick = (is_long ? high : low)[static_cast<std::size_t>(k % 2) % third];
    int from = pick.a, to = pick.b;
    if (rng.uniform_index(2)) std::swap(from, to);
    const Route best = shortest_route(map, from, to);
    TaskItem item;
    item.id = detail::item_id(map, Category::PP, k + 1);
    item.category = Category::PP;
    item.question = "Which of the following is the shortest road route from " + detail::poi_text(map, from) + " to " +
                    detail::poi_text(map, to) + "? Routes list the intersections passed in order.";
    item.meta.pois = {from, to};
    item.meta.flag = is_long ? "long" : "short";
    item.options.push_back(render_route(best, from, to));
    item.correct = 0;
    const auto detours = detour_candidates(map, from, to, best, 3);
    for (const auto& d : detours) item.options.push_back(d.text);
    if (detours.size() < 3) {
      item.meta.degenerate = true;
      for (int pad = 1; item.options.size() < 4; ++pad) item.options.push_back("(no route " + std::to_string(pad) + ")");
    }
    detail::shuffle_options(item, rng);
    items.push_back(std::move(item));
  }
  return items;
}

// ---------------------------------------------------------------------------

inline std::vector<TaskItem> generate_tasks(const GridMap& map, std::uint64_t seed, const TaskConfig& cfg = {}) {
  std::vector<TaskItem> all;
  for (auto&& batch : {gen_direction_items(map, seed), gen_distance_items(map, seed, cfg),
                       gen_proximity_items(map, seed, cfg), gen_density_items(map, seed), gen_path_items(map, seed)})
    all.insert(all.end(), batch.begin(), batch.end());
  return all;
}

inline ojson task_to_json(const TaskItem& t) {
  ojson meta{{"pois", t.meta.pois}};
  if (t.meta.pair_link) meta["pair_link"] = *t.meta.pair_link;
  meta["degenerate"] = t.meta.degenerate;
  if (!t.meta.flag.empty()) meta["flag"] = t.meta.flag;
  return ojson{{"id", t.id},
               {"category", std::string(category_name(t.category))},
               {"prompt", t.prompt()},
               {"options", t.options},
               {"correct", t.correct},
               {"meta", meta}};
}

inline TaskItem task_from_json(const ojson& j) {
  TaskItem t;
  t.id = j.at("id").get<std::string>();
  t.category = parse_category(j.at("category").get<std::string>());
  t.options = j.at("options").get<std::vector<std::string>>();
  t.correct = j.at("correct").get<int>();
  // The stored prompt is the question followed by the rendered options.
  const auto prompt = j.at("prompt").get<std::string>();
  t.question = prompt.substr(0, prompt.find('\n'));
  const auto& m = j.at("meta");
  t.meta.pois = m.value("pois", std::vector<int>{});
  if (m.contains("pair_link")) t.meta.pair_link = m.at("pair_link").get<int>();
  t.meta.degenerate = m.value("degenerate", false);
  t.meta.flag = m.value("flag", std::string{});
  return t;
}

inline std::string tasks_to_json(const std::vector<TaskItem>& items) {
  std::vector<ojson> rows;
  for (const auto& t : items) rows.push_back(task_to_json(t));
  std::string out = "[\n";
  for (std::size_t i = 0; i < rows.size(); ++i) out += "  " + rows[i].dump() + (i + 1 < rows.size() ? ",\n" : "\n");
  return out + "]\n";
}

inline std::vector<TaskItem> tasks_from_json(const std::string& text) {
  std::vector<TaskItem> items;
  try {
    for (const auto& j : ojson::parse(text)) items.push_back(task_from_json(j));
  } catch (const nlohmann::json::exception& e) {
    throw error("bad-task-file", e.what());
  }
  return items;
}

}  // namespace mapmind

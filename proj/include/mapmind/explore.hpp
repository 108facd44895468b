#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "mapmind/map_io.hpp"
#include "mapmind/routing.hpp"

namespace mapmind {

enum class Strategy : std::uint8_t { NPS, RVS, TDS };

inline std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::NPS: return "NPS";
    case Strategy::RVS: return "RVS";
    case Strategy::TDS: return "TDS";
  }
  return "?";
}

inline Strategy parse_strategy(std::string_view s) {
  if (s == "NPS") return Strategy::NPS;
  if (s == "RVS") return Strategy::RVS;
  if (s == "TDS") return Strategy::TDS;
  throw error("bad-strategy", "unknown strategy '" + std::string(s) + "'");
}

// How NPS ranks candidates that tie on visit count.
enum class NearestMetric : std::uint8_t { route, euclidean };

using PoiPair = std::pair<int, int>;

struct EpisodeConfig {
  Strategy strategy = Strategy::NPS;
  int n = 1;
  int radius = 2;
  std::uint64_t seed = 0;
  std::optional<std::vector<PoiPair>> tds_pairs;
  NearestMetric nearest = NearestMetric::route;
};

enum class EventType : std::uint8_t { start, arrive, traverse, restart };

inline std::string_view event_type_name(EventType t) {
  switch (t) {
    case EventType::start: return "start";
    case EventType::arrive: return "arrive";
    case EventType::traverse: return "traverse";
    case EventType::restart: return "restart";
  }
  return "?";
}

struct ExplorationEvent {
  int step = 0;
  EventType type = EventType::start;
  // start / arrive / restart
  NodeRef node;
  Coordinate at;
  Observation observation;
  // traverse
  int from_poi = 0;
  int to_poi = 0;
  Route route;

  bool is_arrival() const { return type != EventType::traverse; }
  friend bool operator==(const ExplorationEvent&, const ExplorationEvent&) = default;
};

using VisitCounts = std::map<int, int>;

struct ExplorationTrace {
  EpisodeConfig config;
  std::string city;
  std::vector<ExplorationEvent> events;
  VisitCounts visit_counts;
};

// Visit counts implied by a trace: POI arrivals, starts and restarts.
inline VisitCounts replay_visit_counts(const std::vector<ExplorationEvent>& events, const std::vector<int>& poi_ids) {
  VisitCounts counts;
  for (int id : poi_ids) counts[id] = 0;
  for (const auto& e : events)
    if (e.is_arrival() && e.node.is_poi()) ++counts[e.node.id];
  return counts;
}

// ---------------------------------------------------------------------------
// Target selection
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<int> eligible_visible(const Observation& obs, const VisitCounts& counts, int n,
                                         std::optional<int> exclude) {
  std::vector<int> out;
  for (int id : obs.visible_pois()) {
    if (exclude && id == *exclude) continue;
    auto it = counts.find(id);
    if (it != counts.end() && it->second < n) out.push_back(id);
  }
  return out;
}

}  // namespace detail

// Nearest less-explored visible POI: minimal visit count, then shortest route
// from `at`, then lowest id. The POI the agent stands on is not a candidate.
inline std::optional<int> select_target_nps(const GridMap& map, Coordinate at, const Observation& obs,
                                            const VisitCounts& counts, int n,
                                            NearestMetric metric = NearestMetric::route) {
  std::optional<int> here;
  if (const Poi* p = map.poi_at(at)) here = p->id;
  const auto candidates = detail::eligible_visible(obs, counts, n, here);
  if (candidates.empty()) return std::nullopt;
  std::optional<DistanceField> field;
  if (metric == NearestMetric::route) field.emplace(map, at);
  std::optional<int> best;
  std::tuple<int, double, int> best_key{};
  for (int id : candidates) {
    double d = metric == NearestMetric::route ? field->to_poi(id) : euclidean_distance(at, map.poi(id).at);
    if (d < 0) continue;
    const std::tuple<int, double, int> key{counts.at(id), d, id};
    if (!best || key < best_key) {
      best = id;
      best_key = key;
    }
  }
  return best;
}

// Uniform draw over eligible visible POIs.
inline std::optional<int> select_target_rvs(const Observation& obs, const VisitCounts& counts, int n, Rng& rng,
                                            std::optional<int> here = std::nullopt) {
  const auto candidates = detail::eligible_visible(obs, counts, n, here);
  if (candidates.empty()) return std::nullopt;
  return candidates[rng.uniform_index(candidates.size())];
}

// Seeded permutation of all POIs repeated n times; consecutive elements form
// the pairs. No permutation starts where the previous one ended.
inline std::vector<PoiPair> default_tds_pairs(const GridMap& map, int n, Rng& rng) {
  const auto ids = map.poi_ids();
  std::vector<int> sequence;
  for (int round = 0; round < n; ++round) {
    auto perm = ids;
    rng.shuffle(perm);
    if (!sequence.empty() && perm.size() > 1 && perm.front() == sequence.back()) std::swap(perm[0], perm[1]);
    sequence.insert(sequence.end(), perm.begin(), perm.end());
  }
  std::vector<PoiPair> pairs;
  for (std::size_t i = 0; i + 1 < sequence.size(); ++i) pairs.emplace_back(sequence[i], sequence[i + 1]);
  if (pairs.empty() && !sequence.empty()) pairs.emplace_back(sequence.front(), sequence.front());
  return pairs;
}

// Destination of the pair at `progress`, or nullopt once the sequence is done.
inline std::optional<int> select_target_tds(const std::vector<PoiPair>& pairs, std::size_t progress) {
  if (progress >= pairs.size()) return std::nullopt;
  return pairs[progress].second;
}

// ---------------------------------------------------------------------------
// Episodes
// ---------------------------------------------------------------------------

class EpisodeRunner {
 public:
  EpisodeRunner(const GridMap& map, EpisodeConfig config)
      : map_(map), config_(std::move(config)), rng_(config_.seed) {
    if (config_.n < 1) throw error("bad-config", "n must be >= 1");
    if (config_.radius < 1) throw error("bad-config", "radius must be >= 1");
    if (map_.pois.empty()) throw error("bad-map", "map has no POIs");
    for (int id : map_.poi_ids()) counts_[id] = 0;
  }

  ExplorationTrace run() {
    std::vector<PoiPair> pairs;
    if (config_.strategy == Strategy::TDS) {
      pairs = config_.tds_pairs ? *config_.tds_pairs : default_tds_pairs(map_, config_.n, rng_);
      for (const auto& [a, b] : pairs)
        if (!map_.find_poi(a) || !map_.find_poi(b))
          throw error("bad-config", "TDS pair references unknown POI (" + std::to_string(a) + "," +
                                        std::to_string(b) + ")");
      config_.tds_pairs = pairs;
    }

    const auto ids = map_.poi_ids();
    const int start = config_.strategy == Strategy::TDS && !pairs.empty() ? pairs.front().first
                                                                        : ids[rng_.uniform_index(ids.size())];
    place(EventType::start, start);

    std::size_t progress = 0;
    while (!done()) {
      if (config_.strategy == Strategy::TDS) {
        int target;
        if (progress < pairs.size()) {
          if (pairs[progress].first != here_) {
            go_to(pairs[progress].first);
            continue;
          }
          target = *select_target_tds(pairs, progress++);
        } else {
          target = lowest_eligible(here_).value_or(here_);
        }
        go_to(target);
        continue;
      }

      const Coordinate at = map_.poi(here_).at;
      const Observation obs = observe(map_, at, config_.radius);
      std::optional<int> target =
          config_.strategy == Strategy::NPS
              ? select_target_nps(map_, at, obs, counts_, config_.n, config_.nearest)
              : select_target_rvs(obs, counts_, config_.n, rng_, here_);
      if (!target) {
        place(EventType::restart, *lowest_eligible(std::nullopt));
        continue;
      }
      go_to(*target);
    }

    ExplorationTrace trace;
    trace.config = config_;
    trace.city = map_.city_name;
    trace.events = std::move(events_);
    trace.visit_counts = counts_;
    return trace;
  }

 private:
  bool done() const {
    return std::all_of(counts_.begin(), counts_.end(), [&](const auto& kv) { return kv.second >= config_.n; });
  }

  std::optional<int> lowest_eligible(std::optional<int> exclude) const {
    for (const auto& [id, c] : counts_)
      if (c < config_.n && (!exclude || id != *exclude)) return id;
    return std::nullopt;
  }

  void place(EventType type, int poi_id) {
    const Coordinate at = map_.poi(poi_id).at;
    ExplorationEvent e;
    e.step = next_step_++;
    e.type = type;
    e.node = NodeRef::poi(poi_id);
    e.at = at;
    e.observation = observe(map_, at, config_.radius);
    events_.push_back(std::move(e));
    ++counts_[poi_id];
    here_ = poi_id;
  }

  void go_to(int target) {
    ExplorationEvent t;
    t.step = next_step_++;
    t.type = EventType::traverse;
    t.from_poi = here_;
    t.to_poi = target;
    t.route = shortest_route(map_, here_, target);
    const Route route = t.route;
    events_.push_back(std::move(t));
    for (std::size_t k = 0; k < route.via_intersections.size(); ++k) {
      ExplorationEvent a;
      a.step = next_step_++;
      a.type = EventType::arrive;
      a.node = NodeRef::intersection(route.via_intersections[k]);
      a.at = route.cells[route.via_steps[k]];
      a.observation = observe(map_, a.at, config_.radius);
      events_.push_back(std::move(a));
    }
    place(EventType::arrive, target);
  }

  const GridMap& map_;
  EpisodeConfig config_;
  Rng rng_;
  VisitCounts counts_;
  std::vector<ExplorationEvent> events_;
  int next_step_ = 0;
  int here_ = 0;
};

inline ExplorationTrace run_episode(const GridMap& map, const EpisodeConfig& config) {
  return EpisodeRunner(map, config).run();
}

// ---------------------------------------------------------------------------
// Trace files: JSON lines, header first, then one event per line.
// ---------------------------------------------------------------------------

namespace detail {

inline ojson observation_to_json(const Observation& obs) {
  ojson entries = ojson::array();
  for (const auto& e : obs.entries) {
    ojson j{{"d", {e.offset.dcol, e.offset.drow}}, {"k", std::string(1, cell_code(e.kind))}};
    if (e.id) j["id"] = *e.id;
    if (e.name) j["name"] = *e.name;
    if (e.link) j["link"] = {e.link->dcol, e.link->drow};
    entries.push_back(std::move(j));
  }
  return entries;
}

inline Observation observation_from_json(const ojson& j, Coordinate at, int radius) {
  Observation obs{at, radius, {}};
  for (const auto& e : j) {
    ObservationEntry entry;
    entry.offset = {e.at("d").at(0).get<int>(), e.at("d").at(1).get<int>()};
    entry.kind = cell_kind_from_code(e.at("k").get<std::string>().at(0));
    if (e.contains("id")) entry.id = e.at("id").get<int>();
    if (e.contains("name")) entry.name = e.at("name").get<std::string>();
    if (e.contains("link")) entry.link = Offset{e.at("link").at(0).get<int>(), e.at("link").at(1).get<int>()};
    obs.entries.push_back(std::move(entry));
  }
  return obs;
}

}  // namespace detail

inline std::string trace_to_jsonl(const ExplorationTrace& trace) {
  std::string out;
  ojson header{{"type", "header"},
               {"city", trace.city},
               {"strategy", std::string(strategy_name(trace.config.strategy))},
               {"n", trace.config.n},
               {"radius", trace.config.radius},
               {"seed", trace.config.seed},
               {"nearest", trace.config.nearest == NearestMetric::route ? "route" : "euclidean"}};
  if (trace.config.tds_pairs) {
    ojson pairs = ojson::array();
    for (const auto& [a, b] : *trace.config.tds_pairs) pairs.push_back({a, b});
    header["tds_pairs"] = pairs;
  }
  out += header.dump() + "\n";
  for (const auto& e : trace.events) {
    ojson j{{"step", e.step}, {"type", std::string(event_type_name(e.type))}};
    if (e.type == EventType::traverse) {
      j["from"] = e.from_poi;
      j["to"] = e.to_poi;
      j["length"] = e.route.length;
      ojson cells = ojson::array();
      for (const auto& c : e.route.cells) cells.push_back({c.col, c.row});
      j["cells"] = cells;
      j["via"] = e.route.via_intersections;
      j["via_steps"] = e.route.via_steps;
    } else {
      j["node"] = e.node.label();
      j["col"] = e.at.col;
      j["row"] = e.at.row;
      j["observation"] = detail::observation_to_json(e.observation);
    }
    out += j.dump() + "\n";
  }
  return out;
}

inline ExplorationTrace trace_from_jsonl(const std::string& text) {
  ExplorationTrace trace;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = ojson::parse(line);
      const auto type = j.at("type").get<std::string>();
      if (type == "header") {
        trace.city = j.value("city", std::string{});
        trace.config.strategy = parse_strategy(j.at("strategy").get<std::string>());
        trace.config.n = j.at("n").get<int>();
        trace.config.radius = j.at("radius").get<int>();
        trace.config.seed = j.at("seed").get<std::uint64_t>();
        trace.config.nearest = j.value("nearest", std::string("route")) == "euclidean" ? NearestMetric::euclidean
                                                                                      : NearestMetric::route;
        if (j.contains("tds_pairs")) {
          std::vector<PoiPair> pairs;
          for (const auto& p : j.at("tds_pairs")) pairs.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
          trace.config.tds_pairs = std::move(pairs);
        }
        have_header = true;
        continue;
      }
      if (!have_header) throw error("bad-trace", "trace lacks a header line");
      ExplorationEvent e;
      e.step = j.at("step").get<int>();
      if (type == "traverse") {
        e.type = EventType::traverse;
        e.from_poi = j.at("from").get<int>();
        e.to_poi = j.at("to").get<int>();
        e.route.length = j.at("length").get<int>();
        for (const auto& c : j.at("cells")) e.route.cells.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
        e.route.via_intersections = j.at("via").get<std::vector<int>>();
        e.route.via_steps = j.at("via_steps").get<std::vector<std::size_t>>();
      } else {
        if (type == "start") e.type = EventType::start;
        else if (type == "arrive") e.type = EventType::arrive;
        else if (type == "restart") e.type = EventType::restart;
        else throw error("bad-trace", "unknown event type '" + type + "'");
        e.node = parse_node_label(j.at("node").get<std::string>());
        e.at = {j.at("col").get<int>(), j.at("row").get<int>()};
        e.observation = detail::observation_from_json(j.at("observation"), e.at, trace.config.radius);
      }
      trace.events.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw error("bad-trace", ex.what());
  }
  if (!have_header) throw error("bad-trace", "empty trace");
  for (const auto& e : trace.events)
    if (e.is_arrival() && e.node.is_poi()) ++trace.visit_counts[e.node.id];
  return trace;
}

}  // namespace mapmind

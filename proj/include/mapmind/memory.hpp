#pragma once

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "mapmind/explore.hpp"

namespace mapmind {

namespace detail {

inline std::string signed_offset(Offset o) {
  auto s = [](int v) { return (v > 0 ? "+" : "") + std::to_string(v); };
  return "(" + s(o.dcol) + "," + s(o.drow) + ")";
}

inline std::string coord_text(Coordinate c) { return "(" + std::to_string(c.col) + "," + std::to_string(c.row) + ")"; }

inline std::string entry_label(const ObservationEntry& e) {
  if (e.kind == CellKind::poi && e.id) return "P" + std::to_string(*e.id);
  if (e.kind == CellKind::intersection && e.id) return "I" + std::to_string(*e.id);
  return "road";
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Simple dialogue memory: one templated narration per event.
// ---------------------------------------------------------------------------

enum class Speaker : std::uint8_t { narrator, agent };

struct DialogueMessage {
  Speaker speaker = Speaker::narrator;
  std::string text;
  friend bool operator==(const DialogueMessage&, const DialogueMessage&) = default;
};

struct DialogueMemory {
  std::vector<DialogueMessage> messages;
  friend bool operator==(const DialogueMemory&, const DialogueMemory&) = default;
};

inline constexpr std::string_view dialogue_template_version = "narration-v1";

namespace detail {

inline std::string narrate_view(const Observation& obs) {
  std::string landmarks, roads;
  int road_count = 0;
  for (const auto& e : obs.entries) {
    if (e.offset == Offset{0, 0}) continue;
    if (e.kind == CellKind::road) {
      const auto o = signed_offset(e.offset);
      roads += (road_count++ ? " " : "") + o.substr(1, o.size() - 2);
    } else if (e.kind == CellKind::intersection) {
      landmarks += "; intersection " + entry_label(e) + " at " + signed_offset(e.offset);
    } else {
      landmarks += "; POI " + entry_label(e) + (e.name ? " (" + *e.name + ")" : "") + " at " + signed_offset(e.offset);
    }
  }
  std::string out = "In view";
  out += road_count ? ", roads at " + roads : ", no roads";
  out += landmarks.empty() ? "; no landmarks." : landmarks + ".";
  return out;
}

inline std::string describe_node(const ExplorationEvent& e) {
  if (e.node.is_poi()) {
    for (const auto& entry : e.observation.entries)
      if (entry.offset == Offset{0, 0} && entry.name) return "POI " + e.node.label() + " (" + *entry.name + ")";
    return "POI " + e.node.label();
  }
  return "intersection " + e.node.label();
}

}  // namespace detail

inline std::string narrate(const ExplorationEvent& e) {
  using namespace detail;
  switch (e.type) {
    case EventType::start:
      return "You begin at " + describe_node(e) + ", at " + coord_text(e.at) + ". " + narrate_view(e.observation);
    case EventType::arrive:
      return (e.node.is_poi() ? "You reach " : "You pass ") + describe_node(e) + ", at " +
             coord_text(e.at) + ". " + narrate_view(e.observation);
    case EventType::restart:
      return "Nothing new in view; you restart at " + describe_node(e) + ", at " +
             coord_text(e.at) + ". " + narrate_view(e.observation);
    case EventType::traverse: {
      std::string via;
      for (std::size_t i = 0; i < e.route.via_intersections.size(); ++i)
        via += (i ? ", I" : "I") + std::to_string(e.route.via_intersections[i]);
      return "You travel from P" + std::to_string(e.from_poi) + " to P" + std::to_string(e.to_poi) +
             " along the shortest road path, taking " + std::to_string(e.route.length) + " moves" +
             (via.empty() ? " without crossing any intersection." : " and crossing intersections " + via + ".");
    }
  }
  return {};
}

inline DialogueMemory update_sdm(DialogueMemory memory, const ExplorationEvent& e) {
  memory.messages.push_back({Speaker::narrator, narrate(e)});
  return memory;
}

// ---------------------------------------------------------------------------
// Node-sequence memory
// ---------------------------------------------------------------------------

struct NodeRecord {
  NodeRef node;
  std::string name;  // POIs only
  Observation seen;  // frozen at first arrival
  friend bool operator==(const NodeRecord&, const NodeRecord&) = default;
};

struct RouteRecord {
  int from_poi = 0;
  int to_poi = 0;
  std::vector<int> via_intersections;
  friend bool operator==(const RouteRecord&, const RouteRecord&) = default;
};

struct NodeSequenceMemory {
  std::vector<NodeRecord> node_records;
  std::vector<RouteRecord> route_records;
  friend bool operator==(const NodeSequenceMemory&, const NodeSequenceMemory&) = default;

  bool knows(NodeRef n) const {
    return std::any_of(node_records.begin(), node_records.end(), [&](const NodeRecord& r) { return r.node == n; });
  }
  bool knows_route(int from, int to) const {
    return std::any_of(route_records.begin(), route_records.end(),
                       [&](const RouteRecord& r) { return r.from_poi == from && r.to_poi == to; });
  }
};

inline NodeSequenceMemory update_nsm(NodeSequenceMemory memory, const ExplorationEvent& e) {
  if (e.is_arrival()) {
    if (!memory.knows(e.node)) {
      NodeRecord rec{e.node, {}, e.observation};
      for (const auto& entry : e.observation.entries)
        if (entry.offset == Offset{0, 0} && entry.name) rec.name = *entry.name;
      memory.node_records.push_back(std::move(rec));
    }
  } else if (e.from_poi != e.to_poi && !memory.knows_route(e.from_poi, e.to_poi)) {
    memory.route_records.push_back({e.from_poi, e.to_poi, e.route.via_intersections});
  }
  return memory;
}

// ---------------------------------------------------------------------------
// Graph memory
// ---------------------------------------------------------------------------

// Node-to-node links visible from `obs`: paths that stay inside the window and
// pass only through plain road cells.
inline std::map<NodeRef, int> visible_links(NodeRef self, const Observation& obs) {
  struct Cell {
    CellKind kind;
    std::optional<int> id;
    std::optional<Offset> link;
  };
  const int span = 2 * obs.radius + 1;
  auto slot = [&](Offset o) { return static_cast<std::size_t>((o.drow + obs.radius) * span + (o.dcol + obs.radius)); };
  auto inside = [&](Offset o) {
    return o.dcol >= -obs.radius && o.dcol <= obs.radius && o.drow >= -obs.radius && o.drow <= obs.radius;
  };
  std::vector<std::optional<Cell>> window(static_cast<std::size_t>(span * span));
  for (const auto& e : obs.entries) window[slot(e.offset)] = Cell{e.kind, e.id, e.link};

  std::map<NodeRef, int> links;
  std::vector<int> dist(window.size(), -1);
  std::deque<Offset> queue{{0, 0}};
  dist[slot({0, 0})] = 0;
  while (!queue.empty()) {
    const Offset u = queue.front();
    queue.pop_front();
    const auto& cu = window[slot(u)];
    if (!cu) continue;
    const int du = dist[slot(u)];
    auto reach = [&](Offset v) {
      if (!inside(v) || dist[slot(v)] >= 0) return;
      const auto& cv = window[slot(v)];
      if (!cv) return;
      if (cv->kind == CellKind::poi) {
        if (!cv->link || !(*cv->link == u)) return;
        dist[slot(v)] = du + 1;
        if (cv->id) links.try_emplace(NodeRef::poi(*cv->id), du + 1);
        return;
      }
      if (!navigable(cv->kind)) return;
      dist[slot(v)] = du + 1;
      if (cv->kind == CellKind::intersection && cv->id) {
        links.try_emplace(NodeRef::intersection(*cv->id), du + 1);
        return;
      }
      queue.push_back(v);
    };
    if (cu->kind == CellKind::poi) {
      if (u == Offset{0, 0} && cu->link) reach(*cu->link);
      continue;
    }
    for (const auto& d : detail::moore_offsets) reach({u.dcol + d.dcol, u.drow + d.drow});
  }
  links.erase(self);
  return links;
}

struct GraphMemory {
  std::set<NodeRef> nodes;
  std::map<NodeEdge, int> edges;
  // Links seen toward nodes not yet in memory; they become edges on arrival.
  std::map<NodeEdge, int> pending;
  friend bool operator==(const GraphMemory&, const GraphMemory&) = default;
};

namespace detail {

inline void merge_edge(std::map<NodeEdge, int>& edges, NodeEdge e, int len) {
  auto [it, inserted] = edges.try_emplace(e, len);
  if (!inserted && len < it->second) it->second = len;
}

inline void admit_node(GraphMemory& m, NodeRef n) {
  if (!m.nodes.insert(n).second) return;
  for (auto it = m.pending.begin(); it != m.pending.end();) {
    const NodeRef other = it->first.first == n ? it->first.second : it->first.first;
    if ((it->first.first == n || it->first.second == n) && m.nodes.count(other)) {
      merge_edge(m.edges, it->first, it->second);
      it = m.pending.erase(it);
    } else {
      ++it;
    }
  }
}

}  // namespace detail

inline GraphMemory update_gm(GraphMemory memory, const ExplorationEvent& e) {
  if (e.is_arrival()) {
    detail::admit_node(memory, e.node);
    for (const auto& [other, len] : visible_links(e.node, e.observation)) {
      const NodeEdge edge = make_edge(e.node, other);
      if (memory.nodes.count(other)) detail::merge_edge(memory.edges, edge, len);
      else detail::merge_edge(memory.pending, edge, len);
    }
    return memory;
  }
  const auto nodes = route_nodes(e.route, e.from_poi, e.to_poi);
  std::vector<std::size_t> steps{0};
  steps.insert(steps.end(), e.route.via_steps.begin(), e.route.via_steps.end());
  if (e.from_poi != e.to_poi) steps.push_back(e.route.cells.size() - 1);
  for (const auto& n : nodes) detail::admit_node(memory, n);
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    if (nodes[i] == nodes[i + 1]) continue;
    detail::merge_edge(memory.edges, make_edge(nodes[i], nodes[i + 1]), static_cast<int>(steps[i + 1] - steps[i]));
  }
  return memory;
}

// ---------------------------------------------------------------------------
// Map memory
// ---------------------------------------------------------------------------

struct PlacedNode {
  NodeRef node;
  Coordinate at;
  std::string label;
  friend bool operator==(const PlacedNode&, const PlacedNode&) = default;
};

struct MapMemory {
  std::map<NodeRef, PlacedNode> placed;
  // Keyed by the (from, to) POI pair of the traversal that drew the curve.
  std::map<PoiPair, std::vector<Coordinate>> curves;
  friend bool operator==(const MapMemory&, const MapMemory&) = default;
};

inline MapMemory update_mm(MapMemory memory, const ExplorationEvent& e) {
  if (e.is_arrival()) {
    if (!memory.placed.count(e.node)) {
      std::string label = e.node.is_poi() ? "poi" : "intersection";
      for (const auto& entry : e.observation.entries)
        if (entry.offset == Offset{0, 0} && entry.name) label = *entry.name;
      memory.placed.emplace(e.node, PlacedNode{e.node, e.at, std::move(label)});
    }
    return memory;
  }
  if (e.from_poi != e.to_poi) memory.curves.try_emplace({e.from_poi, e.to_poi}, e.route.cells);
  return memory;
}

// ---------------------------------------------------------------------------
// Bundles and canonical serialization
// ---------------------------------------------------------------------------

enum class StructuredKind : std::uint8_t { NSM, GM, MM };

inline std::string_view structured_name(StructuredKind k) {
  switch (k) {
    case StructuredKind::NSM: return "NSM";
    case StructuredKind::GM: return "GM";
    case StructuredKind::MM: return "MM";
  }
  return "?";
}

// One of SDM, NSM, GM, MM, NSM+SDM, GM+SDM, MM+SDM.
struct MemoryKind {
  std::optional<StructuredKind> structured;
  bool dialogue = false;

  std::string name() const {
    std::string s = structured ? std::string(structured_name(*structured)) : "";
    if (dialogue) s += structured ? "+SDM" : "SDM";
    return s;
  }
  friend bool operator==(const MemoryKind&, const MemoryKind&) = default;
};

inline MemoryKind parse_memory_kind(std::string_view s) {
  if (s == "SDM") return {std::nullopt, true};
  if (s == "NSM") return {StructuredKind::NSM, false};
  if (s == "GM") return {StructuredKind::GM, false};
  if (s == "MM") return {StructuredKind::MM, false};
  if (s == "NSM+SDM") return {StructuredKind::NSM, true};
  if (s == "GM+SDM") return {StructuredKind::GM, true};
  if (s == "MM+SDM") return {StructuredKind::MM, true};
  throw error("bad-memory-kind", "unknown memory kind '" + std::string(s) + "'");
}

inline const std::vector<std::string>& all_memory_kinds() {
  static const std::vector<std::string> kinds{"SDM", "NSM", "GM", "MM", "NSM+SDM", "GM+SDM", "MM+SDM"};
  return kinds;
}

inline std::string memory_header(std::string_view kind) { return "MEMFMT v1 " + std::string(kind) + "\n"; }

inline constexpr std::string_view bundle_separator = "----\n";

inline std::string serialize(const DialogueMemory& m) {
  std::string out = memory_header("SDM");
  for (const auto& msg : m.messages)
    out += (msg.speaker == Speaker::narrator ? "narrator: " : "agent: ") + msg.text + "\n";
  return out;
}

inline std::string serialize(const NodeSequenceMemory& m) {
  std::string out = memory_header("NSM");
  for (const auto& r : m.node_records) {
    out += "node " + r.node.label();
    if (!r.name.empty()) out += " " + r.name;
    std::string nodes, roads;
    for (const auto& e : r.seen.entries) {
      if (e.offset == Offset{0, 0}) continue;
      if (e.kind == CellKind::road) roads += " " + detail::signed_offset(e.offset);
      else nodes += " " + detail::entry_label(e) + detail::signed_offset(e.offset);
    }
    out += " | sees" + (nodes.empty() ? std::string(" -") : nodes) + " | roads" + (roads.empty() ? " -" : roads) + "\n";
  }
  for (const auto& r : m.route_records) {
    out += "route P" + std::to_string(r.from_poi) + ">P" + std::to_string(r.to_poi) + " via";
    if (r.via_intersections.empty()) out += " -";
    for (int x : r.via_intersections) out += " I" + std::to_string(x);
    out += "\n";
  }
  return out;
}

inline std::string serialize(const GraphMemory& m) {
  std::string out = memory_header("GM");
  std::map<NodeRef, std::vector<std::pair<NodeRef, int>>> adjacency;
  for (const auto& n : m.nodes) adjacency[n];
  for (const auto& [edge, len] : m.edges) {
    adjacency[edge.first].emplace_back(edge.second, len);
    adjacency[edge.second].emplace_back(edge.first, len);
  }
  for (auto& [node, nbrs] : adjacency) {
    std::sort(nbrs.begin(), nbrs.end());
    out += node.label() + ":";
    for (std::size_t i = 0; i < nbrs.size(); ++i)
      out += (i ? ", " : " ") + nbrs[i].first.label() + "(" + std::to_string(nbrs[i].second) + ")";
    out += "\n";
  }
  return out;
}

inline std::string serialize(const MapMemory& m) {
  std::string out = memory_header("MM");
  for (const auto& [node, p] : m.placed) out += node.label() + " " + detail::coord_text(p.at) + " " + p.label + "\n";
  for (const auto& [pair, cells] : m.curves) {
    out += "P" + std::to_string(pair.first) + ">P" + std::to_string(pair.second) + ":";
    for (const auto& c : cells) out += " " + std::to_string(c.col) + "," + std::to_string(c.row);
    out += "\n";
  }
  return out;
}

using StructuredMemory = std::variant<NodeSequenceMemory, GraphMemory, MapMemory>;

struct MemoryBundle {
  std::optional<StructuredMemory> structured;
  std::optional<DialogueMemory> dialogue;
  std::string serialized;
  std::int64_t size_bits = 0;

  MemoryKind kind() const {
    MemoryKind k;
    if (structured) k.structured = static_cast<StructuredKind>(structured->index());
    k.dialogue = dialogue.has_value();
    return k;
  }
};

inline std::string serialize(const StructuredMemory& m) {
  return std::visit([](const auto& v) { return serialize(v); }, m);
}

// Structured block first, then the dialogue block.
inline MemoryBundle serialize_bundle(std::optional<StructuredMemory> structured, std::optional<DialogueMemory> dialogue) {
  if (!structured && !dialogue) throw error("empty-bundle", "a memory bundle needs at least one part");
  MemoryBundle b;
  if (structured) b.serialized += serialize(*structured);
  if (structured && dialogue) b.serialized += bundle_separator;
  if (dialogue) b.serialized += serialize(*dialogue);
  b.size_bits = 8 * static_cast<std::int64_t>(b.serialized.size());
  b.structured = std::move(structured);
  b.dialogue = std::move(dialogue);
  return b;
}

// Folds.
template <typename Memory, typename Update>
Memory fold_events(const std::vector<ExplorationEvent>& events, Update update, Memory init = {}) {
  for (const auto& e : events) init = update(std::move(init), e);
  return init;
}

inline DialogueMemory build_sdm(const ExplorationTrace& t) { return fold_events<DialogueMemory>(t.events, update_sdm); }
inline NodeSequenceMemory build_nsm(const ExplorationTrace& t) {
  return fold_events<NodeSequenceMemory>(t.events, update_nsm);
}
inline GraphMemory build_gm(const ExplorationTrace& t) { return fold_events<GraphMemory>(t.events, update_gm); }
inline MapMemory build_mm(const ExplorationTrace& t) { return fold_events<MapMemory>(t.events, update_mm); }

inline MemoryBundle build_bundle(const ExplorationTrace& trace, const MemoryKind& kind) {
  std::optional<StructuredMemory> structured;
  if (kind.structured) {
    switch (*kind.structured) {
      case StructuredKind::NSM: structured = build_nsm(trace); break;
      case StructuredKind::GM: structured = build_gm(trace); break;
      case StructuredKind::MM: structured = build_mm(trace); break;
    }
  }
  std::optional<DialogueMemory> dialogue;
  if (kind.dialogue) dialogue = build_sdm(trace);
  return serialize_bundle(std::move(structured), std::move(dialogue));
}

inline std::string bundle_manifest(const MemoryBundle& b, const std::string& trace_ref) {
  ojson kinds = ojson::array();
  if (b.structured) kinds.push_back(std::string(structured_name(static_cast<StructuredKind>(b.structured->index()))));
  if (b.dialogue) kinds.push_back("SDM");
  return ojson{{"kinds", kinds}, {"size_bits", b.size_bits}, {"trace_ref", trace_ref}}.dump(2) + "\n";
}

}  // namespace mapmind

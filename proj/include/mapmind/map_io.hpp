#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mapmind/grid_map.hpp"

namespace mapmind {

using ojson = nlohmann::ordered_json;

namespace detail {

// One array element per line, each element compact.
inline void write_json_lines_array(std::ostringstream& out, const char* key, const std::vector<ojson>& items,
                                   bool last) {
  out << "  \"" << key << "\": [";
  if (items.empty()) {
    out << "]";
  } else {
    out << "\n";
    for (std::size_t i = 0; i < items.size(); ++i) {
      out << "    " << items[i].dump(-1, ' ', false) << (i + 1 < items.size() ? ",\n" : "\n");
    }
    out << "  ]";
  }
  out << (last ? "\n" : ",\n");
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("io", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw error("io", "cannot write " + path);
  out << text;
  if (!out) throw error("io", "write failed for " + path);
}

}  // namespace detail

// Canonical map document. Parsing a document produced here and writing it
// back yields identical bytes.
inline std::string map_to_json(const GridMap& map) {
  std::ostringstream out;
  out << "{\n";
  out << "  \"city\": " << ojson(map.city_name).dump(-1, ' ', false) << ",\n";
  out << "  \"width\": " << map.width << ",\n";
  out << "  \"height\": " << map.height << ",\n";

  std::vector<ojson> rows;
  for (int r = 0; r < map.height; ++r) {
    std::string row;
    for (int c = 0; c < map.width; ++c) row += cell_code(map.at({c, r}));
    rows.emplace_back(row);
  }
  detail::write_json_lines_array(out, "cells", rows, false);

  std::vector<ojson> pois;
  for (const auto& p : map.pois) {
    pois.push_back(ojson{{"id", p.id},
                         {"name", p.name},
                         {"col", p.at.col},
                         {"row", p.at.row},
                         {"link_col", p.linked_road.col},
                         {"link_row", p.linked_road.row}});
  }
  detail::write_json_lines_array(out, "pois", pois, false);

  std::vector<ojson> xs;
  for (const auto& x : map.intersections) xs.push_back(ojson{{"id", x.id}, {"col", x.at.col}, {"row", x.at.row}});
  detail::write_json_lines_array(out, "intersections", xs, false);

  std::vector<ojson> segs;
  for (const auto& s : map.segments) {
    ojson cells = ojson::array();
    for (const auto& c : s.cells) cells.push_back({c.col, c.row});
    segs.push_back(ojson{{"class", std::string(road_class_name(s.road_class))}, {"cells", cells}});
  }
  detail::write_json_lines_array(out, "segments", segs, true);
  out << "}\n";
  return out.str();
}

inline GridMap map_from_json(const std::string& text) {
  ojson doc;
  try {
    doc = ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw error("bad-map-file", e.what());
  }
  try {
    GridMap map = GridMap::blank(doc.at("width").get<int>(), doc.at("height").get<int>(),
                                 doc.value("city", std::string{}));
    const auto& rows = doc.at("cells");
    if (rows.size() != static_cast<std::size_t>(map.height)) throw error("bad-map-file", "row count != height");
    for (int r = 0; r < map.height; ++r) {
      const auto row = rows[static_cast<std::size_t>(r)].get<std::string>();
      if (row.size() != static_cast<std::size_t>(map.width)) throw error("bad-map-file", "row width != width");
      for (int c = 0; c < map.width; ++c) map.set({c, r}, cell_kind_from_code(row[static_cast<std::size_t>(c)]));
    }
    for (const auto& p : doc.value("pois", ojson::array())) {
      map.pois.push_back(Poi{p.at("id").get<int>(), p.at("name").get<std::string>(),
                             {p.at("col").get<int>(), p.at("row").get<int>()},
                             {p.at("link_col").get<int>(), p.at("link_row").get<int>()}});
    }
    for (const auto& x : doc.value("intersections", ojson::array()))
      map.intersections.push_back(Intersection{x.at("id").get<int>(), {x.at("col").get<int>(), x.at("row").get<int>()}});
    for (const auto& s : doc.value("segments", ojson::array())) {
      RoadSegment seg;
      const auto cls = s.at("class").get<std::string>();
      if (cls == "main") seg.road_class = RoadClass::main;
      else if (cls == "auxiliary") seg.road_class = RoadClass::auxiliary;
      else throw error("bad-map-file", "unknown segment class '" + cls + "'");
      for (const auto& c : s.at("cells")) seg.cells.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
      map.segments.push_back(std::move(seg));
    }
    return map;
  } catch (const nlohmann::json::exception& e) {
    throw error("bad-map-file", e.what());
  }
}

inline GridMap load_map(const std::string& path) { return map_from_json(detail::read_text_file(path)); }
inline void save_map(const GridMap& map, const std::string& path) { detail::write_text_file(path, map_to_json(map)); }

}  // namespace mapmind

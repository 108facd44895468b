#include <gtest/gtest.h>

#include "mapmind/map_io.hpp"
#include "mapmind/routing.hpp"
#include "support.hpp"

using namespace mapmind;
using namespace testsupport;

TEST(Coordinate, RowMajorOrder) {
  EXPECT_LT((Coordinate{5, 0}), (Coordinate{0, 1}));
  EXPECT_LT((Coordinate{1, 3}), (Coordinate{2, 3}));
  EXPECT_EQ(chebyshev({0, 0}, {3, -2}), 3);
}

TEST(Euclidean, Examples) {
  EXPECT_DOUBLE_EQ(euclidean_distance({3, 4}, {3, 4}), 0.0);
  EXPECT_DOUBLE_EQ(euclidean_distance({0, 0}, {3, 4}), 5.0);
  EXPECT_NEAR(euclidean_distance({0, 0}, {19, 19}), 26.870, 1e-3);
}

TEST(NodeLabels, ParseRoundTrip) {
  EXPECT_EQ(parse_node_label("P3"), NodeRef::poi(3));
  EXPECT_EQ(parse_node_label("I14"), NodeRef::intersection(14));
  EXPECT_EQ(NodeRef::intersection(4).label(), "I4");
  EXPECT_THROW(parse_node_label("Q1"), error);
}

TEST(MapFile, CatalogMapsRoundTripByteExact) {
  for (const auto& path : catalog_map_paths()) {
    const std::string text = detail::read_text_file(path);
    EXPECT_EQ(map_to_json(map_from_json(text)), text) << path;
  }
}

TEST(MapFile, RejectsMalformedDocuments) {
  EXPECT_THROW(map_from_json("{"), error);
  EXPECT_THROW(map_from_json(R"({"width":2,"height":1,"cells":["."]})"), error);
  try {
    map_from_json(R"({"width":1,"height":1,"cells":["."],"segments":[{"class":"lane","cells":[]}]})");
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), "bad-map-file");
  }
}

TEST(Validate, CatalogMapsAreValid) {
  const auto maps = catalog_maps();
  ASSERT_EQ(maps.size(), 15u);
  for (const auto& m : maps) EXPECT_TRUE(validate_map(m).ok()) << m.city_name;
  EXPECT_EQ(maps[0].city_name, "Beijing");
  EXPECT_EQ(maps[0].pois.size(), 21u);
  EXPECT_EQ(maps[0].intersections.size(), 22u);
  EXPECT_EQ(maps[0].main_road_count(), 4u);
}

TEST(Validate, LinkToBackgroundIsReported) {
  GridMap m = load_map(catalog_map_paths()[1]);
  for (int r = 0; r < m.height; ++r)
    for (int c = 0; c < m.width; ++c)
      if (m.at({c, r}) == CellKind::background) {
        m.pois[0].linked_road = {c, r};
        goto done;
      }
done:
  EXPECT_TRUE(validate_map(m).has("poi-link-not-road"));
}

TEST(Validate, DisconnectedComponentsAreReported) {
  // Two separate road rows on a 10x10 grid, one POI on each.
  GridMap m = grid_from_rows({
      "..........",
      "rrrrrrrrrr",
      "...p......",
      "..........",
      "..........",
      "..........",
      "......p...",
      "rrrrrrrrrr",
      "..........",
      "..........",
  });
  m.segments.push_back({{}, RoadClass::main});
  for (int c = 0; c < 10; ++c) m.segments.back().cells.push_back({c, 1});
  m.segments.push_back({{}, RoadClass::main});
  for (int c = 0; c < 10; ++c) m.segments.back().cells.push_back({c, 7});
  const auto report = validate_map(m);
  EXPECT_TRUE(report.has("pois-not-mutually-reachable"));

  // Flood fill from P1's link never reaches P2's link.
  std::set<Coordinate> seen{m.pois[0].linked_road};
  std::vector<Coordinate> stack{m.pois[0].linked_road};
  while (!stack.empty()) {
    auto u = stack.back();
    stack.pop_back();
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        Coordinate v{u.col + dc, u.row + dr};
        if (m.in_bounds(v) && navigable(m.at(v)) && seen.insert(v).second) stack.push_back(v);
      }
  }
  EXPECT_FALSE(seen.count(m.pois[1].linked_road));
}

TEST(Validate, DuplicateIdsAreReported) {
  GridMap m = load_map(catalog_map_paths()[2]);
  m.pois[1].id = m.pois[0].id;
  EXPECT_TRUE(validate_map(m).has("duplicate-poi-id"));
  GridMap n = load_map(catalog_map_paths()[2]);
  n.intersections[1].id = n.intersections[0].id;
  EXPECT_TRUE(validate_map(n).has("duplicate-intersection-id"));
}

TEST(Observe, CornerWindowIsClipped) {
  GridMap m = GridMap::blank(20, 20);
  for (int r = 0; r < 20; ++r)
    for (int c = 0; c < 20; ++c) m.set({c, r}, CellKind::road);
  const auto obs = observe(m, {0, 0}, 2);
  EXPECT_EQ(obs.entries.size(), 9u);
  for (const auto& e : obs.entries) {
    EXPECT_GE(e.offset.dcol, 0);
    EXPECT_GE(e.offset.drow, 0);
  }
}

TEST(Observe, ReportsIntersectionOffsetAndId) {
  GridMap m = grid_from_rows({
      ".......",
      "....x..",
      "..prr..",
      ".......",
      ".......",
  });
  const auto obs = observe(m, m.pois[0].at, 2);
  bool found = false;
  for (const auto& e : obs.entries)
    if (e.offset == Offset{2, -1}) {
      EXPECT_EQ(e.kind, CellKind::intersection);
      EXPECT_EQ(e.id, 1);
      found = true;
    }
  EXPECT_TRUE(found);
}

TEST(Observe, MatchesBruteForceWindowScan) {
  const auto maps = catalog_maps();
  Rng rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    const auto& m = maps[rng.uniform_index(maps.size())];
    const Coordinate at{static_cast<int>(rng.uniform_index(20)), static_cast<int>(rng.uniform_index(20))};
    const int radius = 1 + static_cast<int>(rng.uniform_index(3));
    const auto obs = observe(m, at, radius);
    std::vector<std::pair<Offset, CellKind>> expected;
    for (int dr = -radius; dr <= radius; ++dr)
      for (int dc = -radius; dc <= radius; ++dc) {
        const Coordinate c{at.col + dc, at.row + dr};
        if (c.col < 0 || c.row < 0 || c.col >= 20 || c.row >= 20) continue;
        if (m.cells[static_cast<std::size_t>(c.row * 20 + c.col)] == CellKind::background) continue;
        expected.push_back({{dc, dr}, m.cells[static_cast<std::size_t>(c.row * 20 + c.col)]});
      }
    ASSERT_EQ(obs.entries.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      EXPECT_EQ(obs.entries[i].offset, expected[i].first);
      EXPECT_EQ(obs.entries[i].kind, expected[i].second);
    }
  }
}

TEST(Observe, SymmetricVisibility) {
  const auto m = load_map(catalog_map_paths()[3]);
  for (int r = 0; r < 20; r += 3)
    for (int c = 0; c < 20; c += 3) {
      for (const auto& e : observe(m, {c, r}).entries) {
        const Coordinate other{c + e.offset.dcol, r + e.offset.drow};
        EXPECT_LE(chebyshev(other, {c, r}), 2);
      }
    }
}

TEST(Observe, RejectsBadInput) {
  const GridMap m = GridMap::blank(5, 5);
  EXPECT_THROW(observe(m, {5, 0}), error);
  EXPECT_THROW(observe(m, {0, 0}, 0), error);
}

TEST(Route, IdentityHasLengthZero) {
  const auto m = load_map(catalog_map_paths()[0]);
  const auto r = shortest_route(m, 1, 1);
  EXPECT_EQ(r.length, 0);
  EXPECT_EQ(r.cells, std::vector<Coordinate>{m.poi(1).at});
}

TEST(Route, StraightRoadHandExample) {
  GridMap m = grid_from_rows({
      ".......",
      ".......",
      ".p...p.",
      "rrrrrrr",
      ".......",
      ".......",
      ".......",
  });
  EXPECT_EQ(m.poi(1).linked_road, (Coordinate{1, 3}));
  EXPECT_EQ(m.poi(2).linked_road, (Coordinate{5, 3}));
  EXPECT_EQ(shortest_route(m, 1, 2).length, 6);
  EXPECT_EQ(bfs_route_length(m, 1, 2), 6);
}

TEST(Route, TiesResolveToSmallestCellSequence) {
  // Rows 0 and 1 give equally short paths; row 0 is row-major smaller.
  GridMap m = grid_from_rows({
      ".rrr.",
      "rrrrr",
      "p...p",
      ".....",
      ".....",
  });
  const auto r = shortest_route(m, 1, 2);
  const std::vector<Coordinate> expected{{0, 2}, {0, 1}, {1, 0}, {2, 0}, {3, 0}, {4, 1}, {4, 2}};
  EXPECT_EQ(r.cells, expected);
  EXPECT_EQ(r.length, 6);
}

TEST(Route, CellsAreConnectedAndNavigable) {
  for (const auto& m : catalog_maps()) {
    const auto ids = m.poi_ids();
    for (std::size_t i = 0; i < ids.size(); i += 2)
      for (std::size_t j = 0; j < ids.size(); j += 3) {
        const auto r = shortest_route(m, ids[i], ids[j]);
        EXPECT_EQ(r.length + 1, static_cast<int>(r.cells.size()));
        for (std::size_t k = 1; k < r.cells.size(); ++k) EXPECT_TRUE(moore_adjacent(r.cells[k - 1], r.cells[k]));
        for (std::size_t k = 1; k + 1 < r.cells.size(); ++k) EXPECT_TRUE(navigable(m.at(r.cells[k])));
      }
  }
}

TEST(Route, MatchesBfsOracleOnSmallMaps) {
  const auto maps = random_valid_maps(60, 10, 10, 500);
  ASSERT_EQ(maps.size(), 60u);
  for (const auto& m : maps)
    for (int a : m.poi_ids())
      for (int b : m.poi_ids()) ASSERT_EQ(shortest_route(m, a, b).length, bfs_route_length(m, a, b));
}

TEST(Route, TriangleInequality) {
  const auto m = load_map(catalog_map_paths()[5]);
  const auto ids = m.poi_ids();
  std::map<std::pair<int, int>, int> len;
  for (int a : ids)
    for (int b : ids) len[std::pair(a, b)] = shortest_route(m, a, b).length;
  for (int a : ids)
    for (int b : ids)
      for (int c : ids) EXPECT_LE(len[std::pair(a, c)], len[std::pair(a, b)] + len[std::pair(b, c)]);
}

TEST(Route, Deterministic) {
  const auto m = load_map(catalog_map_paths()[7]);
  EXPECT_EQ(shortest_route(m, 1, 9), shortest_route(m, 1, 9));
}

TEST(Route, ForbiddenMoveForcesDetour) {
  const auto m = load_map(catalog_map_paths()[4]);
  const auto best = shortest_route(m, 1, 2);
  ForbiddenMoves f;
  f.add(best.cells[1], best.cells[2]);
  try {
    const auto alt = shortest_route(m, 1, 2, f);
    EXPECT_GE(alt.length, best.length);
    for (std::size_t k = 1; k < alt.cells.size(); ++k)
      EXPECT_FALSE(f.contains(alt.cells[k - 1], alt.cells[k]));
  } catch (const error& e) {
    EXPECT_EQ(e.code(), "unreachable");
  }
}

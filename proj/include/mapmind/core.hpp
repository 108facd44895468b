#pragma once

#include <cstdint>
#include <compare>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mapmind {

// Failure raised for invalid inputs and unrecoverable conditions. `code` is a
// short machine-readable tag such as "unreachable" or "poi-collision".
class error : public std::runtime_error {
 public:
  error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

// Cell position. Row 0 is the north edge, column 0 the west edge.
struct Coordinate {
  int col = 0;
  int row = 0;

  friend bool operator==(const Coordinate&, const Coordinate&) = default;
  // Row-major ordering.
  friend std::strong_ordering operator<=>(const Coordinate& a, const Coordinate& b) {
    if (auto c = a.row <=> b.row; c != 0) return c;
    return a.col <=> b.col;
  }
};

inline int chebyshev(Coordinate a, Coordinate b) {
  const int dc = a.col > b.col ? a.col - b.col : b.col - a.col;
  const int dr = a.row > b.row ? a.row - b.row : b.row - a.row;
  return dc > dr ? dc : dr;
}

inline bool moore_adjacent(Coordinate a, Coordinate b) { return chebyshev(a, b) == 1; }

enum class CellKind : std::uint8_t { background, road, intersection, poi };

inline char cell_code(CellKind k) {
  switch (k) {
    case CellKind::background: return '.';
    case CellKind::road: return 'r';
    case CellKind::intersection: return 'x';
    case CellKind::poi: return 'p';
  }
  return '?';
}

inline CellKind cell_kind_from_code(char c) {
  switch (c) {
    case '.': return CellKind::background;
    case 'r': return CellKind::road;
    case 'x': return CellKind::intersection;
    case 'p': return CellKind::poi;
    default: throw error("bad-cell-code", std::string("unknown cell code '") + c + "'");
  }
}

inline std::string_view kind_name(CellKind k) {
  switch (k) {
    case CellKind::background: return "background";
    case CellKind::road: return "road";
    case CellKind::intersection: return "intersection";
    case CellKind::poi: return "poi";
  }
  return "?";
}

inline bool navigable(CellKind k) { return k == CellKind::road || k == CellKind::intersection; }

// A salient node of the map: a POI or an intersection.
struct NodeRef {
  enum class Kind : std::uint8_t { poi, intersection };
  Kind kind = Kind::poi;
  int id = 0;

  static NodeRef poi(int id) { return {Kind::poi, id}; }
  static NodeRef intersection(int id) { return {Kind::intersection, id}; }

  bool is_poi() const { return kind == Kind::poi; }

  // "P3" / "I12"
  std::string label() const { return (is_poi() ? "P" : "I") + std::to_string(id); }

  friend bool operator==(const NodeRef&, const NodeRef&) = default;
  friend auto operator<=>(const NodeRef&, const NodeRef&) = default;
};

inline NodeRef parse_node_label(std::string_view s) {
  if (s.size() < 2 || (s[0] != 'P' && s[0] != 'I'))
    throw error("bad-node", "malformed node label '" + std::string(s) + "'");
  const int id = std::stoi(std::string(s.substr(1)));
  return s[0] == 'P' ? NodeRef::poi(id) : NodeRef::intersection(id);
}

// ---------------------------------------------------------------------------
// Seeding and randomness. All randomness flows through Rng so that runs are
// reproducible across platforms (no std:: distributions).
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derives an independent seed from a master seed and a textual key.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view key) {
  return splitmix64(fnv1a64(key, splitmix64(master)));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n) by rejection sampling.
  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw error("rng", "uniform_index over empty range");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
  }

  // Fisher-Yates.
  template <typename Container>
  void shuffle(Container& c) {
    for (std::size_t i = c.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      using std::swap;
      swap(c[i - 1], c[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mapmind

template <>
struct std::hash<mapmind::Coordinate> {
  std::size_t operator()(const mapmind::Coordinate& c) const noexcept {
    return std::hash<long long>{}((static_cast<long long>(c.row) << 32) ^ static_cast<unsigned>(c.col));
  }
};

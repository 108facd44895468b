#pragma once

#include <atomic>
#include <charconv>
#include <filesystem>
#include <mutex>
#include <thread>

#include <toml.hpp>

#include "mapmind/explore.hpp"
#include "mapmind/ingest.hpp"
#include "mapmind/remote.hpp"

namespace mapmind {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  std::string run_id = "run";
  std::vector<std::string> cities;  // map file paths
  std::vector<std::string> strategies;
  std::vector<std::string> memories;
  std::vector<std::string> schemes;
  std::vector<EndpointSpec> endpoints;
  int n = 1;
  int radius = 2;
  int repeats = 1;
  std::uint64_t seed = 0;
  int workers = 4;
  TaskConfig tasks;
  Scheme scheme_defaults;

  void check() const {
    auto nonempty = [](const auto& v, const char* axis) {
      if (v.empty()) throw error("bad-config", std::string(axis) + " must not be empty");
    };
    nonempty(cities, "cities");
    nonempty(strategies, "strategies");
    nonempty(memories, "memories");
    nonempty(schemes, "schemes");
    nonempty(endpoints, "endpoints");
    for (const auto& s : strategies) parse_strategy(s);
    for (const auto& m : memories) parse_memory_kind(m);
    for (const auto& s : schemes) parse_scheme(s);
    for (const auto& e : endpoints) e.check();
    if (n < 1 || repeats < 1 || workers < 1) throw error("bad-config", "n, repeats and workers must be >= 1");
  }
};

struct Preset {
  std::vector<std::string> strategies, memories, schemes;
};

// Phase I varies the strategy, Phase II the memory, Phase III the scheme.
inline Preset phase_preset(std::string_view name) {
  if (name == "phase1") return {{"NPS", "RVS", "TDS"}, {"SDM"}, {"DT"}};
  if (name == "phase2") return {{"NPS"}, all_memory_kinds(), {"DT"}};
  if (name == "phase3") return {{"NPS"}, {"NSM"}, {"DT", "CoT", "SC_CoT", "ToT"}};
  throw error("unknown-preset", std::string(name));
}

namespace detail {

template <typename T, typename View>
std::vector<T> toml_list(View node) {
  std::vector<T> out;
  if (const auto* arr = node.as_array())
    for (const auto& v : *arr)
      if (auto x = v.template value<T>()) out.push_back(*x);
  return out;
}

inline std::string resolve_path(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal().string();
}

}  // namespace detail

// Relative map paths are resolved against the directory of the config file.
inline ExperimentConfig config_from_toml(const std::string& text, const fs::path& base_dir = ".",
                                         const std::string& default_run_id = "run") {
  toml::table t;
  try {
    t = toml::parse(text);
  } catch (const toml::parse_error& e) {
    throw error("bad-config", std::string(e.description()));
  }
  ExperimentConfig c;
  c.run_id = t["run_id"].value_or(default_run_id);
  c.seed = static_cast<std::uint64_t>(t["seed"].value_or<std::int64_t>(0));
  c.n = t["n"].value_or(1);
  c.radius = t["radius"].value_or(2);
  c.repeats = t["repeats"].value_or(1);

  for (const auto& p : detail::toml_list<std::string>(t["cities"]["maps"])) c.cities.push_back(detail::resolve_path(base_dir, p));
  if (auto dir = t["cities"]["dir"].value<std::string>()) {
    std::vector<std::string> found;
    for (const auto& f : fs::directory_iterator(detail::resolve_path(base_dir, *dir)))
      if (f.path().extension() == ".json") found.push_back(f.path().lexically_normal().string());
    std::sort(found.begin(), found.end());
    c.cities.insert(c.cities.end(), found.begin(), found.end());
  }

  if (auto preset = t["matrix"]["preset"].value<std::string>()) {
    auto p = phase_preset(*preset);
    c.strategies = p.strategies;
    c.memories = p.memories;
    c.schemes = p.schemes;
  }
  if (auto v = detail::toml_list<std::string>(t["matrix"]["strategies"]); !v.empty()) c.strategies = v;
  if (auto v = detail::toml_list<std::string>(t["matrix"]["memories"]); !v.empty()) c.memories = v;
  if (auto v = detail::toml_list<std::string>(t["matrix"]["schemes"]); !v.empty()) c.schemes = v;

  if (const auto* eps = t["endpoint"].as_table()) {
    for (const auto& [name, node] : *eps) {
      const auto* e = node.as_table();
      if (!e) continue;
      EndpointSpec s;
      s.name = std::string(name.str());
      s.kind = parse_endpoint_kind((*e)["kind"].value_or(std::string("scripted-oracle")));
      s.model = (*e)["model"].value_or(std::string{});
      s.base_url = (*e)["base_url"].value_or(std::string{});
      s.temperature = (*e)["temperature"].value_or(0.0);
      s.max_attempts = (*e)["max_attempts"].value_or(3);
      s.backoff_ms = (*e)["backoff_ms"].value_or(500);
      s.timeout_s = (*e)["timeout_s"].value_or(120);
      s.requests_per_second = t["limits"]["requests_per_second"].value_or(0.0);
      s.requests_per_second = (*e)["requests_per_second"].value_or(s.requests_per_second);
      s.max_in_flight = t["limits"]["max_in_flight"].value_or(4);
      s.max_in_flight = (*e)["max_in_flight"].value_or(s.max_in_flight);
      c.endpoints.push_back(std::move(s));
    }
  }
  c.workers = t["limits"]["workers"].value_or(4);

  const auto metric = t["tasks"]["metric"].value_or(std::string("euclidean"));
  if (metric == "road") c.tasks.metric = DistanceMetric::road;
  else if (metric != "euclidean") throw error("bad-config", "tasks.metric must be euclidean or road");
  c.tasks.ds_margin = t["tasks"]["ds_margin"].value_or(c.tasks.ds_margin);
  c.tasks.pj_margin = t["tasks"]["pj_margin"].value_or(c.tasks.pj_margin);

  c.scheme_defaults.k = t["schemes"]["sc_k"].value_or(5);
  c.scheme_defaults.temperature = t["schemes"]["sc_temperature"].value_or(1.0);
  c.scheme_defaults.plans = t["schemes"]["tot_plans"].value_or(3);
  c.scheme_defaults.candidates = t["schemes"]["tot_candidates"].value_or(3);
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  const fs::path p(path);
  return config_from_toml(detail::read_text_file(path), p.parent_path().empty() ? fs::path(".") : p.parent_path(),
                          p.stem().string());
}

// ---------------------------------------------------------------------------
// Matrix units
// ---------------------------------------------------------------------------

struct CellKey {
  std::string strategy, memory, scheme, endpoint;
  auto operator<=>(const CellKey&) const = default;
  std::string text() const { return strategy + "|" + memory + "|" + scheme + "|" + endpoint; }
};

// One city of one cell, the unit of work and of commit.
struct UnitKey {
  std::string city;  // city name
  CellKey cell;
  int repeat = 0;
  auto operator<=>(const UnitKey&) const = default;
  std::string text() const { return city + "|" + cell.text() + "|r" + std::to_string(repeat); }
};

struct ItemRecord {
  std::string task;
  Category category = Category::DJ;
  bool degenerate = false;
  std::optional<int> chosen;
  bool correct = false;
  bool invalid = false;
  std::string reply_ref;
};

struct UnitResult {
  UnitKey key;
  std::uint64_t seed = 0;
  std::int64_t size_bits = 0;
  std::vector<ItemRecord> items;
  std::optional<std::string> failure;
};

inline std::uint64_t unit_seed(std::uint64_t master, const UnitKey& k) { return derive_seed(master, k.text()); }

// Exploration depends only on (city, strategy, n, repeat), so memories and
// schemes share one trace.
inline std::uint64_t episode_seed(std::uint64_t master, const std::string& city, const std::string& strategy, int n,
                                  int repeat) {
  return derive_seed(master, "episode|" + city + "|" + strategy + "|n" + std::to_string(n) + "|r" + std::to_string(repeat));
}

inline std::uint64_t task_seed(std::uint64_t master, const std::string& city) {
  return derive_seed(master, "tasks|" + city);
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string unit_file_stem(const UnitResult& u) { return hex64(fnv1a64(u.key.text() + "#" + hex64(u.seed))); }

inline ojson item_record_to_json(const UnitKey& k, const ItemRecord& r) {
  ojson j{{"city", k.city},         {"strategy", k.cell.strategy}, {"memory", k.cell.memory},
          {"scheme", k.cell.scheme}, {"endpoint", k.cell.endpoint}, {"repeat", k.repeat},
          {"task", r.task},         {"category", std::string(category_name(r.category))}};
  j["degenerate"] = r.degenerate;
  j["chosen"] = r.chosen ? ojson(std::string(1, option_letter(static_cast<std::size_t>(*r.chosen)))) : ojson(nullptr);
  j["correct"] = r.correct;
  j["invalid"] = r.invalid;
  j["reply_ref"] = r.reply_ref;
  return j;
}

inline ojson unit_to_json(const UnitResult& u) {
  ojson items = ojson::array();
  for (const auto& r : u.items) items.push_back(item_record_to_json(u.key, r));
  ojson j{{"key", u.key.text()}, {"seed", hex64(u.seed)}, {"size_bits", u.size_bits}, {"items", items}};
  j["city"] = u.key.city;
  j["strategy"] = u.key.cell.strategy;
  j["memory"] = u.key.cell.memory;
  j["scheme"] = u.key.cell.scheme;
  j["endpoint"] = u.key.cell.endpoint;
  j["repeat"] = u.key.repeat;
  if (u.failure) j["failure"] = *u.failure;
  return j;
}

inline UnitResult unit_from_json(const ojson& j) {
  UnitResult u;
  u.key = {j.at("city").get<std::string>(),
           {j.at("strategy").get<std::string>(), j.at("memory").get<std::string>(), j.at("scheme").get<std::string>(),
            j.at("endpoint").get<std::string>()},
           j.at("repeat").get<int>()};
  u.seed = std::stoull(j.at("seed").get<std::string>(), nullptr, 16);
  u.size_bits = j.at("size_bits").get<std::int64_t>();
  if (j.contains("failure")) u.failure = j.at("failure").get<std::string>();
  for (const auto& r : j.at("items")) {
    ItemRecord rec;
    rec.task = r.at("task").get<std::string>();
    rec.category = parse_category(r.at("category").get<std::string>());
    rec.degenerate = r.at("degenerate").get<bool>();
    if (!r.at("chosen").is_null()) rec.chosen = r.at("chosen").get<std::string>()[0] - 'A';
    rec.correct = r.at("correct").get<bool>();
    rec.invalid = r.at("invalid").get<bool>();
    rec.reply_ref = r.at("reply_ref").get<std::string>();
    u.items.push_back(std::move(rec));
  }
  return u;
}

// ---------------------------------------------------------------------------
// Results store: one commit file per unit, written atomically.
// ---------------------------------------------------------------------------

class ResultsStore {
 public:
  explicit ResultsStore(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_ / "units", ec);
    fs::create_directories(root_ / "replies", ec);
    if (ec || !fs::is_directory(root_ / "units")) throw error("io", "cannot create results directory " + root_.string());
  }

  const fs::path& root() const { return root_; }
  fs::path unit_path(const std::string& stem) const { return root_ / "units" / (stem + ".json"); }
  fs::path reply_path(const std::string& stem) const { return root_ / "replies" / (stem + ".jsonl"); }

  std::optional<UnitResult> load(const std::string& stem, const UnitKey& key) const {
    const auto p = unit_path(stem);
    if (!fs::exists(p)) return std::nullopt;
    try {
      auto u = unit_from_json(ojson::parse(detail::read_text_file(p.string())));
      if (u.key == key) return u;
    } catch (const std::exception&) {
    }
    return std::nullopt;
  }

  static void write_atomic(const fs::path& path, const std::string& text) {
    const fs::path tmp = path.string() + ".tmp";
    detail::write_text_file(tmp.string(), text);
    fs::rename(tmp, path);
  }

  void commit(const std::string& stem, const UnitResult& u) const {
    write_atomic(unit_path(stem), unit_to_json(u).dump() + "\n");
  }

  std::vector<UnitResult> load_all() const {
    std::vector<UnitResult> out;
    for (const auto& f : fs::directory_iterator(root_ / "units"))
      if (f.path().extension() == ".json") out.push_back(unit_from_json(ojson::parse(detail::read_text_file(f.path().string()))));
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
    return out;
  }

 private:
  fs::path root_;
};

// ---------------------------------------------------------------------------
// Worker pool
// ---------------------------------------------------------------------------

template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const int n = std::max(1, std::min<int>(workers, static_cast<int>(count)));
    for (int w = 1; w < n; ++w) pool.emplace_back(work);
    work();
  }
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// Running the matrix
// ---------------------------------------------------------------------------

struct RunStats {
  std::size_t units = 0;
  std::size_t resumed = 0;
  std::size_t endpoint_calls = 0;
};

struct CityData {
  std::string path;
  std::optional<GridMap> map;
  std::string load_error;
  std::vector<TaskItem> tasks;
};

inline std::vector<UnitKey> matrix_units(const ExperimentConfig& c, const std::vector<CityData>& cities) {
  std::vector<UnitKey> units;
  for (const auto& city : cities)
    for (const auto& st : c.strategies)
      for (const auto& me : c.memories)
        for (const auto& sc : c.schemes)
          for (const auto& ep : c.endpoints)
            for (int r = 0; r < c.repeats; ++r)
              units.push_back({city.map ? city.map->city_name : city.path, {st, me, sc, ep.name}, r});
  return units;
}

inline std::vector<CityData> load_cities(const ExperimentConfig& c) {
  std::vector<CityData> cities(c.cities.size());
  parallel_for(cities.size(), c.workers, [&](std::size_t i) {
    cities[i].path = c.cities[i];
    try {
      GridMap m = load_map(c.cities[i]);
      if (m.city_name.empty()) m.city_name = fs::path(c.cities[i]).stem().string();
      cities[i].tasks = generate_tasks(m, task_seed(c.seed, m.city_name), c.tasks);
      cities[i].map = std::move(m);
    } catch (const std::exception& e) {
      cities[i].load_error = e.what();
    }
  });
  return cities;
}

inline std::vector<UnitResult> run_matrix(const ExperimentConfig& c, const fs::path& run_dir, RunStats* stats = nullptr) {
  c.check();
  ResultsStore store(run_dir);
  const auto cities = load_cities(c);
  std::map<std::string, const CityData*> by_name;
  for (const auto& city : cities) by_name[city.map ? city.map->city_name : city.path] = &city;

  std::map<std::string, std::unique_ptr<Endpoint>> endpoints;
  for (const auto& spec : c.endpoints) {
    EndpointSpec s = spec;
    s.seed = derive_seed(c.seed, "endpoint|" + spec.name);
    endpoints[spec.name] = make_endpoint(s);
  }

  const auto keys = matrix_units(c, cities);
  std::vector<UnitResult> results(keys.size());
  std::vector<std::size_t> todo;
  RunStats local;
  local.units = keys.size();
  for (std::size_t i = 0; i < keys.size(); ++i) {
    results[i].key = keys[i];
    results[i].seed = unit_seed(c.seed, keys[i]);
    if (auto done = store.load(unit_file_stem(results[i]), keys[i])) {
      results[i] = std::move(*done);
      ++local.resumed;
    } else {
      todo.push_back(i);
    }
  }

  // Traces shared by every unit with the same (city, strategy, repeat).
  std::map<std::tuple<std::string, std::string, int>, std::optional<ExplorationTrace>> traces;
  for (std::size_t i : todo) {
    const auto& k = results[i].key;
    if (by_name.at(k.city)->map) traces[{k.city, k.cell.strategy, k.repeat}];
  }
  std::vector<decltype(traces)::iterator> trace_slots;
  for (auto it = traces.begin(); it != traces.end(); ++it) trace_slots.push_back(it);
  parallel_for(trace_slots.size(), c.workers, [&](std::size_t i) {
    const auto& [city, strategy, repeat] = trace_slots[i]->first;
    EpisodeConfig ec;
    ec.strategy = parse_strategy(strategy);
    ec.n = c.n;
    ec.radius = c.radius;
    ec.seed = episode_seed(c.seed, city, strategy, c.n, repeat);
    trace_slots[i]->second = run_episode(*by_name.at(city)->map, ec);
  });

  std::atomic<std::size_t> calls{0};
  parallel_for(todo.size(), c.workers, [&](std::size_t t) {
    UnitResult& u = results[todo[t]];
    const std::string stem = unit_file_stem(u);
    const CityData& city = *by_name.at(u.key.city);
    if (!city.map) {
      u.failure = "map-load: " + city.load_error;
      store.commit(stem, u);
      return;
    }
    const auto& trace = *traces.at({u.key.city, u.key.cell.strategy, u.key.repeat});
    const MemoryBundle bundle = build_bundle(trace, parse_memory_kind(u.key.cell.memory));
    u.size_bits = bundle.size_bits;
    Scheme scheme = c.scheme_defaults;
    scheme.kind = parse_scheme(u.key.cell.scheme).kind;
    Endpoint& ep = *endpoints.at(u.key.cell.endpoint);

    std::string replies;
    int line = 0;
    for (const auto& task : city.tasks) {
      ItemRecord rec;
      rec.task = task.id;
      rec.category = task.category;
      rec.degenerate = task.meta.degenerate;
      if (!task.meta.degenerate) {
        const auto out = run_scheme(ep, bundle, task, scheme, {u.key.text() + "|" + task.id, task.correct});
        calls += out.calls.size();
        bool failed = false;
        for (const auto& call : out.calls) {
          ojson j = call_record_to_json(call);
          j["task"] = task.id;
          if (scheme.kind == SchemeKind::ToT && call.stage == Stage::candidates) {
            j["plans"] = out.plans;
            j["chosen_plan"] = out.chosen_plan;
            j["plan_fallback"] = out.plan_fallback;
            j["candidates"] = out.candidates;
          }
          replies += j.dump() + "\n";
          failed = failed || call.failure.has_value();
        }
        rec.reply_ref = "replies/" + stem + ".jsonl#" + std::to_string(line + 1);
        line += static_cast<int>(out.calls.size());
        rec.chosen = out.answer;
        rec.invalid = !out.answer || failed;
        rec.correct = !rec.invalid && *out.answer == task.correct;
      }
      u.items.push_back(std::move(rec));
    }
    ResultsStore::write_atomic(store.reply_path(stem), replies);
    store.commit(stem, u);
  });
  local.endpoint_calls = calls;
  if (stats) *stats = local;
  return results;
}

// ---------------------------------------------------------------------------
// Aggregation and reports
// ---------------------------------------------------------------------------

struct Tally {
  int correct = 0;
  int scoreable = 0;
  int degenerate = 0;
  int invalid = 0;
  std::optional<double> accuracy() const {
    if (scoreable == 0) return std::nullopt;
    return static_cast<double>(correct) / scoreable;
  }
};

struct CellSummary {
  CellKey key;
  std::array<Tally, 5> categories;
  Tally total;
  double mean_size_bits = 0;
  int units = 0;
  int failed_units = 0;
};

inline std::vector<CellSummary> aggregate(const std::vector<UnitResult>& results) {
  std::map<CellKey, CellSummary> cells;
  std::map<CellKey, double> size_sum;
  for (const auto& u : results) {
    auto& c = cells[u.key.cell];
    c.key = u.key.cell;
    ++c.units;
    if (u.failure) {
      ++c.failed_units;
      continue;
    }
    size_sum[u.key.cell] += static_cast<double>(u.size_bits);
    for (const auto& r : u.items) {
      auto& cat = c.categories[static_cast<std::size_t>(r.category)];
      for (Tally* t : {&cat, &c.total}) {
        if (r.degenerate) {
          ++t->degenerate;
          continue;
        }
        ++t->scoreable;
        t->correct += r.correct ? 1 : 0;
        t->invalid += r.invalid ? 1 : 0;
      }
    }
  }
  std::vector<CellSummary> out;
  for (auto& [k, c] : cells) {
    const int ok_units = c.units - c.failed_units;
    c.mean_size_bits = ok_units ? size_sum[k] / ok_units : 0;
    out.push_back(c);
  }
  return out;
}

inline std::string format_accuracy(std::optional<double> v) {
  if (!v) return "NA";
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, *v);
  return std::string(buf, end);
}

inline std::string format_percent(std::optional<double> v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", *v * 100.0);
  return buf;
}

inline constexpr std::string_view cells_csv_header = "strategy,memory,scheme,endpoint,DJ,DS,PJ,PDR,PP,total";

inline std::string cells_csv(const std::vector<CellSummary>& cells) {
  std::string out = std::string(cells_csv_header) + "\n";
  for (const auto& c : cells) {
    out += c.key.strategy + "," + c.key.memory + "," + c.key.scheme + "," + c.key.endpoint;
    for (const auto& cat : c.categories) out += "," + format_accuracy(cat.accuracy());
    out += "," + format_accuracy(c.total.accuracy()) + "\n";
  }
  return out;
}

struct CsvRow {
  CellKey key;
  std::array<std::optional<double>, 6> values;  // five categories then total
};

inline std::vector<CsvRow> parse_cells_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (line != cells_csv_header) throw error("bad-csv", "unexpected header: " + line);
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string x; std::getline(ls, x, ',');) f.push_back(x);
    if (f.size() != 10) throw error("bad-csv", "expected 10 fields: " + line);
    CsvRow r{{f[0], f[1], f[2], f[3]}, {}};
    for (std::size_t i = 0; i < 6; ++i) {
      if (f[4 + i] == "NA") continue;
      double v = 0;
      const auto res = std::from_chars(f[4 + i].data(), f[4 + i].data() + f[4 + i].size(), v);
      if (res.ec != std::errc{}) throw error("bad-csv", "not a number: " + f[4 + i]);
      r.values[i] = v;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::string items_jsonl(const std::vector<UnitResult>& results) {
  std::string out;
  for (const auto& u : results) {
    if (u.failure) {
      ojson j{{"city", u.key.city}, {"strategy", u.key.cell.strategy}, {"memory", u.key.cell.memory},
              {"scheme", u.key.cell.scheme}, {"endpoint", u.key.cell.endpoint}, {"repeat", u.key.repeat},
              {"failure", *u.failure}};
      out += j.dump() + "\n";
      continue;
    }
    for (const auto& r : u.items) out += item_record_to_json(u.key, r).dump() + "\n";
  }
  return out;
}

// One row per memory kind and endpoint.
inline std::string memsize_csv(const std::vector<CellSummary>& cells) {
  std::string out = "memory,strategy,scheme,endpoint,size_bits,total\n";
  for (const auto& c : cells) {
    char size[32];
    std::snprintf(size, sizeof size, "%.1f", c.mean_size_bits);
    out += c.key.memory + "," + c.key.strategy + "," + c.key.scheme + "," + c.key.endpoint + "," + size + "," +
           format_accuracy(c.total.accuracy()) + "\n";
  }
  return out;
}

inline std::string summary_markdown(const std::vector<CellSummary>& cells, const std::string& run_id) {
  std::string out = "# Results: " + run_id + "\n\n";
  std::map<std::string, std::vector<const CellSummary*>> by_endpoint;
  for (const auto& c : cells) by_endpoint[c.key.endpoint].push_back(&c);
  for (const auto& [endpoint, list] : by_endpoint) {
    out += "## Endpoint `" + endpoint + "`\n\n| Category |";
    for (const auto* c : list) out += " " + c->key.strategy + " / " + c->key.memory + " / " + c->key.scheme + " |";
    out += "\n|---|";
    for (std::size_t i = 0; i < list.size(); ++i) out += "---|";
    out += "\n";
    for (std::size_t k = 0; k < 5; ++k) {
      out += "| " + std::string(category_name(all_categories[k])) + " |";
      for (const auto* c : list) out += " " + format_percent(c->categories[k].accuracy()) + " |";
      out += "\n";
    }
    out += "| Total |";
    for (const auto* c : list) out += " " + format_percent(c->total.accuracy()) + " |";
    out += "\n| Scored items |";
    for (const auto* c : list) out += " " + std::to_string(c->total.scoreable) + " |";
    out += "\n| Degenerate items |";
    for (const auto* c : list) out += " " + std::to_string(c->total.degenerate) + " |";
    out += "\n| Invalid replies |";
    for (const auto* c : list) out += " " + std::to_string(c->total.invalid) + " |";
    out += "\n| Memory size (bits) |";
    for (const auto* c : list) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.1f", c->mean_size_bits);
      out += std::string(" ") + buf + " |";
    }
    out += "\n";
    bool failures = false;
    for (const auto* c : list) failures = failures || c->failed_units > 0;
    if (failures) {
      out += "| Failed city runs |";
      for (const auto* c : list) out += " " + std::to_string(c->failed_units) + " |";
      out += "\n";
    }
    out += "\n";
  }
  return out;
}

inline void emit_reports(const std::vector<UnitResult>& results, const fs::path& run_dir, const std::string& run_id) {
  std::error_code ec;
  fs::create_directories(run_dir, ec);
  auto sorted = results;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
  const auto cells = aggregate(sorted);
  ResultsStore::write_atomic(run_dir / "cells.csv", cells_csv(cells));
  ResultsStore::write_atomic(run_dir / "items.jsonl", items_jsonl(sorted));
  ResultsStore::write_atomic(run_dir / "memsize.csv", memsize_csv(cells));
  ResultsStore::write_atomic(run_dir / "summary.md", summary_markdown(cells, run_id));
}

}  // namespace mapmind

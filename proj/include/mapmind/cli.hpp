#pragma once

#include <iostream>

#include <CLI11.hpp>

#include "mapmind/harness.hpp"
#include "mapmind/validate.hpp"

namespace mapmind {

namespace detail {

inline void emit_or_write(const std::string& out_path, const std::string& text, std::ostream& out) {
  if (out_path.empty() || out_path == "-") out << text;
  else detail::write_text_file(out_path, text);
}

inline std::string error_json(std::string_view code, std::string_view message) {
  return ojson{{"error", code}, {"message", message}}.dump();
}

// Defaults shared by the single-step subcommands, optionally read from a
// config file's top-level seed, n and radius.
struct CommonFlags {
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string config;
  std::string out;
};

inline std::optional<toml::table> read_toml(const std::string& path) {
  if (path.empty()) return std::nullopt;
  try {
    return toml::parse(detail::read_text_file(path));
  } catch (const toml::parse_error& e) {
    throw error("bad-config", std::string(e.description()));
  }
}

}  // namespace detail

inline int cli_dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
  CLI::App app{"Spatial memory and reasoning benchmark on grid city maps", "mapmind"};
  app.require_subcommand(1);
  detail::CommonFlags common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "Master seed");
    sub->add_option("--config", common.config, "TOML config file");
    sub->add_option("--out", common.out, "Output path");
  };

  std::string input, city, catalog_path, strategy = "NPS", memory = "NSM", manifest_path, trace_ref;
  int width = 20, height = 20, n = 0, radius = 0, workers = 0;

  auto* ingest_cmd = app.add_subcommand("ingest", "Rasterize a vector city into a map file");
  ingest_cmd->add_option("input", input, "Vector source JSON")->required();
  ingest_cmd->add_option("--city", city, "City name stored in the map");
  ingest_cmd->add_option("--width", width, "Grid width");
  ingest_cmd->add_option("--height", height, "Grid height");
  add_common(ingest_cmd);

  auto* validate_cmd = app.add_subcommand("validate", "Check map invariants");
  validate_cmd->add_option("input", input, "Map JSON")->required();
  validate_cmd->add_option("--catalog", catalog_path, "Catalog CSV to compare counts against");
  add_common(validate_cmd);

  auto* explore_cmd = app.add_subcommand("explore", "Run one exploration episode");
  explore_cmd->add_option("input", input, "Map JSON")->required();
  explore_cmd->add_option("--strategy", strategy, "NPS, RVS or TDS");
  explore_cmd->add_option("--n", n, "Visits required per POI");
  explore_cmd->add_option("--radius", radius, "Observation radius");
  add_common(explore_cmd);

  auto* memorize_cmd = app.add_subcommand("memorize", "Build a memory bundle from a trace");
  memorize_cmd->add_option("input", input, "Trace JSONL")->required();
  memorize_cmd->add_option("--memory", memory, "SDM, NSM, GM, MM, NSM+SDM, GM+SDM or MM+SDM");
  memorize_cmd->add_option("--manifest", manifest_path, "Write the bundle manifest JSON here");
  add_common(memorize_cmd);

  auto* tasks_cmd = app.add_subcommand("tasks", "Generate the task file for a map");
  tasks_cmd->add_option("input", input, "Map JSON")->required();
  add_common(tasks_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "Run an experiment matrix");
  eval_cmd->add_option("--workers", workers, "Worker threads");
  add_common(eval_cmd);

  auto* report_cmd = app.add_subcommand("report", "Rebuild reports from a results directory");
  report_cmd->add_option("input", input, "results/<run-id> directory")->required();
  add_common(report_cmd);

  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << detail::error_json("usage", e.what()) << "\n";
    return 2;
  }
  for (auto* sub : app.get_subcommands())
    common.seed_given = sub->count("--seed") > 0;

  try {
    const auto cfg = detail::read_toml(common.config);
    auto cfg_int = [&](const char* key, int fallback) { return cfg ? (*cfg)[key].value_or(fallback) : fallback; };
    std::uint64_t seed = common.seed;
    if (!common.seed_given && cfg) seed = static_cast<std::uint64_t>((*cfg)["seed"].value_or<std::int64_t>(0));

    if (ingest_cmd->parsed()) {
      auto src = vector_source_from_json(detail::read_text_file(input));
      if (!city.empty()) src.city = city;
      GridMap map = ingest(src, width, height);
      if (map.city_name.empty()) map.city_name = fs::path(input).stem().string();
      detail::emit_or_write(common.out, map_to_json(map), out);
      return 0;
    }
    if (validate_cmd->parsed()) {
      const GridMap map = load_map(input);
      const auto report = validate_map(map);
      ojson j{{"map", input}, {"ok", report.ok()}};
      ojson v = ojson::array();
      for (const auto& x : report.violations) v.push_back({{"rule", x.rule}, {"detail", x.detail}});
      j["violations"] = v;
      bool ok = report.ok();
      if (!catalog_path.empty()) {
        const auto entries = catalog_from_csv(detail::read_text_file(catalog_path));
        const auto entry = find_catalog_entry(entries, map.city_name);
        if (!entry) throw error("unknown-city", map.city_name + " is not in " + catalog_path);
        const auto c = check_catalog(map, *entry);
        j["catalog"] = {{"poi_count", c.poi_count},
                        {"intersection_count", c.intersection_count},
                        {"main_road_count", c.main_road_count},
                        {"ok", c.ok()}};
        ok = ok && c.ok();
      }
      detail::emit_or_write(common.out, j.dump(2) + "\n", out);
      return ok ? 0 : 1;
    }
    if (explore_cmd->parsed()) {
      const GridMap map = load_map(input);
      EpisodeConfig ec;
      ec.strategy = parse_strategy(strategy);
      ec.n = n > 0 ? n : cfg_int("n", 1);
      ec.radius = radius > 0 ? radius : cfg_int("radius", 2);
      ec.seed = seed;
      detail::emit_or_write(common.out, trace_to_jsonl(run_episode(map, ec)), out);
      return 0;
    }
    if (memorize_cmd->parsed()) {
      const auto trace = trace_from_jsonl(detail::read_text_file(input));
      const auto bundle = build_bundle(trace, parse_memory_kind(memory));
      detail::emit_or_write(common.out, bundle.serialized, out);
      if (!manifest_path.empty()) detail::write_text_file(manifest_path, bundle_manifest(bundle, input));
      return 0;
    }
    if (tasks_cmd->parsed()) {
      GridMap map = load_map(input);
      if (map.city_name.empty()) map.city_name = fs::path(input).stem().string();
      detail::emit_or_write(common.out, tasks_to_json(generate_tasks(map, task_seed(seed, map.city_name))), out);
      return 0;
    }
    if (eval_cmd->parsed()) {
      if (common.config.empty()) throw error("usage", "eval needs --config");
      ExperimentConfig c = load_config(common.config);
      if (common.seed_given) c.seed = common.seed;
      if (workers > 0) c.workers = workers;
      const fs::path run_dir = fs::path(common.out.empty() ? "results" : common.out) / c.run_id;
      RunStats stats;
      const auto results = run_matrix(c, run_dir, &stats);
      emit_reports(results, run_dir, c.run_id);
      out << ojson{{"run_dir", run_dir.string()},
                   {"units", stats.units},
                   {"resumed", stats.resumed},
                   {"endpoint_calls", stats.endpoint_calls}}
                 .dump()
          << "\n";
      return 0;
    }
    if (report_cmd->parsed()) {
      const ResultsStore store(input);
      const fs::path dest = common.out.empty() ? fs::path(input) : fs::path(common.out);
      fs::path run = fs::path(input).lexically_normal();
      if (run.filename().empty()) run = run.parent_path();  // trailing slash
      emit_reports(store.load_all(), dest, run.filename().string());
      out << detail::read_text_file((dest / "summary.md").string());
      return 0;
    }
  } catch (const error& e) {
    err << detail::error_json(e.code(), e.what()) << "\n";
    return e.code() == "usage" ? 2 : 1;
  } catch (const std::exception& e) {
    err << detail::error_json("internal", e.what()) << "\n";
    return 1;
  }
  return 2;
}

}  // namespace mapmind

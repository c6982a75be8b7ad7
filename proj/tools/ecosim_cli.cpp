// ecosim: suite generation, map export, scenario runs and savings reports.
// Exit codes: 0 ok, 2 validation error, 3 runtime fault, 4 timeout.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ecosim/error.hpp"
#include "ecosim/harness.hpp"
#include "ecosim/mapgen.hpp"
#include "ecosim/text.hpp"

namespace fs = std::filesystem;
using namespace ecosim;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 2;
constexpr int kRuntime = 3;
constexpr int kTimeout = 4;

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::Timeout: return kTimeout;
    case ErrorCode::ComponentFault:
    case ErrorCode::BindFailure:
    case ErrorCode::SendFailure:
    case ErrorCode::PlanExpired:
    case ErrorCode::NeverReaches: return kRuntime;
    default: return kValidation;
  }
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorCode::InvalidConfig, "cannot read " + p.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f || !(f << text)) throw Error(ErrorCode::InvalidConfig, "cannot write " + p.string());
}

cycle::DriveCycle load_cycle(const fs::path& p) { return cycle::parse_cycle(read_file(p), p.stem().string()); }

// Trace prefix: accepts `x`, `x.csv` or `x.json`.
fs::path strip_trace_ext(fs::path p) {
  if (p.extension() == ".csv" || p.extension() == ".json") p.replace_extension();
  return p;
}

fs::path with_ext(const fs::path& prefix, const char* ext) { return fs::path(prefix.string() + ext); }

harness::RunTrace load_trace(const fs::path& prefix) {
  auto t = harness::parse_sidecar(read_file(with_ext(prefix, ".json")));
  t.rows = harness::parse_csv(read_file(with_ext(prefix, ".csv")));
  return t;
}

// Sidecars directly given, or every *.json inside a directory.
std::vector<harness::RunTrace> load_traces(const std::vector<std::string>& inputs) {
  std::vector<fs::path> prefixes;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in)) {
        if (e.path().extension() == ".json") found.push_back(strip_trace_ext(e.path()));
      }
      std::sort(found.begin(), found.end());
      prefixes.insert(prefixes.end(), found.begin(), found.end());
    } else {
      prefixes.push_back(strip_trace_ext(in));
    }
  }
  std::vector<harness::RunTrace> out;
  for (const auto& p : prefixes) out.push_back(load_trace(p));
  return out;
}

struct RunArgs {
  std::string cycle;
  std::string scenario;
  std::string strategy;
  std::string vehicle;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> timeout;
  std::string bus;
  bool baseline = false;
  bool no_traffic = false;
};

int cmd_gen_suite(std::uint64_t seed, const std::string& out, bool hill) {
  auto suite = harness::generate_suite(seed);
  if (hill) suite.push_back(harness::hill_cycle());
  for (const auto& c : suite) {
    const auto path = fs::path(out) / (c.id + ".csv");
    write_file(path, cycle::emit_cycle(c));
    const auto st = cycle::cycle_stats(c);
    std::printf("%-12s %9.1f m %3d lights %3d intersections  %s\n", c.id.c_str(), st.distance_m, st.n_traffic_lights,
                st.n_intersections, path.string().c_str());
  }
  return kOk;
}

int cmd_gen_maps(const std::vector<std::string>& cycles, const std::string& out, double tile, double lane) {
  int status = kOk;
  for (const auto& in : cycles) {
    const auto c = load_cycle(in);
    const auto em = mapgen::realize_geometry(c);
    const auto wp = mapgen::emit_waypoint_map(em, tile, lane);
    const auto rep = mapgen::check_consistency(em, wp);
    write_file(fs::path(out) / (c.id + ".edges"), mapgen::emit_edge_file(em));
    write_file(fs::path(out) / (c.id + ".waypoints"), mapgen::emit_waypoint_file(wp));
    std::printf("%-12s position error %.4f m  controller offset error %.4f m  %s\n", c.id.c_str(),
                rep.max_position_error, rep.max_controller_offset_error, rep.pass ? "ok" : "FAIL");
    if (!rep.pass) status = kValidation;
  }
  return status;
}

int cmd_run(const RunArgs& a) {
  const auto cyc = load_cycle(a.cycle);
  const std::string sc_text = a.scenario.empty() ? std::string(world::default_scenario_config_text()) : read_file(a.scenario);
  const std::string st_text = a.strategy.empty() ? std::string(eco::default_strategy_config_text()) : read_file(a.strategy);
  const std::string vh_text = a.vehicle.empty() ? std::string(vdpt::default_vehicle_config_text()) : read_file(a.vehicle);
  auto sc = world::parse_scenario_config(sc_text);
  if (a.seed) sc.seed = *a.seed;
  if (a.no_traffic) sc.traffic = false;
  auto strategy = eco::parse_strategy_config(st_text);
  if (a.baseline) strategy = harness::baseline_strategy(strategy);
  const auto vehicle = vdpt::load_vehicle_config(vh_text);

  harness::RunOptions opt;
  opt.timeout_s = a.timeout;
  if (a.bus == "udp") opt.bus = harness::BusMode::Udp;
  else if (a.bus == "lockstep") opt.bus = harness::BusMode::Lockstep;
  opt.strategy_label = a.baseline ? "baseline" : "eco";
  opt.config_hashes["scenario"] = harness::fingerprint(sc_text);
  opt.config_hashes["strategy"] = harness::fingerprint(st_text);
  opt.config_hashes["vehicle"] = harness::fingerprint(vh_text);

  const auto trace = harness::run_scenario(cyc, sc, strategy, vehicle, opt);
  const auto prefix = strip_trace_ext(a.out);
  write_file(with_ext(prefix, ".csv"), harness::export_csv(trace));
  write_file(with_ext(prefix, ".json"), harness::export_sidecar(trace));
  std::printf("%s seed %llu %s: %.3f g in %.2f s over %.1f m -> %s.csv\n", cyc.id.c_str(),
              static_cast<unsigned long long>(sc.seed), opt.strategy_label.c_str(), trace.fuel(), trace.time(),
              trace.final_arc(), prefix.string().c_str());
  return kOk;
}

int cmd_compare(const std::vector<std::string>& base, const std::vector<std::string>& eco, const std::string& json) {
  const auto report = harness::compare(load_traces(base), load_traces(eco));
  std::fputs(harness::format_report(report).c_str(), stdout);
  if (!json.empty()) write_file(json, harness::report_json(report));
  return kOk;
}

int cmd_report(const std::vector<std::string>& traces) {
  std::printf("%-12s %-8s %6s %10s %9s %9s %9s %6s  %s\n", "scenario", "strategy", "seed", "fuel_g", "time_s",
              "dist_m", "mean_mps", "stops", "mode share (baseline/approach/departure/cruise)");
  for (const auto& t : load_traces(traces)) {
    int stops = 0;
    bool moving = false;
    std::map<eco::PlanMode, std::size_t> modes;
    for (const auto& r : t.rows) {
      if (r.speed > 0.5) moving = true;
      if (moving && r.speed < 0.1) {
        ++stops;
        moving = false;
      }
      ++modes[r.mode];
    }
    const double n = std::max<std::size_t>(t.rows.size(), 1);
    auto share = [&](eco::PlanMode m) { return 100.0 * static_cast<double>(modes[m]) / n; };
    std::printf("%-12s %-8s %6llu %10.3f %9.2f %9.1f %9.2f %6d  %.0f/%.0f/%.0f/%.0f %%\n",
                t.header.scenario_id.c_str(), t.header.strategy.c_str(),
                static_cast<unsigned long long>(t.header.seed), t.fuel(), t.time(), t.final_arc(),
                t.time() > 0 ? t.final_arc() / t.time() : 0.0, stops, share(eco::PlanMode::Baseline),
                share(eco::PlanMode::EcoApproach), share(eco::PlanMode::EcoDeparture),
                share(eco::PlanMode::EcoCruise));
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ecosim: eco-driving co-simulation harness"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::string out = "cycles";
  bool hill = false;
  auto* gen_suite = app.add_subcommand("gen-suite", "Generate the 20-cycle short/long suite as cycle CSV files");
  gen_suite->add_option("--seed", seed, "Generator seed")->capture_default_str();
  gen_suite->add_option("--out", out, "Output directory")->capture_default_str();
  gen_suite->add_flag("--hill", hill, "Also write the 1.6 km hill_1600 cycle");

  std::vector<std::string> map_cycles;
  std::string map_out = "maps";
  double tile = mapgen::kDefaultTileLength;
  double lane = mapgen::kDefaultLaneWidth;
  auto* gen_maps = app.add_subcommand("gen-maps", "Build edge and waypoint maps for cycles and check consistency");
  gen_maps->add_option("cycles", map_cycles, "Cycle CSV files")->required()->check(CLI::ExistingFile);
  gen_maps->add_option("--out", map_out, "Output directory")->capture_default_str();
  gen_maps->add_option("--tile", tile, "Waypoint tile length (m)")->capture_default_str();
  gen_maps->add_option("--lane-width", lane, "Lane width (m)")->capture_default_str();

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Run one cycle end to end and write <out>.csv and <out>.json");
  run->add_option("--cycle", ra.cycle, "Cycle CSV file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", ra.out, "Trace path prefix")->required();
  run->add_option("--scenario", ra.scenario, "Scenario config (default: built-in)")->check(CLI::ExistingFile);
  run->add_option("--strategy", ra.strategy, "Strategy config (default: built-in)")->check(CLI::ExistingFile);
  run->add_option("--vehicle", ra.vehicle, "Vehicle config (default: built-in)")->check(CLI::ExistingFile);
  run->add_option("--seed", ra.seed, "Override the scenario seed");
  run->add_option("--timeout", ra.timeout, "Run timeout in simulated seconds (default: 3x free-flow time)");
  run->add_option("--bus", ra.bus, "Transport: lockstep or udp (default: ECOSIM_BUS_MODE, else lockstep)")
      ->check(CLI::IsMember({"lockstep", "udp"}));
  run->add_flag("--baseline", ra.baseline, "Disable all eco strategies");
  run->add_flag("--no-traffic", ra.no_traffic, "Disable surrounding traffic");

  std::vector<std::string> cmp_base, cmp_eco;
  std::string cmp_json;
  auto* cmp = app.add_subcommand("compare", "Pair baseline and eco traces and report fuel savings");
  cmp->add_option("--baseline", cmp_base, "Baseline trace sidecars or directories")->required();
  cmp->add_option("--eco", cmp_eco, "Eco trace sidecars or directories")->required();
  cmp->add_option("--json", cmp_json, "Also write the report as JSON");

  std::vector<std::string> rep_traces;
  auto* rep = app.add_subcommand("report", "Summarize trace metrics: fuel, time, distance, stops, mode shares");
  rep->add_option("traces", rep_traces, "Trace sidecars or directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }

  try {
    if (*gen_suite) return cmd_gen_suite(seed, out, hill);
    if (*gen_maps) return cmd_gen_maps(map_cycles, map_out, tile, lane);
    if (*run) return cmd_run(ra);
    if (*cmp) return cmd_compare(cmp_base, cmp_eco, cmp_json);
    if (*rep) return cmd_report(rep_traces);
  } catch (const Error& e) {
    std::fprintf(stderr, "ecosim: %s\n", e.what());
    return exit_code(e.code());
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "ecosim: %s\n", e.what());
    return kValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ecosim: %s\n", e.what());
    return kRuntime;
  }
  return kOk;
}

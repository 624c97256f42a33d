// ebus: validate scenarios, run controller comparisons, solve single MPC
// problems and re-aggregate experiment directories.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 at least one
// episode aborted, 3 internal invariant violation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ebus/config.hpp"
#include "ebus/controllers.hpp"
#include "ebus/experiment.hpp"
#include "ebus/initial_state.hpp"
#include "ebus/milp_builder.hpp"
#include "ebus/snapshot_io.hpp"

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kAborts = 2, kInternal = 3 };

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, sep))
    if (!part.empty()) out.push_back(part);
  return out;
}

int cmd_validate(const std::string& config, const std::vector<std::string>& overrides) {
  const ebus::Scenario s = ebus::load_scenario(config, overrides);
  const ebus::NetworkConfig& net = s.network;
  const ebus::Params& p = net.params;
  std::printf("ok: %zu lines, %d buses, %d charger(s)\n", net.lines.size(), net.total_buses(), net.charger_count);
  for (const ebus::LineSpec& line : net.lines) {
    double tmin = 0.0, tmax = 0.0;
    for (const auto& k : line.links) {
      tmin += k.t_min_s;
      tmax += k.t_max_s;
    }
    std::printf("  line %d: %d stops, %d buses, headway %.0f s, loop %.0f..%.0f s at min/max travel\n", line.id,
                line.stop_count(), line.bus_count, line.headway_s, tmin, tmax);
  }
  std::printf("  horizon %.0f s, day %.0f s, control every %.0f s, warmup %.0f s\n", p.horizon_s, p.sim_length_s,
              p.control_interval_s, p.warmup_s);
  // Building the initial world also checks that the even spacing is feasible.
  const ebus::WorldSnapshot w = ebus::initial_world(net);
  const ebus::HorizonSet h = ebus::build_horizons(net, w);
  const ebus::BuiltProblem b = ebus::build_problem(h, w, net);
  std::printf("  initial MILP: %d columns, %d rows, %d binaries\n", b.problem.num_columns(), b.problem.num_rows(),
              b.problem.num_binaries());
  return kOk;
}

int cmd_run(ebus::ExperimentSpec spec, bool quiet) {
  const ebus::ExperimentResult r = ebus::run_experiment(spec, [&](const ebus::EpisodeSummary& s, const ebus::EpisodeTiming& t) {
    if (quiet) return;
    std::fprintf(stderr, "%s seed %llu: total %.2f EUR%s (%.1f s)\n", s.controller.c_str(),
                 static_cast<unsigned long long>(s.seed), s.costs.total(), s.aborted ? " ABORTED" : "", t.wall_s);
  });
  std::cout << ebus::report_text(r.report);
  for (const auto& m : r.error_messages) std::fprintf(stderr, "error: %s\n", m.c_str());
  long violations = 0, aborts = 0;
  for (const auto& e : r.report.episodes) {
    violations += static_cast<long>(e.violations.size());
    if (e.aborted) ++aborts;
  }
  if (r.errors > 0 || violations > 0) return kInternal;
  if (aborts > 0) return kAborts;
  return kOk;
}

int cmd_solve(const std::string& config, const std::vector<std::string>& overrides, const std::string& snapshot_path,
              const std::string& plan_path, const std::string& mps_path) {
  const ebus::Scenario s = ebus::load_scenario(config, overrides);
  const ebus::WorldSnapshot world = snapshot_path.empty()
                                        ? ebus::initial_world(s.network)
                                        : ebus::snapshot_from_json(ebus::read_json_file(snapshot_path), s.network);
  if (!mps_path.empty()) {
    const ebus::BuiltProblem b = ebus::build_problem(ebus::build_horizons(s.network, world), world, s.network);
    std::ofstream out(mps_path);
    if (!out) throw ebus::InputError("cannot write " + mps_path);
    ebus::write_mps(out, b.problem);
  }
  const ebus::MpcStep step = ebus::mpc_step(world, s.network, s.mpc);
  const ebus::MpcStepStats& st = step.stats;
  std::printf("t=%.1f columns %d rows %d binaries %d\n", st.time_s, st.columns, st.rows, st.binaries);
  std::printf("objective %.6f (service %.4f, charging %.4f, end %.4f) gap %.3g nodes %ld%s lp iterations %ld\n",
              st.objective, st.planned_service, st.planned_charging, st.planned_end, st.gap, st.nodes,
              st.node_limit ? " (node limit)" : "", st.lp_iterations);
  ebus::Json plan = ebus::Json::array();
  for (const ebus::BusPlan& bp : step.plan.buses) {
    ebus::Json j;
    j["line"] = s.network.lines[bp.line].id;
    j["bus"] = bp.bus;
    j["soc_end"] = bp.soc_end;
    j["visits"] = ebus::Json::array();
    for (const ebus::PlannedVisit& v : bp.visits) {
      ebus::Json jv = {{"visit", v.visit}, {"stop", v.stop}, {"arrival_s", v.arrival_s}};
      if (v.has_tau) jv["tau_s"] = v.tau_s;
      if (v.is_terminal) {
        jv["hold_s"] = v.hold_s;
        jv["charge_s"] = v.charge_s;
        if (v.charge) jv["charge_start_s"] = v.charge_start_s;
        jv["departure_s"] = v.departure_s;
      }
      j["visits"].push_back(std::move(jv));
    }
    plan.push_back(std::move(j));
  }
  if (!plan_path.empty()) {
    ebus::write_file_atomic(plan_path, plan.dump(2) + "\n");
  }
  for (const ebus::BusPlan& bp : step.plan.buses) {
    for (const ebus::PlannedVisit& v : bp.visits) {
      if (!v.charge) continue;
      std::printf("  line %d bus %d visit %lld: charge %.1f s from %.1f\n", s.network.lines[bp.line].id, bp.bus,
                  static_cast<long long>(v.visit), v.charge_s, v.charge_start_s);
    }
  }
  return kOk;
}

int cmd_report(const std::string& dir) {
  const ebus::ExperimentResult r = ebus::reaggregate(dir);
  std::cout << ebus::report_text(r.report);
  long violations = 0, aborts = 0;
  for (const auto& e : r.report.episodes) {
    violations += static_cast<long>(e.violations.size());
    if (e.aborted) ++aborts;
  }
  if (violations > 0) return kInternal;
  if (aborts > 0) return kAborts;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Electric bus charging and speed/holding control: MPC vs first-come-first-served"};
  app.require_subcommand(1);

  std::string config;
  std::vector<std::string> overrides;

  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("config", config, "Scenario JSON file")->required();
  validate->add_option("-o,--override", overrides, "path=value, e.g. params.horizon_s=1800");

  ebus::ExperimentSpec spec;
  std::string controllers = "mpc,fcfs";
  std::string seeds;
  std::uint64_t base_seed = 1;
  int reps = 0;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run episodes for each controller and seed, then write the report");
  run->add_option("config", spec.config_path, "Scenario JSON file")->required();
  run->add_option("--out", spec.output_dir, "Output directory")->required();
  run->add_option("--controllers", controllers, "Comma-separated: mpc, fcfs")->capture_default_str();
  run->add_option("--seeds", seeds, "Comma-separated seed list");
  run->add_option("--base-seed", base_seed, "First seed when using --reps")->capture_default_str();
  run->add_option("--reps", reps, "Number of consecutive seeds starting at --base-seed");
  run->add_option("-j,--workers", spec.workers, "Episodes run in parallel")->capture_default_str();
  run->add_option("-o,--override", spec.overrides, "path=value, e.g. params.horizon_s=1800");
  run->add_option("--snapshot-at", spec.snapshot_times, "Export the world state at these times (s)");
  run->add_flag("-q,--quiet", quiet, "No per-episode progress on stderr");

  std::string snapshot, plan_out, mps_out;
  auto* solve = app.add_subcommand("solve", "Solve one MPC problem and print the plan");
  solve->add_option("config", config, "Scenario JSON file")->required();
  solve->add_option("--snapshot", snapshot, "World snapshot JSON (default: the initial state)");
  solve->add_option("--plan", plan_out, "Write the plan as JSON");
  solve->add_option("--mps", mps_out, "Write the MILP in MPS format");
  solve->add_option("-o,--override", overrides, "path=value, e.g. mpc.node_limit=100");

  std::string dir;
  auto* report = app.add_subcommand("report", "Rebuild the report of an experiment directory from its exports");
  report->add_option("dir", dir, "Directory written by `run`")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*validate) return cmd_validate(config, overrides);
    if (*run) {
      spec.controllers.clear();
      for (const std::string& c : split(controllers, ',')) spec.controllers.push_back(ebus::parse_controller(c));
      if (!seeds.empty() && reps > 0) throw ebus::InputError("use either --seeds or --reps, not both");
      if (!seeds.empty()) {
        for (const std::string& s : split(seeds, ',')) {
          try {
            spec.seeds.push_back(std::stoull(s));
          } catch (const std::exception&) {
            throw ebus::InputError("--seeds: '" + s + "' is not a seed");
          }
        }
      } else {
        spec.seeds = ebus::seed_range(base_seed, reps > 0 ? reps : 1);
      }
      return cmd_run(spec, quiet);
    }
    if (*solve) return cmd_solve(config, overrides, snapshot, plan_out, mps_out);
    if (*report) return cmd_report(dir);
  } catch (const ebus::InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const ebus::InternalError& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kInternal;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kInternal;
  }
  return kUsage;
}

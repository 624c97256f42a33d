#pragma once

// The two control policies the simulator can run: the receding-horizon MILP
// controller and the reactive first-come-first-served baseline.

#include <algorithm>
#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "ebus/branch_and_bound.hpp"
#include "ebus/core_model.hpp"
#include "ebus/horizon.hpp"
#include "ebus/milp_builder.hpp"

namespace ebus {

// Immediate commands for one bus.
struct ControllerDecision {
  double travel_s = 0.0;   // link about to be entered
  double hold_s = 0.0;     // terminal: total hold from arrival before charging or departure
  bool charge = false;
  double charge_s = 0.0;
};

// ---------------------------------------------------------------------------
// First come, first served

// Travel time that lands closest to one headway behind the predecessor at the
// next stop.
inline double fcfs_travel_time(const LinkSpec& link, double departure_s, double pred_next_arrival_s,
                               double headway_s) {
  return std::clamp(pred_next_arrival_s + headway_s - departure_s, link.t_min_s, link.t_max_s);
}

// Charge to the current SoC target, at least to the departure floor, never
// beyond a full battery.
inline double fcfs_charge_time(double soc, double charge_start_s, const Params& p, double soc_min) {
  const double target = std::max(sigma_bar(charge_start_s, p, soc_min), soc_min);
  return std::min(charge_time_to(soc, target, p), charge_time_to(soc, 1.0, p));
}

inline double fcfs_dispatch_time(double ready_s, double pred_departure_s, double headway_s) {
  return std::max(ready_s, pred_departure_s + headway_s);
}

// Everything the baseline looks at when a bus reaches a decision point.
struct FcfsContext {
  int line = 0;
  int stop = 0;                       // stop the bus is at
  double now_s = 0.0;
  double soc = 1.0;
  double ready_s = 0.0;               // boarding done
  double pred_departure_s = 0.0;      // predecessor's departure from this stop's visit (terminal)
  double pred_next_arrival_s = 0.0;   // recorded or predicted arrival of the predecessor at the next stop
  double charger_free_s = 0.0;        // earliest time the charger is free
};

inline ControllerDecision fcfs_step(const FcfsContext& ctx, const NetworkConfig& net) {
  const LineSpec& line = net.lines[ctx.line];
  const Params& p = net.params;
  ControllerDecision d;
  double departure = ctx.ready_s;
  if (ctx.stop == 0) {
    const double start = std::max(ctx.ready_s + p.charger_setup_s, ctx.charger_free_s);
    d.charge_s = fcfs_charge_time(ctx.soc, start, p, line.soc_min);
    d.charge = d.charge_s > 0.0;
    const double ready = d.charge ? start + d.charge_s + p.charger_setup_s : ctx.ready_s;
    departure = fcfs_dispatch_time(ready, ctx.pred_departure_s, line.headway_s);
    d.hold_s = departure - ctx.now_s;
  }
  d.travel_s = fcfs_travel_time(line.links[ctx.stop], departure, ctx.pred_next_arrival_s, line.headway_s);
  return d;
}

// ---------------------------------------------------------------------------
// Receding-horizon MILP

struct MpcSettings {
  long node_limit = 200000;
  double relative_gap = 1e-6;
  long rounding_interval = 0;
  int local_search_passes = 0;  // one-flip improvement rounds on the root incumbent
};

struct MpcStepStats {
  double time_s = 0.0;
  int columns = 0;
  int rows = 0;
  int binaries = 0;
  long nodes = 0;
  long lp_iterations = 0;
  double objective = 0.0;
  double gap = 0.0;
  double solve_s = 0.0;
  bool node_limit = false;
  double planned_service = 0.0;   // objective terms of the plan, EUR
  double planned_charging = 0.0;
  double planned_end = 0.0;
  double soc_floor_slack = 0.0;  // largest softened-floor slack in the plan
};

struct MpcStep {
  ControlPlan plan;
  MpcStepStats stats;
};

inline MilpOptions mpc_milp_options(const MpcSettings& s) {
  MilpOptions o;
  o.node_limit = s.node_limit;
  o.relative_gap = s.relative_gap;
  o.rounding_interval = s.rounding_interval;
  o.local_search_passes = s.local_search_passes;
  return o;
}

// Builds horizons and the MILP for the snapshot, solves it and extracts the
// plan. A node-limit stop keeps the incumbent and is flagged in the stats.
// The previous plan, when given, seeds the search with its charging schedule.
inline MpcStep mpc_step(const WorldSnapshot& world, const NetworkConfig& net, const MpcSettings& settings = {},
                        const ControlPlan* previous = nullptr) {
  const HorizonSet horizons = build_horizons(net, world);
  const BuiltProblem built = build_problem(horizons, world, net);
  MilpOptions options = mpc_milp_options(settings);
  options.rounding = charging_rounding(built);
  if (previous != nullptr) options.starts.push_back(plan_start(built, *previous));
  options.neighborhood = charging_neighborhood(built);
  const SolveResult r = solve_milp(built.problem, options);
  if (!r.has_incumbent()) {
    throw InternalError("mpc_step: MILP at t=" + std::to_string(world.time_s) + " has no feasible solution (" +
                        to_string(r.status) + ")");
  }
  MpcStep step;
  step.plan = extract_plan(built, r.solution, net);
  MpcStepStats& st = step.stats;
  st.time_s = world.time_s;
  st.columns = built.problem.num_columns();
  st.rows = built.problem.num_rows();
  st.binaries = built.problem.num_binaries();
  st.nodes = r.nodes;
  st.lp_iterations = r.lp_iterations;
  st.objective = r.objective;
  st.gap = r.gap();
  st.solve_s = r.wall_time_s;
  st.node_limit = r.status == MilpStatus::NodeLimit;
  const auto cost = built.problem.cost();
  const auto term = [&](int col) { return col >= 0 ? cost[col] * r.solution[col] : 0.0; };
  for (const auto& bus : built.index.visits) {
    for (const auto& v : bus) {
      st.planned_service += term(v.eta);
      st.planned_charging += term(v.c);
      if (v.soc_slack >= 0) st.soc_floor_slack = std::max(st.soc_floor_slack, r.solution[v.soc_slack]);
    }
  }
  for (int col : built.index.nu) st.planned_end += term(col);
  return step;
}

}  // namespace ebus

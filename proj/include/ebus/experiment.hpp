#pragma once

// Seed sweeps over one scenario, per-episode exports and the comparison
// report. Everything written here is a pure function of the spec except the
// timing files, which hold wall-clock solve times.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ebus/config.hpp"
#include "ebus/errors.hpp"
#include "ebus/simulator.hpp"
#include "ebus/snapshot_io.hpp"
#include "ebus/trace.hpp"

namespace ebus {

struct ExperimentSpec {
  std::string config_path;
  std::vector<std::string> overrides;
  std::vector<ControllerKind> controllers{ControllerKind::Mpc, ControllerKind::Fcfs};
  std::vector<std::uint64_t> seeds;
  std::string output_dir;
  int workers = 1;
  std::vector<double> snapshot_times;  // world states exported for `solve`

  void validate() const {
    if (seeds.empty()) throw InputError("experiment: at least one seed is required");
    if (controllers.empty()) throw InputError("experiment: at least one controller is required");
    if (workers < 1) throw InputError("experiment: workers must be >= 1");
    if (output_dir.empty()) throw InputError("experiment: output directory is required");
  }
};

inline std::vector<std::uint64_t> seed_range(std::uint64_t base, int count) {
  if (count < 1) throw InputError("repetitions must be >= 1");
  std::vector<std::uint64_t> s;
  for (int k = 0; k < count; ++k) s.push_back(base + static_cast<std::uint64_t>(k));
  return s;
}

// Deterministic per-episode figures.
struct EpisodeSummary {
  std::string controller;
  std::uint64_t seed = 0;
  bool aborted = false;
  std::string abort_reason;
  EpisodeCosts costs;
  TerminalStats terminal;
  long charges = 0;
  double charger_busy_s = 0.0;
  std::vector<std::string> violations;
  long mpc_steps = 0;
  double mean_columns = 0.0;
  double mean_rows = 0.0;
  double mean_binaries = 0.0;
  double mean_nodes = 0.0;
  long node_limit_hits = 0;
  double max_soc_floor_slack = 0.0;
  long plan_fallbacks = 0;
  long forced_charges = 0;
};

struct EpisodeTiming {
  double solve_s = 0.0;  // summed over MPC steps
  double max_solve_s = 0.0;
  double wall_s = 0.0;
};

inline EpisodeSummary summarize(const EpisodeTrace& t, const NetworkConfig& net) {
  EpisodeSummary s;
  s.controller = t.controller;
  s.seed = t.seed;
  s.aborted = t.aborted;
  s.abort_reason = t.abort_reason;
  s.costs = accumulate_costs(t, net);
  s.terminal = terminal_stats(t, net);
  s.charges = static_cast<long>(t.charges.size());
  for (const auto& c : t.charges) s.charger_busy_s += c.end_s - c.start_s;
  s.violations = check_trace_invariants(t, net);
  s.mpc_steps = static_cast<long>(t.mpc_steps.size());
  for (const auto& m : t.mpc_steps) {
    s.mean_columns += m.columns;
    s.mean_rows += m.rows;
    s.mean_binaries += m.binaries;
    s.mean_nodes += static_cast<double>(m.nodes);
    if (m.node_limit) ++s.node_limit_hits;
    s.max_soc_floor_slack = std::max(s.max_soc_floor_slack, m.soc_floor_slack);
  }
  if (s.mpc_steps > 0) {
    s.mean_columns /= s.mpc_steps;
    s.mean_rows /= s.mpc_steps;
    s.mean_binaries /= s.mpc_steps;
    s.mean_nodes /= s.mpc_steps;
  }
  s.plan_fallbacks = t.plan_fallbacks;
  s.forced_charges = t.forced_charges;
  return s;
}

inline Json summary_to_json(const EpisodeSummary& s) {
  Json j;
  j["controller"] = s.controller;
  j["seed"] = s.seed;
  j["aborted"] = s.aborted;
  j["abort_reason"] = s.abort_reason;
  j["costs"] = {{"service", s.costs.service}, {"charging", s.costs.charging}, {"total", s.costs.total()}};
  j["terminal"] = {{"visits", s.terminal.visits},
                   {"waiting_without_charging_s", s.terminal.waiting_without_charging_s},
                   {"cumulative_dwell_s", s.terminal.cumulative_dwell_s}};
  j["charges"] = s.charges;
  j["charger_busy_s"] = s.charger_busy_s;
  j["violations"] = s.violations;
  j["mpc"] = {{"steps", s.mpc_steps},
              {"mean_columns", s.mean_columns},
              {"mean_rows", s.mean_rows},
              {"mean_binaries", s.mean_binaries},
              {"mean_nodes", s.mean_nodes},
              {"node_limit_hits", s.node_limit_hits},
              {"max_soc_floor_slack", s.max_soc_floor_slack},
              {"plan_fallbacks", s.plan_fallbacks},
              {"forced_charges", s.forced_charges}};
  return j;
}

inline EpisodeSummary summary_from_json(const Json& j) {
  EpisodeSummary s;
  try {
    s.controller = j.at("controller").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.aborted = j.at("aborted").get<bool>();
    s.abort_reason = j.at("abort_reason").get<std::string>();
    s.costs.service = j.at("costs").at("service").get<double>();
    s.costs.charging = j.at("costs").at("charging").get<double>();
    s.terminal.visits = j.at("terminal").at("visits").get<long>();
    s.terminal.waiting_without_charging_s = j.at("terminal").at("waiting_without_charging_s").get<double>();
    s.terminal.cumulative_dwell_s = j.at("terminal").at("cumulative_dwell_s").get<double>();
    s.charges = j.at("charges").get<long>();
    s.charger_busy_s = j.at("charger_busy_s").get<double>();
    s.violations = j.at("violations").get<std::vector<std::string>>();
    const Json& m = j.at("mpc");
    s.mpc_steps = m.at("steps").get<long>();
    s.mean_columns = m.at("mean_columns").get<double>();
    s.mean_rows = m.at("mean_rows").get<double>();
    s.mean_binaries = m.at("mean_binaries").get<double>();
    s.mean_nodes = m.at("mean_nodes").get<double>();
    s.node_limit_hits = m.at("node_limit_hits").get<long>();
    s.max_soc_floor_slack = m.at("max_soc_floor_slack").get<double>();
    s.plan_fallbacks = m.at("plan_fallbacks").get<long>();
    s.forced_charges = m.at("forced_charges").get<long>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("episode summary: ") + e.what());
  }
  return s;
}

// ---------------------------------------------------------------------------
// Files

inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out << content;
    if (!out) throw InputError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string episode_stem(const std::string& controller, std::uint64_t seed) {
  return controller + "_seed" + std::to_string(seed);
}

inline std::string visits_csv(const EpisodeTrace& t) {
  std::ostringstream os;
  os << "line,bus,visit,stop,arrival_s,departure_s,travel_s,soc_arrival,soc_departure,boarding_s,charge_start_s,"
        "charge_s,has_pred,pred_arrival_s\n";
  char buf[512];
  for (const auto& v : t.visits) {
    std::snprintf(buf, sizeof buf, "%d,%d,%lld,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g\n", v.line,
                  v.bus, static_cast<long long>(v.visit), v.stop, v.arrival_s, v.departure_s, v.travel_s,
                  v.soc_arrival, v.soc_departure, v.boarding_s, v.charge_start_s, v.charge_s, v.has_pred ? 1 : 0,
                  v.pred_arrival_s);
    os << buf;
  }
  return os.str();
}

inline std::vector<VisitRecord> parse_visits_csv(const std::string& text) {
  std::vector<VisitRecord> out;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 14) throw InputError("visits csv row " + std::to_string(row) + ": expected 14 fields");
    try {
      VisitRecord v;
      v.line = std::stoi(f[0]);
      v.bus = std::stoi(f[1]);
      v.visit = std::stoll(f[2]);
      v.stop = std::stoi(f[3]);
      v.arrival_s = std::stod(f[4]);
      v.departure_s = std::stod(f[5]);
      v.travel_s = std::stod(f[6]);
      v.soc_arrival = std::stod(f[7]);
      v.soc_departure = std::stod(f[8]);
      v.boarding_s = std::stod(f[9]);
      v.charge_start_s = std::stod(f[10]);
      v.charge_s = std::stod(f[11]);
      v.has_pred = f[12] == "1";
      v.pred_arrival_s = std::stod(f[13]);
      out.push_back(v);
    } catch (const std::exception&) {
      throw InputError("visits csv row " + std::to_string(row) + ": bad number");
    }
  }
  return out;
}

// Costs and terminal statistics recomputed from an exported visits file.
inline std::pair<EpisodeCosts, TerminalStats> recompute_from_visits(const std::vector<VisitRecord>& visits,
                                                                    const NetworkConfig& net) {
  EpisodeTrace t;
  t.visits = visits;
  for (const auto& v : visits) {
    if (v.charge_s > 0.0) t.charges.push_back({v.line, v.bus, v.visit, v.charge_start_s, v.charge_start_s + v.charge_s});
  }
  return {accumulate_costs(t, net), terminal_stats(t, net)};
}

// ---------------------------------------------------------------------------
// Report

struct ControllerRow {
  std::string controller;
  int episodes = 0;
  int aborted = 0;
  int completed = 0;
  double service = 0.0;
  double charging = 0.0;
  double total = 0.0;
  double waiting_without_charging_s = 0.0;
  double cumulative_dwell_s = 0.0;
  double mean_columns = 0.0;
  double mean_nodes = 0.0;
  long node_limit_hits = 0;
  long violations = 0;
};

struct ExperimentReport {
  std::vector<EpisodeSummary> episodes;
  std::vector<ControllerRow> rows;
  // Filled when both controllers ran.
  int matched_seeds = 0;
  int mpc_wins = 0;
};

inline ExperimentReport build_report(std::vector<EpisodeSummary> episodes) {
  std::sort(episodes.begin(), episodes.end(), [](const EpisodeSummary& a, const EpisodeSummary& b) {
    return a.controller != b.controller ? a.controller < b.controller : a.seed < b.seed;
  });
  ExperimentReport r;
  std::map<std::string, ControllerRow> rows;
  for (const auto& e : episodes) {
    ControllerRow& row = rows[e.controller];
    row.controller = e.controller;
    ++row.episodes;
    row.violations += static_cast<long>(e.violations.size());
    if (e.aborted) {
      ++row.aborted;
      continue;
    }
    ++row.completed;
    row.service += e.costs.service;
    row.charging += e.costs.charging;
    row.total += e.costs.total();
    row.waiting_without_charging_s += e.terminal.waiting_without_charging_s;
    row.cumulative_dwell_s += e.terminal.cumulative_dwell_s;
    row.mean_columns += e.mean_columns;
    row.mean_nodes += e.mean_nodes;
    row.node_limit_hits += e.node_limit_hits;
  }
  for (auto& [name, row] : rows) {
    if (row.completed > 0) {
      const double n = row.completed;
      row.service /= n;
      row.charging /= n;
      row.total /= n;
      row.waiting_without_charging_s /= n;
      row.cumulative_dwell_s /= n;
      row.mean_columns /= n;
      row.mean_nodes /= n;
    }
    r.rows.push_back(row);
  }
  std::map<std::uint64_t, const EpisodeSummary*> fcfs;
  for (const auto& e : episodes)
    if (e.controller == "fcfs" && !e.aborted) fcfs[e.seed] = &e;
  for (const auto& e : episodes) {
    if (e.controller != "mpc" || e.aborted) continue;
    const auto it = fcfs.find(e.seed);
    if (it == fcfs.end()) continue;
    ++r.matched_seeds;
    if (e.costs.total() < it->second->costs.total()) ++r.mpc_wins;
  }
  r.episodes = std::move(episodes);
  return r;
}

inline std::string report_csv(const ExperimentReport& r) {
  std::ostringstream os;
  os << "controller,episodes,aborted,service_eur,charging_eur,total_eur,waiting_without_charging_s,"
        "cumulative_terminal_dwell_s,mean_columns,mean_nodes,node_limit_hits,invariant_violations\n";
  char buf[512];
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%s,%d,%d,%.6f,%.6f,%.6f,%.3f,%.3f,%.1f,%.2f,%ld,%ld\n", row.controller.c_str(),
                  row.episodes, row.aborted, row.service, row.charging, row.total, row.waiting_without_charging_s,
                  row.cumulative_dwell_s, row.mean_columns, row.mean_nodes, row.node_limit_hits, row.violations);
    os << buf;
  }
  return os.str();
}

inline std::string episodes_csv(const ExperimentReport& r) {
  std::ostringstream os;
  os << "controller,seed,aborted,service_eur,charging_eur,total_eur,waiting_without_charging_s,"
        "cumulative_terminal_dwell_s,terminal_visits,charges,charger_busy_s,mpc_steps,mean_columns,mean_nodes,"
        "node_limit_hits,plan_fallbacks,forced_charges,invariant_violations\n";
  char buf[640];
  for (const auto& e : r.episodes) {
    std::snprintf(buf, sizeof buf, "%s,%llu,%d,%.6f,%.6f,%.6f,%.3f,%.3f,%ld,%ld,%.3f,%ld,%.1f,%.2f,%ld,%ld,%ld,%zu\n",
                  e.controller.c_str(), static_cast<unsigned long long>(e.seed), e.aborted ? 1 : 0, e.costs.service,
                  e.costs.charging, e.costs.total(), e.terminal.waiting_without_charging_s,
                  e.terminal.cumulative_dwell_s, e.terminal.visits, e.charges, e.charger_busy_s, e.mpc_steps,
                  e.mean_columns, e.mean_nodes, e.node_limit_hits, e.plan_fallbacks, e.forced_charges,
                  e.violations.size());
    os << buf;
  }
  return os.str();
}

inline std::string report_text(const ExperimentReport& r) {
  std::ostringstream os;
  char buf[256];
  os << "Costs per day (EUR, mean over completed episodes)\n";
  std::snprintf(buf, sizeof buf, "%-10s %8s %8s %12s %12s %12s\n", "controller", "episodes", "aborted", "service",
                "charging", "total");
  os << buf;
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%-10s %8d %8d %12.2f %12.2f %12.2f\n", row.controller.c_str(), row.episodes,
                  row.aborted, row.service, row.charging, row.total);
    os << buf;
  }
  os << "\nTerminal statistics\n";
  std::snprintf(buf, sizeof buf, "%-10s %26s %28s\n", "controller", "waiting w/o charging (s)", "cumulative dwell (s)");
  os << buf;
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%-10s %26.1f %28.1f\n", row.controller.c_str(), row.waiting_without_charging_s,
                  row.cumulative_dwell_s);
    os << buf;
  }
  os << "\nMILP statistics\n";
  std::snprintf(buf, sizeof buf, "%-10s %12s %12s %16s\n", "controller", "columns", "nodes", "node-limit stops");
  os << buf;
  for (const auto& row : r.rows) {
    if (row.mean_columns == 0.0) continue;
    std::snprintf(buf, sizeof buf, "%-10s %12.1f %12.2f %16ld\n", row.controller.c_str(), row.mean_columns,
                  row.mean_nodes, row.node_limit_hits);
    os << buf;
  }
  if (r.matched_seeds > 0) {
    std::snprintf(buf, sizeof buf, "\nMPC cheaper than FCFS on %d of %d matched seeds\n", r.mpc_wins, r.matched_seeds);
    os << buf;
  }
  long violations = 0;
  for (const auto& row : r.rows) violations += row.violations;
  os << "\nInvariant violations: " << violations << "\n";
  for (const auto& e : r.episodes) {
    if (e.aborted) os << "aborted: " << episode_stem(e.controller, e.seed) << ": " << e.abort_reason << "\n";
    for (const auto& v : e.violations) os << "violation: " << episode_stem(e.controller, e.seed) << ": " << v << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Running

struct ExperimentResult {
  ExperimentReport report;
  std::vector<EpisodeTiming> timings;  // parallel to report.episodes
  int errors = 0;                      // episodes that threw
  std::vector<std::string> error_messages;
};

inline EpisodeConfig episode_config(const Scenario& s, ControllerKind kind, std::uint64_t seed) {
  EpisodeConfig c;
  c.network = s.network;
  c.controller = kind;
  c.seed = seed;
  c.traffic_cov = s.traffic_cov;
  c.initial_spacing = s.initial_spacing;
  c.mpc = s.mpc;
  return c;
}

// Runs one episode and writes its exports; returns the summary.
inline std::pair<EpisodeSummary, EpisodeTiming> run_and_export(const Scenario& scenario, ControllerKind kind,
                                                               std::uint64_t seed,
                                                               const std::filesystem::path& episodes_dir,
                                                               const std::vector<double>& snapshot_times = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  EpisodeConfig config = episode_config(scenario, kind, seed);
  config.snapshot_times = snapshot_times;
  const EpisodeTrace trace = run_episode(config);
  EpisodeTiming timing;
  timing.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& m : trace.mpc_steps) {
    timing.solve_s += m.solve_s;
    timing.max_solve_s = std::max(timing.max_solve_s, m.solve_s);
  }
  const EpisodeSummary summary = summarize(trace, scenario.network);
  const std::string stem = episode_stem(to_string(kind), seed);
  std::ostringstream events;
  write_events_csv(events, trace);
  write_file_atomic(episodes_dir / (stem + ".events.csv"), events.str());
  write_file_atomic(episodes_dir / (stem + ".visits.csv"), visits_csv(trace));
  write_file_atomic(episodes_dir / (stem + ".summary.json"), summary_to_json(summary).dump(2) + "\n");
  Json tj = {{"solve_s", timing.solve_s}, {"max_solve_s", timing.max_solve_s}, {"wall_s", timing.wall_s}};
  write_file_atomic(episodes_dir / (stem + ".timing.json"), tj.dump(2) + "\n");
  for (const WorldSnapshot& w : trace.snapshots) {
    char name[64];
    std::snprintf(name, sizeof name, ".snapshot-%.0f.json", w.time_s);
    write_file_atomic(episodes_dir / (stem + name), snapshot_to_json(w).dump(2) + "\n");
  }
  return {summary, timing};
}

inline std::string timing_csv(const ExperimentReport& r, const std::vector<EpisodeTiming>& timings) {
  std::ostringstream os;
  os << "controller,seed,mpc_steps,solve_s,mean_solve_s,max_solve_s,wall_s\n";
  char buf[256];
  for (std::size_t k = 0; k < r.episodes.size() && k < timings.size(); ++k) {
    const auto& e = r.episodes[k];
    const auto& t = timings[k];
    std::snprintf(buf, sizeof buf, "%s,%llu,%ld,%.3f,%.4f,%.4f,%.3f\n", e.controller.c_str(),
                  static_cast<unsigned long long>(e.seed), e.mpc_steps, t.solve_s,
                  e.mpc_steps > 0 ? t.solve_s / e.mpc_steps : 0.0, t.max_solve_s, t.wall_s);
    os << buf;
  }
  return os.str();
}

inline void write_report_files(const std::filesystem::path& dir, const ExperimentReport& r,
                               const std::vector<EpisodeTiming>& timings) {
  write_file_atomic(dir / "report.csv", report_csv(r));
  write_file_atomic(dir / "episodes.csv", episodes_csv(r));
  write_file_atomic(dir / "report.txt", report_text(r));
  if (!timings.empty()) write_file_atomic(dir / "timing.csv", timing_csv(r, timings));
}

using ProgressFn = std::function<void(const EpisodeSummary&, const EpisodeTiming&)>;

inline ExperimentResult run_experiment(const ExperimentSpec& spec, const ProgressFn& progress = {}) {
  spec.validate();
  const Scenario scenario = load_scenario(spec.config_path, spec.overrides);
  initial_world(scenario.network);  // rejects line layouts that cannot be evenly spaced
  const std::filesystem::path dir(spec.output_dir);
  const std::filesystem::path episodes_dir = dir / "episodes";
  std::filesystem::create_directories(episodes_dir);
  write_file_atomic(dir / "scenario.json", to_json(scenario).dump(2) + "\n");

  struct Job {
    ControllerKind kind;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (ControllerKind k : spec.controllers)
    for (std::uint64_t s : spec.seeds) jobs.push_back({k, s});

  std::vector<std::optional<std::pair<EpisodeSummary, EpisodeTiming>>> done(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex report_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      try {
        done[k] = run_and_export(scenario, jobs[k].kind, jobs[k].seed, episodes_dir, spec.snapshot_times);
        if (progress) {
          std::lock_guard<std::mutex> lock(report_mutex);
          progress(done[k]->first, done[k]->second);
        }
      } catch (const std::exception& e) {
        errors[k] = episode_stem(to_string(jobs[k].kind), jobs[k].seed) + ": " + e.what();
      }
    }
  };
  const int threads = std::min<int>(spec.workers, static_cast<int>(jobs.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ExperimentResult result;
  std::vector<EpisodeSummary> summaries;
  std::map<std::pair<std::string, std::uint64_t>, EpisodeTiming> timing_of;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    if (done[k]) {
      summaries.push_back(done[k]->first);
      timing_of[{done[k]->first.controller, done[k]->first.seed}] = done[k]->second;
    } else {
      ++result.errors;
      result.error_messages.push_back(errors[k]);
    }
  }
  result.report = build_report(std::move(summaries));
  for (const auto& e : result.report.episodes) result.timings.push_back(timing_of[{e.controller, e.seed}]);
  write_report_files(dir, result.report, result.timings);
  return result;
}

// Rebuilds the report from an experiment directory. Costs and terminal
// statistics come from the exported visit files, everything else from the
// episode summaries.
inline ExperimentResult reaggregate(const std::string& output_dir) {
  const std::filesystem::path dir(output_dir);
  const Scenario scenario = parse_scenario(Json::parse(read_file(dir / "scenario.json")));
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir / "episodes")) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 13 && name.ends_with(".summary.json")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InputError("no episode summaries under " + (dir / "episodes").string());
  std::vector<EpisodeSummary> summaries;
  std::map<std::pair<std::string, std::uint64_t>, EpisodeTiming> timing_of;
  for (const auto& f : files) {
    EpisodeSummary s = summary_from_json(Json::parse(read_file(f)));
    const std::string stem = episode_stem(s.controller, s.seed);
    const auto visits = parse_visits_csv(read_file(dir / "episodes" / (stem + ".visits.csv")));
    const auto [costs, terminal] = recompute_from_visits(visits, scenario.network);
    s.costs = costs;
    s.terminal = terminal;
    const auto tpath = dir / "episodes" / (stem + ".timing.json");
    if (std::filesystem::exists(tpath)) {
      const Json tj = Json::parse(read_file(tpath));
      timing_of[{s.controller, s.seed}] = {tj.value("solve_s", 0.0), tj.value("max_solve_s", 0.0),
                                           tj.value("wall_s", 0.0)};
    }
    summaries.push_back(std::move(s));
  }
  ExperimentResult result;
  result.report = build_report(std::move(summaries));
  for (const auto& e : result.report.episodes) result.timings.push_back(timing_of[{e.controller, e.seed}]);
  write_report_files(dir, result.report, result.timings);
  return result;
}

}  // namespace ebus

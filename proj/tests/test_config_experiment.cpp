#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ebus/config.hpp"
#include "ebus/experiment.hpp"
#include "ebus/initial_state.hpp"
#include "ebus/snapshot_io.hpp"
#include "fixtures.hpp"

using namespace ebus;
namespace fs = std::filesystem;

namespace {

Json case_study() { return read_json_file(std::string(EBUS_SOURCE_DIR) + "/configs/case_study.json"); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Two small lines and a short day, so that a handful of FCFS episodes run in
// well under a second.
fs::path small_scenario(const fs::path& dir) {
  Scenario s;
  s.network = fixture::network({fixture::uniform_line(1, 12, 3, 300, 60, 0.015, 2.0),
                                fixture::uniform_line(2, 14, 3, 300, 55, 0.015, 2.0)});
  s.network.params.sim_length_s = 7200;
  s.network.params.horizon_s = 1800;
  s.network.params.warmup_s = 900;
  fs::create_directories(dir);
  const fs::path path = dir / "scenario.json";
  std::ofstream(path) << to_json(s).dump(2);
  return path;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("ebus_test_" + name);
  fs::remove_all(d);
  return d;
}

ExperimentSpec fcfs_spec(const fs::path& config, const fs::path& out, std::vector<std::uint64_t> seeds) {
  ExperimentSpec spec;
  spec.config_path = config.string();
  spec.output_dir = out.string();
  spec.controllers = {ControllerKind::Fcfs};
  spec.seeds = std::move(seeds);
  return spec;
}

}  // namespace

TEST(Config, CaseStudyValues) {
  const Scenario s = parse_scenario(case_study());
  const Params& p = s.network.params;
  EXPECT_EQ(p.battery_kwh, 264.0);
  EXPECT_EQ(p.charger_kw, 300.0);
  EXPECT_EQ(p.boarding_s_per_pax, 1.5);
  EXPECT_EQ(p.charger_setup_s, 10.0);
  EXPECT_EQ(p.price_energy, 0.08);
  EXPECT_EQ(p.price_wait, 0.0025);
  EXPECT_NEAR(p.price_end, 5 * 0.08, 1e-15);
  EXPECT_EQ(p.big_m, 1e5);
  EXPECT_EQ(p.horizon_s, 3600.0);
  EXPECT_EQ(p.sim_length_s, 14 * 3600.0);
  EXPECT_EQ(p.control_interval_s, 300.0);
  ASSERT_EQ(s.network.lines.size(), 2u);
  EXPECT_EQ(s.network.lines[0].stop_count(), 24);
  EXPECT_EQ(s.network.lines[0].bus_count, 5);
  EXPECT_EQ(s.network.lines[1].stop_count(), 30);
  EXPECT_EQ(s.network.lines[1].bus_count, 6);
  for (const auto& line : s.network.lines) {
    EXPECT_EQ(line.headway_s, 300.0);
    EXPECT_EQ(line.soc_min, 0.3);
  }
  EXPECT_EQ(s.network.charger_count, 1);
}

TEST(Config, InvertedTravelBoundsNameTheLink) {
  Json doc = case_study();
  doc["lines"][1]["links"][3]["t_min_s"] = 90.0;
  doc["lines"][1]["links"][3]["t_max_s"] = 80.0;
  try {
    parse_scenario(doc);
    FAIL() << "accepted t_min_s > t_max_s";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2 link 3"), std::string::npos) << e.what();
  }
}

TEST(Config, ZeroSocFloorRejected) {
  Json doc = case_study();
  doc["lines"][0]["soc_min"] = 0.0;
  EXPECT_THROW(parse_scenario(doc), InputError);
}

TEST(Config, UnknownFieldRejected) {
  Json doc = case_study();
  doc["params"]["horizon"] = 1800;
  EXPECT_THROW(parse_scenario(doc), InputError);
}

TEST(Config, OverridesApplyToExistingFieldsOnly) {
  Json doc = case_study();
  apply_overrides(doc, {"params.horizon_s=1800", "mpc.node_limit=7", "lines.1.headway_s=360"});
  const Scenario s = parse_scenario(doc);
  EXPECT_EQ(s.network.params.horizon_s, 1800.0);
  EXPECT_EQ(s.mpc.node_limit, 7);
  EXPECT_EQ(s.network.lines[1].headway_s, 360.0);

  Json other = case_study();
  EXPECT_THROW(apply_overrides(other, {"params.no_such_field=1"}), InputError);
  EXPECT_THROW(apply_overrides(other, {"params.horizon_s"}), InputError);
  EXPECT_THROW(apply_overrides(other, {"params..horizon_s=1"}), InputError);
}

TEST(Config, RoundTripsThroughJson) {
  const Scenario a = parse_scenario(case_study());
  const Scenario b = parse_scenario(to_json(a));
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(Snapshot, JsonRoundTrip) {
  const Scenario s = parse_scenario(case_study());
  WorldSnapshot w = initial_world(s.network);
  w.time_s = 4321.5;
  // Put one bus committed at the terminal with history, to cover every field.
  BusSnapshot& b = w.buses[2];
  const LineSpec& line = s.network.lines[b.line];
  b.location = AtStop{0, 4300.0, StopStatus::Committed, 12.0, 4322.0, 95.5};
  b.visit = line.stop_count();
  b.last_arrival.assign(line.stop_count(), std::nullopt);
  b.last_arrival[0] = ArrivalRecord{b.visit, 4300.0};
  b.last_arrival[5] = ArrivalRecord{5, 300.25};

  const auto doc = snapshot_to_json(w);
  const WorldSnapshot r = snapshot_from_json(nlohmann::ordered_json::parse(doc.dump()), s.network);
  EXPECT_EQ(snapshot_to_json(r).dump(), doc.dump());
  EXPECT_EQ(r.time_s, w.time_s);
  const auto& at = std::get<AtStop>(r.buses[2].location);
  EXPECT_EQ(at.status, StopStatus::Committed);
  EXPECT_EQ(at.charge_s, 95.5);
}

TEST(Snapshot, WrongBusCountRejected) {
  const Scenario s = parse_scenario(case_study());
  auto doc = snapshot_to_json(initial_world(s.network));
  doc["buses"].erase(doc["buses"].size() - 1);
  EXPECT_THROW(snapshot_from_json(doc, s.network), InputError);
}

// Means in the report equal the average of costs recomputed from each
// exported visits file with the plain cost definition.
TEST(Experiment, ReportMeansMatchVisitFiles) {
  const fs::path dir = fresh_dir("means");
  const fs::path config = small_scenario(dir / "in");
  const ExperimentResult r = run_experiment(fcfs_spec(config, dir / "out", {3, 4, 5}));
  ASSERT_EQ(r.errors, 0);
  ASSERT_EQ(r.report.rows.size(), 1u);
  const ControllerRow& row = r.report.rows[0];
  EXPECT_EQ(row.controller, "fcfs");
  EXPECT_EQ(row.episodes, 3);

  const Scenario s = load_scenario(config.string());
  const Params& p = s.network.params;
  double service = 0.0, charging = 0.0;
  for (std::uint64_t seed : {3, 4, 5}) {
    const auto visits = parse_visits_csv(slurp(dir / "out" / "episodes" / (episode_stem("fcfs", seed) + ".visits.csv")));
    ASSERT_FALSE(visits.empty());
    for (const auto& v : visits) {
      if (v.has_pred && v.arrival_s >= p.warmup_s && v.arrival_s <= p.sim_length_s)
        service += p.price_wait * std::abs(v.arrival_s - v.pred_arrival_s - s.network.lines[v.line].headway_s);
      if (v.charge_s > 0.0) {
        const double a = std::max(v.charge_start_s, p.warmup_s);
        const double b = std::min(v.charge_start_s + v.charge_s, p.sim_length_s);
        if (b > a) charging += p.price_energy * p.charger_kw * (b - a) / 3600.0;
      }
    }
  }
  EXPECT_NEAR(row.service, service / 3, 1e-9);
  EXPECT_NEAR(row.charging, charging / 3, 1e-9);
  EXPECT_NEAR(row.total, (service + charging) / 3, 1e-9);
  EXPECT_GT(row.charging, 0.0);
}

TEST(Experiment, ReportsAreDeterministicAndReaggregate) {
  const fs::path dir = fresh_dir("det");
  const fs::path config = small_scenario(dir / "in");
  run_experiment(fcfs_spec(config, dir / "a", {7, 8}));
  ExperimentSpec parallel = fcfs_spec(config, dir / "b", {8, 7});
  parallel.workers = 2;
  run_experiment(parallel);
  for (const char* f : {"report.csv", "episodes.csv", "report.txt"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  EXPECT_EQ(slurp(dir / "a" / "episodes" / "fcfs_seed7.visits.csv"),
            slurp(dir / "b" / "episodes" / "fcfs_seed7.visits.csv"));

  const std::string before = slurp(dir / "a" / "report.csv");
  reaggregate((dir / "a").string());
  EXPECT_EQ(slurp(dir / "a" / "report.csv"), before);
}

TEST(Experiment, SingleControllerHasNoComparison) {
  const fs::path dir = fresh_dir("single");
  const fs::path config = small_scenario(dir / "in");
  const ExperimentResult r = run_experiment(fcfs_spec(config, dir / "out", {1}));
  EXPECT_EQ(r.report.rows.size(), 1u);
  EXPECT_EQ(r.report.matched_seeds, 0);
  EXPECT_EQ(r.report.mpc_wins, 0);
}

TEST(Experiment, SpecValidation) {
  ExperimentSpec spec;
  spec.output_dir = "x";
  EXPECT_THROW(spec.validate(), InputError);
  spec.seeds = {1};
  spec.workers = 0;
  EXPECT_THROW(spec.validate(), InputError);
  EXPECT_THROW(seed_range(1, 0), InputError);
  EXPECT_EQ(seed_range(10, 3), (std::vector<std::uint64_t>{10, 11, 12}));
}

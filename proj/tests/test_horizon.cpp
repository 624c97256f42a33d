#include <gtest/gtest.h>

#include <map>

#include "ebus/horizon.hpp"
#include "ebus/initial_state.hpp"
#include "fixtures.hpp"

using namespace ebus;

namespace {

NetworkConfig six_stop_net(int buses = 1) {
  return fixture::network({fixture::uniform_line(1, 6, buses, 600.0, 200.0, 0.0)});
}

// Records of the latest call at every stop before the bus's upcoming visit.
void fill_history(BusSnapshot& b, const LineSpec& line) {
  const int m = line.stop_count();
  for (std::int64_t v = b.visit - m; v < b.visit; ++v) b.last_arrival[stop_of_visit(line, v)] = ArrivalRecord{v, -100.0 * (b.visit - v)};
}

}  // namespace

TEST(Horizon, SixStopLoopCoversThreeLoops) {
  const NetworkConfig net = six_stop_net();
  const LineSpec& line = net.lines[0];
  // Just left stop index 2, heading for index 3.
  const BusSnapshot bus = fixture::on_link(line, 0, 0, 2, 9, 1000.0, 200.0);
  const auto visits = build_horizon(bus, line, 0, net.params, 1000.0);
  ASSERT_EQ(visits.size(), 18u);
  std::map<int, int> count;
  for (std::size_t q = 0; q < visits.size(); ++q) {
    EXPECT_EQ(visits[q].stop, (3 + static_cast<int>(q)) % 6);
    EXPECT_EQ(visits[q].visit, 9 + static_cast<std::int64_t>(q));
    EXPECT_DOUBLE_EQ(visits[q].nominal_arrival_s, 1200.0 + 200.0 * q);
    ++count[visits[q].stop];
    EXPECT_EQ(visits[q].k, count[visits[q].stop]);
  }
  for (const auto& [stop, c] : count) EXPECT_EQ(c, 3) << "stop " << stop;
  std::vector<int> terminal_k;
  for (const auto& v : visits)
    if (v.is_terminal) terminal_k.push_back(v.k);
  EXPECT_EQ(terminal_k, (std::vector<int>{1, 2, 3}));
}

TEST(Horizon, ShortHorizonExtendsToTerminal) {
  NetworkConfig net = six_stop_net();
  net.params.horizon_s = 100.0;
  const LineSpec& line = net.lines[0];
  const BusSnapshot bus = fixture::on_link(line, 0, 0, 2, 9, 0.0, 200.0);
  const auto visits = build_horizon(bus, line, 0, net.params, 0.0);
  ASSERT_EQ(visits.size(), 4u);  // stops 3, 4, 5 and the terminal
  EXPECT_EQ(visits.front().stop, 3);
  EXPECT_TRUE(visits.back().is_terminal);
  EXPECT_EQ(visits.back().k, 1);
}

TEST(Horizon, DwellingAtTerminalIsFirstVisit) {
  const NetworkConfig net = six_stop_net();
  const LineSpec& line = net.lines[0];
  const BusSnapshot bus = fixture::at_stop(line, 0, 0, 12, AtStop{0, 950.0, StopStatus::Holding, 30.0});
  const auto visits = build_horizon(bus, line, 0, net.params, 1000.0);
  ASSERT_FALSE(visits.empty());
  EXPECT_TRUE(visits.front().is_terminal);
  EXPECT_EQ(visits.front().k, 1);
  EXPECT_EQ(visits.front().visit, 12);
  EXPECT_DOUBLE_EQ(visits.front().nominal_arrival_s, 950.0);
  // Next stop: leaves at t_now (the nominal dwell is zero here) plus 200 s.
  EXPECT_DOUBLE_EQ(visits[1].nominal_arrival_s, 1200.0);
}

TEST(Horizon, CapAtThreeLoops) {
  NetworkConfig net = six_stop_net();
  net.params.horizon_s = 50000.0;
  const LineSpec& line = net.lines[0];
  const auto visits = build_horizon(fixture::on_link(line, 0, 0, 0, 1, 0.0, 200.0), line, 0, net.params, 0.0);
  EXPECT_EQ(visits.size(), 18u);
}

TEST(Horizon, Deterministic) {
  const NetworkConfig net = six_stop_net();
  const LineSpec& line = net.lines[0];
  const BusSnapshot bus = fixture::on_link(line, 0, 0, 4, 11, 10.0, 250.0);
  const auto a = build_horizon(bus, line, 0, net.params, 20.0);
  const auto b = build_horizon(bus, line, 0, net.params, 20.0);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t q = 0; q < a.size(); ++q) {
    EXPECT_EQ(a[q].visit, b[q].visit);
    EXPECT_EQ(a[q].nominal_arrival_s, b[q].nominal_arrival_s);
  }
}

TEST(Horizon, PredecessorInsideHorizonIsVariable) {
  NetworkConfig net = six_stop_net(2);
  net.params.horizon_s = 500.0;
  const LineSpec& line = net.lines[0];
  WorldSnapshot world;
  world.time_s = 0.0;
  // Bus 0 heads for stop 3, bus 1 for stop 2.
  world.buses.push_back(fixture::on_link(line, 0, 0, 2, 9, 0.0, 200.0));
  world.buses.push_back(fixture::on_link(line, 0, 1, 1, 8, 0.0, 200.0));
  fill_history(world.buses[0], line);
  fill_history(world.buses[1], line);
  const HorizonSet set = build_horizons(net, world);
  const auto& h1 = set.buses[1].visits;
  // Bus 1's visit 9 (stop 3) is bus 0's first horizon visit.
  const auto it = std::find_if(h1.begin(), h1.end(), [](const StopVisit& v) { return v.visit == 9; });
  ASSERT_NE(it, h1.end());
  EXPECT_EQ(it->pred.kind, PredecessorRef::Kind::Variable);
  EXPECT_EQ(it->pred.bus, 0);
  EXPECT_EQ(it->pred.position, 0);
  // Bus 1's visit 8 (stop 2): bus 0 already passed it.
  EXPECT_EQ(h1.front().visit, 8);
  EXPECT_EQ(h1.front().pred.kind, PredecessorRef::Kind::Constant);
  EXPECT_DOUBLE_EQ(h1.front().pred.time_s, world.buses[0].last_arrival[2]->time_s);
  // Bus 0 follows bus 1 one loop back; those visits are all in the past.
  for (const auto& v : set.buses[0].visits) {
    EXPECT_EQ(v.pred.kind, PredecessorRef::Kind::Constant);
    EXPECT_EQ(v.pred.bus, 1);
  }
}

TEST(Horizon, FirstBusFollowsLastBusOneLoopEarlier) {
  const NetworkConfig net = six_stop_net(3);
  const LineSpec& line = net.lines[0];
  const VisitRef ref = predecessor_visit(line, 0, 20);
  EXPECT_EQ(ref.bus, 2);
  EXPECT_EQ(ref.visit, 14);
}

TEST(Horizon, PredecessorBeyondItsHorizonIsNone) {
  NetworkConfig net = six_stop_net(2);
  net.params.horizon_s = 1000.0;
  const LineSpec& line = net.lines[0];
  WorldSnapshot world;
  // Bus 1 runs right behind bus 0, so its horizon reaches one visit further.
  world.buses.push_back(fixture::on_link(line, 0, 0, 2, 9, 0.0, 300.0));
  world.buses.push_back(fixture::on_link(line, 0, 1, 1, 8, -200.0, 200.0));
  fill_history(world.buses[0], line);
  fill_history(world.buses[1], line);
  const HorizonSet set = build_horizons(net, world);
  const auto& h0 = set.buses[0].visits;
  const auto& h1 = set.buses[1].visits;
  EXPECT_EQ(h0.back().visit, 12);
  ASSERT_EQ(h1.back().visit, 13);
  EXPECT_EQ(h1.back().pred.kind, PredecessorRef::Kind::None);
  EXPECT_EQ(h1[h1.size() - 2].pred.kind, PredecessorRef::Kind::Variable);
}

TEST(Horizon, MissingRecordIsAnError) {
  const NetworkConfig net = six_stop_net(2);
  const LineSpec& line = net.lines[0];
  WorldSnapshot world;
  world.buses.push_back(fixture::on_link(line, 0, 0, 2, 9, 0.0, 200.0));
  world.buses.push_back(fixture::on_link(line, 0, 1, 1, 8, 0.0, 200.0));
  EXPECT_THROW(build_horizons(net, world), InputError);
}

TEST(Horizon, CaseScaleHasTwoTerminalVisitsPerBus) {
  NetworkConfig net = fixture::network({fixture::uniform_line(1, 24, 5, 300.0, 46.0, 0.015),
                                        fixture::uniform_line(2, 30, 6, 300.0, 46.0, 0.015)});
  const WorldSnapshot world = initial_world(net);
  const HorizonSet set = build_horizons(net, world);
  for (const auto& bh : set.buses) {
    int terminals = 0;
    for (std::size_t q = 0; q < bh.visits.size(); ++q) {
      terminals += bh.visits[q].is_terminal;
      if (q > 0) {
        EXPECT_EQ(bh.visits[q].visit, bh.visits[q - 1].visit + 1);
      }
      EXPECT_NE(bh.visits[q].pred.kind, PredecessorRef::Kind::None) << "line " << bh.line << " bus " << bh.bus;
    }
    EXPECT_GE(terminals, 2) << "line " << bh.line << " bus " << bh.bus;
  }
}

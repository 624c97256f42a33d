#include <gtest/gtest.h>

#include "ebus/core_model.hpp"

using namespace ebus;

namespace {

LineSpec six_stop_line() {
  LineSpec l;
  l.id = 1;
  l.bus_count = 3;
  l.headway_s = 300.0;
  l.soc_min = 0.3;
  l.arrival_rate.assign(6, 0.02);
  l.links.assign(6, LinkSpec{100.0, 200.0, 4.0, 0.01});
  return l;
}

}  // namespace

TEST(Dwell, ProportionalToGap) {
  EXPECT_DOUBLE_EQ(dwell_time(300.0, 0.05, 1.5), 22.5);
  EXPECT_DOUBLE_EQ(dwell_time(0.0, 0.05, 1.5), 0.0);
}

TEST(Dwell, NegativeGapThrows) { EXPECT_THROW(dwell_time(-1.0, 0.05, 1.5), InputError); }

TEST(LinkEnergy, LinearInTravelTime) {
  const LinkSpec k{100.0, 200.0, 4.0, 0.01};
  EXPECT_NEAR(link_energy(k, 120.0), 2.8, 1e-12);
  EXPECT_NEAR(link_energy(k, 100.0), 3.0, 1e-12);
  EXPECT_NEAR(link_energy(k, 200.0), 2.0, 1e-12);
  EXPECT_THROW(link_energy(k, 99.0), InputError);
  EXPECT_THROW(link_energy(k, 201.0), InputError);
}

TEST(Soc, LinkDischarge) {
  EXPECT_NEAR(soc_after_link(0.5, 2.64, 264.0), 0.49, 1e-12);
  // Not clamped at zero.
  EXPECT_NEAR(soc_after_link(0.01, 26.4, 264.0), -0.09, 1e-12);
}

TEST(Soc, Charging) {
  EXPECT_NEAR(soc_after_charge(0.5, 600.0, 300.0, 264.0), 0.5 + 50.0 / 264.0, 1e-12);
  EXPECT_NEAR(soc_after_charge(0.5, 600.0, 300.0, 264.0), 0.689393939, 1e-8);
  Params p;
  EXPECT_NEAR(charge_time_to(0.95, 1.0, p), 158.4, 1e-9);
  EXPECT_DOUBLE_EQ(charge_time_to(1.0, 0.9, p), 0.0);
}

TEST(SigmaBar, TableOneValues) {
  Params p;  // T_sim = 840 min, T = 60 min
  EXPECT_NEAR(sigma_bar(0.0, p, 0.3), 0.95, 1e-12);
  EXPECT_NEAR(sigma_bar(p.sim_length_s - p.horizon_s, p, 0.3), 0.3, 1e-12);
  EXPECT_NEAR(sigma_bar(390.0 * 60.0, p, 0.3), 0.625, 1e-12);
  EXPECT_DOUBLE_EQ(sigma_bar(p.sim_length_s, p, 0.3), 0.3);
}

TEST(Visits, PredecessorWrapsOneLoop) {
  const LineSpec l = six_stop_line();
  const VisitRef a = predecessor_visit(l, 2, 40);
  EXPECT_EQ(a.bus, 1);
  EXPECT_EQ(a.visit, 40);
  const VisitRef b = predecessor_visit(l, 0, 40);
  EXPECT_EQ(b.bus, 2);
  EXPECT_EQ(b.visit, 34);
  const VisitRef f = follower_visit(l, 2, 34);
  EXPECT_EQ(f.bus, 0);
  EXPECT_EQ(f.visit, 40);
  EXPECT_EQ(stop_of_visit(l, 13), 1);
  EXPECT_EQ(stop_of_visit(l, -1), 5);
}

TEST(Validation, NamesTheOffendingField) {
  Params p;
  p.horizon_s = -1.0;
  try {
    p.validate();
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("params.horizon_s"), std::string::npos);
  }
  LineSpec l = six_stop_line();
  l.links[2].t_max_s = 50.0;
  EXPECT_THROW(l.validate(), InputError);
  l = six_stop_line();
  l.arrival_rate.pop_back();
  EXPECT_THROW(l.validate(), InputError);
  NetworkConfig net;
  net.lines = {six_stop_line(), six_stop_line()};
  EXPECT_THROW(net.validate(), InputError);  // duplicate id
  net.lines[1].id = 2;
  EXPECT_NO_THROW(net.validate());
  net.charger_count = 2;
  EXPECT_THROW(net.validate(), InputError);
}

TEST(Snapshot, VisitMustMatchStop) {
  const LineSpec l = six_stop_line();
  BusSnapshot b;
  b.last_arrival.resize(6);
  b.visit = 8;
  b.location = OnLink{1, 0.0, 150.0};  // heading to stop 2
  EXPECT_NO_THROW(b.validate(l));
  b.visit = 9;
  EXPECT_THROW(b.validate(l), InputError);
  b.visit = 6;
  b.location = AtStop{0, 0.0, StopStatus::Holding};
  EXPECT_NO_THROW(b.validate(l));
  b.visit = 7;
  b.location = AtStop{1, 0.0, StopStatus::Holding};
  EXPECT_THROW(b.validate(l), InputError);
}

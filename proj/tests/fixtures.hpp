#pragma once

// Small hand-built networks and snapshots shared by the model tests.

#include <vector>

#include "ebus/core_model.hpp"

namespace fixture {

// Every link identical; consumption at t_min is 30% above consumption at t_max.
inline ebus::LineSpec uniform_line(int id, int stops, int buses, double headway_s, double t_min_s, double lambda,
                                   double energy_at_tmax_kwh = 0.5) {
  ebus::LineSpec line;
  line.id = id;
  line.bus_count = buses;
  line.headway_s = headway_s;
  line.soc_min = 0.3;
  line.arrival_rate.assign(stops, lambda);
  const double t_max = 1.5 * t_min_s;
  const double e_hi = 1.3 * energy_at_tmax_kwh;
  const double slope = (e_hi - energy_at_tmax_kwh) / (t_max - t_min_s);
  for (int j = 0; j < stops; ++j) line.links.push_back({t_min_s, t_max, e_hi + slope * t_min_s, slope});
  return line;
}

inline ebus::NetworkConfig network(std::vector<ebus::LineSpec> lines) {
  ebus::NetworkConfig net;
  net.lines = std::move(lines);
  return net;
}

// Bus driving link `link`; the upcoming visit is `visit`. History is filled
// with nothing; callers add the records they need.
inline ebus::BusSnapshot on_link(const ebus::LineSpec& line, int line_index, int bus, int link, std::int64_t visit,
                                 double departed_s, double command_s, double soc = 1.0) {
  ebus::BusSnapshot b;
  b.line = line_index;
  b.bus = bus;
  b.soc = soc;
  b.visit = visit;
  b.location = ebus::OnLink{link, departed_s, command_s};
  b.last_arrival.assign(line.stop_count(), std::nullopt);
  return b;
}

inline ebus::BusSnapshot at_stop(const ebus::LineSpec& line, int line_index, int bus, std::int64_t visit,
                                 ebus::AtStop where, double soc = 1.0) {
  ebus::BusSnapshot b;
  b.line = line_index;
  b.bus = bus;
  b.soc = soc;
  b.visit = visit;
  b.location = where;
  b.last_arrival.assign(line.stop_count(), std::nullopt);
  b.last_arrival[where.stop] = ebus::ArrivalRecord{visit, where.arrived_s};
  return b;
}

}  // namespace fixture

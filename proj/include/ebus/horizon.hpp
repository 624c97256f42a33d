#pragma once

// Per-bus spatial horizons. The common time horizon T is turned into a list
// of upcoming stop visits for every bus by rolling it forward on a nominal
// clock (free-flow travel time plus the dwell expected at headway).

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ebus/core_model.hpp"

namespace ebus {

struct PredecessorRef {
  enum class Kind : std::uint8_t {
    None,      // beyond the predecessor's horizon; no headway coupling
    Variable,  // predecessor's visit is on its own horizon
    Constant,  // predecessor already arrived; recorded time
  };
  Kind kind = Kind::None;
  int bus = -1;        // predecessor bus index on the same line
  int position = -1;   // index into that bus's visit list (Variable)
  double time_s = 0.0; // recorded arrival (Constant)
};

struct StopVisit {
  int line = 0;  // index into NetworkConfig::lines
  int bus = 0;
  int stop = 0;
  std::int64_t visit = 0;
  int k = 1;  // how many times this bus reaches `stop` on the horizon, counting this one
  bool is_terminal = false;
  double nominal_arrival_s = 0.0;  // absolute time on the nominal clock
  PredecessorRef pred;
};

struct BusHorizon {
  int line = 0;
  int bus = 0;
  std::vector<StopVisit> visits;
};

struct HorizonSet {
  double t_now = 0.0;
  double length_s = 0.0;
  std::vector<BusHorizon> buses;  // same order as WorldSnapshot::buses

  const BusHorizon& of(const NetworkConfig& net, int line, int bus) const {
    return buses.at(static_cast<std::size_t>(bus_offset(net, line) + bus));
  }
};

// Nominal time from arriving at `stop` to arriving at the next stop.
inline double nominal_segment(const LineSpec& line, int stop, const Params& p) {
  return nominal_dwell(line, stop, p) + line.links[stop].t_min_s;
}

inline std::vector<StopVisit> build_horizon(const BusSnapshot& bus, const LineSpec& line, int line_index,
                                            const Params& p, double t_now) {
  const int m = line.stop_count();
  std::vector<StopVisit> out;
  std::map<int, int> seen;
  auto push = [&](int stop, std::int64_t visit, double arrival) {
    StopVisit v;
    v.line = line_index;
    v.bus = bus.bus;
    v.stop = stop;
    v.visit = visit;
    v.k = ++seen[stop];
    v.is_terminal = stop == 0;
    v.nominal_arrival_s = arrival;
    out.push_back(v);
  };

  double next_arrival;
  if (const auto* at = std::get_if<AtStop>(&bus.location)) {
    push(at->stop, bus.visit, at->arrived_s);
    const double ready = std::max(t_now, at->arrived_s + nominal_dwell(line, at->stop, p));
    next_arrival = ready + line.links[at->stop].t_min_s;
  } else {
    const auto& on = std::get<OnLink>(bus.location);
    const int stop = line.next_stop(on.link);
    const double arrival = std::max(t_now, on.departed_s + on.command_s);
    push(stop, bus.visit, arrival);
    next_arrival = arrival + nominal_segment(line, stop, p);
  }
  bool has_terminal = out.front().is_terminal;
  const int cap = 3 * m;
  while (static_cast<int>(out.size()) < cap) {
    if (next_arrival - t_now > p.horizon_s && has_terminal) break;
    const std::int64_t visit = out.back().visit + 1;
    const int stop = stop_of_visit(line, visit);
    push(stop, visit, next_arrival);
    has_terminal = has_terminal || stop == 0;
    next_arrival += nominal_segment(line, stop, p);
  }
  return out;
}

// Resolves every visit's predecessor reference. Throws InputError when a
// predecessor visit lies in the past but no matching arrival was recorded.
inline void link_predecessors(HorizonSet& set, const NetworkConfig& net, const WorldSnapshot& world) {
  for (auto& bh : set.buses) {
    const LineSpec& line = net.lines[bh.line];
    for (auto& v : bh.visits) {
      const VisitRef pv = predecessor_visit(line, bh.bus, v.visit);
      const BusHorizon& ph = set.of(net, bh.line, pv.bus);
      PredecessorRef ref;
      ref.bus = pv.bus;
      const std::int64_t first = ph.visits.front().visit;
      const std::int64_t last = ph.visits.back().visit;
      if (pv.visit >= first && pv.visit <= last) {
        ref.kind = PredecessorRef::Kind::Variable;
        ref.position = static_cast<int>(pv.visit - first);
      } else if (pv.visit < first) {
        const auto& rec = world.bus(net, bh.line, pv.bus).last_arrival[v.stop];
        if (!rec || rec->visit != pv.visit) {
          throw InputError("line " + std::to_string(line.id) + " bus " + std::to_string(pv.bus) +
                           ": no recorded arrival for visit " + std::to_string(pv.visit) + " at stop " +
                           std::to_string(v.stop));
        }
        ref.kind = PredecessorRef::Kind::Constant;
        ref.time_s = rec->time_s;
      }
      v.pred = ref;
    }
  }
}

inline HorizonSet build_horizons(const NetworkConfig& net, const WorldSnapshot& world) {
  HorizonSet set;
  set.t_now = world.time_s;
  set.length_s = net.params.horizon_s;
  std::size_t idx = 0;
  for (int l = 0; l < static_cast<int>(net.lines.size()); ++l) {
    for (int i = 0; i < net.lines[l].bus_count; ++i) {
      const BusSnapshot& bus = world.buses.at(idx++);
      if (bus.line != l || bus.bus != i) throw InputError("world snapshot buses are not in line/bus order");
      set.buses.push_back({l, i, build_horizon(bus, net.lines[l], l, net.params, world.time_s)});
    }
  }
  link_predecessors(set, net, world);
  return set;
}

}  // namespace ebus

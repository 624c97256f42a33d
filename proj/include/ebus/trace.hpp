#pragma once

// Episode traces: the event log, per-visit records and charger use of one
// simulated day, plus the cost accounting and invariant checks run on them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "ebus/controllers.hpp"
#include "ebus/core_model.hpp"

namespace ebus {

enum class TraceKind : std::uint8_t { Arrival, Departure, HoldEnd, ChargeStart, ChargeEnd, Plan };

inline const char* to_string(TraceKind k) {
  switch (k) {
    case TraceKind::Arrival: return "arrival";
    case TraceKind::Departure: return "departure";
    case TraceKind::HoldEnd: return "hold_end";
    case TraceKind::ChargeStart: return "charge_start";
    case TraceKind::ChargeEnd: return "charge_end";
    case TraceKind::Plan: return "plan";
  }
  return "?";
}

// `value` carries the SoC on arrival and charge end, the commanded travel
// time on departure, the charge duration on charge start and the MILP
// objective on plan events (line and bus are -1 there).
struct TraceEvent {
  double time_s = 0.0;
  int line = 0;  // line id
  int bus = 0;
  TraceKind kind = TraceKind::Arrival;
  int stop = 0;
  double value = 0.0;
};

inline constexpr double kNotYet = std::numeric_limits<double>::quiet_NaN();

struct VisitRecord {
  int line = 0;  // index into NetworkConfig::lines
  int bus = 0;
  std::int64_t visit = 0;
  int stop = 0;
  double arrival_s = 0.0;
  double departure_s = kNotYet;
  double travel_s = 0.0;        // driving time of the link into this stop (energy basis)
  double soc_arrival = 0.0;
  double soc_departure = kNotYet;
  double boarding_s = 0.0;
  double charge_start_s = kNotYet;
  double charge_s = 0.0;
  bool has_pred = false;
  double pred_arrival_s = 0.0;

  bool departed() const { return !std::isnan(departure_s); }
};

struct ChargeInterval {
  int line = 0;
  int bus = 0;
  std::int64_t visit = 0;
  double start_s = 0.0;
  double end_s = 0.0;
};

struct EpisodeCosts {
  double service = 0.0;
  double charging = 0.0;
  double total() const { return service + charging; }
};

struct EpisodeTrace {
  std::string controller;
  std::uint64_t seed = 0;
  std::vector<TraceEvent> events;
  std::vector<VisitRecord> visits;  // in arrival order
  std::vector<ChargeInterval> charges;
  std::vector<double> initial_soc;  // per global bus
  std::vector<double> final_soc;
  bool aborted = false;
  std::string abort_reason;
  std::vector<MpcStepStats> mpc_steps;
  long plan_fallbacks = 0;   // commands taken from the baseline because the plan had none
  long forced_charges = 0;   // departures that needed extra charge to respect the SoC floor
  std::vector<WorldSnapshot> snapshots;
};

// ---------------------------------------------------------------------------
// Costs and statistics

inline EpisodeCosts accumulate_costs(const EpisodeTrace& trace, const NetworkConfig& net) {
  const Params& p = net.params;
  EpisodeCosts c;
  for (const auto& v : trace.visits) {
    if (!v.has_pred || v.arrival_s < p.warmup_s || v.arrival_s > p.sim_length_s) continue;
    c.service += p.price_wait * std::abs(v.arrival_s - v.pred_arrival_s - net.lines[v.line].headway_s);
  }
  double seconds = 0.0;
  for (const auto& ch : trace.charges) {
    const double a = std::max(ch.start_s, p.warmup_s);
    const double b = std::min(ch.end_s, p.sim_length_s);
    if (b > a) seconds += b - a;
  }
  c.charging = p.price_energy * charged_energy_kwh(seconds, p.charger_kw);
  return c;
}

struct TerminalStats {
  long visits = 0;
  double waiting_without_charging_s = 0.0;  // mean per terminal visit
  double cumulative_dwell_s = 0.0;          // sum over all terminal visits
};

// Terminal visits that start after the warmup and end within the day.
inline TerminalStats terminal_stats(const EpisodeTrace& trace, const NetworkConfig& net) {
  const Params& p = net.params;
  TerminalStats s;
  double waiting = 0.0;
  for (const auto& v : trace.visits) {
    if (v.stop != 0 || !v.departed() || v.arrival_s < p.warmup_s || v.departure_s > p.sim_length_s) continue;
    const double dwell = v.departure_s - v.arrival_s;
    ++s.visits;
    s.cumulative_dwell_s += dwell;
    waiting += dwell - v.charge_s;
  }
  if (s.visits > 0) s.waiting_without_charging_s = waiting / s.visits;
  return s;
}

// ---------------------------------------------------------------------------
// Invariants

inline std::string visit_label(const NetworkConfig& net, int line, int bus, std::int64_t visit) {
  return "line " + std::to_string(net.lines[line].id) + " bus " + std::to_string(bus) + " visit " +
         std::to_string(visit);
}

// Empty when the trace respects ordering, charger exclusivity, the departure
// SoC window and energy bookkeeping.
inline std::vector<std::string> check_trace_invariants(const EpisodeTrace& trace, const NetworkConfig& net,
                                                       double tolerance = 1e-9) {
  const Params& p = net.params;
  std::vector<std::string> report;
  for (std::size_t k = 1; k < trace.events.size(); ++k) {
    if (trace.events[k].time_s < trace.events[k - 1].time_s) {
      report.push_back("event " + std::to_string(k) + " is earlier than its predecessor in the log");
      break;
    }
  }
  // Arrival order per line and visit.
  std::map<std::tuple<int, int, std::int64_t>, const VisitRecord*> by_visit;
  for (const auto& v : trace.visits) by_visit[{v.line, v.bus, v.visit}] = &v;
  for (const auto& v : trace.visits) {
    const VisitRef pv = predecessor_visit(net.lines[v.line], v.bus, v.visit);
    const auto it = by_visit.find({v.line, pv.bus, pv.visit});
    if (it == by_visit.end()) continue;
    if (v.arrival_s < it->second->arrival_s) {
      report.push_back("overtaking: " + visit_label(net, v.line, v.bus, v.visit) + " arrived before " +
                       visit_label(net, v.line, pv.bus, pv.visit));
    }
    if (v.departed() && it->second->departed() && v.departure_s < it->second->departure_s) {
      report.push_back("overtaking: " + visit_label(net, v.line, v.bus, v.visit) + " departed before " +
                       visit_label(net, v.line, pv.bus, pv.visit));
    }
  }
  // Charger exclusivity.
  std::vector<const ChargeInterval*> sorted;
  for (const auto& c : trace.charges) sorted.push_back(&c);
  std::sort(sorted.begin(), sorted.end(), [](const ChargeInterval* a, const ChargeInterval* b) {
    return a->start_s != b->start_s ? a->start_s < b->start_s : a->end_s < b->end_s;
  });
  const ChargeInterval* reach = nullptr;  // interval with the latest end so far
  for (const ChargeInterval* c : sorted) {
    if (reach && reach->end_s > c->start_s + tolerance) {
      report.push_back("charger overlap: " + visit_label(net, reach->line, reach->bus, reach->visit) + " and " +
                       visit_label(net, c->line, c->bus, c->visit));
    }
    if (!reach || c->end_s > reach->end_s) reach = c;
  }
  // Charging inside the terminal visit.
  for (const auto& c : trace.charges) {
    const auto it = by_visit.find({c.line, c.bus, c.visit});
    const bool inside = it != by_visit.end() && it->second->stop == 0 && c.start_s >= it->second->arrival_s &&
                        (!it->second->departed() || c.end_s <= it->second->departure_s);
    if (!inside) report.push_back("charge outside its terminal visit: " + visit_label(net, c.line, c.bus, c.visit));
  }
  // Departure SoC window and energy bookkeeping per bus.
  std::map<std::pair<int, int>, std::vector<const VisitRecord*>> per_bus;
  for (const auto& v : trace.visits) per_bus[{v.line, v.bus}].push_back(&v);
  for (auto& [key, list] : per_bus) {
    std::sort(list.begin(), list.end(), [](const VisitRecord* a, const VisitRecord* b) { return a->visit < b->visit; });
    const LineSpec& line = net.lines[key.first];
    const int g = bus_offset(net, key.first) + key.second;
    double soc = g < static_cast<int>(trace.initial_soc.size()) ? trace.initial_soc[g] : 1.0;
    for (const VisitRecord* v : list) {
      const LinkSpec& link = line.links[(v->stop + line.stop_count() - 1) % line.stop_count()];
      soc = soc_after_link(soc, link_energy(link, std::clamp(v->travel_s, link.t_min_s, link.t_max_s)), p.battery_kwh);
      const std::string label = visit_label(net, v->line, v->bus, v->visit);
      if (std::abs(soc - v->soc_arrival) > tolerance) report.push_back("energy bookkeeping off at arrival: " + label);
      soc = v->soc_arrival;
      soc = soc_after_charge(soc, v->charge_s, p.charger_kw, p.battery_kwh);
      if (!v->departed()) continue;
      if (std::abs(soc - v->soc_departure) > tolerance) report.push_back("energy bookkeeping off at departure: " + label);
      soc = v->soc_departure;
      if (v->stop == 0 && (soc < line.soc_min - tolerance || soc > 1.0 + tolerance)) {
        char buf[64];
        std::snprintf(buf, sizeof buf, " (soc %.6f)", soc);
        report.push_back("terminal departure outside the SoC window: " + label + buf);
      }
    }
    if (!trace.aborted && g < static_cast<int>(trace.final_soc.size()) &&
        std::abs(trace.final_soc[g] - soc) > tolerance) {
      // A bus still charging at the end of the day has not booked its charge.
      const VisitRecord* last = list.back();
      if (last->departed() || last->charge_s == 0.0)
        report.push_back("final SoC does not match the trace for line " + std::to_string(line.id) + " bus " +
                         std::to_string(key.second));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Export

inline void write_events_csv(std::ostream& os, const EpisodeTrace& trace) {
  os << "time_s,line,bus,event_kind,stop,value\n";
  char buf[160];
  for (const auto& e : trace.events) {
    std::snprintf(buf, sizeof buf, "%.6f,%d,%d,%s,%d,%.9g\n", e.time_s, e.line, e.bus, to_string(e.kind), e.stop,
                  e.value);
    os << buf;
  }
}

}  // namespace ebus

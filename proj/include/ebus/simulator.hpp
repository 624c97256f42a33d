#pragma once

// Seeded discrete-event simulation of one day of operation under either
// controller.

#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "ebus/controllers.hpp"
#include "ebus/core_model.hpp"
#include "ebus/errors.hpp"
#include "ebus/initial_state.hpp"
#include "ebus/trace.hpp"

namespace ebus {

enum class ControllerKind : std::uint8_t { Mpc, Fcfs };

inline const char* to_string(ControllerKind k) { return k == ControllerKind::Mpc ? "mpc" : "fcfs"; }

inline ControllerKind parse_controller(const std::string& s) {
  if (s == "mpc") return ControllerKind::Mpc;
  if (s == "fcfs") return ControllerKind::Fcfs;
  throw InputError("unknown controller '" + s + "' (expected mpc or fcfs)");
}

struct EpisodeConfig {
  NetworkConfig network;
  ControllerKind controller = ControllerKind::Fcfs;
  std::uint64_t seed = 0;
  double traffic_cov = 0.1;
  std::string initial_spacing = "even";  // the only rule: one headway apart on a nominal loop
  MpcSettings mpc;
  std::vector<double> snapshot_times;  // world states to keep in the trace

  void validate() const {
    network.validate();
    if (!(traffic_cov >= 0.0) || !std::isfinite(traffic_cov)) throw InputError("traffic_cov must be finite and >= 0");
    if (initial_spacing != "even") throw InputError("initial_spacing: only 'even' is supported");
    if (mpc.node_limit < 1) throw InputError("mpc.node_limit must be >= 1");
    if (!(mpc.relative_gap >= 0.0)) throw InputError("mpc.relative_gap must be >= 0");
  }
};

using Rng = std::mt19937_64;

// Independent generator for one (seed, stream) pair.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

// Log-normal speed floor with median t_min and the given coefficient of
// variation.
inline double sample_traffic_floor(const LinkSpec& link, double cov, Rng& rng) {
  if (cov <= 0.0) return link.t_min_s;
  std::lognormal_distribution<double> dist(std::log(link.t_min_s), std::sqrt(std::log1p(cov * cov)));
  return dist(rng);
}

inline long sample_boarding(double arrival_rate, double gap_s, Rng& rng) {
  const double mean = arrival_rate * gap_s;
  if (!(mean > 0.0)) return 0;
  std::poisson_distribution<long> dist(mean);
  return dist(rng);
}

namespace detail {

enum class Ev : std::uint8_t { Snapshot, Control, Arrive, Depart, HoldEnd, ChargeStart, ChargeEnd };

struct Event {
  double time = 0.0;
  int line = -1;  // negative for snapshots and control ticks, which go first at equal times
  int bus = 0;
  std::uint64_t seq = 0;
  Ev kind = Ev::Control;
  int g = -1;
  long gen = 0;
};

struct EventLater {
  bool operator()(const Event& a, const Event& b) const {
    return std::tie(a.time, a.line, a.bus, a.seq) > std::tie(b.time, b.line, b.bus, b.seq);
  }
};

struct SimBus {
  int line = 0;
  int bus = 0;
  std::int64_t visit = 0;  // current visit at a stop, next visit on a link
  bool at_stop = false;
  int stop = 0;            // stop index, or link index while driving
  double soc = 1.0;
  // On a link.
  double departed_s = 0.0;
  double command_s = 0.0;
  double drive_s = 0.0;
  bool arrival_blocked = false;
  // At a stop.
  double arrived_s = 0.0;
  double arrival_soc = 1.0;
  double boarding_s = 0.0;
  StopStatus status = StopStatus::Dwelling;
  double charge_start_s = 0.0;
  double charge_s = 0.0;
  double charged_ready_s = 0.0;  // charger released plus disconnect
  bool baseline = false;         // commands come from the baseline rules
  bool departure_armed = false;
  bool departure_blocked = false;
  double earliest_departure_s = 0.0;
  long gen = 0;
  std::size_t record = 0;
  std::vector<std::optional<ArrivalRecord>> arrivals;
  std::vector<std::optional<ArrivalRecord>> departures;
};

class Episode {
 public:
  explicit Episode(const EpisodeConfig& cfg) : cfg_(cfg), net_(cfg.network), p_(cfg.network.params) {}

  EpisodeTrace run() {
    trace_.controller = to_string(cfg_.controller);
    trace_.seed = cfg_.seed;
    initialize();
    while (!queue_.empty() && !trace_.aborted) {
      const Event e = queue_.top();
      if (e.time > p_.sim_length_s) break;
      queue_.pop();
      now_ = e.time;
      switch (e.kind) {
        case Ev::Snapshot: trace_.snapshots.push_back(snapshot()); break;
        case Ev::Control: on_control(); break;
        case Ev::Arrive: on_arrive(e.g); break;
        case Ev::Depart: on_depart(e.g, e.gen); break;
        case Ev::HoldEnd: on_hold_end(e.g, e.gen); break;
        case Ev::ChargeStart: on_charge_start(e.g); break;
        case Ev::ChargeEnd: on_charge_end(e.g); break;
      }
    }
    for (const SimBus& b : buses_) trace_.final_soc.push_back(b.soc);
    return std::move(trace_);
  }

 private:
  const EpisodeConfig& cfg_;
  const NetworkConfig& net_;
  const Params& p_;
  std::vector<SimBus> buses_;
  std::vector<Rng> traffic_rng_;                // per bus
  std::vector<std::vector<Rng>> boarding_rng_;  // per line and stop
  std::priority_queue<Event, std::vector<Event>, EventLater> queue_;
  std::uint64_t seq_ = 0;
  double now_ = 0.0;
  double charger_free_s_ = -1e300;
  std::optional<ControlPlan> plan_;
  EpisodeTrace trace_;

  bool mpc() const { return cfg_.controller == ControllerKind::Mpc; }
  const LineSpec& line_of(const SimBus& b) const { return net_.lines[b.line]; }
  SimBus& bus_at(int line, int bus) { return buses_[bus_offset(net_, line) + bus]; }

  void push(double t, Ev kind, int g = -1, long gen = 0) {
    Event e;
    e.time = t;
    e.kind = kind;
    e.seq = seq_++;
    e.g = g;
    e.gen = gen;
    if (g >= 0) {
      e.line = buses_[g].line;
      e.bus = buses_[g].bus;
    }
    queue_.push(e);
  }

  void log(TraceKind kind, const SimBus* b, int stop, double value) {
    trace_.events.push_back({now_, b ? line_of(*b).id : -1, b ? b->bus : -1, kind, stop, value});
  }

  const PlannedVisit* planned(int g, std::int64_t visit) const {
    if (!plan_ || g >= static_cast<int>(plan_->buses.size())) return nullptr;
    return plan_->buses[g].find(visit);
  }

  void initialize() {
    const WorldSnapshot world = initial_world(net_);
    std::uint64_t stream = 0;
    for (const BusSnapshot& s : world.buses) {
      const LineSpec& line = net_.lines[s.line];
      const auto& on = std::get<OnLink>(s.location);
      const double scale = nominal_loop_scale(line, p_);
      SimBus b;
      b.line = s.line;
      b.bus = s.bus;
      b.visit = s.visit;
      b.stop = on.link;
      b.soc = s.soc;
      b.departed_s = on.departed_s;
      b.command_s = on.command_s;
      b.arrivals = s.last_arrival;
      b.departures.assign(line.stop_count(), std::nullopt);
      for (int st = 0; st < line.stop_count(); ++st) {
        if (!s.last_arrival[st]) continue;
        const ArrivalRecord& a = *s.last_arrival[st];
        const bool current = a.visit == s.visit - 1;
        b.departures[st] = ArrivalRecord{a.visit, current ? on.departed_s : a.time_s + nominal_dwell(line, st, p_) * scale};
      }
      buses_.push_back(std::move(b));
      traffic_rng_.push_back(make_stream(cfg_.seed, stream++));
      trace_.initial_soc.push_back(s.soc);
    }
    for (const LineSpec& line : net_.lines) {
      boarding_rng_.emplace_back();
      for (int st = 0; st < line.stop_count(); ++st) boarding_rng_.back().push_back(make_stream(cfg_.seed, stream++));
    }
    for (int g = 0; g < static_cast<int>(buses_.size()); ++g) {
      SimBus& b = buses_[g];
      b.drive_s = std::max(b.command_s, sample_traffic_floor(line_of(b).links[b.stop], cfg_.traffic_cov, traffic_rng_[g]));
      push(b.departed_s + b.drive_s, Ev::Arrive, g);
    }
    if (mpc()) push(0.0, Ev::Control);
    for (double t : cfg_.snapshot_times) {
      Event e;
      e.time = t;
      e.line = -2;
      e.seq = seq_++;
      e.kind = Ev::Snapshot;
      queue_.push(e);
    }
  }

  WorldSnapshot snapshot() const {
    WorldSnapshot w;
    w.time_s = now_;
    for (const SimBus& b : buses_) {
      BusSnapshot s;
      s.line = b.line;
      s.bus = b.bus;
      s.visit = b.visit;
      s.last_arrival = b.arrivals;
      if (b.at_stop) {
        s.soc = b.arrival_soc;
        s.location = AtStop{b.stop, b.arrived_s, b.status, b.boarding_s, b.charge_start_s, b.charge_s};
      } else {
        s.soc = b.soc;
        s.location = OnLink{b.stop, b.departed_s, b.command_s};
      }
      w.buses.push_back(std::move(s));
    }
    return w;
  }

  void on_control() {
    MpcStep step = mpc_step(snapshot(), net_, cfg_.mpc, plan_ ? &*plan_ : nullptr);
    log(TraceKind::Plan, nullptr, -1, step.stats.objective);
    trace_.mpc_steps.push_back(step.stats);
    plan_ = std::move(step.plan);
    for (int g = 0; g < static_cast<int>(buses_.size()); ++g) {
      SimBus& b = buses_[g];
      if (!b.at_stop || b.stop != 0) continue;
      const PlannedVisit* pv = planned(g, b.visit);
      if (b.status == StopStatus::Holding) {
        ++b.gen;
        b.departure_armed = false;
        b.departure_blocked = false;
        b.baseline = pv == nullptr;
        if (b.baseline) ++trace_.plan_fallbacks;
        push(std::max(now_, hold_end(b, pv)), Ev::HoldEnd, g, b.gen);
      } else if (b.status == StopStatus::Committed && !b.baseline && pv) {
        ++b.gen;
        b.departure_blocked = false;
        b.departure_armed = true;
        b.earliest_departure_s = std::max(b.charged_ready_s, pv->departure_s);
        push(std::max(now_, b.earliest_departure_s), Ev::Depart, g, b.gen);
      }
    }
    const double next = now_ + p_.control_interval_s;
    if (next < p_.sim_length_s) push(next, Ev::Control);
  }

  void on_arrive(int g) {
    SimBus& b = buses_[g];
    const LineSpec& line = line_of(b);
    const int s = line.next_stop(b.stop);
    const VisitRef pv = predecessor_visit(line, b.bus, b.visit);
    const SimBus& pred = bus_at(b.line, pv.bus);
    const auto& pred_rec = pred.arrivals[s];
    if (pv.bus != b.bus && !(pred_rec && pred_rec->visit >= pv.visit)) {
      b.arrival_blocked = true;
      return;
    }
    b.arrival_blocked = false;
    const LinkSpec& link = line.links[b.stop];
    b.soc = soc_after_link(b.soc, link_energy(link, std::clamp(b.drive_s, link.t_min_s, link.t_max_s)), p_.battery_kwh);
    if (b.soc < 0.0) {
      trace_.aborted = true;
      trace_.abort_reason = "battery depleted: " + visit_label(net_, b.line, b.bus, b.visit) + " at t=" +
                            std::to_string(now_);
      return;
    }
    VisitRecord r;
    r.line = b.line;
    r.bus = b.bus;
    r.visit = b.visit;
    r.stop = s;
    r.arrival_s = now_;
    r.travel_s = b.drive_s;
    r.soc_arrival = b.soc;
    double gap = 0.0;
    if (pred_rec && pred_rec->visit == pv.visit) {
      r.has_pred = true;
      r.pred_arrival_s = pred_rec->time_s;
      gap = now_ - pred_rec->time_s;
    }
    const long pax = sample_boarding(line.arrival_rate[s], gap, boarding_rng_[b.line][s]);
    r.boarding_s = p_.boarding_s_per_pax * static_cast<double>(pax);

    b.at_stop = true;
    b.stop = s;
    b.arrived_s = now_;
    b.arrival_soc = b.soc;
    b.boarding_s = r.boarding_s;
    b.status = s == 0 ? StopStatus::Holding : StopStatus::Dwelling;
    b.charge_start_s = 0.0;
    b.charge_s = 0.0;
    b.departure_armed = false;
    b.departure_blocked = false;
    b.arrivals[s] = ArrivalRecord{b.visit, now_};
    b.record = trace_.visits.size();
    trace_.visits.push_back(r);
    log(TraceKind::Arrival, &b, s, b.soc);

    const VisitRef fv = follower_visit(line, b.bus, b.visit);
    const int fg = bus_offset(net_, b.line) + fv.bus;
    if (fg != g && buses_[fg].arrival_blocked && buses_[fg].visit == fv.visit) push(now_, Ev::Arrive, fg);

    const double ready = now_ + b.boarding_s;
    ++b.gen;
    if (s != 0) {
      arm_departure(g, ready);
      return;
    }
    b.baseline = !mpc();
    double hold_end = ready;
    if (mpc()) {
      if (const PlannedVisit* p = planned(g, b.visit)) {
        hold_end = this->hold_end(b, p);
      } else {
        b.baseline = true;
        ++trace_.plan_fallbacks;
      }
    }
    push(hold_end, Ev::HoldEnd, g, b.gen);
  }

  // End of the planned hold: the planned arrival plus w, never before
  // boarding is done.
  double hold_end(const SimBus& b, const PlannedVisit* pv) const {
    const double ready = b.arrived_s + b.boarding_s;
    if (!pv) return ready;
    return std::max(ready, pv->arrival_s + pv->hold_s);
  }

  void arm_departure(int g, double t) {
    SimBus& b = buses_[g];
    b.departure_armed = true;
    b.departure_blocked = false;
    b.earliest_departure_s = t;
    push(t, Ev::Depart, g, b.gen);
  }

  void on_hold_end(int g, long gen) {
    SimBus& b = buses_[g];
    if (gen != b.gen || !b.at_stop || b.status != StopStatus::Holding) return;
    const LineSpec& line = line_of(b);
    log(TraceKind::HoldEnd, &b, 0, now_ - b.arrived_s);
    const double start = std::max(now_ + p_.charger_setup_s, charger_free_s_);
    double c = 0.0;
    if (b.baseline) {
      c = fcfs_charge_time(b.soc, start, p_, line.soc_min);
    } else {
      const PlannedVisit* pv = planned(g, b.visit);
      if (pv && pv->charge && pv->charge_s > 1e-6) c = pv->charge_s;
      const double floor = charge_time_to(b.soc, line.soc_min, p_);
      if (floor > c) {
        c = floor;
        ++trace_.forced_charges;
      }
      c = std::min(c, charge_time_to(b.soc, 1.0, p_));
    }
    if (c <= 0.0) {
      arm_departure(g, now_);
      return;
    }
    b.status = StopStatus::Committed;
    b.charge_start_s = start;
    b.charge_s = c;
    b.charged_ready_s = start + c + p_.charger_setup_s;
    charger_free_s_ = start + c;
    VisitRecord& r = trace_.visits[b.record];
    r.charge_start_s = start;
    r.charge_s = c;
    trace_.charges.push_back({b.line, b.bus, b.visit, start, start + c});
    push(start, Ev::ChargeStart, g);
    push(start + c, Ev::ChargeEnd, g);
    double earliest = b.charged_ready_s;
    if (!b.baseline) {
      if (const PlannedVisit* pv = planned(g, b.visit)) earliest = std::max(earliest, pv->departure_s);
    }
    arm_departure(g, earliest);
  }

  void on_charge_start(int g) {
    const SimBus& b = buses_[g];
    log(TraceKind::ChargeStart, &b, 0, b.charge_s);
  }

  void on_charge_end(int g) {
    SimBus& b = buses_[g];
    b.soc = soc_after_charge(b.soc, b.charge_s, p_.charger_kw, p_.battery_kwh);
    log(TraceKind::ChargeEnd, &b, 0, b.soc);
  }

  // Arrival of the predecessor at the next stop: recorded, or its commanded
  // arrival while it is still driving there.
  double predecessor_next_arrival(const SimBus& b) const {
    const LineSpec& line = line_of(b);
    const int next = line.next_stop(b.stop);
    const VisitRef pv = predecessor_visit(line, b.bus, b.visit + 1);
    const SimBus& pred = buses_[bus_offset(net_, b.line) + pv.bus];
    if (pred.arrivals[next] && pred.arrivals[next]->visit == pv.visit) return pred.arrivals[next]->time_s;
    if (!pred.at_stop && pred.visit == pv.visit) return pred.departed_s + pred.command_s;
    return now_ + line.links[b.stop].t_min_s - line.headway_s;
  }

  void on_depart(int g, long gen) {
    SimBus& b = buses_[g];
    if (gen != b.gen || !b.at_stop || !b.departure_armed || now_ < b.earliest_departure_s) return;
    const LineSpec& line = line_of(b);
    const int s = b.stop;
    const VisitRef pv = predecessor_visit(line, b.bus, b.visit);
    const SimBus& pred = bus_at(b.line, pv.bus);
    const auto& pred_dep = pred.departures[s];
    if (pv.bus != b.bus && !(pred_dep && pred_dep->visit >= pv.visit)) {
      b.departure_blocked = true;
      return;
    }
    b.departure_blocked = false;
    if (s == 0 && b.baseline && pred_dep) {
      const double dispatch = fcfs_dispatch_time(now_, pred_dep->time_s, line.headway_s);
      if (dispatch > now_) {
        b.earliest_departure_s = dispatch;
        push(dispatch, Ev::Depart, g, b.gen);
        return;
      }
    }
    const LinkSpec& link = line.links[s];
    double tau = 0.0;
    const PlannedVisit* p = mpc() ? planned(g, b.visit) : nullptr;
    const PlannedVisit* p_next = p ? planned(g, b.visit + 1) : nullptr;
    if (p && p->has_tau && p_next) {
      // Aim for the planned spacing behind the predecessor at the next stop,
      // using its recorded or committed arrival when there is one.
      double target = p_next->arrival_s;
      const VisitRef qv = predecessor_visit(line, b.bus, b.visit + 1);
      const PlannedVisit* q = planned(bus_offset(net_, b.line) + qv.bus, qv.visit);
      const SimBus& pb = buses_[bus_offset(net_, b.line) + qv.bus];
      const int nx = line.next_stop(s);
      double pa = kNotYet;
      if (pb.arrivals[nx] && pb.arrivals[nx]->visit == qv.visit) {
        pa = pb.arrivals[nx]->time_s;
      } else if (!pb.at_stop && pb.visit == qv.visit) {
        pa = pb.departed_s + pb.command_s;
      }
      if (q && !std::isnan(pa)) target = pa + (p_next->arrival_s - q->arrival_s);
      tau = std::clamp(target - now_, link.t_min_s, link.t_max_s);
    } else if (p && p->has_tau) {
      tau = std::clamp(p->tau_s, link.t_min_s, link.t_max_s);
    } else {
      if (mpc()) ++trace_.plan_fallbacks;
      tau = fcfs_travel_time(link, now_, predecessor_next_arrival(b), line.headway_s);
    }
    VisitRecord& r = trace_.visits[b.record];
    r.departure_s = now_;
    r.soc_departure = b.soc;
    b.departures[s] = ArrivalRecord{b.visit, now_};
    log(TraceKind::Departure, &b, s, tau);

    b.at_stop = false;
    b.departure_armed = false;
    b.departed_s = now_;
    b.command_s = tau;
    b.drive_s = std::max(tau, sample_traffic_floor(link, cfg_.traffic_cov, traffic_rng_[g]));
    const std::int64_t left = b.visit;
    ++b.visit;
    push(now_ + b.drive_s, Ev::Arrive, g);

    const VisitRef fv = follower_visit(line, b.bus, left);
    const int fg = bus_offset(net_, b.line) + fv.bus;
    SimBus& f = buses_[fg];
    if (fg != g && f.at_stop && f.departure_blocked && f.visit == fv.visit) push(now_, Ev::Depart, fg, f.gen);
  }
};

}  // namespace detail

inline EpisodeTrace run_episode(const EpisodeConfig& config) {
  config.validate();
  return detail::Episode(config).run();
}

}  // namespace ebus

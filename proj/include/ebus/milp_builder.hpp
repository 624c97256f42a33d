#pragma once

// Assembles the receding-horizon charging and speed/holding MILP over a set
// of linked horizons and maps solutions back to control plans.
//
// Columns per visit: arrival time t and arrival SoC sigma; travel time tau for
// the link leaving the visit (all but the last visit); headway slack eta when
// the predecessor is resolvable. Terminal visits add hold w, charge flag b,
// charge time c, charger start tchar and the SoC-floor slack. One end-of-
// horizon shortfall nu per bus and one order flag psi per pair of terminal
// visits whose charger windows can overlap. Times are relative to t_now.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "ebus/core_model.hpp"
#include "ebus/horizon.hpp"
#include "ebus/milp_problem.hpp"

namespace ebus {

struct VisitColumns {
  int t = -1;
  int sigma = -1;
  int tau = -1;
  int eta = -1;
  int w = -1;
  int b = -1;
  int c = -1;
  int tchar = -1;
  int soc_slack = -1;
};

struct PsiColumn {
  int bus_a = 0;  // global bus index
  int pos_a = 0;
  int bus_b = 0;
  int pos_b = 0;
  int column = -1;
};

// Earliest/latest values implied by the travel-time bounds, propagated along
// each horizon. Relative to t_now.
struct VisitWindow {
  double t_lo = 0.0, t_hi = 0.0;
  double sigma_lo = 0.0, sigma_hi = 0.0;
  double tchar_lo = 0.0, tchar_hi = 0.0;
  double c_hi = 0.0;
};

struct ModelIndex {
  double t_now = 0.0;
  std::vector<std::vector<VisitColumns>> visits;   // [global bus][position]
  std::vector<std::vector<VisitWindow>> windows;   // [global bus][position]
  std::vector<int> nu;                             // per global bus
  std::vector<double> soc_target;                  // sigma_bar(t_now) per global bus
  std::vector<PsiColumn> psi;
  double soc_slack_price = 0.0;
};

struct BuiltProblem {
  MilpProblem problem;
  ModelIndex index;
  HorizonSet horizons;
};

namespace detail {

inline std::string col_name(const char* sym, int line_id, int bus, std::int64_t visit) {
  return std::string(sym) + "_" + std::to_string(line_id) + "_" + std::to_string(bus) + "_" + std::to_string(visit);
}

// Fixed timing of each bus's first horizon visit, honouring the rule that a
// bus never arrives at or leaves a stop before its predecessor.
class FirstVisitTiming {
 public:
  FirstVisitTiming(const NetworkConfig& net, const WorldSnapshot& world, const HorizonSet& set)
      : net_(net), world_(world), set_(set), arrival_(world.buses.size(), kUnset), departure_(world.buses.size(), kUnset) {}

  double arrival(int line, int bus) {
    const int g = bus_offset(net_, line) + bus;
    if (arrival_[g] != kUnset) return arrival_[g];
    arrival_[g] = kBusy;
    const BusSnapshot& s = world_.bus(net_, line, bus);
    double t;
    if (const auto* at = std::get_if<AtStop>(&s.location)) {
      t = at->arrived_s;
    } else {
      const auto& on = std::get<OnLink>(s.location);
      t = std::max(world_.time_s, on.departed_s + on.command_s);
      const StopVisit& v = set_.of(net_, line, bus).visits.front();
      if (v.pred.kind == PredecessorRef::Kind::Constant) t = std::max(t, v.pred.time_s);
      if (v.pred.kind == PredecessorRef::Kind::Variable && v.pred.position == 0 && arrival_[g - bus + v.pred.bus] != kBusy)
        t = std::max(t, arrival(line, v.pred.bus));
    }
    return arrival_[g] = t;
  }

  // Departure from the current regular stop of a dwelling bus.
  double departure(int line, int bus) {
    const int g = bus_offset(net_, line) + bus;
    if (departure_[g] != kUnset) return departure_[g];
    departure_[g] = kBusy;
    const BusSnapshot& s = world_.bus(net_, line, bus);
    const auto& at = std::get<AtStop>(s.location);
    double d = std::max(world_.time_s, at.arrived_s + at.boarding_s);
    const StopVisit& v = set_.of(net_, line, bus).visits.front();
    if (v.pred.kind == PredecessorRef::Kind::Variable && v.pred.position == 0) {
      const BusSnapshot& ps = world_.bus(net_, line, v.pred.bus);
      const int pg = g - bus + v.pred.bus;
      if (ps.at_stop() && departure_[pg] != kBusy) d = std::max(d, departure(line, v.pred.bus));
    }
    return departure_[g] = d;
  }

 private:
  static constexpr double kUnset = -std::numeric_limits<double>::infinity();
  static constexpr double kBusy = std::numeric_limits<double>::infinity();
  const NetworkConfig& net_;
  const WorldSnapshot& world_;
  const HorizonSet& set_;
  std::vector<double> arrival_, departure_;
};

}  // namespace detail

inline BuiltProblem build_problem(const HorizonSet& horizons, const WorldSnapshot& world, const NetworkConfig& net) {
  if (horizons.buses.empty()) throw InputError("build_problem: empty horizon set");
  if (horizons.buses.size() != world.buses.size()) throw InputError("build_problem: horizon/snapshot mismatch");
  const Params& p = net.params;
  const double t_now = world.time_s;
  const double rate = charge_rate(p);
  const double setup = p.charger_setup_s;

  BuiltProblem out;
  out.horizons = horizons;
  MilpProblem& mp = out.problem;
  ModelIndex& ix = out.index;
  ix.t_now = t_now;
  ix.soc_slack_price = 100.0 * p.price_end * p.battery_kwh;
  const std::size_t nb = horizons.buses.size();
  ix.visits.resize(nb);
  ix.windows.resize(nb);
  ix.nu.assign(nb, -1);
  ix.soc_target.assign(nb, 0.0);
  for (std::size_t g = 0; g < nb; ++g) {
    ix.visits[g].resize(horizons.buses[g].visits.size());
    ix.windows[g].resize(horizons.buses[g].visits.size());
  }

  detail::FirstVisitTiming first(net, world, horizons);
  const double charge_price = charged_energy_kwh(1.0, p.charger_kw) * p.price_energy;

  // Pass 1: windows, processed so that every predecessor comes first.
  struct Item {
    std::int64_t visit;
    int bus;
    int g;
    int pos;
  };
  for (int l = 0; l < static_cast<int>(net.lines.size()); ++l) {
    const LineSpec& line = net.lines[l];
    const int base = bus_offset(net, l);
    std::vector<Item> order;
    for (int i = 0; i < line.bus_count; ++i) {
      const auto& vs = horizons.buses[base + i].visits;
      for (int q = 0; q < static_cast<int>(vs.size()); ++q) order.push_back({vs[q].visit, i, base + i, q});
    }
    std::sort(order.begin(), order.end(),
              [](const Item& a, const Item& b) { return a.visit != b.visit ? a.visit < b.visit : a.bus < b.bus; });
    for (const Item& it : order) {
      const StopVisit& v = horizons.buses[it.g].visits[it.pos];
      const BusSnapshot& snap = world.buses[it.g];
      VisitWindow& win = ix.windows[it.g][it.pos];
      if (it.pos == 0) {
        const double t0 = first.arrival(l, it.bus) - t_now;
        win.t_lo = win.t_hi = t0;
        double s0 = snap.soc;
        if (const auto* on = std::get_if<OnLink>(&snap.location)) {
          const LinkSpec& k = line.links[on->link];
          s0 = soc_after_link(snap.soc, link_energy(k, std::clamp(on->command_s, k.t_min_s, k.t_max_s)), p.battery_kwh);
        }
        win.sigma_lo = win.sigma_hi = s0;
      }
      // Range of the boarding dwell at this visit.
      const double beta = p.boarding_s_per_pax * line.arrival_rate[v.stop];
      double dwell_lo, dwell_hi;
      if (v.pred.kind == PredecessorRef::Kind::None) {
        dwell_lo = dwell_hi = nominal_dwell(line, v.stop, p);
      } else {
        double p_lo, p_hi;
        if (v.pred.kind == PredecessorRef::Kind::Constant) {
          p_lo = p_hi = v.pred.time_s - t_now;
        } else {
          const VisitWindow& pw = ix.windows[base + v.pred.bus][v.pred.position];
          p_lo = pw.t_lo;
          p_hi = pw.t_hi;
        }
        dwell_lo = beta * std::max(0.0, win.t_lo - p_hi);
        dwell_hi = beta * std::max(0.0, win.t_hi - p_lo);
      }
      const bool current = it.pos == 0 && snap.at_stop();
      const AtStop* at = current ? &std::get<AtStop>(snap.location) : nullptr;
      double dep_lo = win.t_lo + dwell_lo, dep_hi = win.t_hi + dwell_hi;
      double s_dep_lo = win.sigma_lo, s_dep_hi = win.sigma_hi;
      if (v.is_terminal) {
        double w_lo, w_hi;
        if (at != nullptr) {
          const double elapsed = t_now - at->arrived_s;
          if (at->status == StopStatus::Committed) {
            w_lo = at->charge_start_s - setup - at->arrived_s;
          } else {
            w_lo = std::max(elapsed, at->boarding_s);
          }
          w_hi = std::max(w_lo, elapsed) + p.max_hold_s;
        } else {
          w_lo = dwell_lo;
          w_hi = std::max(p.max_hold_s, dwell_hi);
        }
        if (at != nullptr && at->status == StopStatus::Committed) {
          win.c_hi = at->charge_s;
          win.tchar_lo = win.tchar_hi = at->charge_start_s - t_now;
          const double used = at->charge_s > 0.0 ? at->charge_s + 2.0 * setup : 0.0;
          dep_lo = win.t_lo + std::max(w_lo, 0.0) + used;
          dep_hi = win.t_hi + w_hi + used;
          s_dep_lo = win.sigma_lo + rate * at->charge_s;
          s_dep_hi = win.sigma_hi + rate * at->charge_s;
        } else {
          win.c_hi = std::max(0.0, (1.0 - win.sigma_lo) / rate);
          win.tchar_lo = win.t_lo + w_lo + setup;
          win.tchar_hi = win.t_hi + w_hi + setup;
          dep_lo = win.t_lo + w_lo;
          dep_hi = win.t_hi + w_hi + win.c_hi + 2.0 * setup;
          s_dep_hi = std::min(1.0, win.sigma_hi + rate * win.c_hi);
        }
      } else if (at != nullptr) {
        dep_lo = dep_hi = first.departure(l, it.bus) - t_now;
      }
      if (it.pos + 1 < static_cast<int>(ix.windows[it.g].size())) {
        const LinkSpec& k = line.links[v.stop];
        VisitWindow& nx = ix.windows[it.g][it.pos + 1];
        nx.t_lo = dep_lo + k.t_min_s;
        nx.t_hi = dep_hi + k.t_max_s;
        nx.sigma_lo = s_dep_lo - link_energy(k, k.t_min_s) / p.battery_kwh;
        nx.sigma_hi = s_dep_hi - link_energy(k, k.t_max_s) / p.battery_kwh;
      }
    }
  }

  // Pass 2: columns.
  for (std::size_t g = 0; g < nb; ++g) {
    const BusHorizon& bh = horizons.buses[g];
    const LineSpec& line = net.lines[bh.line];
    const BusSnapshot& snap = world.buses[g];
    const int n = static_cast<int>(bh.visits.size());
    for (int q = 0; q < n; ++q) {
      const StopVisit& v = bh.visits[q];
      const VisitWindow& win = ix.windows[g][q];
      VisitColumns& cols = ix.visits[g][q];
      const bool current = q == 0 && snap.at_stop();
      const AtStop* at = current ? &std::get<AtStop>(snap.location) : nullptr;
      cols.t = mp.add_column(detail::col_name("t", line.id, bh.bus, v.visit), win.t_lo, win.t_hi);
      cols.sigma = mp.add_column(detail::col_name("sigma", line.id, bh.bus, v.visit), win.sigma_lo, win.sigma_hi);
      if (q + 1 < n) {
        const LinkSpec& k = line.links[v.stop];
        cols.tau = mp.add_column(detail::col_name("tau", line.id, bh.bus, v.visit), k.t_min_s, k.t_max_s);
      }
      if (v.pred.kind != PredecessorRef::Kind::None) {
        double p_lo, p_hi;
        if (v.pred.kind == PredecessorRef::Kind::Constant) {
          p_lo = p_hi = v.pred.time_s - t_now;
        } else {
          const VisitWindow& pw = ix.windows[g - bh.bus + v.pred.bus][v.pred.position];
          p_lo = pw.t_lo;
          p_hi = pw.t_hi;
        }
        const double eta_hi = std::max(std::abs(win.t_hi - p_lo - line.headway_s), std::abs(win.t_lo - p_hi - line.headway_s));
        cols.eta = mp.add_column(detail::col_name("eta", line.id, bh.bus, v.visit), 0.0, eta_hi, p.price_wait);
      }
      if (v.is_terminal) {
        double w_lo, w_hi;
        const bool committed = at != nullptr && at->status == StopStatus::Committed;
        if (at != nullptr) {
          const double elapsed = t_now - at->arrived_s;
          w_lo = committed ? at->charge_start_s - setup - at->arrived_s : std::max(elapsed, at->boarding_s);
          w_hi = std::max(w_lo, elapsed) + p.max_hold_s;
        } else {
          // Lower bound enforced by the dwell row when the predecessor is known.
          w_lo = v.pred.kind == PredecessorRef::Kind::None ? nominal_dwell(line, 0, p) : 0.0;
          const double beta = p.boarding_s_per_pax * line.arrival_rate[0];
          double dwell_hi = 0.0;
          if (v.pred.kind != PredecessorRef::Kind::None) {
            const double p_lo = v.pred.kind == PredecessorRef::Kind::Constant
                                    ? v.pred.time_s - t_now
                                    : ix.windows[g - bh.bus + v.pred.bus][v.pred.position].t_lo;
            dwell_hi = beta * std::max(0.0, win.t_hi - p_lo);
          }
          w_hi = std::max({p.max_hold_s, dwell_hi, w_lo});
        }
        cols.w = mp.add_column(detail::col_name("w", line.id, bh.bus, v.visit), w_lo, w_hi);
        if (committed) {
          const double fixed_b = at->charge_s > 0.0 ? 1.0 : 0.0;
          cols.b = mp.add_column(detail::col_name("b", line.id, bh.bus, v.visit), fixed_b, fixed_b, 0.0, true);
          cols.c = mp.add_column(detail::col_name("c", line.id, bh.bus, v.visit), at->charge_s, at->charge_s,
                                 charge_price);
          cols.tchar = mp.add_column(detail::col_name("tchar", line.id, bh.bus, v.visit), win.tchar_lo, win.tchar_hi);
        } else {
          cols.b = mp.add_column(detail::col_name("b", line.id, bh.bus, v.visit), 0.0, 1.0, 0.0, true);
          cols.c = mp.add_column(detail::col_name("c", line.id, bh.bus, v.visit), 0.0, win.c_hi, charge_price);
          cols.tchar = mp.add_column(detail::col_name("tchar", line.id, bh.bus, v.visit), win.tchar_lo, win.tchar_hi);
        }
        const double slack_hi = std::max(0.0, line.soc_min - win.sigma_lo);
        cols.soc_slack =
            mp.add_column(detail::col_name("socslack", line.id, bh.bus, v.visit), 0.0, slack_hi, ix.soc_slack_price);
      }
    }
    ix.soc_target[g] = sigma_bar(t_now, p, line.soc_min);
    const VisitWindow& last = ix.windows[g].back();
    const double end_lo = last.sigma_lo;
    ix.nu[g] = mp.add_column("nu_" + std::to_string(line.id) + "_" + std::to_string(bh.bus), 0.0,
                             std::max(0.0, ix.soc_target[g] - end_lo), p.price_end * p.battery_kwh);
  }

  // Pass 3: rows.
  for (std::size_t g = 0; g < nb; ++g) {
    const BusHorizon& bh = horizons.buses[g];
    const LineSpec& line = net.lines[bh.line];
    const BusSnapshot& snap = world.buses[g];
    const int n = static_cast<int>(bh.visits.size());
    const std::string tag = "_" + std::to_string(line.id) + "_" + std::to_string(bh.bus);
    for (int q = 0; q < n; ++q) {
      const StopVisit& v = bh.visits[q];
      const VisitColumns& cols = ix.visits[g][q];
      const std::string vt = tag + "_" + std::to_string(v.visit);
      const bool current = q == 0 && snap.at_stop();
      const AtStop* at = current ? &std::get<AtStop>(snap.location) : nullptr;
      const double beta = p.boarding_s_per_pax * line.arrival_rate[v.stop];

      // Predecessor arrival as a term or a constant.
      int pred_col = -1;
      double pred_rel = 0.0;
      if (v.pred.kind == PredecessorRef::Kind::Variable) {
        pred_col = ix.visits[g - bh.bus + v.pred.bus][v.pred.position].t;
      } else if (v.pred.kind == PredecessorRef::Kind::Constant) {
        pred_rel = v.pred.time_s - t_now;
      }
      const bool resolvable = v.pred.kind != PredecessorRef::Kind::None;

      if (resolvable) {
        // No overtaking: t - t_pred >= 0.
        std::vector<Term> terms{{cols.t, -1.0}};
        if (pred_col >= 0) terms.push_back({pred_col, 1.0});
        mp.add_row("order" + vt, terms, RowSense::LessEqual, -pred_rel);
        // Headway deviation slack.
        std::vector<Term> up{{cols.t, 1.0}, {cols.eta, -1.0}};
        std::vector<Term> dn{{cols.t, -1.0}, {cols.eta, -1.0}};
        if (pred_col >= 0) {
          up.push_back({pred_col, -1.0});
          dn.push_back({pred_col, 1.0});
        }
        mp.add_row("etaup" + vt, up, RowSense::LessEqual, line.headway_s + pred_rel, cols.eta);
        mp.add_row("etadn" + vt, dn, RowSense::LessEqual, -line.headway_s - pred_rel);
      }

      if (v.is_terminal) {
        const bool committed = at != nullptr && at->status == StopStatus::Committed;
        if (at == nullptr && resolvable && beta > 0.0) {
          // Hold covers the boarding: w >= beta * (t - t_pred).
          std::vector<Term> terms{{cols.w, -1.0}, {cols.t, beta}};
          if (pred_col >= 0) terms.push_back({pred_col, -beta});
          mp.add_row("hold" + vt, terms, RowSense::LessEqual, beta * pred_rel, cols.w);
        }
        if (!committed) {
          mp.add_row("chargeon" + vt, {{cols.c, 1.0}, {cols.b, -ix.windows[g][q].c_hi}}, RowSense::LessEqual, 0.0);
          mp.add_row("tchar" + vt, {{cols.tchar, 1.0}, {cols.t, -1.0}, {cols.w, -1.0}}, RowSense::Equal, setup,
                     cols.tchar);
          mp.add_row("socmax" + vt, {{cols.sigma, 1.0}, {cols.c, rate}}, RowSense::LessEqual, 1.0);
        }
        mp.add_row("socmin" + vt, {{cols.sigma, -1.0}, {cols.c, -rate}, {cols.soc_slack, -1.0}}, RowSense::LessEqual,
                   -line.soc_min);
      }

      if (q + 1 < n) {
        const VisitColumns& nx = ix.visits[g][q + 1];
        const LinkSpec& k = line.links[v.stop];
        const std::string nt = tag + "_" + std::to_string(bh.visits[q + 1].visit);
        // Arrival time at the next stop.
        if (v.is_terminal) {
          const bool committed = at != nullptr && at->status == StopStatus::Committed;
          std::vector<Term> terms{{nx.t, 1.0}, {cols.t, -1.0}, {cols.w, -1.0}, {cols.tau, -1.0}};
          double rhs = 0.0;
          if (committed) {
            rhs = at->charge_s > 0.0 ? at->charge_s + 2.0 * setup : 0.0;
          } else {
            terms.push_back({cols.c, -1.0});
            terms.push_back({cols.b, -2.0 * setup});
          }
          mp.add_row("time" + nt, terms, RowSense::Equal, rhs, nx.t);
        } else if (at != nullptr) {
          const double dep = first.departure(bh.line, bh.bus) - t_now;
          mp.add_row("time" + nt, {{nx.t, 1.0}, {cols.tau, -1.0}}, RowSense::Equal, dep, nx.t);
        } else if (resolvable) {
          std::vector<Term> terms{{nx.t, 1.0}, {cols.t, -(1.0 + beta)}, {cols.tau, -1.0}};
          if (pred_col >= 0) terms.push_back({pred_col, beta});
          mp.add_row("time" + nt, terms, RowSense::Equal, -beta * pred_rel, nx.t);
        } else {
          mp.add_row("time" + nt, {{nx.t, 1.0}, {cols.t, -1.0}, {cols.tau, -1.0}}, RowSense::Equal,
                     nominal_dwell(line, v.stop, p), nx.t);
        }
        // SoC at the next stop.
        std::vector<Term> terms{{nx.sigma, 1.0}, {cols.sigma, -1.0}, {cols.tau, -k.energy_slope_kwh_s / p.battery_kwh}};
        if (v.is_terminal) terms.push_back({cols.c, -rate});
        mp.add_row("soc" + nt, terms, RowSense::Equal, -k.energy_base_kwh / p.battery_kwh, nx.sigma);
      }
    }
    // End-of-horizon shortfall: nu >= target - sigma_end.
    const VisitColumns& last = ix.visits[g].back();
    std::vector<Term> terms{{ix.nu[g], -1.0}, {last.sigma, -1.0}};
    if (last.c >= 0) terms.push_back({last.c, -rate});
    mp.add_row("end" + tag, terms, RowSense::LessEqual, -ix.soc_target[g], ix.nu[g]);
  }

  // Charger exclusion between terminal visits of different buses.
  struct TermVisit {
    int g, q;
    double lo, hi, c_hi;
    bool fixed;
    bool never;
  };
  std::vector<TermVisit> tv;
  for (std::size_t g = 0; g < nb; ++g) {
    const BusSnapshot& snap = world.buses[g];
    for (int q = 0; q < static_cast<int>(horizons.buses[g].visits.size()); ++q) {
      if (!horizons.buses[g].visits[q].is_terminal) continue;
      const VisitWindow& w = ix.windows[g][q];
      const bool committed = q == 0 && snap.at_stop() && std::get<AtStop>(snap.location).status == StopStatus::Committed;
      tv.push_back({static_cast<int>(g), q, w.tchar_lo, w.tchar_hi, w.c_hi, committed, w.c_hi <= 0.0});
    }
  }
  for (std::size_t a = 0; a < tv.size(); ++a) {
    for (std::size_t b = a + 1; b < tv.size(); ++b) {
      const TermVisit& u = tv[a];
      const TermVisit& v = tv[b];
      if (u.g == v.g || u.never || v.never || (u.fixed && v.fixed)) continue;
      const double m_a = std::min(p.big_m, u.hi + u.c_hi - v.lo);  // u before v violated by at most this
      const double m_b = std::min(p.big_m, v.hi + v.c_hi - u.lo);
      if (m_a <= 0.0 || m_b <= 0.0) continue;
      const auto& bu = horizons.buses[u.g];
      const auto& bv = horizons.buses[v.g];
      const VisitColumns& cu = ix.visits[u.g][u.q];
      const VisitColumns& cv = ix.visits[v.g][v.q];
      const std::string name = "psi_" + std::to_string(net.lines[bu.line].id) + "_" + std::to_string(bu.bus) + "_" +
                               std::to_string(bu.visits[u.q].visit) + "_" + std::to_string(net.lines[bv.line].id) +
                               "_" + std::to_string(bv.bus) + "_" + std::to_string(bv.visits[v.q].visit);
      const int psi = mp.add_column(name, 0.0, 1.0, 0.0, true);
      ix.psi.push_back({u.g, u.q, v.g, v.q, psi});
      // psi = 1: u uses the charger after v.
      mp.add_row("excla" + name.substr(3),
                 {{cu.tchar, 1.0}, {cu.c, 1.0}, {cv.tchar, -1.0}, {cu.b, m_a}, {cv.b, m_a}, {psi, -m_a}},
                 RowSense::LessEqual, 2.0 * m_a);
      mp.add_row("exclb" + name.substr(3),
                 {{cv.tchar, 1.0}, {cv.c, 1.0}, {cu.tchar, -1.0}, {cu.b, m_b}, {cv.b, m_b}, {psi, m_b}},
                 RowSense::LessEqual, 3.0 * m_b);
    }
  }
  return out;
}

// Rounding for the search: charge wherever the relaxation charges, and order
// each pair of charging visits by their relaxed charger start times.
inline std::function<std::vector<double>(const std::vector<double>&)> charging_rounding(const BuiltProblem& built,
                                                                                      double min_charge_s = 1e-6) {
  struct Pair {
    int b_u, b_v, tchar_u, tchar_v, psi;
  };
  std::vector<std::pair<int, int>> charge;  // (b, c)
  for (const auto& bus : built.index.visits)
    for (const auto& v : bus)
      if (v.b >= 0) charge.push_back({v.b, v.c});
  std::vector<Pair> pairs;
  for (const PsiColumn& p : built.index.psi) {
    const VisitColumns& u = built.index.visits[p.bus_a][p.pos_a];
    const VisitColumns& v = built.index.visits[p.bus_b][p.pos_b];
    pairs.push_back({u.b, v.b, u.tchar, v.tchar, p.column});
  }
  const int n = built.problem.num_columns();
  return [charge, pairs, n, min_charge_s](const std::vector<double>& x) {
    std::vector<double> out(n, 0.0);
    for (const auto& [b, c] : charge) out[b] = x[c] > min_charge_s ? 1.0 : 0.0;
    for (const Pair& p : pairs) out[p.psi] = x[p.tchar_u] > x[p.tchar_v] ? 1.0 : 0.0;
    return out;
  };
}

// ---------------------------------------------------------------------------
// Plans

struct PlannedVisit {
  std::int64_t visit = 0;
  int stop = 0;
  bool is_terminal = false;
  double arrival_s = 0.0;  // absolute
  bool has_tau = false;
  double tau_s = 0.0;
  double hold_s = 0.0;     // terminal: w
  bool charge = false;
  double charge_s = 0.0;
  double charge_start_s = 0.0;  // absolute tchar
  double departure_s = 0.0;     // absolute: arrival + w + c + 2 d_char b (terminal)
};

struct BusPlan {
  int line = 0;
  int bus = 0;
  std::vector<PlannedVisit> visits;
  double soc_end = 0.0;

  const PlannedVisit* find(std::int64_t visit) const {
    if (visits.empty() || visit < visits.front().visit || visit > visits.back().visit) return nullptr;
    return &visits[static_cast<std::size_t>(visit - visits.front().visit)];
  }
};

struct ControlPlan {
  double t_now = 0.0;
  std::vector<BusPlan> buses;  // global bus order
};

inline ControlPlan extract_plan(const BuiltProblem& built, const std::vector<double>& x, const NetworkConfig& net,
                                double tolerance = 1e-6) {
  const MilpProblem& mp = built.problem;
  if (static_cast<int>(x.size()) != mp.num_columns()) throw InternalError("extract_plan: solution has wrong length");
  const double viol = mp.max_violation(x);
  if (viol > tolerance) {
    throw InternalError("extract_plan: solution violates a constraint by " + std::to_string(viol));
  }
  if (mp.max_integrality_violation(x) > tolerance) throw InternalError("extract_plan: solution is not integral");
  const double t0 = built.index.t_now;
  const double setup = net.params.charger_setup_s;
  const double rate = charge_rate(net.params);
  ControlPlan plan;
  plan.t_now = t0;
  for (std::size_t g = 0; g < built.horizons.buses.size(); ++g) {
    const BusHorizon& bh = built.horizons.buses[g];
    BusPlan bp;
    bp.line = bh.line;
    bp.bus = bh.bus;
    for (std::size_t q = 0; q < bh.visits.size(); ++q) {
      const StopVisit& v = bh.visits[q];
      const VisitColumns& c = built.index.visits[g][q];
      PlannedVisit pv;
      pv.visit = v.visit;
      pv.stop = v.stop;
      pv.is_terminal = v.is_terminal;
      pv.arrival_s = t0 + x[c.t];
      if (c.tau >= 0) {
        pv.has_tau = true;
        pv.tau_s = x[c.tau];
      }
      if (v.is_terminal) {
        pv.hold_s = std::max(0.0, x[c.w]);
        pv.charge = std::round(x[c.b]) == 1.0;
        pv.charge_s = pv.charge ? std::max(0.0, x[c.c]) : 0.0;
        pv.charge_start_s = t0 + x[c.tchar];
        pv.departure_s = pv.arrival_s + pv.hold_s + pv.charge_s + (pv.charge ? 2.0 * setup : 0.0);
      }
      bp.visits.push_back(pv);
    }
    const VisitColumns& last = built.index.visits[g].back();
    bp.soc_end = x[last.sigma] + (last.c >= 0 ? rate * bp.visits.back().charge_s : 0.0);
    plan.buses.push_back(std::move(bp));
  }
  return plan;
}

// Binary assignment that repeats the previous plan's charging decisions and
// charger order for visits both plans share. Visits new to the horizon do
// not charge. Values are clipped to the column bounds.
inline std::vector<double> plan_start(const BuiltProblem& built, const ControlPlan& previous) {
  const MilpProblem& mp = built.problem;
  std::vector<double> out(mp.num_columns(), 0.0);
  const double t0 = built.index.t_now;
  std::vector<std::vector<double>> start_time(built.horizons.buses.size());
  for (std::size_t g = 0; g < built.horizons.buses.size(); ++g) {
    const BusHorizon& bh = built.horizons.buses[g];
    const BusPlan* bp = g < previous.buses.size() ? &previous.buses[g] : nullptr;
    start_time[g].assign(bh.visits.size(), kInfinity);
    for (std::size_t q = 0; q < bh.visits.size(); ++q) {
      const VisitColumns& c = built.index.visits[g][q];
      if (c.b < 0) continue;
      const PlannedVisit* pv = bp ? bp->find(bh.visits[q].visit) : nullptr;
      const bool charge = pv && pv->charge && pv->charge_s > 1e-6;
      out[c.b] = std::clamp(charge ? 1.0 : 0.0, mp.lower()[c.b], mp.upper()[c.b]);
      start_time[g][q] = pv ? pv->charge_start_s : t0 + mp.lower()[c.tchar];
    }
  }
  for (const PsiColumn& p : built.index.psi) {
    const double a = start_time[p.bus_a][p.pos_a];
    const double b = start_time[p.bus_b][p.pos_b];
    out[p.column] = std::clamp(a > b ? 1.0 : 0.0, mp.lower()[p.column], mp.upper()[p.column]);
  }
  return out;
}

// Local-search moves for the MPC problem: every free charging flag, and the
// order flag of each pair of visits that both charge.
inline std::function<std::vector<int>(const std::vector<double>&)> charging_neighborhood(const BuiltProblem& built) {
  std::vector<int> flags;
  for (const auto& bus : built.index.visits)
    for (const auto& v : bus)
      if (v.b >= 0 && built.problem.lower()[v.b] < built.problem.upper()[v.b]) flags.push_back(v.b);
  std::vector<std::array<int, 3>> pairs;  // psi, b of each side
  for (const PsiColumn& p : built.index.psi) {
    if (built.problem.lower()[p.column] == built.problem.upper()[p.column]) continue;
    pairs.push_back({p.column, built.index.visits[p.bus_a][p.pos_a].b, built.index.visits[p.bus_b][p.pos_b].b});
  }
  return [flags, pairs](const std::vector<double>& x) {
    std::vector<int> moves = flags;
    for (const auto& [psi, bu, bv] : pairs)
      if (x[bu] > 0.5 && x[bv] > 0.5) moves.push_back(psi);
    return moves;
  };
}

// Free-format MPS with the builder's row and column names.
inline void write_mps(std::ostream& os, const MilpProblem& mp, const std::string& name = "EBUS") {
  os << "NAME " << name << "\nROWS\n N obj\n";
  for (int i = 0; i < mp.num_rows(); ++i)
    os << (mp.sense(i) == RowSense::Equal ? " E " : " L ") << mp.row_name(i) << "\n";
  std::vector<std::vector<std::pair<int, double>>> by_col(mp.num_columns());
  for (int i = 0; i < mp.num_rows(); ++i) {
    const auto cols = mp.row_columns(i);
    const auto vals = mp.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) by_col[cols[k]].push_back({i, vals[k]});
  }
  os.precision(17);
  os << "COLUMNS\n";
  bool in_int = false;
  for (int j = 0; j < mp.num_columns(); ++j) {
    if (mp.is_binary(j) != in_int) {
      os << " MARKER 'MARKER' " << (in_int ? "'INTEND'" : "'INTORG'") << "\n";
      in_int = !in_int;
    }
    if (mp.cost()[j] != 0.0) os << " " << mp.column_name(j) << " obj " << mp.cost()[j] << "\n";
    for (const auto& [row, val] : by_col[j]) os << " " << mp.column_name(j) << " " << mp.row_name(row) << " " << val << "\n";
  }
  if (in_int) os << " MARKER 'MARKER' 'INTEND'\n";
  os << "RHS\n";
  if (mp.cost_offset() != 0.0) os << " rhs obj " << -mp.cost_offset() << "\n";
  for (int i = 0; i < mp.num_rows(); ++i)
    if (mp.rhs(i) != 0.0) os << " rhs " << mp.row_name(i) << " " << mp.rhs(i) << "\n";
  os << "BOUNDS\n";
  for (int j = 0; j < mp.num_columns(); ++j) {
    const double lo = mp.lower()[j], up = mp.upper()[j];
    const std::string& c = mp.column_name(j);
    if (lo == up) {
      os << " FX bnd " << c << " " << lo << "\n";
      continue;
    }
    if (std::isinf(lo)) os << " MI bnd " << c << "\n";
    else if (lo != 0.0) os << " LO bnd " << c << " " << lo << "\n";
    if (std::isinf(up)) os << " PL bnd " << c << "\n";
    else os << " UP bnd " << c << " " << up << "\n";
  }
  os << "ENDATA\n";
}

}  // namespace ebus

#pragma once

// Domain types and the deterministic bus dynamics shared by the planner and
// the simulator. Times are seconds, energies kWh, state of charge a fraction
// of the (common) battery capacity.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ebus/errors.hpp"

namespace ebus {

inline constexpr double kSecondsPerHour = 3600.0;

struct Params {
  double battery_kwh = 264.0;          // Q
  double charger_kw = 300.0;           // P_char
  double boarding_s_per_pax = 1.5;     // d_pax
  double charger_setup_s = 10.0;       // d_char, paid once to connect, once to disconnect
  double price_energy = 0.08;          // p_el, EUR/kWh
  double price_wait = 0.0025;          // p_wait, EUR/s of headway deviation
  double price_end = 0.4;              // p_end, EUR/kWh short of the SoC target
  double big_m = 1e5;
  double horizon_s = 3600.0;           // T
  double sim_length_s = 50400.0;       // T_sim
  double control_interval_s = 300.0;
  double warmup_s = 1800.0;
  double max_hold_s = 600.0;           // cap on planned terminal holding beyond what is already elapsed

  void validate() const;
};

// Link j runs from stop j to stop j+1 (stop m wraps to the terminal, stop 0).
struct LinkSpec {
  double t_min_s = 0.0;
  double t_max_s = 0.0;
  double energy_base_kwh = 0.0;      // e0
  double energy_slope_kwh_s = 0.0;   // e1; energy = e0 - e1 * travel_time
};

struct LineSpec {
  int id = 0;
  int bus_count = 0;
  double headway_s = 0.0;
  double soc_min = 0.3;
  std::vector<double> arrival_rate;  // pax/s per stop; index 0 is the shared terminal
  std::vector<LinkSpec> links;       // one per stop

  int stop_count() const { return static_cast<int>(links.size()); }
  int next_stop(int stop) const { return stop + 1 == stop_count() ? 0 : stop + 1; }
  void validate() const;
};

struct NetworkConfig {
  std::vector<LineSpec> lines;
  int charger_count = 1;
  Params params;

  void validate() const;
  int total_buses() const;
};

// ---------------------------------------------------------------------------
// Bus state

// Status of a bus standing at a stop.
enum class StopStatus : std::uint8_t {
  Dwelling,   // regular stop, boarding in progress or blocked behind the predecessor
  Holding,    // terminal, charging decision still open
  Committed,  // terminal, charging decided (possibly zero) and the charger slot granted
};

struct AtStop {
  int stop = 0;
  double arrived_s = 0.0;
  StopStatus status = StopStatus::Dwelling;
  double boarding_s = 0.0;        // realized boarding time at this visit
  double charge_start_s = 0.0;    // Committed only: start of charger use
  double charge_s = 0.0;          // Committed only: granted charging duration (0 = no charge)
};

struct OnLink {
  int link = 0;
  double departed_s = 0.0;
  double command_s = 0.0;         // commanded travel time
};

struct ArrivalRecord {
  std::int64_t visit = 0;
  double time_s = 0.0;
};

// Visits are numbered on a per-line absolute scale: visit v is a call at stop
// v mod m. Buses keep their order, so the predecessor of bus i at visit v is
// bus i-1 at visit v, and bus 0 follows bus n-1 one loop later.
struct BusSnapshot {
  int line = 0;
  int bus = 0;
  double soc = 1.0;
  std::int64_t visit = 0;  // current visit (AtStop) or the upcoming one (OnLink)
  std::variant<AtStop, OnLink> location;
  std::vector<std::optional<ArrivalRecord>> last_arrival;  // per stop, most recent visit

  bool at_stop() const { return std::holds_alternative<AtStop>(location); }
  int position_stop(const LineSpec& line) const;  // stop at, or the one being driven to
  void validate(const LineSpec& line) const;
};

struct WorldSnapshot {
  double time_s = 0.0;
  std::vector<BusSnapshot> buses;  // grouped by line, ordered by bus index

  const BusSnapshot& bus(const NetworkConfig& net, int line, int bus) const;
};

struct VisitRef {
  int bus = 0;
  std::int64_t visit = 0;
};

inline VisitRef predecessor_visit(const LineSpec& line, int bus, std::int64_t visit) {
  if (bus > 0) return {bus - 1, visit};
  return {line.bus_count - 1, visit - line.stop_count()};
}

inline VisitRef follower_visit(const LineSpec& line, int bus, std::int64_t visit) {
  if (bus + 1 < line.bus_count) return {bus + 1, visit};
  return {0, visit + line.stop_count()};
}

inline int stop_of_visit(const LineSpec& line, std::int64_t visit) {
  const auto m = static_cast<std::int64_t>(line.stop_count());
  return static_cast<int>(((visit % m) + m) % m);
}

inline int bus_offset(const NetworkConfig& net, int line) {
  int offset = 0;
  for (int l = 0; l < line; ++l) offset += net.lines[l].bus_count;
  return offset;
}

// ---------------------------------------------------------------------------
// Dynamics

// Boarding time of passengers accumulated over `gap_s` at a stop.
inline double dwell_time(double gap_s, double arrival_rate, double boarding_s_per_pax) {
  if (gap_s < 0.0) throw InputError("dwell_time: negative headway gap " + std::to_string(gap_s));
  return boarding_s_per_pax * arrival_rate * gap_s;
}

inline double link_energy(const LinkSpec& link, double travel_s) {
  const double slack = 1e-9 * std::max(1.0, link.t_max_s);
  if (travel_s < link.t_min_s - slack || travel_s > link.t_max_s + slack) {
    throw InputError("link_energy: travel time " + std::to_string(travel_s) + " outside [" +
                     std::to_string(link.t_min_s) + ", " + std::to_string(link.t_max_s) + "]");
  }
  return link.energy_base_kwh - link.energy_slope_kwh_s * travel_s;
}

// Not clamped: a negative result means the battery would run empty.
inline double soc_after_link(double soc, double energy_kwh, double battery_kwh) {
  return soc - energy_kwh / battery_kwh;
}

// The only place where charger power (kW) times seconds becomes kWh.
inline double charged_energy_kwh(double charge_s, double charger_kw) {
  return charger_kw * charge_s / kSecondsPerHour;
}

inline double soc_after_charge(double soc, double charge_s, double charger_kw, double battery_kwh) {
  return soc + charged_energy_kwh(charge_s, charger_kw) / battery_kwh;
}

// SoC gained per second at the charger.
inline double charge_rate(const Params& p) { return charged_energy_kwh(1.0, p.charger_kw) / p.battery_kwh; }

// Inverse of soc_after_charge: seconds needed to lift `from` to `to`.
inline double charge_time_to(double from, double to, const Params& p) {
  return std::max(0.0, (to - from) / charge_rate(p));
}

// Linearly decreasing end-of-horizon SoC target, clamped at soc_min near the end
// of the day.
inline double sigma_bar(double t_s, const Params& p, double soc_min) {
  const double target =
      soc_min + (p.sim_length_s - p.horizon_s - t_s) / p.sim_length_s * (1.0 - soc_min);
  return std::max(soc_min, target);
}

// Expected boarding dwell at a stop when buses run exactly on headway.
inline double nominal_dwell(const LineSpec& line, int stop, const Params& p) {
  return p.boarding_s_per_pax * line.arrival_rate[stop] * line.headway_s;
}

// ---------------------------------------------------------------------------
// Validation

namespace detail {
inline void require(bool ok, const std::string& what) {
  if (!ok) throw InputError(what);
}
}  // namespace detail

inline void Params::validate() const {
  using detail::require;
  const std::pair<const char*, double> positive[] = {
      {"params.battery_kwh", battery_kwh},
      {"params.charger_kw", charger_kw},
      {"params.boarding_s_per_pax", boarding_s_per_pax},
      {"params.charger_setup_s", charger_setup_s},
      {"params.price_energy", price_energy},
      {"params.price_wait", price_wait},
      {"params.price_end", price_end},
      {"params.big_m", big_m},
      {"params.horizon_s", horizon_s},
      {"params.sim_length_s", sim_length_s},
      {"params.control_interval_s", control_interval_s},
      {"params.warmup_s", warmup_s},
      {"params.max_hold_s", max_hold_s},
  };
  for (const auto& [name, value] : positive) {
    require(std::isfinite(value) && value > 0.0, std::string(name) + " must be strictly positive");
  }
  require(price_end >= price_energy, "params.price_end must be >= params.price_energy");
  require(horizon_s <= sim_length_s, "params.horizon_s must not exceed params.sim_length_s");
}

inline void LineSpec::validate() const {
  using detail::require;
  const std::string where = "line " + std::to_string(id);
  require(bus_count >= 1, where + ": bus_count must be >= 1");
  require(stop_count() >= 2, where + ": needs at least two stops");
  require(static_cast<int>(arrival_rate.size()) == stop_count(),
          where + ": arrival_rate must have one entry per stop");
  require(std::isfinite(headway_s) && headway_s > 0.0, where + ": headway_s must be positive");
  require(soc_min > 0.0 && soc_min < 1.0, where + ": soc_min must lie in (0, 1)");
  for (int j = 0; j < stop_count(); ++j) {
    const std::string at = where + " stop " + std::to_string(j);
    require(std::isfinite(arrival_rate[j]) && arrival_rate[j] >= 0.0, at + ": arrival_rate must be >= 0");
    const LinkSpec& k = links[j];
    const std::string lk = where + " link " + std::to_string(j);
    require(k.t_min_s > 0.0, lk + ": t_min_s must be positive");
    require(k.t_min_s <= k.t_max_s, lk + ": t_min_s must not exceed t_max_s");
    require(k.energy_base_kwh - k.energy_slope_kwh_s * k.t_min_s > 0.0 &&
                k.energy_base_kwh - k.energy_slope_kwh_s * k.t_max_s > 0.0,
            lk + ": energy must be positive over [t_min_s, t_max_s]");
  }
}

inline void NetworkConfig::validate() const {
  detail::require(!lines.empty(), "network: at least one line is required");
  detail::require(charger_count == 1, "network: charger_count must be 1");
  params.validate();
  for (const auto& line : lines) line.validate();
  for (std::size_t a = 0; a < lines.size(); ++a)
    for (std::size_t b = a + 1; b < lines.size(); ++b)
      detail::require(lines[a].id != lines[b].id, "network: duplicate line id " + std::to_string(lines[a].id));
}

inline int NetworkConfig::total_buses() const {
  int n = 0;
  for (const auto& line : lines) n += line.bus_count;
  return n;
}

inline int BusSnapshot::position_stop(const LineSpec& line) const {
  if (const auto* s = std::get_if<AtStop>(&location)) return s->stop;
  return line.next_stop(std::get<OnLink>(location).link);
}

inline void BusSnapshot::validate(const LineSpec& line) const {
  using detail::require;
  require(soc >= 0.0 && soc <= 1.0 + 1e-12, "bus snapshot: soc outside [0, 1]");
  require(static_cast<int>(last_arrival.size()) == line.stop_count(),
          "bus snapshot: arrival history must have one slot per stop");
  require(stop_of_visit(line, visit) == position_stop(line), "bus snapshot: visit index does not match stop");
  if (const auto* s = std::get_if<AtStop>(&location)) {
    require(s->stop == 0 || s->status == StopStatus::Dwelling,
            "bus snapshot: holding/charging only happens at the terminal");
  }
}

inline const BusSnapshot& WorldSnapshot::bus(const NetworkConfig& net, int line, int bus) const {
  return buses.at(static_cast<std::size_t>(bus_offset(net, line) + bus));
}

}  // namespace ebus

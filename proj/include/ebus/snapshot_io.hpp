#pragma once

// JSON form of a world snapshot, for replaying a single MILP outside the
// simulator.

#include <string>

#include "ebus/core_model.hpp"
#include "ebus/errors.hpp"
#include "json.hpp"

namespace ebus {

inline const char* to_string(StopStatus s) {
  switch (s) {
    case StopStatus::Dwelling: return "dwelling";
    case StopStatus::Holding: return "holding";
    case StopStatus::Committed: return "committed";
  }
  return "?";
}

inline StopStatus parse_stop_status(const std::string& s) {
  if (s == "dwelling") return StopStatus::Dwelling;
  if (s == "holding") return StopStatus::Holding;
  if (s == "committed") return StopStatus::Committed;
  throw InputError("snapshot: unknown stop status '" + s + "'");
}

inline nlohmann::ordered_json snapshot_to_json(const WorldSnapshot& w) {
  nlohmann::ordered_json doc;
  doc["time_s"] = w.time_s;
  doc["buses"] = nlohmann::ordered_json::array();
  for (const BusSnapshot& b : w.buses) {
    nlohmann::ordered_json j;
    j["line"] = b.line;
    j["bus"] = b.bus;
    j["soc"] = b.soc;
    j["visit"] = b.visit;
    if (const auto* s = std::get_if<AtStop>(&b.location)) {
      j["location"] = {{"kind", "stop"},           {"stop", s->stop},
                       {"arrived_s", s->arrived_s}, {"status", to_string(s->status)},
                       {"boarding_s", s->boarding_s}, {"charge_start_s", s->charge_start_s},
                       {"charge_s", s->charge_s}};
    } else {
      const auto& l = std::get<OnLink>(b.location);
      j["location"] = {{"kind", "link"}, {"link", l.link}, {"departed_s", l.departed_s}, {"command_s", l.command_s}};
    }
    j["last_arrival"] = nlohmann::ordered_json::array();
    for (const auto& r : b.last_arrival) {
      if (r) {
        j["last_arrival"].push_back({{"visit", r->visit}, {"time_s", r->time_s}});
      } else {
        j["last_arrival"].push_back(nullptr);
      }
    }
    doc["buses"].push_back(std::move(j));
  }
  return doc;
}

inline WorldSnapshot snapshot_from_json(const nlohmann::ordered_json& doc, const NetworkConfig& net) {
  WorldSnapshot w;
  try {
    w.time_s = doc.at("time_s").get<double>();
    for (const auto& j : doc.at("buses")) {
      BusSnapshot b;
      b.line = j.at("line").get<int>();
      b.bus = j.at("bus").get<int>();
      b.soc = j.at("soc").get<double>();
      b.visit = j.at("visit").get<std::int64_t>();
      const auto& loc = j.at("location");
      const std::string kind = loc.at("kind").get<std::string>();
      if (kind == "stop") {
        AtStop s;
        s.stop = loc.at("stop").get<int>();
        s.arrived_s = loc.at("arrived_s").get<double>();
        s.status = parse_stop_status(loc.at("status").get<std::string>());
        s.boarding_s = loc.at("boarding_s").get<double>();
        s.charge_start_s = loc.at("charge_start_s").get<double>();
        s.charge_s = loc.at("charge_s").get<double>();
        b.location = s;
      } else if (kind == "link") {
        b.location = OnLink{loc.at("link").get<int>(), loc.at("departed_s").get<double>(),
                            loc.at("command_s").get<double>()};
      } else {
        throw InputError("snapshot: unknown location kind '" + kind + "'");
      }
      for (const auto& r : j.at("last_arrival")) {
        if (r.is_null()) {
          b.last_arrival.push_back(std::nullopt);
        } else {
          b.last_arrival.push_back(ArrivalRecord{r.at("visit").get<std::int64_t>(), r.at("time_s").get<double>()});
        }
      }
      w.buses.push_back(std::move(b));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("snapshot: ") + e.what());
  }
  if (static_cast<int>(w.buses.size()) != net.total_buses()) {
    throw InputError("snapshot: bus count does not match the network");
  }
  for (std::size_t g = 0; g < w.buses.size(); ++g) {
    const BusSnapshot& b = w.buses[g];
    if (b.line < 0 || b.line >= static_cast<int>(net.lines.size()) || bus_offset(net, b.line) + b.bus != static_cast<int>(g))
      throw InputError("snapshot: buses must be listed in line order, bus " + std::to_string(g) + " is out of place");
    b.validate(net.lines[b.line]);
  }
  return w;
}

}  // namespace ebus

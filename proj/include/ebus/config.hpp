#pragma once

// JSON scenario files: network, parameters, simulation and MPC settings.
// Overrides are dotted paths into the document ("params.horizon_s=1800",
// "lines.0.headway_s=360") and are applied before anything is validated.

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ebus/controllers.hpp"
#include "ebus/core_model.hpp"
#include "ebus/errors.hpp"
#include "json.hpp"

namespace ebus {

using Json = nlohmann::ordered_json;

struct Scenario {
  NetworkConfig network;
  double traffic_cov = 0.1;
  std::string initial_spacing = "even";
  MpcSettings mpc;
};

namespace detail {

inline void reject_unknown(const Json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw InputError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.count(key)) throw InputError(where + ": unknown field '" + key + "'");
  }
}

template <class T>
void read(const Json& obj, const char* key, const std::string& where, T& out, bool required = false) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) throw InputError(where + "." + key + ": missing");
    return;
  }
  try {
    out = it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InputError(where + "." + key + ": wrong type");
  }
}

inline Json::json_pointer dotted_pointer(const std::string& path) {
  std::string p;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) throw InputError("override '" + path + "': empty path segment");
    p += "/" + part;
  }
  return Json::json_pointer(p);
}

}  // namespace detail

// Applies "path=value" overrides. The value is read as JSON when it parses,
// as a plain string otherwise. Only existing fields can be overridden.
inline void apply_overrides(Json& doc, const std::vector<std::string>& overrides) {
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw InputError("override '" + o + "': expected path=value");
    const std::string path = o.substr(0, eq);
    const std::string text = o.substr(eq + 1);
    const auto ptr = detail::dotted_pointer(path);
    if (!doc.contains(ptr)) throw InputError("override '" + o + "': no field " + path);
    Json value = Json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    doc[ptr] = value;
  }
}

inline Scenario parse_scenario(const Json& doc) {
  using detail::read;
  detail::reject_unknown(doc, "config", {"params", "charger_count", "lines", "simulation", "mpc"});
  Scenario s;
  NetworkConfig& net = s.network;
  if (doc.contains("params")) {
    const Json& j = doc["params"];
    const std::string w = "params";
    detail::reject_unknown(j, w,
                           {"battery_kwh", "charger_kw", "boarding_s_per_pax", "charger_setup_s", "price_energy",
                            "price_wait", "price_end", "big_m", "horizon_s", "sim_length_s", "control_interval_s",
                            "warmup_s", "max_hold_s"});
    Params& p = net.params;
    read(j, "battery_kwh", w, p.battery_kwh);
    read(j, "charger_kw", w, p.charger_kw);
    read(j, "boarding_s_per_pax", w, p.boarding_s_per_pax);
    read(j, "charger_setup_s", w, p.charger_setup_s);
    read(j, "price_energy", w, p.price_energy);
    read(j, "price_wait", w, p.price_wait);
    read(j, "price_end", w, p.price_end);
    read(j, "big_m", w, p.big_m);
    read(j, "horizon_s", w, p.horizon_s);
    read(j, "sim_length_s", w, p.sim_length_s);
    read(j, "control_interval_s", w, p.control_interval_s);
    read(j, "warmup_s", w, p.warmup_s);
    read(j, "max_hold_s", w, p.max_hold_s);
  }
  read(doc, "charger_count", "config", net.charger_count);
  if (!doc.contains("lines") || !doc["lines"].is_array()) throw InputError("config.lines: missing or not an array");
  for (std::size_t l = 0; l < doc["lines"].size(); ++l) {
    const Json& j = doc["lines"][l];
    const std::string w = "lines[" + std::to_string(l) + "]";
    detail::reject_unknown(j, w, {"id", "bus_count", "headway_s", "soc_min", "arrival_rate", "links"});
    LineSpec line;
    read(j, "id", w, line.id, true);
    read(j, "bus_count", w, line.bus_count, true);
    read(j, "headway_s", w, line.headway_s, true);
    read(j, "soc_min", w, line.soc_min, true);
    read(j, "arrival_rate", w, line.arrival_rate, true);
    if (!j.contains("links") || !j["links"].is_array()) throw InputError(w + ".links: missing or not an array");
    for (std::size_t k = 0; k < j["links"].size(); ++k) {
      const Json& lk = j["links"][k];
      const std::string lw = w + ".links[" + std::to_string(k) + "]";
      detail::reject_unknown(lk, lw, {"t_min_s", "t_max_s", "energy_base_kwh", "energy_slope_kwh_s"});
      LinkSpec link;
      read(lk, "t_min_s", lw, link.t_min_s, true);
      read(lk, "t_max_s", lw, link.t_max_s, true);
      read(lk, "energy_base_kwh", lw, link.energy_base_kwh, true);
      read(lk, "energy_slope_kwh_s", lw, link.energy_slope_kwh_s, true);
      line.links.push_back(link);
    }
    net.lines.push_back(std::move(line));
  }
  if (doc.contains("simulation")) {
    const Json& j = doc["simulation"];
    detail::reject_unknown(j, "simulation", {"traffic_cov", "initial_spacing"});
    read(j, "traffic_cov", "simulation", s.traffic_cov);
    read(j, "initial_spacing", "simulation", s.initial_spacing);
  }
  if (doc.contains("mpc")) {
    const Json& j = doc["mpc"];
    detail::reject_unknown(j, "mpc", {"node_limit", "relative_gap", "rounding_interval", "local_search_passes"});
    read(j, "node_limit", "mpc", s.mpc.node_limit);
    read(j, "relative_gap", "mpc", s.mpc.relative_gap);
    read(j, "rounding_interval", "mpc", s.mpc.rounding_interval);
    read(j, "local_search_passes", "mpc", s.mpc.local_search_passes);
  }
  net.validate();
  if (!(s.traffic_cov >= 0.0)) throw InputError("simulation.traffic_cov must be >= 0");
  if (s.initial_spacing != "even") throw InputError("simulation.initial_spacing: only 'even' is supported");
  if (s.mpc.node_limit < 1) throw InputError("mpc.node_limit must be >= 1");
  if (!(s.mpc.relative_gap >= 0.0)) throw InputError("mpc.relative_gap must be >= 0");
  if (s.mpc.local_search_passes < 0) throw InputError("mpc.local_search_passes must be >= 0");
  return s;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  Json doc = Json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw InputError("config file '" + path + "' is not valid JSON");
  return doc;
}

inline Scenario load_scenario(const std::string& path, const std::vector<std::string>& overrides = {}) {
  Json doc = read_json_file(path);
  apply_overrides(doc, overrides);
  return parse_scenario(doc);
}

inline NetworkConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  return load_scenario(path, overrides).network;
}

inline Json to_json(const Scenario& s) {
  const Params& p = s.network.params;
  Json doc;
  doc["params"] = {{"battery_kwh", p.battery_kwh},
                   {"charger_kw", p.charger_kw},
                   {"boarding_s_per_pax", p.boarding_s_per_pax},
                   {"charger_setup_s", p.charger_setup_s},
                   {"price_energy", p.price_energy},
                   {"price_wait", p.price_wait},
                   {"price_end", p.price_end},
                   {"big_m", p.big_m},
                   {"horizon_s", p.horizon_s},
                   {"sim_length_s", p.sim_length_s},
                   {"control_interval_s", p.control_interval_s},
                   {"warmup_s", p.warmup_s},
                   {"max_hold_s", p.max_hold_s}};
  doc["charger_count"] = s.network.charger_count;
  doc["lines"] = Json::array();
  for (const LineSpec& line : s.network.lines) {
    Json j;
    j["id"] = line.id;
    j["bus_count"] = line.bus_count;
    j["headway_s"] = line.headway_s;
    j["soc_min"] = line.soc_min;
    j["arrival_rate"] = line.arrival_rate;
    j["links"] = Json::array();
    for (const LinkSpec& k : line.links) {
      j["links"].push_back({{"t_min_s", k.t_min_s},
                            {"t_max_s", k.t_max_s},
                            {"energy_base_kwh", k.energy_base_kwh},
                            {"energy_slope_kwh_s", k.energy_slope_kwh_s}});
    }
    doc["lines"].push_back(std::move(j));
  }
  doc["simulation"] = {{"traffic_cov", s.traffic_cov}, {"initial_spacing", s.initial_spacing}};
  doc["mpc"] = {{"node_limit", s.mpc.node_limit},
                {"relative_gap", s.mpc.relative_gap},
                {"rounding_interval", s.mpc.rounding_interval},
                {"local_search_passes", s.mpc.local_search_passes}};
  return doc;
}

}  // namespace ebus

#pragma once

// Start-of-day state: every bus fully charged and on a link, spaced one
// headway apart along a nominal loop, with an arrival history that looks as if
// the line had been running on schedule.

#include <algorithm>
#include <string>
#include <vector>

#include "ebus/core_model.hpp"

namespace ebus {

// Factor that stretches free-flow travel plus headway dwell so one loop takes
// exactly n_l * H_l.
inline double nominal_loop_scale(const LineSpec& line, const Params& p) {
  double loop = 0.0;
  for (int j = 0; j < line.stop_count(); ++j) loop += nominal_dwell(line, j, p) + line.links[j].t_min_s;
  return line.bus_count * line.headway_s / loop;
}

// Lines are offset against each other by a fraction of the headway so their
// buses do not all reach the terminal together at t = 0.
inline double line_phase(const LineSpec& line, int line_index) { return line.headway_s * (2 * line_index + 1) / 4.0; }

inline WorldSnapshot initial_world(const NetworkConfig& net) {
  const Params& p = net.params;
  WorldSnapshot world;
  world.time_s = 0.0;
  for (int l = 0; l < static_cast<int>(net.lines.size()); ++l) {
    const LineSpec& line = net.lines[l];
    const int m = line.stop_count();
    const int n = line.bus_count;
    const double scale = nominal_loop_scale(line, p);
    const double loop = n * line.headway_s;
    std::vector<double> travel(m), dwell(m);
    for (int s = 0; s < m; ++s) {
      travel[s] = std::clamp(line.links[s].t_min_s * scale, line.links[s].t_min_s, line.links[s].t_max_s);
      dwell[s] = nominal_dwell(line, s, p) * scale;
    }
    for (int i = 0; i < n; ++i) {
      // Nominal schedule of the current loop, starting from the last
      // terminal departure.
      std::vector<double> arr(m), dep(m);
      dep[0] = -(n - i) * line.headway_s + line_phase(line, l);
      arr[0] = dep[0] - dwell[0];
      for (int s = 1; s < m; ++s) {
        arr[s] = dep[s - 1] + travel[s - 1];
        dep[s] = arr[s] + dwell[s];
      }
      int link = 0;
      while (link + 1 < m && arr[link + 1] <= 0.0) ++link;
      if (dep[m - 1] + travel[m - 1] <= 0.0) {
        throw InputError("line " + std::to_string(line.id) +
                         ": bus_count * headway_s is longer than a loop at maximum travel times");
      }

      BusSnapshot b;
      b.line = l;
      b.bus = i;
      b.soc = 1.0;
      b.visit = m + link + 1;
      b.location = OnLink{link, std::min(dep[link], 0.0), travel[link]};
      b.last_arrival.assign(m, std::nullopt);
      for (int s = 0; s < m; ++s) {
        b.last_arrival[s] = s <= link ? ArrivalRecord{m + s, arr[s]} : ArrivalRecord{s, arr[s] - loop};
      }
      world.buses.push_back(std::move(b));
    }
  }
  return world;
}

}  // namespace ebus

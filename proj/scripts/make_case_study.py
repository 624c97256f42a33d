#!/usr/bin/env python3
"""Writes configs/case_study.json: two lines sharing one terminal charger.

Link times, demand and energy coefficients are synthetic. They are drawn from
a fixed seed so the file can be regenerated byte for byte.
"""
import argparse
import json
import random

LINES = [  # id, stops, buses
    (1, 24, 5),
    (2, 30, 6),
]
HEADWAY_S = 300.0
SOC_MIN = 0.3


def make_line(rng, line_id, stops, buses, kwh_per_s):
    rates, links = [], []
    for j in range(stops):
        # The terminal and the first stops after it see more boardings.
        base = 0.022 if j == 0 else rng.uniform(0.008, 0.02)
        rates.append(round(base, 4))
        t_min = round(rng.uniform(38.0, 56.0), 1)
        t_max = round(t_min * 1.5, 1)
        e_slow = kwh_per_s * t_min * rng.uniform(0.9, 1.1)
        e_fast = e_slow * rng.uniform(1.2, 1.4)
        slope = (e_fast - e_slow) / (t_max - t_min)
        links.append({
            "t_min_s": t_min,
            "t_max_s": t_max,
            "energy_base_kwh": round(e_fast + slope * t_min, 6),
            "energy_slope_kwh_s": round(slope, 8),
        })
    return {
        "id": line_id,
        "bus_count": buses,
        "headway_s": HEADWAY_S,
        "soc_min": SOC_MIN,
        "arrival_rate": rates,
        "links": links,
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--kwh-per-s", type=float, default=0.0093,
                    help="consumption per second of free-flow driving at the slow end")
    ap.add_argument("--out", default="configs/case_study.json")
    args = ap.parse_args()
    rng = random.Random(args.seed)
    doc = {
        "params": {
            "battery_kwh": 264.0,
            "charger_kw": 300.0,
            "boarding_s_per_pax": 1.5,
            "charger_setup_s": 10.0,
            "price_energy": 0.08,
            "price_wait": 0.0025,
            "price_end": 0.4,
            "big_m": 100000.0,
            "horizon_s": 3600.0,
            "sim_length_s": 50400.0,
            "control_interval_s": 300.0,
            "warmup_s": 1800.0,
            "max_hold_s": 600.0,
        },
        "charger_count": 1,
        "lines": [make_line(rng, i, m, n, args.kwh_per_s) for i, m, n in LINES],
        "simulation": {"traffic_cov": 0.1, "initial_spacing": "even"},
        "mpc": {"node_limit": 20, "relative_gap": 1e-6, "rounding_interval": 0, "local_search_passes": 0},
    }
    with open(args.out, "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()

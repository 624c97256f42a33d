#pragma once

// LP-based branch and bound for MilpProblem. Until a first incumbent exists
// the search dives depth-first; afterwards it always expands the open node
// with the lowest bound. Branching takes the most fractional binary, lowest
// column index on ties. Children start from their parent's optimal basis.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ebus/milp_problem.hpp"
#include "ebus/simplex.hpp"

namespace ebus {

enum class MilpStatus : std::uint8_t { Optimal, Infeasible, NodeLimit };

inline const char* to_string(MilpStatus s) {
  switch (s) {
    case MilpStatus::Optimal: return "optimal";
    case MilpStatus::Infeasible: return "infeasible";
    case MilpStatus::NodeLimit: return "node-limit";
  }
  return "?";
}

// Which child the depth-first dive explores first.
enum class DivePreference : std::uint8_t { Nearest, Up, Down };

// Proposes values for the binary columns from a relaxation solution. The
// solver fixes them, solves the remaining LP and keeps the result as an
// incumbent if it improves. Entries of non-binary columns are ignored; an
// empty vector means no proposal.
using RoundingHeuristic = std::function<std::vector<double>(const std::vector<double>& relaxation)>;

// Binary columns worth flipping, one at a time, around an incumbent.
using Neighborhood = std::function<std::vector<int>(const std::vector<double>& incumbent)>;

struct MilpOptions {
  double integrality_tolerance = 1e-6;
  double feasibility_tolerance = 1e-7;
  double relative_gap = 1e-6;
  long node_limit = 200000;
  DivePreference dive = DivePreference::Nearest;
  RoundingHeuristic rounding;      // tried at the root, then every rounding_interval nodes
  long rounding_interval = 0;      // 0: root only
  std::vector<std::vector<double>> starts;  // binary assignments tried at the root, like rounding proposals
  Neighborhood neighborhood;       // one-flip local search after the root heuristics
  int local_search_passes = 0;
  LpOptions lp;
};

struct SolveResult {
  MilpStatus status = MilpStatus::Infeasible;
  double objective = kInfinity;  // incumbent objective
  std::vector<double> solution;  // incumbent, empty if none
  double best_bound = -kInfinity;
  long nodes = 0;
  long lp_iterations = 0;
  double wall_time_s = 0.0;
  std::vector<double> bound_trace;  // global bound after each node

  bool has_incumbent() const { return !solution.empty(); }
  double gap() const {
    if (!has_incumbent()) return kInfinity;
    return std::max(0.0, objective - best_bound) / std::max(1.0, std::abs(objective));
  }
};

namespace detail {

struct BoundChange {
  int column;
  double lower;
  double upper;
};

struct BbNode {
  double bound = -kInfinity;
  std::vector<BoundChange> changes;
  std::shared_ptr<const LpBasis> basis;
};

}  // namespace detail

inline SolveResult solve_milp(const MilpProblem& problem, const MilpOptions& options = {}) {
  using Clock = std::chrono::steady_clock;
  const auto started = Clock::now();
  SolveResult result;
  SimplexSolver lp(problem, options.lp);

  const int n = problem.num_columns();
  const std::vector<double> root_lower(problem.lower().begin(), problem.lower().end());
  const std::vector<double> root_upper(problem.upper().begin(), problem.upper().end());
  std::vector<double> lower(n), upper(n);

  std::map<long, detail::BbNode> open;          // by creation order
  std::set<std::pair<double, long>> by_bound;   // (bound, id)
  long next_id = 0;
  auto push = [&](detail::BbNode node) {
    by_bound.emplace(node.bound, next_id);
    open.emplace(next_id++, std::move(node));
  };
  push(detail::BbNode{});

  auto tolerance = [&] { return options.relative_gap * std::max(1.0, std::abs(result.objective)); };
  // Heuristic LPs run on their own solver so the tree's warm starts stay intact.
  std::unique_ptr<SimplexSolver> fixed_lp;
  LpBasis fixed_basis;
  bool have_fixed_basis = false;
  // Fixes the binaries to `proposal` within [lo, up] and keeps the LP
  // optimum if it beats the incumbent.
  auto try_fixed = [&](const std::vector<double>& proposal, std::vector<double> lo, std::vector<double> up,
                       const LpBasis* warm) {
    if (static_cast<int>(proposal.size()) != n) return false;
    for (int j = 0; j < n; ++j) {
      if (!problem.is_binary(j)) continue;
      const double v = std::round(proposal[j]);
      if (v < lo[j] || v > up[j]) return false;
      lo[j] = up[j] = v;
    }
    if (!fixed_lp) {
      LpOptions heuristic = options.lp;
      if (heuristic.iteration_limit <= 0) heuristic.iteration_limit = 20L * (n + problem.num_rows()) + 1000;
      fixed_lp = std::make_unique<SimplexSolver>(problem, heuristic);
    }
    LpResult r;
    try {
      r = fixed_lp->solve(lo, up, warm);
    } catch (const InternalError&) {
      return false;  // a heuristic LP that stalls is abandoned
    }
    result.lp_iterations += r.iterations;
    const double margin = result.has_incumbent() ? 1e-9 * std::max(1.0, std::abs(result.objective)) : 0.0;
    if (r.status != LpStatus::Optimal || !(r.objective < result.objective - margin)) return false;
    result.objective = r.objective;
    result.solution = r.x;
    fixed_basis = fixed_lp->basis();
    have_fixed_basis = true;
    return true;
  };
  auto root_heuristics = [&](const std::vector<double>& relaxation, const std::vector<double>& lo,
                             const std::vector<double>& up) {
    if (options.rounding) try_fixed(options.rounding(relaxation), lo, up, &lp.basis());
    for (const auto& start : options.starts) try_fixed(start, lo, up, &lp.basis());
    if (!options.neighborhood || !result.has_incumbent()) return;
    for (int pass = 0; pass < options.local_search_passes; ++pass) {
      bool improved = false;
      for (int j : options.neighborhood(result.solution)) {
        if (j < 0 || j >= n || !problem.is_binary(j)) continue;
        std::vector<double> proposal = result.solution;
        proposal[j] = 1.0 - std::round(proposal[j]);
        const LpBasis warm = fixed_basis;
        if (try_fixed(proposal, lo, up, have_fixed_basis ? &warm : &lp.basis())) improved = true;
      }
      if (!improved) break;
    }
  };
  auto global_bound = [&](double current) {
    double b = current;
    if (!by_bound.empty()) b = std::min(b, by_bound.begin()->first);
    return std::min(b, result.objective);
  };

  while (!open.empty()) {
    if (result.nodes >= options.node_limit) break;
    long id;
    if (!result.has_incumbent()) {
      id = open.rbegin()->first;
    } else {
      id = by_bound.begin()->second;
    }
    auto it = open.find(id);
    detail::BbNode node = std::move(it->second);
    open.erase(it);
    by_bound.erase({node.bound, id});

    if (result.has_incumbent() && node.bound >= result.objective - tolerance()) continue;

    lower = root_lower;
    upper = root_upper;
    for (const auto& c : node.changes) {
      lower[c.column] = c.lower;
      upper[c.column] = c.upper;
    }
    const LpResult relax = lp.solve(lower, upper, node.basis.get());
    ++result.nodes;
    result.lp_iterations += relax.iterations;
    if (relax.status == LpStatus::Unbounded) throw InputError("solve_milp: LP relaxation is unbounded");

    double node_bound = kInfinity;
    if (relax.status == LpStatus::Optimal) {
      node_bound = std::max(node.bound, relax.objective);
      if (!(result.has_incumbent() && node_bound >= result.objective - tolerance())) {
        int branch = -1;
        double frac_best = 0.0;
        for (int j = 0; j < n; ++j) {
          if (!problem.is_binary(j)) continue;
          const double v = relax.x[j];
          const double frac = std::abs(v - std::round(v));
          if (frac > options.integrality_tolerance && frac > frac_best + 1e-12) {
            frac_best = frac;
            branch = j;
          }
        }
        if (branch < 0) {
          if (relax.objective < result.objective) {
            result.objective = relax.objective;
            result.solution = relax.x;
          }
          node_bound = kInfinity;
        } else {
          if (result.nodes == 1) {
            root_heuristics(relax.x, lower, upper);
          } else if (options.rounding && options.rounding_interval > 0 &&
                     result.nodes % options.rounding_interval == 0) {
            try_fixed(options.rounding(relax.x), lower, upper, &lp.basis());
          }
          const double v = relax.x[branch];
          auto basis = std::make_shared<const LpBasis>(lp.basis());
          detail::BbNode down{node_bound, node.changes, basis};
          down.changes.push_back({branch, lower[branch], std::floor(v)});
          detail::BbNode up{node_bound, node.changes, basis};
          up.changes.push_back({branch, std::ceil(v), upper[branch]});
          bool up_first = false;
          switch (options.dive) {
            case DivePreference::Nearest: up_first = v - std::floor(v) >= 0.5; break;
            case DivePreference::Up: up_first = true; break;
            case DivePreference::Down: up_first = false; break;
          }
          // The most recently pushed node is dived into first.
          if (up_first) {
            push(std::move(down));
            push(std::move(up));
          } else {
            push(std::move(up));
            push(std::move(down));
          }
          node_bound = kInfinity;
        }
      } else {
        node_bound = kInfinity;
      }
    }
    const double gb = global_bound(node_bound);
    result.bound_trace.push_back(gb);
    if (result.has_incumbent()) {
      result.best_bound = gb;
      if (result.gap() <= options.relative_gap) {
        open.clear();
        by_bound.clear();
        break;
      }
    }
  }

  if (open.empty()) {
    result.status = result.has_incumbent() ? MilpStatus::Optimal : MilpStatus::Infeasible;
    if (result.has_incumbent()) result.best_bound = std::min(global_bound(kInfinity), result.objective);
  } else {
    result.status = MilpStatus::NodeLimit;
    result.best_bound = global_bound(kInfinity);
  }
  result.wall_time_s = std::chrono::duration<double>(Clock::now() - started).count();
  return result;
}

// key=value summary of a solve, one line.
inline std::string solve_log_line(const SolveResult& r, const MilpProblem& p) {
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "status=%s cols=%d rows=%d binaries=%d nodes=%ld lp_iters=%ld objective=%.9g bound=%.9g "
                "gap=%.3g time_s=%.4f",
                to_string(r.status), p.num_columns(), p.num_rows(), p.num_binaries(), r.nodes, r.lp_iterations,
                r.objective, r.best_bound, r.gap(), r.wall_time_s);
  return buf;
}

}  // namespace ebus

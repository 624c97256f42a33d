#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "ebus/branch_and_bound.hpp"
#include "oracles.hpp"

using namespace ebus;

TEST(Milp, IntegralRelaxationNeedsOneNode) {
  MilpProblem p;
  const int b = p.add_column("b", 0.0, 1.0, -3.0, true);
  const int x = p.add_column("x", 0.0, 5.0, 1.0);
  p.add_row("link", {{x, -1.0}, {b, 2.0}}, RowSense::LessEqual, 0.0);
  const SolveResult r = solve_milp(p);
  ASSERT_EQ(r.status, MilpStatus::Optimal);
  EXPECT_EQ(r.nodes, 1);
  EXPECT_NEAR(r.objective, -1.0, 1e-9);
}

TEST(Milp, KnapsackNeedsBranching) {
  MilpProblem p;
  const double w[] = {5, 4, 3, 2};
  const double v[] = {10, 7, 5, 3};
  std::vector<Term> cap;
  for (int j = 0; j < 4; ++j) cap.push_back({p.add_column("b" + std::to_string(j), 0, 1, -v[j], true), w[j]});
  p.add_row("cap", cap, RowSense::LessEqual, 10.0);
  const SolveResult r = solve_milp(p);
  ASSERT_EQ(r.status, MilpStatus::Optimal);
  EXPECT_NEAR(r.objective, -18.0, 1e-9);
  EXPECT_LE(p.max_integrality_violation(r.solution), 1e-6);
  EXPECT_GT(r.nodes, 1);
}

TEST(Milp, InfeasibleReported) {
  MilpProblem p;
  const int a = p.add_column("a", 0, 1, 0, true);
  const int b = p.add_column("b", 0, 1, 0, true);
  p.add_row("odd", {{a, 2.0}, {b, 2.0}}, RowSense::Equal, 1.0);
  EXPECT_EQ(solve_milp(p).status, MilpStatus::Infeasible);
}

// Two buses want the charger during overlapping windows; psi orders them.
TEST(Milp, TwoBusChargerConflict) {
  MilpProblem p;
  const double M = 1000.0;
  // Both arrive at 0 and need 100 s of charge; charging is worth it.
  const int b1 = p.add_column("b1", 0, 1, -5.0, true);
  const int b2 = p.add_column("b2", 0, 1, -5.0, true);
  const int psi = p.add_column("psi", 0, 1, 0.0, true);
  const int s1 = p.add_column("s1", 0, 500, 0.01);
  const int s2 = p.add_column("s2", 0, 500, 0.01);
  const int c1 = p.add_column("c1", 0, 100, 0.0);
  const int c2 = p.add_column("c2", 0, 100, 0.0);
  p.add_row("c1b", {{c1, 1.0}, {b1, -100.0}}, RowSense::LessEqual, 0.0);
  p.add_row("c2b", {{c2, 1.0}, {b2, -100.0}}, RowSense::LessEqual, 0.0);
  p.add_row("c1full", {{c1, -1.0}, {b1, 100.0}}, RowSense::LessEqual, 0.0);
  p.add_row("c2full", {{c2, -1.0}, {b2, 100.0}}, RowSense::LessEqual, 0.0);
  // 1 before 2: s1 + c1 <= s2 + M(1 - psi) + M(2 - b1 - b2)
  p.add_row("x12", {{s1, 1.0}, {c1, 1.0}, {s2, -1.0}, {psi, M}, {b1, M}, {b2, M}}, RowSense::LessEqual, 3 * M);
  p.add_row("x21", {{s2, 1.0}, {c2, 1.0}, {s1, -1.0}, {psi, -M}, {b1, M}, {b2, M}}, RowSense::LessEqual, 2 * M);
  const SolveResult r = solve_milp(p);
  const auto o = oracle::enumerate_milp(p);
  ASSERT_EQ(r.status, MilpStatus::Optimal);
  ASSERT_TRUE(o.feasible);
  EXPECT_NEAR(r.objective, static_cast<double>(o.objective), 1e-6);
  const auto& x = r.solution;
  EXPECT_NEAR(x[b1], 1.0, 1e-6);
  EXPECT_NEAR(x[b2], 1.0, 1e-6);
  const bool one_first = x[psi] > 0.5;
  if (one_first) {
    EXPECT_LE(x[s1] + x[c1], x[s2] + 1e-6);
  } else {
    EXPECT_LE(x[s2] + x[c2], x[s1] + 1e-6);
  }
}

TEST(Milp, RandomMatchesEnumeration) {
  std::mt19937_64 rng(4242);
  oracle::RandomSpec spec;
  spec.max_rows = 20;
  spec.max_cols = 30;
  spec.max_binaries = 8;
  spec.density = 0.35;
  spec.infeasible_share = 0.01;
  const auto start = std::chrono::steady_clock::now();
  int solved = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const MilpProblem p = oracle::random_problem(rng, spec);
    const SolveResult r = solve_milp(p);
    const auto o = oracle::enumerate_milp(p);
    if (!o.feasible) {
      EXPECT_EQ(r.status, MilpStatus::Infeasible) << "trial " << trial;
      continue;
    }
    ++solved;
    ASSERT_EQ(r.status, MilpStatus::Optimal) << "trial " << trial;
    EXPECT_NEAR(r.objective, static_cast<double>(o.objective), 1e-6) << "trial " << trial;
    EXPECT_LE(p.max_integrality_violation(r.solution), 1e-6);
    EXPECT_LE(p.max_violation(r.solution), 1e-7);
    EXPECT_LE(r.best_bound, r.objective + 1e-9);
    EXPECT_LE(r.gap(), 1e-6);
    for (std::size_t k = 1; k < r.bound_trace.size(); ++k)
      EXPECT_GE(r.bound_trace[k], r.bound_trace[k - 1] - 1e-9) << "trial " << trial;
  }
  EXPECT_GT(solved, 150);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 60.0);
}

TEST(Milp, TwelveBinariesMatchEnumeration) {
  std::mt19937_64 rng(77);
  oracle::RandomSpec spec;
  spec.max_rows = 12;
  spec.max_cols = 10;
  spec.max_binaries = 12;
  for (int trial = 0; trial < 10; ++trial) {
    const MilpProblem p = oracle::random_problem(rng, spec);
    const SolveResult r = solve_milp(p);
    const auto o = oracle::enumerate_milp(p);
    ASSERT_EQ(r.status == MilpStatus::Optimal, o.feasible);
    if (o.feasible) {
      EXPECT_NEAR(r.objective, static_cast<double>(o.objective), 1e-6);
    }
  }
}

TEST(Milp, NodeLimitKeepsIncumbent) {
  std::mt19937_64 rng(5);
  oracle::RandomSpec spec;
  spec.max_rows = 15;
  spec.max_cols = 10;
  spec.max_binaries = 12;
  MilpOptions opt;
  opt.node_limit = 3;
  int limited = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const MilpProblem p = oracle::random_problem(rng, spec);
    const SolveResult r = solve_milp(p, opt);
    EXPECT_LE(r.nodes, 3);
    if (r.status == MilpStatus::NodeLimit) {
      ++limited;
      EXPECT_LE(r.best_bound, r.objective);
      if (r.has_incumbent()) {
        EXPECT_LE(p.max_violation(r.solution), 1e-7);
      }
    }
  }
  EXPECT_GT(limited, 0);
}

TEST(Milp, DeterministicNodeCounts) {
  std::mt19937_64 rng(31);
  oracle::RandomSpec spec;
  spec.max_rows = 20;
  spec.max_cols = 30;
  spec.max_binaries = 8;
  for (int trial = 0; trial < 20; ++trial) {
    const MilpProblem p = oracle::random_problem(rng, spec);
    const SolveResult a = solve_milp(p);
    const SolveResult b = solve_milp(p);
    EXPECT_EQ(a.nodes, b.nodes);
    EXPECT_EQ(a.solution, b.solution);
  }
}

TEST(Milp, LogLineIsKeyValue) {
  MilpProblem p;
  p.add_column("b", 0, 1, -1, true);
  p.add_row("r", {{0, 1.0}}, RowSense::LessEqual, 1.0);
  const std::string line = solve_log_line(solve_milp(p), p);
  EXPECT_NE(line.find("status=optimal"), std::string::npos);
  EXPECT_NE(line.find("nodes=1"), std::string::npos);
  EXPECT_NE(line.find("gap="), std::string::npos);
  EXPECT_NE(line.find("time_s="), std::string::npos);
}

TEST(Milp, RoundingHookSeedsIncumbentWithoutChangingOptimum) {
  std::mt19937_64 rng(404);
  oracle::RandomSpec spec;
  spec.max_rows = 12;
  spec.max_cols = 10;
  spec.max_binaries = 8;
  int used = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const MilpProblem p = oracle::random_problem(rng, spec);
    MilpOptions opt;
    int calls = 0;
    opt.rounding = [&](const std::vector<double>& x) {
      ++calls;
      std::vector<double> r = x;
      for (int j = 0; j < p.num_columns(); ++j)
        if (p.is_binary(j)) r[j] = std::round(x[j]);
      return r;
    };
    const SolveResult r = solve_milp(p, opt);
    const auto o = oracle::enumerate_milp(p);
    ASSERT_EQ(r.status == MilpStatus::Optimal, o.feasible);
    if (o.feasible) {
      EXPECT_NEAR(r.objective, static_cast<double>(o.objective), 1e-6);
    }
    if (calls > 0) ++used;
  }
  EXPECT_GT(used, 0);
}

TEST(Milp, RoundingHookIgnoresMalformedProposal) {
  MilpProblem p;
  const double w[] = {5, 4, 3, 2};
  const double v[] = {10, 7, 5, 3};
  std::vector<Term> cap;
  for (int j = 0; j < 4; ++j) cap.push_back({p.add_column("b" + std::to_string(j), 0, 1, -v[j], true), w[j]});
  p.add_row("cap", cap, RowSense::LessEqual, 10.0);
  MilpOptions opt;
  opt.rounding = [](const std::vector<double>&) { return std::vector<double>{1.0}; };
  const SolveResult r = solve_milp(p, opt);
  ASSERT_EQ(r.status, MilpStatus::Optimal);
  EXPECT_NEAR(r.objective, -18.0, 1e-9);
}

TEST(Milp, OptimalStartSurvivesNodeLimit) {
  std::mt19937_64 rng(77);
  oracle::RandomSpec spec;
  spec.max_rows = 12;
  spec.max_cols = 10;
  spec.max_binaries = 10;
  int checked = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const MilpProblem p = oracle::random_problem(rng, spec);
    const SolveResult full = solve_milp(p);
    if (full.status != MilpStatus::Optimal) continue;
    MilpOptions opt;
    opt.node_limit = 1;
    opt.starts.push_back(full.solution);
    const SolveResult r = solve_milp(p, opt);
    ASSERT_TRUE(r.has_incumbent());
    EXPECT_NEAR(r.objective, full.objective, 1e-6 * std::max(1.0, std::abs(full.objective)));
    EXPECT_LE(p.max_violation(r.solution), 1e-7);
    ++checked;
  }
  EXPECT_GT(checked, 10);
}

TEST(Milp, InfeasibleStartIgnored) {
  MilpProblem p;
  const int a = p.add_column("a", 0, 1, -1, true);
  const int b = p.add_column("b", 0, 1, -2, true);
  p.add_row("one", {{a, 1.0}, {b, 1.0}}, RowSense::LessEqual, 1.0);
  MilpOptions opt;
  opt.starts.push_back({1.0, 1.0});
  opt.starts.push_back({1.0});
  const SolveResult r = solve_milp(p, opt);
  ASSERT_EQ(r.status, MilpStatus::Optimal);
  EXPECT_NEAR(r.objective, -2.0, 1e-9);
}

// With one node, one-flip search from a poor start must reach at least the
// best single-flip neighbour of that start, and never worsen the optimum.
TEST(Milp, LocalSearchImprovesPoorStart) {
  MilpProblem p;
  const double w[] = {5, 4, 3, 2, 6, 1};
  const double v[] = {10, 7, 5, 3, 9, 1};
  std::vector<Term> cap;
  std::vector<int> cols;
  for (int j = 0; j < 6; ++j) {
    cols.push_back(p.add_column("b" + std::to_string(j), 0, 1, -v[j], true));
    cap.push_back({cols.back(), w[j]});
  }
  p.add_row("cap", cap, RowSense::LessEqual, 12.0);
  MilpOptions opt;
  opt.node_limit = 1;
  opt.starts.push_back({0, 0, 0, 0, 0, 1});
  opt.neighborhood = [&](const std::vector<double>&) { return cols; };
  opt.local_search_passes = 0;
  const SolveResult before = solve_milp(p, opt);
  opt.local_search_passes = 3;
  const SolveResult after = solve_milp(p, opt);
  ASSERT_TRUE(after.has_incumbent());
  EXPECT_LE(after.objective, before.objective);
  EXPECT_LE(after.objective, -10.0);
  EXPECT_LE(p.max_violation(after.solution), 1e-9);

  opt.node_limit = 200000;
  const SolveResult exact = solve_milp(p, opt);
  ASSERT_EQ(exact.status, MilpStatus::Optimal);
  EXPECT_NEAR(exact.objective, static_cast<double>(oracle::enumerate_milp(p).objective), 1e-9);
}

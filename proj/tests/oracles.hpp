#pragma once

// Reference solvers for the tests. They share nothing with the production
// solver beyond the MilpProblem container: a dense two-phase tableau simplex
// with Bland's rule in long double, and exhaustive enumeration of binaries.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "ebus/milp_problem.hpp"

namespace oracle {

struct DenseResult {
  bool feasible = false;
  long double objective = 0.0L;
  std::vector<double> x;
};

using Real = long double;

class Tableau {
 public:
  Tableau(int rows, int cols) : rows_(rows), cols_(cols), a_((rows + 1) * (cols + 1), 0.0L), basic_(rows, -1) {}

  Real& at(int r, int c) { return a_[r * (cols_ + 1) + c]; }
  Real& rhs(int r) { return at(r, cols_); }
  Real& obj(int c) { return at(rows_, c); }
  std::vector<int>& basic() { return basic_; }

  void pivot(int pr, int pc) {
    const Real p = at(pr, pc);
    for (int c = 0; c <= cols_; ++c) at(pr, c) /= p;
    for (int r = 0; r <= rows_; ++r) {
      if (r == pr) continue;
      const Real f = at(r, pc);
      if (f == 0.0L) continue;
      for (int c = 0; c <= cols_; ++c) at(r, c) -= f * at(pr, c);
    }
    basic_[pr] = pc;
  }

  // Minimizes the objective row over columns with allowed[c]. Returns false
  // if unbounded.
  bool optimize(const std::vector<char>& allowed) {
    const Real eps = 1e-13L;
    for (;;) {
      int enter = -1;
      for (int c = 0; c < cols_; ++c) {
        if (allowed[c] && obj(c) < -eps) {
          enter = c;
          break;
        }
      }
      if (enter < 0) return true;
      int leave = -1;
      Real best = 0.0L;
      for (int r = 0; r < rows_; ++r) {
        const Real a = at(r, enter);
        if (a <= eps) continue;
        const Real ratio = rhs(r) / a;
        if (leave < 0 || ratio < best - eps || (std::abs(ratio - best) <= eps && basic_[r] < basic_[leave])) {
          leave = r;
          best = ratio;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

 private:
  int rows_, cols_;
  std::vector<Real> a_;
  std::vector<int> basic_;
};

// All column bounds must be finite.
inline DenseResult dense_lp(const ebus::MilpProblem& p, const std::vector<double>& lower,
                            const std::vector<double>& upper) {
  const int n = p.num_columns();
  const int m = p.num_rows();
  // Variables z = x - lower in [0, upper - lower]; rows: the problem rows and
  // one z_j <= range_j per column. Columns: z, one slack per inequality,
  // one artificial per row.
  const int rows = m + n;
  std::vector<int> slack_of(rows, -1);
  int cols = n;
  for (int i = 0; i < rows; ++i)
    if (i >= m || p.sense(i) == ebus::RowSense::LessEqual) slack_of[i] = cols++;
  const int first_art = cols;
  cols += rows;
  Tableau t(rows, cols);
  for (int i = 0; i < m; ++i) {
    Real b = p.rhs(i);
    const auto idx = p.row_columns(i);
    const auto val = p.row_values(i);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      t.at(i, idx[k]) = val[k];
      b -= static_cast<Real>(val[k]) * lower[idx[k]];
    }
    if (slack_of[i] >= 0) t.at(i, slack_of[i]) = 1.0L;
    t.rhs(i) = b;
  }
  for (int j = 0; j < n; ++j) {
    const int r = m + j;
    t.at(r, j) = 1.0L;
    t.at(r, slack_of[r]) = 1.0L;
    t.rhs(r) = static_cast<Real>(upper[j]) - lower[j];
  }
  for (int r = 0; r < rows; ++r) {
    if (t.rhs(r) < 0.0L)
      for (int c = 0; c <= cols; ++c) t.at(r, c) = -t.at(r, c);
    t.at(r, first_art + r) = 1.0L;
    t.basic()[r] = first_art + r;
  }
  // Phase 1: minimize the sum of artificials, expressed in nonbasic terms.
  for (int c = 0; c <= cols; ++c) {
    Real s = 0.0L;
    for (int r = 0; r < rows; ++r) s += t.at(r, c);
    t.obj(c) = (c >= first_art && c < cols) ? 0.0L : -s;
  }
  std::vector<char> allowed(cols, 1);
  t.optimize(allowed);
  DenseResult res;
  if (-t.obj(cols) > 1e-9L) return res;
  // Drive remaining artificials out of the basis.
  for (int r = 0; r < rows; ++r) {
    if (t.basic()[r] < first_art) continue;
    for (int c = 0; c < first_art; ++c) {
      if (std::abs(t.at(r, c)) > 1e-10L) {
        t.pivot(r, c);
        break;
      }
    }
  }
  for (int c = first_art; c < cols; ++c) allowed[c] = 0;
  // Phase 2 objective row: reduced costs of the original cost.
  for (int c = 0; c <= cols; ++c) t.obj(c) = 0.0L;
  for (int j = 0; j < n; ++j) t.obj(j) = p.cost()[j];
  for (int r = 0; r < rows; ++r) {
    const int b = t.basic()[r];
    const Real cb = t.obj(b);
    if (cb == 0.0L) continue;
    for (int c = 0; c <= cols; ++c) t.obj(c) -= cb * t.at(r, c);
  }
  if (!t.optimize(allowed)) return res;  // cannot happen with finite bounds
  res.feasible = true;
  res.x.assign(n, 0.0);
  std::vector<Real> z(n, 0.0L);
  for (int r = 0; r < rows; ++r)
    if (t.basic()[r] < n) z[t.basic()[r]] = t.rhs(r);
  Real obj = p.cost_offset();
  for (int j = 0; j < n; ++j) {
    const Real xj = z[j] + lower[j];
    res.x[j] = static_cast<double>(xj);
    obj += static_cast<Real>(p.cost()[j]) * xj;
  }
  res.objective = obj;
  return res;
}

inline DenseResult dense_lp(const ebus::MilpProblem& p) {
  return dense_lp(p, {p.lower().begin(), p.lower().end()}, {p.upper().begin(), p.upper().end()});
}

// Best objective over every 0/1 assignment of the binaries, each completed by
// the dense LP oracle.
inline DenseResult enumerate_milp(const ebus::MilpProblem& p) {
  std::vector<int> bins;
  for (int j = 0; j < p.num_columns(); ++j)
    if (p.is_binary(j)) bins.push_back(j);
  std::vector<double> lo(p.lower().begin(), p.lower().end()), up(p.upper().begin(), p.upper().end());
  DenseResult best;
  for (std::uint32_t mask = 0; mask < (1u << bins.size()); ++mask) {
    bool ok = true;
    for (std::size_t k = 0; k < bins.size(); ++k) {
      const double v = (mask >> k) & 1u;
      if (v < p.lower()[bins[k]] || v > p.upper()[bins[k]]) ok = false;
      lo[bins[k]] = up[bins[k]] = v;
    }
    if (!ok) continue;
    DenseResult r = dense_lp(p, lo, up);
    if (r.feasible && (!best.feasible || r.objective < best.objective)) best = std::move(r);
  }
  return best;
}

// Random bounded problem; rows are made feasible around a random interior
// point unless `allow_infeasible` rolls otherwise.
struct RandomSpec {
  int max_rows = 25;
  int max_cols = 50;
  int max_binaries = 0;
  double density = 0.3;
  double equality_share = 0.2;
  double infeasible_share = 0.0;
};

inline ebus::MilpProblem random_problem(std::mt19937_64& rng, const RandomSpec& spec) {
  std::uniform_int_distribution<int> rows_d(1, spec.max_rows), cols_d(1, spec.max_cols),
      bins_d(0, spec.max_binaries);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> coef(-6, 6);
  const int bins = bins_d(rng);
  const int cont = cols_d(rng);
  const int n = bins + cont;
  const int m = rows_d(rng);
  ebus::MilpProblem p;
  std::vector<double> x0(n);
  for (int j = 0; j < n; ++j) {
    const bool binary = j < bins;
    double lo = 0.0, up = 1.0;
    if (!binary) {
      lo = std::floor(-5.0 * u01(rng));
      up = lo + std::ceil(10.0 * u01(rng));
    }
    const double cost = coef(rng) + 0.5 * u01(rng);
    p.add_column("x" + std::to_string(j), lo, up, cost, binary);
    x0[j] = binary ? static_cast<double>(u01(rng) < 0.5) : lo + (up - lo) * u01(rng);
  }
  for (int i = 0; i < m; ++i) {
    std::vector<ebus::Term> terms;
    for (int j = 0; j < n; ++j) {
      if (u01(rng) < spec.density) {
        const int c = coef(rng);
        if (c != 0) terms.push_back({j, static_cast<double>(c)});
      }
    }
    if (terms.empty()) terms.push_back({static_cast<int>(rng() % n), 1.0});
    double act = 0.0;
    for (const auto& t : terms) act += t.coefficient * x0[t.column];
    const bool eq = u01(rng) < spec.equality_share;
    double rhs = eq ? act : act + 3.0 * u01(rng);
    if (u01(rng) < spec.infeasible_share) {
      // Push the row beyond its minimum activity over the box.
      double minact = 0.0;
      for (const auto& t : terms)
        minact += t.coefficient > 0 ? t.coefficient * p.lower()[t.column] : t.coefficient * p.upper()[t.column];
      rhs = minact - 1.0 - u01(rng);
    }
    p.add_row("r" + std::to_string(i), terms, eq ? ebus::RowSense::Equal : ebus::RowSense::LessEqual, rhs);
  }
  return p;
}

}  // namespace oracle

#pragma once

// Bounded-variable primal simplex over a MilpProblem with integrality ignored.
//
// Every row i gets a logical column s_i (A x + s = b): s_i in [0, inf) for <=
// rows and [0, 0] for equality rows. Phase 1 minimizes the total bound
// violation of the basic variables, which makes the equality-row logicals act
// as artificials on a cold start and also repairs a warm-started basis whose
// bounds changed. Pricing is Dantzig with a Harris ratio test; after a long run
// of degenerate pivots it switches to Bland's rule until progress resumes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ebus/errors.hpp"
#include "ebus/milp_problem.hpp"
#include "ebus/sparse_lu.hpp"

namespace ebus {

enum class LpStatus : std::uint8_t { Optimal, Infeasible, Unbounded };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
  }
  return "?";
}

enum class VarState : std::uint8_t { Basic, AtLower, AtUpper };

// Structural columns first, then one logical per row.
struct LpBasis {
  std::vector<VarState> state;
  bool operator==(const LpBasis&) const = default;
};

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  double objective = 0.0;
  std::vector<double> x;  // structural columns only
  long iterations = 0;
};

struct LpOptions {
  double primal_tolerance = 1e-9;
  double dual_tolerance = 1e-9;
  double pivot_tolerance = 1e-9;
  int refactor_interval = 80;
  long iteration_limit = 0;  // 0: derived from the problem size
};

class SimplexSolver {
 public:
  explicit SimplexSolver(const MilpProblem& problem, LpOptions options = {});

  // Solves with the problem's own column bounds.
  LpResult solve(const LpBasis* warm = nullptr);
  // Solves with overriding column bounds (same length as the column count).
  LpResult solve(std::span<const double> lower, std::span<const double> upper, const LpBasis* warm = nullptr);

  const LpBasis& basis() const { return basis_; }
  long total_iterations() const { return total_iterations_; }
  long factorizations() const { return factorizations_; }

 private:
  struct Eta {
    int position;
    double pivot;
    std::vector<int> index;
    std::vector<double> value;
  };

  void load_bounds(std::span<const double> lower, std::span<const double> upper);
  void install_basis(const LpBasis* warm);
  void crash_basis();
  void place_nonbasic(int j);
  void factorize();
  void compute_primal();
  void ftran(std::vector<double>& rhs_rows, std::vector<double>& out) const;
  void btran(std::vector<double>& rhs_positions, std::vector<double>& out) const;
  double column_dot(int j, const std::vector<double>& y) const;
  double infeasibility(int j) const;
  LpResult finish(LpStatus status, long iterations);
  LpResult run();

  const MilpProblem& problem_;
  LpOptions options_;
  int n_ = 0;  // structural columns
  int m_ = 0;  // rows
  // structural columns, column-major
  std::vector<int> col_start_;
  std::vector<int> col_row_;
  std::vector<double> col_val_;
  std::vector<double> rhs_;
  std::vector<double> cost_;
  std::vector<double> lower_, upper_;

  LpBasis basis_;
  std::vector<int> head_;       // position -> variable
  std::vector<int> position_;   // variable -> position or -1
  std::vector<double> x_;
  lp::SparseLu lu_;
  std::vector<Eta> etas_;
  bool factor_valid_ = false;

  // scratch
  std::vector<double> work_rows_, work_pos_, y_, alpha_, phase_cost_;

  long total_iterations_ = 0;
  long factorizations_ = 0;
};

inline SimplexSolver::SimplexSolver(const MilpProblem& problem, LpOptions options)
    : problem_(problem), options_(options), n_(problem.num_columns()), m_(problem.num_rows()) {
  std::vector<int> count(n_ + 1, 0);
  for (int i = 0; i < m_; ++i)
    for (int c : problem.row_columns(i)) ++count[c + 1];
  col_start_.assign(n_ + 1, 0);
  for (int j = 0; j < n_; ++j) col_start_[j + 1] = col_start_[j] + count[j + 1];
  col_row_.resize(col_start_[n_]);
  col_val_.resize(col_start_[n_]);
  std::vector<int> fill(col_start_.begin(), col_start_.end() - 1);
  for (int i = 0; i < m_; ++i) {
    const auto cols = problem.row_columns(i);
    const auto vals = problem.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const int at = fill[cols[k]]++;
      col_row_[at] = i;
      col_val_[at] = vals[k];
    }
  }
  rhs_.resize(m_);
  for (int i = 0; i < m_; ++i) rhs_[i] = problem.rhs(i);
  cost_.assign(n_ + m_, 0.0);
  for (int j = 0; j < n_; ++j) cost_[j] = problem.cost()[j];
  lower_.resize(n_ + m_);
  upper_.resize(n_ + m_);
  for (int i = 0; i < m_; ++i) {
    lower_[n_ + i] = 0.0;
    upper_[n_ + i] = problem.sense(i) == RowSense::Equal ? 0.0 : kInfinity;
  }
  x_.assign(n_ + m_, 0.0);
  head_.assign(m_, -1);
  position_.assign(n_ + m_, -1);
  if (options_.iteration_limit <= 0) options_.iteration_limit = 200L * (n_ + m_) + 10000;
}

inline LpResult SimplexSolver::solve(const LpBasis* warm) {
  return solve(problem_.lower(), problem_.upper(), warm);
}

inline LpResult SimplexSolver::solve(std::span<const double> lower, std::span<const double> upper,
                                     const LpBasis* warm) {
  load_bounds(lower, upper);
  install_basis(warm);
  if (!factor_valid_) factorize();
  compute_primal();
  return run();
}

inline void SimplexSolver::load_bounds(std::span<const double> lower, std::span<const double> upper) {
  if (static_cast<int>(lower.size()) != n_ || static_cast<int>(upper.size()) != n_)
    throw InputError("solve_lp: bound vectors do not match the column count");
  for (int j = 0; j < n_; ++j) {
    if (!std::isfinite(lower[j]) && !std::isfinite(upper[j]))
      throw InputError("solve_lp: column " + problem_.column_name(j) + " has no finite bound");
    if (lower[j] > upper[j] + options_.primal_tolerance)
      throw InputError("solve_lp: column " + problem_.column_name(j) + " has lower > upper");
    lower_[j] = lower[j];
    upper_[j] = std::max(lower[j], upper[j]);
  }
}

inline void SimplexSolver::place_nonbasic(int j) {
  auto& st = basis_.state[j];
  if (st == VarState::AtUpper && !std::isfinite(upper_[j])) st = VarState::AtLower;
  if (st == VarState::AtLower && !std::isfinite(lower_[j])) st = VarState::AtUpper;
  x_[j] = st == VarState::AtLower ? lower_[j] : upper_[j];
}

inline void SimplexSolver::install_basis(const LpBasis* warm) {
  const int total = n_ + m_;
  if (warm != nullptr && static_cast<int>(warm->state.size()) == total &&
      std::count(warm->state.begin(), warm->state.end(), VarState::Basic) == m_) {
    // Same basic set as the current factorization: keep it.
    bool same = factor_valid_ && basis_.state.size() == warm->state.size();
    if (same) {
      for (int j = 0; j < total && same; ++j)
        same = (warm->state[j] == VarState::Basic) == (basis_.state[j] == VarState::Basic);
    }
    basis_ = *warm;
    if (!same) {
      factor_valid_ = false;
      int p = 0;
      for (int j = 0; j < total; ++j) {
        if (basis_.state[j] == VarState::Basic) {
          head_[p] = j;
          position_[j] = p++;
        } else {
          position_[j] = -1;
        }
      }
    }
  } else {
    crash_basis();
  }
  for (int j = 0; j < total; ++j)
    if (basis_.state[j] != VarState::Basic) place_nonbasic(j);
}

// Slack basis, except that rows may nominate a structural column to be basic
// instead of their logical (builder hints for triangular starting bases).
inline void SimplexSolver::crash_basis() {
  const int total = n_ + m_;
  basis_.state.assign(total, VarState::AtLower);
  std::vector<char> taken(n_, 0);
  for (int i = 0; i < m_; ++i) {
    int j = problem_.basis_hint(i);
    if (j < 0 || j >= n_ || taken[j]) j = n_ + i;
    if (j < n_) taken[j] = 1;
    basis_.state[j] = VarState::Basic;
    head_[i] = j;
  }
  std::fill(position_.begin(), position_.end(), -1);
  for (int p = 0; p < m_; ++p) position_[head_[p]] = p;
  factor_valid_ = false;
}

inline void SimplexSolver::factorize() {
  for (int attempt = 0;; ++attempt) {
    ++factorizations_;
    const bool ok = lu_.factorize(m_, [&](int p, std::vector<int>& idx, std::vector<double>& val) {
      const int j = head_[p];
      if (j < n_) {
        for (int t = col_start_[j]; t < col_start_[j + 1]; ++t) {
          idx.push_back(col_row_[t]);
          val.push_back(col_val_[t]);
        }
      } else {
        idx.push_back(j - n_);
        val.push_back(1.0);
      }
    });
    if (ok) break;
    if (attempt > 2) throw InternalError("simplex: basis repair failed");
    // Swap the logicals of uncovered rows in for the dependent columns.
    const auto& cols = lu_.singular_columns();
    const auto& rows = lu_.uncovered_rows();
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const int p = cols[k];
      const int out = head_[p];
      const int in = n_ + rows[k];
      if (position_[in] >= 0) continue;
      basis_.state[out] = VarState::AtLower;
      position_[out] = -1;
      place_nonbasic(out);
      basis_.state[in] = VarState::Basic;
      position_[in] = p;
      head_[p] = in;
    }
  }
  etas_.clear();
  factor_valid_ = true;
}

inline void SimplexSolver::compute_primal() {
  work_rows_.assign(rhs_.begin(), rhs_.end());
  for (int j = 0; j < n_; ++j) {
    if (position_[j] >= 0 || x_[j] == 0.0) continue;
    for (int t = col_start_[j]; t < col_start_[j + 1]; ++t) work_rows_[col_row_[t]] -= col_val_[t] * x_[j];
  }
  for (int i = 0; i < m_; ++i)
    if (position_[n_ + i] < 0) work_rows_[i] -= x_[n_ + i];
  ftran(work_rows_, work_pos_);
  for (int p = 0; p < m_; ++p) x_[head_[p]] = work_pos_[p];
}

inline void SimplexSolver::ftran(std::vector<double>& rhs_rows, std::vector<double>& out) const {
  lu_.solve(rhs_rows, out);
  for (const Eta& e : etas_) {
    const double v = out[e.position] / e.pivot;
    out[e.position] = v;
    if (v == 0.0) continue;
    for (std::size_t t = 0; t < e.index.size(); ++t) out[e.index[t]] -= e.value[t] * v;
  }
}

inline void SimplexSolver::btran(std::vector<double>& rhs_positions, std::vector<double>& out) const {
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    double s = rhs_positions[it->position];
    for (std::size_t t = 0; t < it->index.size(); ++t) s -= it->value[t] * rhs_positions[it->index[t]];
    rhs_positions[it->position] = s / it->pivot;
  }
  lu_.solve_transposed(rhs_positions, out);
}

inline double SimplexSolver::column_dot(int j, const std::vector<double>& y) const {
  if (j >= n_) return y[j - n_];
  double s = 0.0;
  for (int t = col_start_[j]; t < col_start_[j + 1]; ++t) s += col_val_[t] * y[col_row_[t]];
  return s;
}

// Signed bound violation: negative below the lower bound, positive above the upper.
inline double SimplexSolver::infeasibility(int j) const {
  if (x_[j] < lower_[j] - options_.primal_tolerance) return x_[j] - lower_[j];
  if (x_[j] > upper_[j] + options_.primal_tolerance) return x_[j] - upper_[j];
  return 0.0;
}

inline LpResult SimplexSolver::finish(LpStatus status, long iterations) {
  LpResult r;
  r.status = status;
  r.iterations = iterations;
  r.x.assign(x_.begin(), x_.begin() + n_);
  if (status == LpStatus::Optimal) {
    r.objective = problem_.cost_offset();
    for (int j = 0; j < n_; ++j) r.objective += cost_[j] * x_[j];
  }
  total_iterations_ += iterations;
  return r;
}

inline LpResult SimplexSolver::run() {
  const int total = n_ + m_;
  const double ptol = options_.primal_tolerance;
  const double dtol = options_.dual_tolerance;
  const long stall_threshold = 10L * total;
  long iterations = 0;
  long degenerate_run = 0;
  bool bland = false;
  bool fresh = etas_.empty();  // primal values recomputed from a fresh factorization

  phase_cost_.assign(m_, 0.0);
  for (;;) {
    if (iterations >= options_.iteration_limit) throw InternalError("simplex: iteration limit reached");

    bool phase1 = false;
    for (int p = 0; p < m_; ++p) {
      const double v = infeasibility(head_[p]);
      if (v != 0.0) phase1 = true;
      phase_cost_[p] = v < 0.0 ? -1.0 : (v > 0.0 ? 1.0 : 0.0);
    }
    if (!phase1)
      for (int p = 0; p < m_; ++p) phase_cost_[p] = cost_[head_[p]];

    work_pos_ = phase_cost_;
    btran(work_pos_, y_);

    // Pricing.
    int entering = -1;
    double best = 0.0;
    for (int j = 0; j < total; ++j) {
      const VarState st = basis_.state[j];
      if (st == VarState::Basic || upper_[j] <= lower_[j]) continue;
      const double d = (phase1 ? 0.0 : cost_[j]) - column_dot(j, y_);
      const bool eligible = (st == VarState::AtLower && d < -dtol) || (st == VarState::AtUpper && d > dtol);
      if (!eligible) continue;
      if (bland) {
        entering = j;
        break;
      }
      if (std::abs(d) > best) {
        best = std::abs(d);
        entering = j;
      }
    }

    if (entering < 0) {
      if (!fresh) {
        // Confirm on a fresh factorization before declaring the outcome.
        factorize();
        compute_primal();
        fresh = true;
        continue;
      }
      return finish(phase1 ? LpStatus::Infeasible : LpStatus::Optimal, iterations);
    }

    // Entering column in basis coordinates.
    work_rows_.assign(m_, 0.0);
    if (entering < n_) {
      for (int t = col_start_[entering]; t < col_start_[entering + 1]; ++t)
        work_rows_[col_row_[t]] = col_val_[t];
    } else {
      work_rows_[entering - n_] = 1.0;
    }
    ftran(work_rows_, alpha_);

    const double dir = basis_.state[entering] == VarState::AtLower ? 1.0 : -1.0;
    // Harris pass 1: largest step with bounds relaxed by the tolerance.
    double theta_max = kInfinity;
    for (int p = 0; p < m_; ++p) {
      const double a = alpha_[p];
      if (std::abs(a) <= options_.pivot_tolerance) continue;
      const int j = head_[p];
      const double rate = -dir * a;  // change of x_j per unit step
      const double xj = x_[j];
      double ratio = kInfinity;
      if (xj < lower_[j] - ptol) {
        if (rate > 0.0) ratio = (lower_[j] - xj) / rate;
      } else if (xj > upper_[j] + ptol) {
        if (rate < 0.0) ratio = (xj - upper_[j]) / -rate;
      } else if (rate > 0.0) {
        if (std::isfinite(upper_[j])) ratio = (upper_[j] + ptol - xj) / rate;
      } else {
        if (std::isfinite(lower_[j])) ratio = (xj - lower_[j] + ptol) / -rate;
      }
      theta_max = std::min(theta_max, ratio);
    }
    const double range = upper_[entering] - lower_[entering];
    int leave = -1;
    double theta = 0.0;
    bool leave_to_upper = false;
    if (std::isfinite(range) && range <= theta_max) {
      theta = range;  // bound flip, basis unchanged
    } else if (!std::isfinite(theta_max)) {
      if (phase1) throw InternalError("simplex: unbounded phase-1 direction");
      return finish(LpStatus::Unbounded, iterations);
    } else {
      // Pass 2: among ratios within theta_max, the largest pivot.
      double best_pivot = 0.0;
      for (int p = 0; p < m_; ++p) {
        const double a = alpha_[p];
        if (std::abs(a) <= options_.pivot_tolerance) continue;
        const int j = head_[p];
        const double rate = -dir * a;
        const double xj = x_[j];
        double ratio = kInfinity;
        bool to_upper = false;
        if (xj < lower_[j] - ptol) {
          if (rate > 0.0) ratio = (lower_[j] - xj) / rate;
        } else if (xj > upper_[j] + ptol) {
          if (rate < 0.0) {
            ratio = (xj - upper_[j]) / -rate;
            to_upper = true;
          }
        } else if (rate > 0.0) {
          if (std::isfinite(upper_[j])) {
            ratio = (upper_[j] - xj) / rate;
            to_upper = true;
          }
        } else {
          if (std::isfinite(lower_[j])) ratio = (xj - lower_[j]) / -rate;
        }
        if (ratio > theta_max) continue;
        const bool better = bland ? (leave < 0 || j < head_[leave]) : std::abs(a) > best_pivot;
        if (better) {
          best_pivot = std::abs(a);
          leave = p;
          theta = std::max(ratio, 0.0);
          leave_to_upper = to_upper;
        }
      }
      if (leave < 0) throw InternalError("simplex: ratio test found no leaving variable");
    }

    ++iterations;
    if (theta <= 1e-12) {
      if (++degenerate_run > stall_threshold) bland = true;
    } else {
      degenerate_run = 0;
      bland = false;
    }

    // Primal update.
    if (theta != 0.0) {
      x_[entering] += dir * theta;
      for (int p = 0; p < m_; ++p)
        if (alpha_[p] != 0.0) x_[head_[p]] -= dir * theta * alpha_[p];
    }
    if (leave < 0) {
      basis_.state[entering] =
          basis_.state[entering] == VarState::AtLower ? VarState::AtUpper : VarState::AtLower;
      x_[entering] = basis_.state[entering] == VarState::AtLower ? lower_[entering] : upper_[entering];
      fresh = false;
      continue;
    }
    const int out = head_[leave];
    basis_.state[out] = leave_to_upper ? VarState::AtUpper : VarState::AtLower;
    x_[out] = leave_to_upper ? upper_[out] : lower_[out];
    position_[out] = -1;
    basis_.state[entering] = VarState::Basic;
    position_[entering] = leave;
    head_[leave] = entering;

    Eta eta{leave, alpha_[leave], {}, {}};
    for (int p = 0; p < m_; ++p) {
      if (p == leave || std::abs(alpha_[p]) < 1e-13) continue;
      eta.index.push_back(p);
      eta.value.push_back(alpha_[p]);
    }
    etas_.push_back(std::move(eta));
    fresh = false;
    if (static_cast<int>(etas_.size()) >= options_.refactor_interval) {
      factorize();
      compute_primal();
      fresh = true;
    }
  }
}

inline LpResult solve_lp(const MilpProblem& problem, const LpBasis* warm = nullptr, LpOptions options = {}) {
  SimplexSolver solver(problem, options);
  return solver.solve(warm);
}

}  // namespace ebus

#pragma once

// Right-looking sparse LU with Markowitz pivot selection, used to factor
// simplex bases. Singleton columns and rows are taken first, so the mostly
// triangular bases produced by chain-structured models factor in linear time.

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

namespace ebus::lp {

class SparseLu {
 public:
  // `column(k, rows, values)` appends the nonzeros of basis column k. Returns
  // false when the matrix is numerically singular; singular_columns() and
  // uncovered_rows() then list the unpivoted part (same length).
  template <class ColumnFn>
  bool factorize(int m, ColumnFn&& column);

  const std::vector<int>& singular_columns() const { return singular_columns_; }
  const std::vector<int>& uncovered_rows() const { return uncovered_rows_; }

  // B x = b. `rhs` is indexed by row and is overwritten; `x` by column.
  void solve(std::vector<double>& rhs, std::vector<double>& x) const;
  // B' y = d. `rhs` is indexed by column and is overwritten; `y` by row.
  void solve_transposed(std::vector<double>& rhs, std::vector<double>& y) const;

  std::size_t nonzeros() const { return l_index_.size() + u_index_.size() + u_pivot_.size(); }

 private:
  struct Entry {
    int col;
    double val;
  };

  int m_ = 0;
  // L factor as a sequence of row operations: row i -= mult * row pivot.
  std::vector<int> l_pivot_row_;
  std::vector<int> l_start_{0};
  std::vector<int> l_index_;
  std::vector<double> l_value_;
  // U rows in pivot order, off-diagonal part only.
  std::vector<int> u_row_;
  std::vector<int> u_col_;
  std::vector<double> u_pivot_;
  std::vector<int> u_start_{0};
  std::vector<int> u_index_;
  std::vector<double> u_value_;

  std::vector<int> singular_columns_;
  std::vector<int> uncovered_rows_;

  static constexpr double kDropTolerance = 1e-14;
  static constexpr double kPivotTolerance = 1e-11;
  static constexpr double kThreshold = 0.01;
};

template <class ColumnFn>
bool SparseLu::factorize(int m, ColumnFn&& column) {
  m_ = m;
  l_pivot_row_.clear();
  l_start_.assign(1, 0);
  l_index_.clear();
  l_value_.clear();
  u_row_.clear();
  u_col_.clear();
  u_pivot_.clear();
  u_start_.assign(1, 0);
  u_index_.clear();
  u_value_.clear();
  singular_columns_.clear();
  uncovered_rows_.clear();

  std::vector<std::vector<Entry>> rows(m);
  std::vector<std::vector<int>> cols(m);
  {
    std::vector<int> idx;
    std::vector<double> val;
    for (int k = 0; k < m; ++k) {
      idx.clear();
      val.clear();
      column(k, idx, val);
      for (std::size_t t = 0; t < idx.size(); ++t) {
        if (val[t] == 0.0) continue;
        rows[idx[t]].push_back({k, val[t]});
        cols[k].push_back(idx[t]);
      }
    }
  }
  std::vector<int> ccount(m), rcount(m);
  for (int k = 0; k < m; ++k) ccount[k] = static_cast<int>(cols[k].size());
  for (int r = 0; r < m; ++r) rcount[r] = static_cast<int>(rows[r].size());
  std::vector<char> row_active(m, 1), col_active(m, 1);
  std::vector<int> col_singletons, row_singletons;
  for (int k = 0; k < m; ++k)
    if (ccount[k] == 1) col_singletons.push_back(k);
  for (int r = 0; r < m; ++r)
    if (rcount[r] == 1) row_singletons.push_back(r);

  std::vector<double> work(m, 0.0);
  std::vector<int> work_mark(m, -1), seen(m, -1);
  std::vector<int> active_cols(m);
  for (int k = 0; k < m; ++k) active_cols[k] = k;

  auto find_in_row = [&](int r, int c) -> int {
    const auto& row = rows[r];
    for (std::size_t t = 0; t < row.size(); ++t)
      if (row[t].col == c) return static_cast<int>(t);
    return -1;
  };
  auto column_max = [&](int c) {
    double mx = 0.0;
    for (int r : cols[c]) {
      if (!row_active[r]) continue;
      const int t = find_in_row(r, c);
      if (t >= 0) mx = std::max(mx, std::abs(rows[r][t].val));
    }
    return mx;
  };

  int stamp = 0;
  for (int step = 0; step < m; ++step) {
    int prow = -1, pcol = -1;
    // 1. column singletons: no elimination below the pivot.
    while (pcol < 0 && !col_singletons.empty()) {
      const int c = col_singletons.back();
      col_singletons.pop_back();
      if (!col_active[c] || ccount[c] != 1) continue;
      for (int r : cols[c]) {
        if (!row_active[r]) continue;
        const int t = find_in_row(r, c);
        if (t < 0) continue;
        if (std::abs(rows[r][t].val) > kPivotTolerance) {
          prow = r;
          pcol = c;
        }
        break;
      }
    }
    // 2. row singletons, subject to the threshold test on their column.
    while (pcol < 0 && !row_singletons.empty()) {
      const int r = row_singletons.back();
      row_singletons.pop_back();
      if (!row_active[r] || rcount[r] != 1) continue;
      const Entry e = rows[r][0];
      if (std::abs(e.val) > kPivotTolerance && std::abs(e.val) >= kThreshold * column_max(e.col)) {
        prow = r;
        pcol = e.col;
      }
    }
    // 3. Markowitz search over the sparsest columns.
    if (pcol < 0) {
      std::erase_if(active_cols, [&](int c) { return !col_active[c]; });
      std::vector<int>& order = active_cols;
      const auto sparser = [&](int a, int b) { return ccount[a] != ccount[b] ? ccount[a] < ccount[b] : a < b; };
      const std::size_t few = std::min<std::size_t>(order.size(), 8);
      std::partial_sort(order.begin(), order.begin() + few, order.end(), sparser);
      // Probe the sparsest few columns; widen to all of them if none passes.
      for (std::size_t probe : {few, order.size()}) {
        long best_cost = -1;
        double best_abs = 0.0;
        for (std::size_t q = 0; q < probe; ++q) {
          const int c = order[q];
          if (ccount[c] == 0) continue;
          const double mx = column_max(c);
          if (mx <= kPivotTolerance) continue;
          for (int r : cols[c]) {
            if (!row_active[r]) continue;
            const int t = find_in_row(r, c);
            if (t < 0) continue;
            const double a = std::abs(rows[r][t].val);
            if (a < kThreshold * mx || a <= kPivotTolerance) continue;
            const long cost = static_cast<long>(rcount[r] - 1) * static_cast<long>(ccount[c] - 1);
            if (best_cost < 0 || cost < best_cost || (cost == best_cost && a > best_abs)) {
              best_cost = cost;
              best_abs = a;
              prow = r;
              pcol = c;
            }
          }
        }
        if (pcol >= 0) break;
      }
      if (pcol < 0) {
        for (int c : active_cols)
          if (col_active[c]) singular_columns_.push_back(c);
        for (int r = 0; r < m; ++r)
          if (row_active[r]) uncovered_rows_.push_back(r);
        std::sort(singular_columns_.begin(), singular_columns_.end());
        return false;
      }
    }

    // Eliminate column pcol from the other active rows.
    const int pt = find_in_row(prow, pcol);
    const double pivot = rows[prow][pt].val;
    for (const Entry& e : rows[prow]) {
      work[e.col] = e.val;
      work_mark[e.col] = step;
    }
    row_active[prow] = 0;
    col_active[pcol] = 0;
    l_pivot_row_.push_back(prow);
    for (int i : cols[pcol]) {
      if (!row_active[i]) continue;
      auto& row = rows[i];
      const int t = find_in_row(i, pcol);
      if (t < 0) continue;
      const double mult = row[t].val / pivot;
      row[t] = row.back();
      row.pop_back();
      l_index_.push_back(i);
      l_value_.push_back(mult);
      ++stamp;
      for (auto& f : row) {
        if (work_mark[f.col] == step) {
          f.val -= mult * work[f.col];
          seen[f.col] = stamp;
        }
      }
      for (const Entry& e : rows[prow]) {
        if (e.col == pcol || seen[e.col] == stamp) continue;
        row.push_back({e.col, -mult * e.val});
        cols[e.col].push_back(i);
        ++ccount[e.col];
      }
      for (std::size_t q = 0; q < row.size();) {
        if (std::abs(row[q].val) < kDropTolerance) {
          --ccount[row[q].col];
          if (ccount[row[q].col] == 1) col_singletons.push_back(row[q].col);
          row[q] = row.back();
          row.pop_back();
        } else {
          ++q;
        }
      }
      rcount[i] = static_cast<int>(row.size());
      if (rcount[i] == 1) row_singletons.push_back(i);
    }
    l_start_.push_back(static_cast<int>(l_index_.size()));

    u_row_.push_back(prow);
    u_col_.push_back(pcol);
    u_pivot_.push_back(pivot);
    for (const Entry& e : rows[prow]) {
      if (e.col == pcol) continue;
      u_index_.push_back(e.col);
      u_value_.push_back(e.val);
      --ccount[e.col];
      if (ccount[e.col] == 1) col_singletons.push_back(e.col);
    }
    u_start_.push_back(static_cast<int>(u_index_.size()));
    rows[prow].clear();
  }
  return true;
}

inline void SparseLu::solve(std::vector<double>& rhs, std::vector<double>& x) const {
  const int steps = static_cast<int>(l_pivot_row_.size());
  for (int k = 0; k < steps; ++k) {
    const double v = rhs[l_pivot_row_[k]];
    if (v == 0.0) continue;
    for (int t = l_start_[k]; t < l_start_[k + 1]; ++t) rhs[l_index_[t]] -= l_value_[t] * v;
  }
  x.assign(m_, 0.0);
  for (int k = steps - 1; k >= 0; --k) {
    double s = rhs[u_row_[k]];
    for (int t = u_start_[k]; t < u_start_[k + 1]; ++t) s -= u_value_[t] * x[u_index_[t]];
    x[u_col_[k]] = s / u_pivot_[k];
  }
}

inline void SparseLu::solve_transposed(std::vector<double>& rhs, std::vector<double>& y) const {
  const int steps = static_cast<int>(u_row_.size());
  y.assign(m_, 0.0);
  for (int k = 0; k < steps; ++k) {
    const double z = rhs[u_col_[k]] / u_pivot_[k];
    y[u_row_[k]] = z;
    if (z == 0.0) continue;
    for (int t = u_start_[k]; t < u_start_[k + 1]; ++t) rhs[u_index_[t]] -= u_value_[t] * z;
  }
  for (int k = static_cast<int>(l_pivot_row_.size()) - 1; k >= 0; --k) {
    double s = 0.0;
    for (int t = l_start_[k]; t < l_start_[k + 1]; ++t) s += l_value_[t] * y[l_index_[t]];
    y[l_pivot_row_[k]] -= s;
  }
}

}  // namespace ebus::lp

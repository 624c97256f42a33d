#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ebus/errors.hpp"

namespace ebus {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class RowSense : std::uint8_t { LessEqual, Equal };

struct Term {
  int column = 0;
  double coefficient = 0.0;
};

// Sparse mixed-integer program: minimize cost'x + cost_offset subject to
// row-wise constraints (<= or =) and finite column bounds. Integer columns are
// binaries.
class MilpProblem {
 public:
  int add_column(std::string name, double lower, double upper, double cost = 0.0, bool binary = false) {
    if (binary && (lower < 0.0 || upper > 1.0)) throw InputError("binary column " + name + " needs bounds within [0,1]");
    if (lower > upper) throw InputError("column " + name + " has lower > upper");
    cost_.push_back(cost);
    lower_.push_back(lower);
    upper_.push_back(upper);
    binary_.push_back(binary);
    column_names_.push_back(std::move(name));
    return num_columns() - 1;
  }

  // Duplicate columns in `terms` are merged; zero coefficients dropped.
  int add_row(std::string name, std::vector<Term> terms, RowSense sense, double rhs, int basis_hint = -1) {
    std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.column < b.column; });
    std::vector<Term> merged;
    for (const Term& t : terms) {
      if (t.column < 0 || t.column >= num_columns()) throw InputError("row " + name + " references unknown column");
      if (!merged.empty() && merged.back().column == t.column) {
        merged.back().coefficient += t.coefficient;
      } else {
        merged.push_back(t);
      }
    }
    std::erase_if(merged, [](const Term& t) { return t.coefficient == 0.0; });
    if (merged.empty()) throw InputError("row " + name + " is empty");
    for (const Term& t : merged) {
      row_index_.push_back(t.column);
      row_value_.push_back(t.coefficient);
    }
    row_start_.push_back(static_cast<int>(row_index_.size()));
    sense_.push_back(sense);
    rhs_.push_back(rhs);
    row_names_.push_back(std::move(name));
    basis_hint_.push_back(basis_hint);
    return num_rows() - 1;
  }

  int num_columns() const { return static_cast<int>(cost_.size()); }
  int num_rows() const { return static_cast<int>(rhs_.size()); }
  int num_binaries() const { return static_cast<int>(std::count(binary_.begin(), binary_.end(), true)); }
  std::size_t num_nonzeros() const { return row_index_.size(); }

  std::span<const double> cost() const { return cost_; }
  std::span<const double> lower() const { return lower_; }
  std::span<const double> upper() const { return upper_; }
  bool is_binary(int col) const { return binary_[col]; }
  double cost_offset() const { return cost_offset_; }
  void set_cost_offset(double v) { cost_offset_ = v; }
  void set_cost(int col, double v) { cost_[col] = v; }
  void set_bounds(int col, double lower, double upper) {
    lower_[col] = lower;
    upper_[col] = upper;
  }

  const std::string& column_name(int col) const { return column_names_[col]; }
  const std::string& row_name(int row) const { return row_names_[row]; }
  RowSense sense(int row) const { return sense_[row]; }
  double rhs(int row) const { return rhs_[row]; }
  int basis_hint(int row) const { return basis_hint_[row]; }
  std::span<const int> row_columns(int row) const {
    return std::span<const int>(row_index_).subspan(row_start_[row], row_start_[row + 1] - row_start_[row]);
  }
  std::span<const double> row_values(int row) const {
    return std::span<const double>(row_value_).subspan(row_start_[row], row_start_[row + 1] - row_start_[row]);
  }

  double objective(std::span<const double> x) const {
    double v = cost_offset_;
    for (int j = 0; j < num_columns(); ++j) v += cost_[j] * x[j];
    return v;
  }

  double row_activity(int row, std::span<const double> x) const {
    double a = 0.0;
    const auto cols = row_columns(row);
    const auto vals = row_values(row);
    for (std::size_t k = 0; k < cols.size(); ++k) a += vals[k] * x[cols[k]];
    return a;
  }

  // Largest violation over rows and column bounds.
  double max_violation(std::span<const double> x) const {
    double worst = 0.0;
    for (int j = 0; j < num_columns(); ++j) {
      worst = std::max({worst, lower_[j] - x[j], x[j] - upper_[j]});
    }
    for (int i = 0; i < num_rows(); ++i) {
      const double r = row_activity(i, x) - rhs_[i];
      worst = std::max(worst, sense_[i] == RowSense::Equal ? std::abs(r) : r);
    }
    return worst;
  }

  double max_integrality_violation(std::span<const double> x) const {
    double worst = 0.0;
    for (int j = 0; j < num_columns(); ++j) {
      if (binary_[j]) worst = std::max(worst, std::abs(x[j] - std::round(x[j])));
    }
    return worst;
  }

 private:
  std::vector<double> cost_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<bool> binary_;
  std::vector<std::string> column_names_;
  double cost_offset_ = 0.0;

  std::vector<int> row_start_{0};
  std::vector<int> row_index_;
  std::vector<double> row_value_;
  std::vector<RowSense> sense_;
  std::vector<double> rhs_;
  std::vector<std::string> row_names_;
  std::vector<int> basis_hint_;
};

}  // namespace ebus

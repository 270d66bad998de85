#pragma once

// Dense tableau simplex over a generic ordered field.
//
//   minimize c.x  subject to  A_i.x (<=, =, >=) b_i,  x >= 0.
//
// Two-phase primal simplex with Dantzig pricing that falls back to Bland's rule
// after a run of degenerate pivots. Rows may be appended to a solved problem and
// re-optimized with the dual simplex (used by the cutting-plane solver). With an
// exact scalar type (rationals) every tolerance is zero.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "ivbounds/core.hpp"

namespace ivbounds {

enum class RowSense { LessEqual, Equal, GreaterEqual };

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

const char* to_string(LpStatus status);

template <typename T>
struct LinearProgram {
  struct Row {
    std::vector<T> coeffs;
    RowSense sense = RowSense::LessEqual;
    T rhs{};
  };

  std::size_t num_vars = 0;
  std::vector<T> objective;  // minimized
  std::vector<Row> rows;

  explicit LinearProgram(std::size_t n = 0) : num_vars(n), objective(n, T(0)) {}

  void add_row(std::vector<T> coeffs, RowSense sense, T rhs) {
    if (coeffs.size() != num_vars) throw Error(ErrorKind::DimensionMismatch, "LP row has wrong length");
    rows.push_back(Row{std::move(coeffs), sense, std::move(rhs)});
  }
};

template <typename T>
struct LpResult {
  LpStatus status = LpStatus::Optimal;
  T objective{};
  std::vector<T> x;
  T infeasibility{};  // phase-1 optimum; > 0 means the constraints are empty
  std::size_t iterations = 0;
};

template <typename T>
struct SimplexOptions {
  T feasibility_tol;
  T optimality_tol;
  T pivot_tol;
  T zero_tol;
  std::size_t max_iterations = 50'000;
  std::size_t degenerate_run_before_bland = 50;

  static SimplexOptions defaults() {
    if constexpr (std::is_floating_point_v<T>) {
      return SimplexOptions{T(1e-9), T(1e-10), T(1e-9), T(1e-13)};
    } else {
      return SimplexOptions{T(0), T(0), T(0), T(0)};
    }
  }
};

template <typename T>
class Simplex {
 public:
  explicit Simplex(const LinearProgram<T>& lp, SimplexOptions<T> opt = SimplexOptions<T>::defaults())
      : opt_(std::move(opt)), num_struct_(lp.num_vars), cost_(lp.objective) {
    if (cost_.size() != num_struct_) throw Error(ErrorKind::DimensionMismatch, "objective has wrong length");
    build(lp);
  }

  /// Two-phase primal simplex from scratch.
  LpResult<T> solve() {
    LpResult<T> res;
    // Phase 1: minimize the sum of artificials.
    if (has_artificials_) {
      std::vector<T> phase1(ncols_, T(0));
      for (std::size_t j = 0; j < ncols_; ++j) {
        if (artificial_[j]) phase1[j] = T(1);
      }
      set_costs(phase1);
      const LpStatus s = primal_loop(res.iterations, /*allow_artificial=*/true);
      if (s == LpStatus::IterationLimit) {
        res.status = s;
        return res;
      }
      res.infeasibility = -obj_rhs_;
      if (res.infeasibility > opt_.feasibility_tol) {
        res.status = LpStatus::Infeasible;
        infeasible_ = true;
        return res;
      }
      drive_out_artificials();
    }
    set_costs(extended_cost());
    res.status = primal_loop(res.iterations, /*allow_artificial=*/false);
    solved_ = res.status == LpStatus::Optimal;
    fill(res);
    return res;
  }

  /// Appends `coeffs.x (<= or >=) rhs` to a solved tableau without re-optimizing.
  void append_row(std::span<const T> coeffs, RowSense sense, T rhs) {
    if (!solved_) throw Error(ErrorKind::LpFailure, "append_row needs an optimal tableau");
    if (sense == RowSense::Equal) throw Error(ErrorKind::InvalidArgument, "cannot append an equality row");
    if (coeffs.size() != num_struct_) throw Error(ErrorKind::DimensionMismatch, "LP row has wrong length");
    const T sign = sense == RowSense::GreaterEqual ? T(-1) : T(1);

    // New slack column.
    for (auto& row : tab_) row.push_back(T(0));
    obj_row_.push_back(T(0));
    artificial_.push_back(false);
    const std::size_t slack = ncols_++;

    std::vector<T> row(ncols_, T(0));
    for (std::size_t j = 0; j < num_struct_; ++j) row[j] = sign * coeffs[j];
    row[slack] = T(1);
    T b = sign * rhs;
    for (std::size_t i = 0; i < tab_.size(); ++i) {
      const T f = row[basis_[i]];
      if (is_zero(f)) continue;
      for (std::size_t j = 0; j < ncols_; ++j) row[j] -= f * tab_[i][j];
      b -= f * rhs_[i];
      clean(row);
    }
    tab_.push_back(std::move(row));
    rhs_.push_back(b);
    basis_.push_back(slack);
  }

  /// Restores primal feasibility after append_row with the dual simplex.
  LpResult<T> reoptimize() {
    LpResult<T> res;
    res.status = dual_loop(res.iterations);
    solved_ = res.status == LpStatus::Optimal;
    if (res.status == LpStatus::Infeasible) infeasible_ = true;
    fill(res);
    return res;
  }

  LpResult<T> add_row_and_resolve(std::span<const T> coeffs, RowSense sense, T rhs) {
    append_row(coeffs, sense, std::move(rhs));
    return reoptimize();
  }

  std::size_t num_rows() const { return tab_.size(); }

 private:
  static bool is_exact() { return !std::is_floating_point_v<T>; }
  static T abs_value(const T& v) { return v < T(0) ? T(-v) : v; }

  bool is_zero(const T& v) const { return is_exact() ? v == T(0) : abs_value(v) <= opt_.zero_tol; }

  void clean(std::vector<T>& row) const {
    if constexpr (std::is_floating_point_v<T>) {
      for (auto& v : row) {
        if (std::abs(v) <= opt_.zero_tol) v = T(0);
      }
    }
  }

  void build(const LinearProgram<T>& lp) {
    const std::size_t m = lp.rows.size();
    // Column layout: structural | one slack/surplus per inequality | artificials.
    std::size_t ineq = 0;
    for (const auto& r : lp.rows) ineq += r.sense != RowSense::Equal ? 1 : 0;
    std::vector<bool> needs_artificial(m, false);
    std::vector<T> sign(m, T(1));
    std::size_t n_art = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const auto& r = lp.rows[i];
      RowSense s = r.sense;
      if (r.rhs < T(0)) {
        sign[i] = T(-1);
        if (s == RowSense::LessEqual) s = RowSense::GreaterEqual;
        else if (s == RowSense::GreaterEqual) s = RowSense::LessEqual;
      }
      needs_artificial[i] = s != RowSense::LessEqual;
      n_art += needs_artificial[i] ? 1 : 0;
    }
    ncols_ = num_struct_ + ineq + n_art;
    has_artificials_ = n_art > 0;
    artificial_.assign(ncols_, false);
    tab_.assign(m, std::vector<T>(ncols_, T(0)));
    rhs_.assign(m, T(0));
    basis_.assign(m, 0);
    std::size_t next_slack = num_struct_;
    std::size_t next_art = num_struct_ + ineq;
    for (std::size_t i = 0; i < m; ++i) {
      const auto& r = lp.rows[i];
      for (std::size_t j = 0; j < num_struct_; ++j) tab_[i][j] = sign[i] * r.coeffs[j];
      rhs_[i] = sign[i] * r.rhs;
      if (r.sense != RowSense::Equal) {
        // After sign normalization a <= row has slack +1, a >= row surplus -1.
        const bool is_le = (r.sense == RowSense::LessEqual) == (sign[i] > T(0));
        tab_[i][next_slack] = is_le ? T(1) : T(-1);
        if (is_le) basis_[i] = next_slack;
        ++next_slack;
      }
      if (needs_artificial[i]) {
        tab_[i][next_art] = T(1);
        artificial_[next_art] = true;
        basis_[i] = next_art;
        ++next_art;
      }
    }
  }

  std::vector<T> extended_cost() const {
    std::vector<T> c(ncols_, T(0));
    for (std::size_t j = 0; j < num_struct_; ++j) c[j] = cost_[j];
    return c;
  }

  void set_costs(const std::vector<T>& c) {
    obj_row_ = c;
    obj_rhs_ = T(0);
    for (std::size_t i = 0; i < tab_.size(); ++i) {
      const T cb = c[basis_[i]];
      if (cb == T(0)) continue;
      for (std::size_t j = 0; j < ncols_; ++j) obj_row_[j] -= cb * tab_[i][j];
      obj_rhs_ -= cb * rhs_[i];
    }
    clean(obj_row_);
  }

  void pivot(std::size_t r, std::size_t e) {
    const T inv = T(1) / tab_[r][e];
    auto& pr = tab_[r];
    for (auto& v : pr) v *= inv;
    rhs_[r] *= inv;
    pr[e] = T(1);
    clean(pr);
    for (std::size_t i = 0; i < tab_.size(); ++i) {
      if (i == r) continue;
      const T f = tab_[i][e];
      if (f == T(0)) continue;
      auto& row = tab_[i];
      for (std::size_t j = 0; j < ncols_; ++j) {
        if (pr[j] != T(0)) row[j] -= f * pr[j];
      }
      row[e] = T(0);
      rhs_[i] -= f * rhs_[r];
      if constexpr (std::is_floating_point_v<T>) {
        if (std::abs(rhs_[i]) <= opt_.zero_tol) rhs_[i] = T(0);
      }
    }
    const T f = obj_row_[e];
    if (f != T(0)) {
      for (std::size_t j = 0; j < ncols_; ++j) {
        if (pr[j] != T(0)) obj_row_[j] -= f * pr[j];
      }
      obj_row_[e] = T(0);
      obj_rhs_ -= f * rhs_[r];
    }
    basis_[r] = e;
  }

  LpStatus primal_loop(std::size_t& iterations, bool allow_artificial) {
    bool bland = false;
    std::size_t degenerate_run = 0;
    while (true) {
      if (iterations >= opt_.max_iterations) return LpStatus::IterationLimit;
      std::size_t enter = ncols_;
      for (std::size_t j = 0; j < ncols_; ++j) {
        if (!allow_artificial && artificial_[j]) continue;
        if (obj_row_[j] < -opt_.optimality_tol) {
          if (bland) {
            enter = j;
            break;
          }
          if (enter == ncols_ || obj_row_[j] < obj_row_[enter]) enter = j;
        }
      }
      if (enter == ncols_) return LpStatus::Optimal;

      std::size_t leave = tab_.size();
      T best_ratio{};
      if (bland || is_exact()) {
        for (std::size_t i = 0; i < tab_.size(); ++i) {
          const T a = tab_[i][enter];
          if (!(a > opt_.pivot_tol)) continue;
          const T b = rhs_[i] < T(0) ? T(0) : rhs_[i];
          const T ratio = b / a;
          if (leave == tab_.size() || ratio < best_ratio || (ratio == best_ratio && basis_[i] < basis_[leave])) {
            leave = i;
            best_ratio = ratio;
          }
        }
      } else {
        // Harris: bound the step with relaxed bounds, then take the largest pivot.
        T bound{};
        bool any = false;
        for (std::size_t i = 0; i < tab_.size(); ++i) {
          const T a = tab_[i][enter];
          if (!(a > opt_.pivot_tol)) continue;
          const T b = rhs_[i] < T(0) ? T(0) : rhs_[i];
          const T r = (b + opt_.feasibility_tol) / a;
          if (!any || r < bound) bound = r;
          any = true;
        }
        for (std::size_t i = 0; i < tab_.size(); ++i) {
          const T a = tab_[i][enter];
          if (!(a > opt_.pivot_tol)) continue;
          const T b = rhs_[i] < T(0) ? T(0) : rhs_[i];
          if (b / a > bound) continue;
          if (leave == tab_.size() || a > tab_[leave][enter]) {
            leave = i;
            best_ratio = b / a;
          }
        }
      }
      if (leave == tab_.size()) return LpStatus::Unbounded;
      degenerate_run = is_zero(best_ratio) ? degenerate_run + 1 : 0;
      if (degenerate_run > opt_.degenerate_run_before_bland) bland = true;
      pivot(leave, enter);
      ++iterations;
    }
  }

  LpStatus dual_loop(std::size_t& iterations) {
    bool bland = false;
    std::size_t degenerate_run = 0;
    while (true) {
      if (iterations >= opt_.max_iterations) return LpStatus::IterationLimit;
      std::size_t leave = tab_.size();
      for (std::size_t i = 0; i < tab_.size(); ++i) {
        if (!(rhs_[i] < -opt_.feasibility_tol)) continue;
        if (leave == tab_.size()) {
          leave = i;
        } else if (bland ? basis_[i] < basis_[leave] : rhs_[i] < rhs_[leave]) {
          leave = i;
        }
      }
      if (leave == tab_.size()) return LpStatus::Optimal;

      std::size_t enter = ncols_;
      T best_ratio{};
      if (bland || is_exact()) {
        for (std::size_t j = 0; j < ncols_; ++j) {
          if (artificial_[j]) continue;
          const T a = tab_[leave][j];
          if (!(a < -opt_.pivot_tol)) continue;
          const T d = obj_row_[j] < T(0) ? T(0) : obj_row_[j];
          const T ratio = d / -a;
          if (enter == ncols_ || ratio < best_ratio) {
            enter = j;
            best_ratio = ratio;
          }
        }
      } else {
        T bound{};
        bool any = false;
        for (std::size_t j = 0; j < ncols_; ++j) {
          if (artificial_[j]) continue;
          const T a = tab_[leave][j];
          if (!(a < -opt_.pivot_tol)) continue;
          const T d = obj_row_[j] < T(0) ? T(0) : obj_row_[j];
          const T r = (d + opt_.optimality_tol) / -a;
          if (!any || r < bound) bound = r;
          any = true;
        }
        for (std::size_t j = 0; j < ncols_; ++j) {
          if (artificial_[j]) continue;
          const T a = tab_[leave][j];
          if (!(a < -opt_.pivot_tol)) continue;
          const T d = obj_row_[j] < T(0) ? T(0) : obj_row_[j];
          if (d / -a > bound) continue;
          if (enter == ncols_ || a < tab_[leave][enter]) {
            enter = j;
            best_ratio = d / -a;
          }
        }
      }
      if (enter == ncols_) return LpStatus::Infeasible;
      degenerate_run = is_zero(best_ratio) ? degenerate_run + 1 : 0;
      if (degenerate_run > opt_.degenerate_run_before_bland) bland = true;
      pivot(leave, enter);
      ++iterations;
    }
  }

  void drive_out_artificials() {
    for (std::size_t i = 0; i < tab_.size(); ++i) {
      if (!artificial_[basis_[i]]) continue;
      std::size_t best = ncols_;
      for (std::size_t j = 0; j < ncols_; ++j) {
        if (artificial_[j] || is_zero(tab_[i][j])) continue;
        if (best == ncols_ || abs_value(tab_[i][j]) > abs_value(tab_[i][best])) best = j;
      }
      // A row with no usable column is linearly dependent; its artificial stays
      // basic at zero and no later pivot can touch it.
      if (best != ncols_) pivot(i, best);
    }
  }

  void fill(LpResult<T>& res) const {
    res.x.assign(num_struct_, T(0));
    for (std::size_t i = 0; i < tab_.size(); ++i) {
      if (basis_[i] < num_struct_) res.x[basis_[i]] = rhs_[i] < T(0) ? T(0) : rhs_[i];
    }
    res.objective = T(0);
    for (std::size_t j = 0; j < num_struct_; ++j) res.objective += cost_[j] * res.x[j];
  }

  SimplexOptions<T> opt_;
  std::size_t num_struct_ = 0;
  std::size_t ncols_ = 0;
  std::vector<T> cost_;
  std::vector<std::vector<T>> tab_;
  std::vector<T> rhs_;
  std::vector<std::size_t> basis_;
  std::vector<bool> artificial_;
  std::vector<T> obj_row_;
  T obj_rhs_{};
  bool has_artificials_ = false;
  bool solved_ = false;
  bool infeasible_ = false;
};

/// One-shot solve.
template <typename T>
LpResult<T> solve_lp(const LinearProgram<T>& lp, SimplexOptions<T> opt = SimplexOptions<T>::defaults()) {
  return Simplex<T>(lp, std::move(opt)).solve();
}

}  // namespace ivbounds

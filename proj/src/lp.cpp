#include "opideal/lp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <limits>
#include <vector>

namespace opideal::lp {

std::string to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::iteration_limit: return "iteration_limit";
  }
  return "infeasible";
}

namespace {

struct Tableau {
  Eigen::MatrixXd t;       // (rows + 1) x (vars + 1); last row = reduced costs, last col = rhs
  std::vector<int> basis;  // basic variable of each constraint row
  int rows = 0;
  int vars = 0;

  void pivot(int r, int c) {
    t.row(r) /= t(r, c);
    for (int i = 0; i <= rows; ++i) {
      if (i == r) continue;
      const double f = t(i, c);
      if (f != 0.0) t.row(i) -= f * t.row(r);
    }
    basis[static_cast<std::size_t>(r)] = c;
  }

  // Bland's rule; `allowed` masks columns that may enter.
  Status run(const std::vector<bool>& allowed, const Options& opt, int& iterations) {
    while (iterations < opt.max_iterations) {
      int enter = -1;
      for (int j = 0; j < vars; ++j) {
        if (allowed[static_cast<std::size_t>(j)] && t(rows, j) < -opt.pivot_tolerance) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return Status::optimal;
      int leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < rows; ++i) {
        const double a = t(i, enter);
        if (a <= opt.pivot_tolerance) continue;
        const double ratio = t(i, vars) / a;
        if (ratio < best - 1e-14 ||
            (ratio <= best + 1e-14 && leave >= 0 &&
             basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
          best = std::min(best, ratio);
          leave = i;
        }
      }
      if (leave < 0) return Status::unbounded;
      pivot(leave, enter);
      ++iterations;
    }
    return Status::iteration_limit;
  }
};

}  // namespace

Result solve_standard(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                      const Options& opt) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  if (b.size() != m || c.size() != n) throw std::invalid_argument("lp: inconsistent shapes");

  Result result;
  Tableau tab;
  tab.rows = m;
  tab.vars = n + m;
  tab.t = Eigen::MatrixXd::Zero(m + 1, n + m + 1);
  tab.basis.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const double s = b[i] < 0 ? -1.0 : 1.0;
    tab.t.row(i).head(n) = s * a.row(i);
    tab.t(i, n + i) = 1.0;
    tab.t(i, n + m) = s * b[i];
    tab.basis[static_cast<std::size_t>(i)] = n + i;
  }
  // Phase 1: minimize the sum of artificials.
  for (int i = 0; i < m; ++i) {
    tab.t.row(m).head(n) -= tab.t.row(i).head(n);
    tab.t(m, n + m) -= tab.t(i, n + m);
  }
  std::vector<bool> allowed(static_cast<std::size_t>(n + m), true);
  Status s = tab.run(allowed, opt, result.iterations);
  if (s == Status::iteration_limit) {
    result.status = s;
    return result;
  }
  if (-tab.t(m, n + m) > opt.feasibility_tolerance * std::max(1.0, b.cwiseAbs().sum())) {
    result.status = Status::infeasible;
    return result;
  }
  // Drive artificials out of the basis; rows where that fails are redundant.
  std::vector<bool> redundant(static_cast<std::size_t>(m), false);
  for (int i = 0; i < m; ++i) {
    if (tab.basis[static_cast<std::size_t>(i)] < n) continue;
    int col = -1;
    for (int j = 0; j < n; ++j) {
      if (std::abs(tab.t(i, j)) > opt.pivot_tolerance) {
        col = j;
        break;
      }
    }
    if (col >= 0) {
      tab.pivot(i, col);
    } else {
      redundant[static_cast<std::size_t>(i)] = true;
    }
  }
  for (int j = n; j < n + m; ++j) allowed[static_cast<std::size_t>(j)] = false;

  // Phase 2 reduced costs.
  tab.t.row(m).setZero();
  tab.t.row(m).head(n) = c.transpose();
  for (int i = 0; i < m; ++i) {
    const int bv = tab.basis[static_cast<std::size_t>(i)];
    if (bv >= n) continue;
    tab.t.row(m) -= c[bv] * tab.t.row(i);
  }
  s = tab.run(allowed, opt, result.iterations);
  if (s != Status::optimal) {
    result.status = s;
    return result;
  }

  // Re-solve the basic system from the original data for accuracy.
  std::vector<int> basic_cols;
  for (int i = 0; i < m; ++i) {
    const int bv = tab.basis[static_cast<std::size_t>(i)];
    if (bv < n && !redundant[static_cast<std::size_t>(i)]) basic_cols.push_back(bv);
  }
  result.x = Eigen::VectorXd::Zero(n);
  if (!basic_cols.empty()) {
    Eigen::MatrixXd ab(m, static_cast<Eigen::Index>(basic_cols.size()));
    for (std::size_t k = 0; k < basic_cols.size(); ++k)
      ab.col(static_cast<Eigen::Index>(k)) = a.col(basic_cols[k]);
    const Eigen::VectorXd xb = ab.colPivHouseholderQr().solve(b);
    for (std::size_t k = 0; k < basic_cols.size(); ++k)
      result.x[basic_cols[k]] = std::max(0.0, xb[static_cast<Eigen::Index>(k)]);
  }
  result.objective = c.dot(result.x);
  result.residual = m > 0 ? (a * result.x - b).cwiseAbs().maxCoeff() : 0.0;
  result.status = Status::optimal;
  return result;
}

}  // namespace opideal::lp

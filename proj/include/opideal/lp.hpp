#pragma once

// Dense two-phase simplex for small standard-form linear programs
//   minimize c^T x  subject to  A x = b,  x >= 0.

#include <Eigen/Dense>

#include <string>

namespace opideal::lp {

enum class Status { optimal, infeasible, unbounded, iteration_limit };

std::string to_string(Status s);

struct Result {
  Status status = Status::infeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
  /// Max |A x - b| after the final basis re-solve.
  double residual = 0.0;
  int iterations = 0;
};

struct Options {
  double pivot_tolerance = 1e-11;
  double feasibility_tolerance = 1e-9;
  int max_iterations = 100000;
};

Result solve_standard(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                      const Options& options = {});

}  // namespace opideal::lp

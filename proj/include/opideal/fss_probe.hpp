#pragma once

// Finite-strict-singularity probes: Milman vectors, subspace lower-bound
// profiles and the explicit small-vector construction for T_M.

#include "opideal/constructions.hpp"
#include "opideal/core_spaces.hpp"
#include "opideal/factorization.hpp"
#include "opideal/rip.hpp"

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace opideal {

inline constexpr double kTieTolerance = 1e-9;

struct MilmanOptions {
  /// Exhaustive iff C(K, d)·2^{d-1} <= budget.
  std::uint64_t budget = 10'000'000;
  /// Random (support, sign) draws in heuristic mode.
  std::uint64_t heuristic_tries = 100'000;
  std::uint64_t seed = 1;
};

struct MilmanResult {
  bool found = false;
  std::string mode;  // "exhaustive" | "heuristic"
  Eigen::VectorXd y;  // in ℓ_∞^K, max |y_i| = 1
  Eigen::VectorXd coefficients;  // y = Q c
  std::vector<std::size_t> support;  // 0-based tight coordinates used
  std::size_t ties = 0;
  std::uint64_t systems = 0;
};

/// Coordinates within kTieTolerance (relative) of max |y_i|.
std::size_t count_ties(const Eigen::Ref<const Eigen::VectorXd>& y);

/// A nonzero y in span(Q) with at least d = cols(Q) coordinates of largest
/// magnitude. Q must have independent columns.
MilmanResult milman_vector(const Eigen::MatrixXd& q, const MilmanOptions& options = {});

struct FssEntry {
  std::size_t d = 0;
  double value = 0.0;      // monotone envelope
  double raw_value = 0.0;  // max over sampled subspaces of the inner minimum
  double worst = 0.0;      // min over sampled subspaces
  std::size_t trials = 0;
  std::string method;      // "sigma_min" | "subgradient"
};

struct FssProfile {
  std::vector<FssEntry> entries;
};

struct FssOptions {
  std::size_t trials = 8;
  std::size_t iterations = 150;
  std::size_t random_starts = 3;
  bool block_aligned = true;
  std::size_t threads = 0;
};

/// Heuristic min of ‖Tx‖/‖x‖ over x in span(basis); an upper bound on the
/// true minimum.
double subspace_min(const DenseOperator& t, const Eigen::MatrixXd& basis, std::uint64_t seed,
                    const FssOptions& options = {});

/// For each d: sup over sampled d-dimensional subspaces E of the
/// (heuristic) min over E of ‖Tx‖/‖x‖.
FssProfile fss_profile(const DenseOperator& t, const std::vector<std::size_t>& dims, std::uint64_t seed,
                       const FssOptions& options = {});

std::string profile_to_csv(const FssProfile& profile);

/// Smallest m with 1/m + 2m^{-1/q} < ε/2.
std::size_t corollary_m(double epsilon, double q);

struct CorollaryReport {
  std::size_t m = 0;
  double q = 2.0;
  std::set<std::size_t> N;
  double bound = 0.0;        // 1/m + 2m^{-1/q}
  std::string branch;        // "kernel" | "milman" | "not_found"
  Eigen::VectorXd x;
  double ratio = 0.0;        // ‖DBx‖ / ‖x‖
  bool holds = false;
  std::size_t ties = 0;
  std::size_t selected = 0;  // Σ|J_n|
  double residual = 0.0;
  double P_norm_upper = 0.0;
  std::string mode;          // Milman search mode
};

/// Runs the formal-identity factorization for B : ℓ_2^{u_m} -> U_sub(N),
/// N = {n ∈ M : n > m}, and checks ‖DBx‖ <= (1/m + 2m^{-1/q})‖x‖ for the
/// kernel or Milman vector x it produces.
CorollaryReport corollary_check(const ParamSchedule& schedule, const RipFamily& family,
                                const std::set<std::size_t>& M, std::size_t m, const DenseOperator& b,
                                const MilmanOptions& options = {});

}  // namespace opideal

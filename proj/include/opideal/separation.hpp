#pragma once

// Separating functionals and the separation / pigeonhole diagnostics.

#include "opideal/constructions.hpp"
#include "opideal/core_spaces.hpp"
#include "opideal/rip.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace opideal {

enum class FunctionalKind { phi_V, psi_W, psi_dual, psi_remark };

std::string to_string(FunctionalKind kind);

struct SeparatingFunctional {
  FunctionalKind kind = FunctionalKind::phi_V;
  std::size_t m = 1;
  const ParamSchedule* schedule = nullptr;
  const RipFamily* family = nullptr;
};

SeparatingFunctional make_functional(FunctionalKind kind, std::size_t m, const ParamSchedule& schedule,
                                     const RipFamily& family);

/// Domain and codomain S must have for this functional.
BlockSpace expected_domain(const SeparatingFunctional& f);
BlockSpace expected_codomain(const SeparatingFunctional& f);

/// phi_V / psi_W: (1/v_m) Σ_i <S g_i, e_i>, S : U -> V or W.
/// psi_dual: (1/v_m) Σ_i <S e_i, g_i>, S : V* -> U_*.
/// psi_remark: (1/u_m) Σ_i <S e_i, e_i>, S : U -> V_u.
double eval_functional(const SeparatingFunctional& f, const DenseOperator& s);

struct SplitResult {
  std::optional<std::size_t> n0;
  std::vector<std::size_t> levels_below;  // n ∈ N, n < n0
  std::vector<std::size_t> levels_above;  // n ∈ N, n >= n0
  DenseOperator B1;  // ℓ_2^{u_m} -> (⊕_{below} ℓ_2^{u_n})_p
  DenseOperator B2;  // ℓ_2^{u_m} -> (⊕_{above} ℓ_2^{u_n})_p
  DenseOperator D1;  // diag(T_n), n below
  DenseOperator D2;  // diag(T_n), n above
  std::string note;
};

/// B : U -> U, m ∉ N.
SplitResult split_at_n0(const DenseOperator& b, const ParamSchedule& schedule, const RipFamily& family,
                        std::size_t m, const std::set<std::size_t>& levels);

struct Cluster {
  std::vector<std::size_t> members;  // 1-based column indices at level m
  double sum_norm_sq = 0.0;          // ‖Σ_J g_i‖²
  double sum_norm_bound = 0.0;       // 2|J|
  double image_sum_norm = 0.0;       // ‖Σ_J B1 g_i‖
  double image_sum_lower = 0.0;      // |J| / (3m)
};

struct PigeonholeReport {
  std::vector<std::size_t> H;  // 1-based
  double bound = 0.0;          // v_m / m
  bool within_bound = false;
  double first_term_bound = 0.0;  // |H|/v_m + 1/m
  double radius = 0.0;            // 1/(3m)
  std::size_t clusters = 0;
  Cluster largest;
};

/// H = {i : ‖B1 g_i‖ > 1/m} and a greedy 1/(3m)-clustering of the images
/// of the columns in H (seeded order).
PigeonholeReport pigeonhole_diagnostic(const DenseOperator& b1, const RipFamily& family, std::size_t m,
                                       std::uint64_t seed = 1);

struct HypothesisCertificate {
  std::string name;
  std::size_t level = 0;
  std::size_t order = 0;
  bool available = true;
  bool exhaustive = false;
  bool holds = false;
  double value = 0.0;
  std::string detail;
};

struct SeparationOptions {
  std::size_t samples = 10'000;
  std::size_t adversarial_steps = 200;
  std::size_t adversarial_restarts = 8;
  double margin = 1e-9;
  /// Budget for the besselian/Eq.-(4) certificates.
  std::uint64_t certify_budget = 2'000'000;
  std::size_t threads = 0;
};

struct SeparationReport {
  std::size_t m = 0;
  std::set<std::size_t> M;
  std::set<std::size_t> N;
  std::size_t samples = 0;
  double phi_T_M = 0.0;
  double phi_T_N = 0.0;
  double max_random = 0.0;
  double max_adversarial = 0.0;
  double bound_6_over_m = 0.0;
  bool bound_vacuous = false;
  bool hypotheses_certified = false;
  std::vector<HypothesisCertificate> hypothesis_certificates;
  /// "conditional" unless every certificate is exhaustive and passes.
  std::string bound_status;
  std::string verdict;  // "pass" | "fail"
  std::string detail;
};

SeparationReport separation_experiment(const ParamSchedule& schedule, const RipFamily& family,
                                       const std::set<std::size_t>& M, const std::set<std::size_t>& N,
                                       std::size_t m, std::uint64_t seed,
                                       const SeparationOptions& options = {});

/// Φ_m(A T_N B) for A : V -> V, B : U -> U given as plain matrices.
double separation_value(const ParamSchedule& schedule, const RipFamily& family,
                        const Eigen::MatrixXd& t_n, std::size_t m, const Eigen::MatrixXd& a,
                        const Eigen::MatrixXd& b);

struct RemarkLevel {
  std::size_t m = 0;
  double psi_identity = 0.0;
  double max_sampled = 0.0;
  double max_bound = 0.0;  // max over samples of (1/u_m) Σ ‖B_m e_i‖_∞
};

struct RemarkReport {
  std::vector<RemarkLevel> levels;
  std::size_t samples = 0;
  bool p_in_range = true;
  bool non_increasing = true;
  std::string note;
};

RemarkReport remark_experiment(const ParamSchedule& schedule, const RipFamily& family,
                               std::size_t samples, std::uint64_t seed, std::size_t threads = 0);

}  // namespace opideal

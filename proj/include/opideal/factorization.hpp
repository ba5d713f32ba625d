#pragma once

// Constructive factorizations: through a formal identity ℓ_2^r -> ℓ_∞^r,
// of the formal identity through T_n, and through sup-norm embeddings.

#include "opideal/constructions.hpp"
#include "opideal/core_spaces.hpp"
#include "opideal/rip.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace opideal {

struct ApproxFactorization {
  std::size_t m = 0;
  std::vector<std::size_t> levels;  // N, increasing
  /// (n, J_n) for every n in N; indices 1-based.
  std::vector<std::pair<std::size_t, std::vector<std::size_t>>> index_sets;
  /// Original (n, j) behind each coordinate of P's codomain.
  std::vector<std::pair<std::size_t, std::size_t>> source_coordinates;
  DenseOperator P;
  DenseOperator R;
  DenseOperator I_formal;
  double residual_norm = 0.0;  // ‖DB − RIP‖, exact
  NormBound P_norm;
  NormBound R_norm;
  std::uint64_t budget_s_m = 0;
  std::uint64_t t = 0;
  double threshold = 1.0;       // 1/m
  double max_excluded = 0.0;    // largest ‖B*g‖ outside J
  double B_norm_upper = 0.0;
  bool relocated = false;       // J placed at min N after the p <= 2 reduction
  std::string note;

  std::size_t selected() const { return source_coordinates.size(); }
};

/// Requires p >= 2 (read from B's codomain outer exponent), ‖B‖ <= 1
/// certified, N ⊆ {n > m}. B : ℓ_2^{u_m} -> (⊕_{n∈N} ℓ_2^{u_n})_{ℓ_p}.
ApproxFactorization factor_through_formal_identity(const DenseOperator& b,
                                                   const ParamSchedule& schedule,
                                                   const RipFamily& family, std::size_t m,
                                                   const std::set<std::size_t>& levels);

struct ReducedOperator {
  DenseOperator b;
  std::string note;
};

/// B with its codomain reinterpreted as the ℓ_2-sum; requires p <= 2.
ReducedOperator reduce_p_le_2(const DenseOperator& b, const ParamSchedule& schedule);

/// Dispatches on p: direct for p >= 2, otherwise reduce, factor at p = 2 and
/// place the r selected coordinates at n = min N.
ApproxFactorization factor_formal_identity_any_p(const DenseOperator& b,
                                                 const ParamSchedule& schedule,
                                                 const RipFamily& family, std::size_t m,
                                                 const std::set<std::size_t>& levels);

struct IdentityFactorization {
  bool accepted = false;
  std::size_t tries = 0;
  std::vector<std::size_t> subset;  // S, 1-based
  DenseOperator A;                  // ℓ_∞^m -> ℓ_∞^m
  DenseOperator P;                  // ℓ_∞^{v_n} -> ℓ_∞^m
  DenseOperator B;                  // ℓ_2^m -> ℓ_2^{u_n}
  double reconstruction_error = 0.0;
  double gram_energy = 0.0;         // Σ_{i≠j∈S} <g_i,g_j>²
  double energy_bound = 0.0;        // m(m-1)/(M-1)
  double diagonal_defect = 0.0;     // Σ_i max_{j≠i} |<g_i,g_j>|
  NormBound A_norm;
  NormBound B_norm;
  double hypothesis_lhs = 0.0;      // m·sqrt(m(m-1)/(M-1))
};

/// Smallest M with m·sqrt(m(m-1)/(M-1)) < 1/2.
std::size_t minimal_admissible_M(std::size_t m);
double identity_hypothesis_lhs(std::size_t m, std::size_t M);

IdentityFactorization factor_identity_through_T_n(const RipFamily& family, std::size_t m,
                                                  std::size_t n, std::size_t M_cols,
                                                  std::uint64_t seed, std::size_t max_tries = 1000);

struct EmbeddingOptions {
  /// Known lower constant of the embedding; computed by vertex enumeration if absent.
  std::optional<double> certified_lower;
  std::uint64_t vertex_budget = 20'000'000;
  double lp_tolerance = 1e-6;
  std::size_t threads = 0;
};

struct EmbeddingFactorization {
  DenseOperator A;
  double max_residual = 0.0;  // max |T − AJ|
  double a_norm = 0.0;        // exact ‖A‖_{∞→∞}
  double t_norm = 0.0;        // exact ‖T‖
  double embedding_lower = 0.0;
  bool norm_ok = false;       // ‖A‖ <= ‖T‖(1 + lp_tolerance)
  std::uint64_t lp_iterations = 0;
};

/// T = A∘J with ‖A‖ <= ‖T‖ for J : E -> ℓ_∞^m with ‖x‖ <= ‖Jx‖.
EmbeddingFactorization factor_through_embedding(const DenseOperator& j, const DenseOperator& t,
                                                const EmbeddingOptions& options = {});

struct BlockFactorization {
  DenseOperator A;
  DenseOperator L;  // or K
  double max_residual = 0.0;
  double a_norm = 0.0;
  double t_norm = 0.0;
  std::vector<double> block_a_norms;
  bool norm_ok = false;
};

/// T = diag(T_n) : (⊕ ℓ_p^{d_n}) -> (⊕ ℓ_∞^{r_n}) factored as A∘L, L = diag(L_n).
BlockFactorization factor_through_L(const DenseOperator& t, const std::vector<NetEmbedding>& l,
                                    const EmbeddingOptions& options = {});

struct Witness {
  /// Columns J_n e_k in the coordinates of T's domain.
  Eigen::MatrixXd basis;
  /// 1-based codomain block of T that receives T(E_n).
  std::size_t block = 1;
  double epsilon = 1.0;
};

struct WitnessFactorization {
  DenseOperator A;  // ⊕ ℓ_∞^{r_b} -> ⊕ ℓ_∞^{k_n}
  DenseOperator B;  // (⊕ ℓ_2^{d_n})_{outer} -> domain of T
  double max_residual = 0.0;  // max |K − ATB|
  std::vector<double> block_a_norms;
  std::vector<double> block_k_norms;
  std::vector<double> lower_constants;  // of T∘J_n
  std::vector<double> j_norm_upper;
  double a_norm = 0.0;
  double b_norm_bound = 0.0;  // max 2/ε
};

/// K ≈ A∘T∘B from witnesses E_n = J_n(ℓ_2^{d_n}) with ‖x‖ <= ‖T J_n x‖ and
/// ‖J_n‖ <= 2/ε. Refuses uncertified witnesses.
WitnessFactorization factor_K_through_witnessed_T(const DenseOperator& t,
                                                  const std::vector<Witness>& witnesses,
                                                  const std::vector<NetEmbedding>& k,
                                                  const EmbeddingOptions& options = {});

}  // namespace opideal

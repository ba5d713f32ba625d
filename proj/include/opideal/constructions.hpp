#pragma once

// Parameter schedules and the concrete operators built from a column family:
// analysis maps T_n, masked diagonals T_M, formal inclusions and the
// net embeddings used for K_n and L_n.

#include "opideal/core_spaces.hpp"
#include "opideal/rip.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace opideal {

using BigInt = boost::multiprecision::cpp_int;

struct LevelDims {
  std::size_t u = 0;
  std::size_t v = 0;
  friend bool operator==(const LevelDims&, const LevelDims&) = default;
};

struct ScheduleValue {
  BigInt value;
  /// False when the closed form was not integral and `value` is its ceiling.
  bool exact = true;
};

/// s_n: (2u)^{p/2}·n^p for p >= 2, 2u·n² for p <= 2.
ScheduleValue s_of(const ExtExponent& p, std::uint64_t u, std::uint64_t n);

class ParamSchedule {
 public:
  ParamSchedule() = default;
  ParamSchedule(ExtExponent p, std::vector<LevelDims> levels, std::string name = {});

  static ParamSchedule preset(const std::string& name);
  static std::vector<std::string> preset_names();

  const ExtExponent& p() const { return p_; }
  const std::vector<LevelDims>& levels() const { return levels_; }
  std::size_t level_count() const { return levels_.size(); }
  /// Level n, 1-based.
  const LevelDims& level(std::size_t n) const;
  const std::string& name() const { return name_; }
  /// s_n for 1 <= n <= level_count(); s_0 = 0.
  ScheduleValue s(std::size_t n) const;
  /// s_n as a machine integer; throws if it does not fit.
  std::uint64_t s_u64(std::size_t n) const;
  std::vector<std::pair<std::size_t, std::size_t>> dims() const;

  /// U = (⊕ ℓ_2^{u_n})_{ℓ_p}
  BlockSpace U() const;
  /// V = (⊕ ℓ_∞^{v_n})_{c0}
  BlockSpace V() const;
  /// W = (⊕ ℓ_∞^{v_n})_{ℓ_∞}
  BlockSpace W() const;
  /// V* = (⊕ ℓ_1^{v_n})_{ℓ_1}
  BlockSpace V_star() const;
  /// U_* = (⊕ ℓ_2^{u_n})_{ℓ_q}, or the c0-sum when p = 1.
  BlockSpace U_star() const;
  /// (⊕ ℓ_∞^{u_n})_{c0}: V reblocked along the u_n.
  BlockSpace V_u() const;
  /// Sub-sums over the given 1-based levels, in increasing order.
  BlockSpace U_sub(const std::set<std::size_t>& levels) const;
  BlockSpace V_sub(const std::set<std::size_t>& levels) const;

  friend bool operator==(const ParamSchedule& a, const ParamSchedule& b) {
    return a.p_ == b.p_ && a.levels_ == b.levels_ && a.name_ == b.name_;
  }

 private:
  ExtExponent p_ = ExtExponent::finite(2.0);
  std::vector<LevelDims> levels_;
  std::string name_;
};

struct LevelCheck {
  std::size_t n = 0;
  std::size_t u = 0;
  std::size_t v = 0;
  ScheduleValue s;
  /// u_n >= 19n³(6n+1)^{u_1+...+u_{n-1}}
  bool u_growth = false;
  BigInt u_growth_rhs;
  double u_growth_rhs_log10 = 0.0;
  /// v_n >= 9n³ s_n
  bool v_width = false;
  BigInt v_width_rhs;
};

/// Exponents beyond this are not expanded; the flag is then false and the
/// right-hand side is reported through its logarithm only.
inline constexpr std::uint64_t kMaxExpandedExponent = 200'000;

std::vector<LevelCheck> schedule_check(const ParamSchedule& schedule);
/// Decimal for short values, otherwise a mantissa/exponent summary.
std::string big_to_string(const BigInt& x, std::size_t max_digits = 40);

/// ℓ_2^{u_n} -> ℓ_∞^{v_n}, x -> (<x, g_i>)_i.
DenseOperator build_T_n(const RipFamily& family, std::size_t n);

struct MaskedDiagonal {
  std::set<std::size_t> mask;
  DenseOperator realized;
};

void check_family_matches(const ParamSchedule& schedule, const RipFamily& family);
void check_mask(const ParamSchedule& schedule, const std::set<std::size_t>& mask);

/// T_M : U -> V.
MaskedDiagonal build_T_M(const ParamSchedule& schedule, const RipFamily& family,
                         const std::set<std::size_t>& mask);
/// I_{U,V} : U -> V_u, identity blocks ℓ_2^{u_n} -> ℓ_∞^{u_n}.
DenseOperator build_formal_inclusion(const ParamSchedule& schedule);
/// J = I_{V,W}.
DenseOperator build_J(const ParamSchedule& schedule);
/// S_M = diag(S_n*) : V* -> U_*, with S_M* = J∘T_M.
DenseOperator build_S_M(const ParamSchedule& schedule, const RipFamily& family,
                        const std::set<std::size_t>& mask);

// --- net embeddings --------------------------------------------------------

struct NetOptions {
  /// Largest number of rows tried before giving up.
  std::size_t max_rows = 4096;
  /// Vertex enumeration budget (row subsets x sign patterns).
  std::uint64_t vertex_budget = 20'000'000;
  std::uint64_t seed = 0x6e6574;
};

struct NetEmbedding {
  /// ℓ_p^{dim} -> ℓ_∞^{rows}; ‖x‖ <= ‖Kx‖ <= distortion·‖x‖.
  DenseOperator op;
  /// Certified: 1 after scaling (lower bound of ‖Kx‖/‖x‖).
  double lower = 1.0;
  /// Exact ‖K‖.
  double distortion = 1.0;
  std::string method;
};

struct EmbeddingCertificate {
  bool bounded = true;
  /// min ‖Jx‖ / ‖x‖, exact up to rounding.
  double lower = 0.0;
  /// ‖J‖, exact.
  double upper = 0.0;
  std::uint64_t vertices_examined = 0;
};

/// Lower constant of J : E -> sup-type space by enumerating the vertices of
/// {x : |<x, f_i>| <= 1}. Throws HypothesisViolation over budget.
EmbeddingCertificate certify_embedding(const DenseOperator& j, std::uint64_t vertex_budget);

NetEmbedding build_net_embedding(const ExtExponent& inner_p, std::size_t dim,
                                 double distortion_target, const NetOptions& options = {});
/// ℓ_p^2 -> ℓ_∞^{rows} with rows equiangular directions on the circle,
/// normalized in the dual norm and scaled to certified lower constant 1.
NetEmbedding build_circle_net(const ExtExponent& inner_p, std::size_t rows,
                              const NetOptions& options = {});

}  // namespace opideal

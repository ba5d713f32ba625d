#pragma once

// Unit-norm column families and spectral certificates over principal Gram
// submatrices.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace opideal {

struct RipLevel {
  std::size_t u = 0;
  std::size_t v = 0;
  Eigen::MatrixXd columns;  // u x v, unit ℓ_2 columns
  Eigen::MatrixXd gram;     // v x v

  Eigen::VectorXd column(std::size_t i) const { return columns.col(static_cast<Eigen::Index>(i)); }
};

struct RipFamily {
  std::vector<RipLevel> levels;
  std::uint64_t seed = 0;

  /// Level n, 1-based.
  const RipLevel& level(std::size_t n) const;
  std::size_t level_count() const { return levels.size(); }
};

enum class PostPass {
  none,
  orthonormalize,  // exact δ = 0 fixtures; needs u >= v
  refine,          // coherence descent; pushes Gram submatrix spectra towards 1
};

std::string to_string(PostPass p);
PostPass parse_post_pass(const std::string& text);

struct GenOptions {
  PostPass post = PostPass::none;
  std::size_t refine_iterations = 500;
  double refine_step = 0.1;
  int refine_power = 4;
};

/// Normalizes the columns and caches the Gram matrix.
RipLevel make_level(Eigen::MatrixXd columns);
RipLevel gen_gaussian_columns(std::size_t u, std::size_t v, std::uint64_t seed,
                              const GenOptions& options = {});
/// Level n uses substream(seed, n).
RipFamily gen_family(const std::vector<std::pair<std::size_t, std::size_t>>& dims,
                     std::uint64_t seed, const GenOptions& options = {});

/// Largest |<g_i, g_j>|, i != j.
double coherence(const RipLevel& level);

enum class CertMode { exhaustive, sampled };
std::string to_string(CertMode m);

struct CertifyOptions {
  /// Exhaustive iff C(v, order) <= budget.
  std::uint64_t budget = 10'000'000;
  /// Subsets drawn in sampled mode: min(budget, max_samples).
  std::uint64_t max_samples = 200'000;
  std::uint64_t seed = 1;
  std::size_t threads = 0;
};

struct RipCertificate {
  std::size_t level = 0;
  std::size_t order = 0;
  double lambda_min = 1.0;
  double lambda_max = 1.0;
  CertMode mode = CertMode::exhaustive;
  std::uint64_t samples = 0;  // subsets examined
  bool besselian_only = false;
  double elapsed_ms = 0.0;
  std::vector<std::size_t> argmin;  // 0-based subsets attaining the extremes
  std::vector<std::size_t> argmax;

  /// ½ ≤ λ_min and λ_max ≤ 2.
  bool almost_orthonormal() const { return lambda_min >= 0.5 && lambda_max <= 2.0; }
  bool besselian() const { return lambda_max <= 2.0; }
  bool exhaustive() const { return mode == CertMode::exhaustive; }
};

/// Extreme eigenvalues of the principal submatrices of `gram` of size `order`.
RipCertificate certify_gram(const Eigen::MatrixXd& gram, std::size_t order,
                            const CertifyOptions& options = {});
RipCertificate certify_almost_on(const RipFamily& family, std::size_t level, std::size_t order,
                                 const CertifyOptions& options = {});
RipCertificate certify_besselian(const RipFamily& family, std::size_t level, std::size_t order,
                                 const CertifyOptions& options = {});

struct RipDefResult {
  bool holds = true;
  CertMode mode = CertMode::exhaustive;
  std::uint64_t samples = 0;
  double sigma_min = 1.0;
  double sigma_max = 1.0;
  /// On failure: the violating support (0-based) and a unit coefficient vector on it.
  std::vector<std::size_t> witness_support;
  Eigen::VectorXd witness_coefficients;
};

/// (1-δ)‖x‖ ≤ ‖Ax‖ ≤ (1+δ)‖x‖ for all k-sparse x.
RipDefResult verify_rip_def(const Eigen::MatrixXd& a, std::size_t k, double delta,
                            const CertifyOptions& options = {});

}  // namespace opideal

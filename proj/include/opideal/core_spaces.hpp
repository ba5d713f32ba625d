#pragma once

// Finite-dimensional sequence-space sums (⊕ ℓ_r^{d_n})_{outer}, vectors and
// dense operators between them, plus the operator-norm engine.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace opideal {

/// Raised when vectors/operators are combined over incompatible spaces.
class SpaceMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a documented precondition or certified hypothesis fails.
class HypothesisViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExponentKind { finite, infinity, c0 };

/// An exponent in [1, ∞]. The c0 tag is only meaningful as an outer
/// exponent; in finite dimensions it has the same norm as ∞ but dualizes
/// to ℓ_1.
class ExtExponent {
 public:
  ExtExponent() = default;
  static ExtExponent finite(double p);
  static ExtExponent infinity() { return ExtExponent(ExponentKind::infinity, 0.0); }
  static ExtExponent c0() { return ExtExponent(ExponentKind::c0, 0.0); }
  /// Accepts "inf", "c0" or a decimal >= 1.
  static ExtExponent parse(std::string_view text);

  ExponentKind kind() const { return kind_; }
  /// Numeric exponent; +inf for both sup tags.
  double value() const;
  bool is_sup() const { return kind_ != ExponentKind::finite; }
  bool is_finite() const { return kind_ == ExponentKind::finite; }
  ExtExponent conjugate() const;
  /// Same norm (∞ and c0 agree).
  bool same_norm(const ExtExponent& other) const;
  std::string to_string() const;

  friend bool operator==(const ExtExponent&, const ExtExponent&) = default;

 private:
  ExtExponent(ExponentKind kind, double p) : kind_(kind), p_(p) {}
  ExponentKind kind_ = ExponentKind::finite;
  double p_ = 2.0;
};

struct Block {
  ExtExponent inner;
  std::size_t dim = 1;
  friend bool operator==(const Block&, const Block&) = default;
};

/// (⊕_n ℓ_{inner_n}^{dim_n})_{outer}. An empty block list is the zero space.
class BlockSpace {
 public:
  BlockSpace() = default;
  BlockSpace(std::vector<Block> blocks, ExtExponent outer);

  /// Single block ℓ_r^d; the outer tag equals r.
  static BlockSpace lp(ExtExponent r, std::size_t dim);
  static BlockSpace sum(ExtExponent inner, std::span<const std::size_t> dims,
                        ExtExponent outer);
  static BlockSpace zero() { return BlockSpace({}, ExtExponent::finite(1.0)); }

  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& block(std::size_t i) const { return blocks_.at(i); }
  std::size_t block_count() const { return blocks_.size(); }
  ExtExponent outer() const { return outer_; }
  std::size_t total_dim() const { return offsets_.back(); }
  /// First coordinate of block i (0-based); offset(block_count()) == total_dim().
  std::size_t offset(std::size_t i) const { return offsets_.at(i); }

  /// r when the norm is ℓ_r on all coordinates, irrespective of blocking.
  std::optional<ExtExponent> flat_exponent() const;
  bool is_sup_type() const;
  bool is_euclidean() const;
  bool is_l1_type() const;

  /// Block structure and exponents identical (c0 and ∞ distinguished).
  friend bool operator==(const BlockSpace& a, const BlockSpace& b) {
    return a.blocks_ == b.blocks_ && a.outer_ == b.outer_;
  }
  /// Same coordinates and same norm (c0 and ∞ identified).
  bool same_norm(const BlockSpace& other) const;
  std::string describe() const;

 private:
  std::vector<Block> blocks_;
  ExtExponent outer_ = ExtExponent::finite(2.0);
  std::vector<std::size_t> offsets_{0};
};

class SpaceVector {
 public:
  SpaceVector(Eigen::VectorXd coords, BlockSpace space);
  const Eigen::VectorXd& coords() const { return coords_; }
  const BlockSpace& space() const { return space_; }

 private:
  Eigen::VectorXd coords_;
  BlockSpace space_;
};

/// A matrix together with its domain and codomain; rows = codomain dim,
/// cols = domain dim.
class DenseOperator {
 public:
  /// 0 x 0 operator between zero spaces.
  DenseOperator() : domain_(BlockSpace::zero()), codomain_(BlockSpace::zero()) {}
  DenseOperator(Eigen::MatrixXd matrix, BlockSpace domain, BlockSpace codomain);

  static DenseOperator zero(BlockSpace domain, BlockSpace codomain);
  /// Coordinatewise identity between spaces of equal total dimension.
  static DenseOperator identity(BlockSpace domain, BlockSpace codomain);

  const Eigen::MatrixXd& matrix() const { return matrix_; }
  const BlockSpace& domain() const { return domain_; }
  const BlockSpace& codomain() const { return codomain_; }
  std::size_t rows() const { return static_cast<std::size_t>(matrix_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(matrix_.cols()); }

  SpaceVector apply(const SpaceVector& x) const;
  /// Same matrix viewed between other spaces of equal dimension.
  DenseOperator reinterpret(BlockSpace domain, BlockSpace codomain) const;
  DenseOperator scaled(double factor) const;

  friend DenseOperator operator+(const DenseOperator& a, const DenseOperator& b);
  friend DenseOperator operator-(const DenseOperator& a, const DenseOperator& b);

 private:
  Eigen::MatrixXd matrix_;
  BlockSpace domain_;
  BlockSpace codomain_;
};

enum class NormMode { exact, certified_upper, heuristic_lower, sign_enumeration, spectral };

std::string to_string(NormMode mode);
NormMode parse_norm_mode(std::string_view text);

struct NormBound {
  double lower = 0.0;
  double upper = 0.0;
  NormMode mode = NormMode::exact;

  bool is_exact() const {
    return mode == NormMode::exact || mode == NormMode::sign_enumeration ||
           mode == NormMode::spectral;
  }
  double value() const { return is_exact() ? upper : lower; }
};

enum class NormStrategy {
  automatic,  // closed forms where available, bracket otherwise
  heuristic,  // always the ascent bracket (tests/diagnostics)
};

struct NormOptions {
  NormStrategy strategy = NormStrategy::automatic;
  double tolerance = 1e-9;
  std::size_t sign_enumeration_cap = 20;
  std::size_t restarts = 64;
  std::size_t max_iterations = 5000;
  std::uint64_t seed = 0x5eed;
};

// --- vectors and norms ----------------------------------------------------

double lp_norm(const Eigen::Ref<const Eigen::VectorXd>& x, const ExtExponent& r);
double norm(const BlockSpace& space, const Eigen::Ref<const Eigen::VectorXd>& x);
double vector_norm(const SpaceVector& v);
/// Norm of x in the dual of `space` (conjugate exponents). Numerical only;
/// never refuses, unlike dual_space.
double dual_norm(const BlockSpace& space, const Eigen::Ref<const Eigen::VectorXd>& f);
/// f with dual_norm(f) == 1 and <x, f> == norm(x); zero for x == 0.
Eigen::VectorXd norming_functional(const BlockSpace& space,
                                   const Eigen::Ref<const Eigen::VectorXd>& x);
/// x with norm(x) == 1 and <x, f> == dual_norm(f); zero for f == 0.
Eigen::VectorXd norming_vector(const BlockSpace& space,
                               const Eigen::Ref<const Eigen::VectorXd>& f);

/// Largest ratio norm_space(x) / ||x||_2 (upper bound, exact for flat spaces).
double euclidean_upper_factor(const BlockSpace& space);
/// Largest ratio ||x||_2 / norm_space(x) (upper bound, exact for flat spaces).
double euclidean_lower_factor(const BlockSpace& space);

// --- duality and algebra --------------------------------------------------

/// Conjugates all exponents; c0 -> ℓ_1. Refuses ℓ_∞-sums of several blocks
/// (their duals are beyond the finite bookkeeping).
BlockSpace dual_space(const BlockSpace& s);
DenseOperator adjoint(const DenseOperator& t);
/// a ∘ b; requires b.codomain == a.domain.
DenseOperator compose(const DenseOperator& a, const DenseOperator& b);
DenseOperator block_diag(std::span<const DenseOperator> parts, ExtExponent domain_outer,
                         ExtExponent codomain_outer);
/// Keeps diagonal block n (1-based) iff n is in `keep`; zeroes the others.
DenseOperator mask_blocks(const DenseOperator& t, const std::set<std::size_t>& keep);

/// Pairing of a vector with a functional given as coordinates.
double pairing(const Eigen::Ref<const Eigen::VectorXd>& x,
               const Eigen::Ref<const Eigen::VectorXd>& f);

// --- operator norms -------------------------------------------------------

NormBound op_norm(const DenseOperator& t, const NormOptions& options = {});
/// Cheap rigorous upper bound: a closed form when one applies, otherwise the
/// spectral norm times the comparison factors. Never enumerates or iterates.
double norm_upper_bound(const DenseOperator& t);
/// Largest singular value of the matrix.
double spectral_norm(const Eigen::Ref<const Eigen::MatrixXd>& m);

}  // namespace opideal

#include "opideal/core_spaces.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace opideal {

// --- ExtExponent ----------------------------------------------------------

ExtExponent ExtExponent::finite(double p) {
  if (!(p >= 1.0) || !std::isfinite(p))
    throw std::invalid_argument("exponent must be a finite number >= 1");
  return ExtExponent(ExponentKind::finite, p);
}

ExtExponent ExtExponent::parse(std::string_view text) {
  if (text == "inf" || text == "infinity") return infinity();
  if (text == "c0") return c0();
  double p = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, p);
  if (ec != std::errc() || ptr != end)
    throw std::invalid_argument("unrecognised exponent '" + std::string(text) + "'");
  return finite(p);
}

double ExtExponent::value() const {
  return is_finite() ? p_ : std::numeric_limits<double>::infinity();
}

ExtExponent ExtExponent::conjugate() const {
  if (!is_finite()) return finite(1.0);
  if (p_ == 1.0) return infinity();
  return finite(p_ / (p_ - 1.0));
}

bool ExtExponent::same_norm(const ExtExponent& other) const {
  if (is_sup() || other.is_sup()) return is_sup() && other.is_sup();
  return p_ == other.p_;
}

std::string ExtExponent::to_string() const {
  switch (kind_) {
    case ExponentKind::infinity: return "inf";
    case ExponentKind::c0: return "c0";
    case ExponentKind::finite: break;
  }
  if (p_ == std::floor(p_) && p_ < 1e15) return std::to_string(static_cast<long long>(p_));
  std::ostringstream os;
  os.precision(17);
  os << p_;
  return os.str();
}

// --- BlockSpace -----------------------------------------------------------

BlockSpace::BlockSpace(std::vector<Block> blocks, ExtExponent outer)
    : blocks_(std::move(blocks)), outer_(outer) {
  offsets_.assign(1, 0);
  offsets_.reserve(blocks_.size() + 1);
  for (const auto& b : blocks_) {
    if (b.dim == 0) throw std::invalid_argument("block dimension must be positive");
    offsets_.push_back(offsets_.back() + b.dim);
  }
}

BlockSpace BlockSpace::lp(ExtExponent r, std::size_t dim) {
  return BlockSpace({Block{r, dim}}, r);
}

BlockSpace BlockSpace::sum(ExtExponent inner, std::span<const std::size_t> dims,
                           ExtExponent outer) {
  std::vector<Block> blocks;
  blocks.reserve(dims.size());
  for (auto d : dims) blocks.push_back(Block{inner, d});
  return BlockSpace(std::move(blocks), outer);
}

std::optional<ExtExponent> BlockSpace::flat_exponent() const {
  if (blocks_.empty()) return outer_;
  if (blocks_.size() == 1) return blocks_.front().inner;
  std::optional<ExtExponent> inner;
  for (const auto& b : blocks_) {
    if (b.dim == 1) continue;
    if (!inner) {
      inner = b.inner;
    } else if (!inner->same_norm(b.inner)) {
      return std::nullopt;
    }
  }
  if (!inner || inner->same_norm(outer_)) return outer_;
  return std::nullopt;
}

bool BlockSpace::is_sup_type() const {
  const auto r = flat_exponent();
  return r && r->is_sup();
}

bool BlockSpace::is_euclidean() const {
  const auto r = flat_exponent();
  return r && r->is_finite() && r->value() == 2.0;
}

bool BlockSpace::is_l1_type() const {
  const auto r = flat_exponent();
  return r && r->is_finite() && r->value() == 1.0;
}

bool BlockSpace::same_norm(const BlockSpace& other) const {
  if (blocks_.size() != other.blocks_.size()) return false;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto& a = blocks_[i];
    const auto& b = other.blocks_[i];
    if (a.dim != b.dim) return false;
    if (a.dim > 1 && !a.inner.same_norm(b.inner)) return false;
  }
  return blocks_.size() <= 1 || outer_.same_norm(other.outer_);
}

std::string BlockSpace::describe() const {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (i) os << " + ";
    os << "l" << blocks_[i].inner.to_string() << "^" << blocks_[i].dim;
  }
  os << ")_" << outer_.to_string();
  return os.str();
}

// --- SpaceVector / DenseOperator --------------------------------------------

SpaceVector::SpaceVector(Eigen::VectorXd coords, BlockSpace space)
    : coords_(std::move(coords)), space_(std::move(space)) {
  if (static_cast<std::size_t>(coords_.size()) != space_.total_dim())
    throw SpaceMismatch("vector length does not match space dimension");
}

DenseOperator::DenseOperator(Eigen::MatrixXd matrix, BlockSpace domain, BlockSpace codomain)
    : matrix_(std::move(matrix)), domain_(std::move(domain)), codomain_(std::move(codomain)) {
  if (static_cast<std::size_t>(matrix_.cols()) != domain_.total_dim() ||
      static_cast<std::size_t>(matrix_.rows()) != codomain_.total_dim())
    throw SpaceMismatch("matrix shape " + std::to_string(matrix_.rows()) + "x" +
                        std::to_string(matrix_.cols()) + " does not match " +
                        domain_.describe() + " -> " + codomain_.describe());
}

DenseOperator DenseOperator::zero(BlockSpace domain, BlockSpace codomain) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(codomain.total_dim()),
                                            static_cast<Eigen::Index>(domain.total_dim()));
  return DenseOperator(std::move(m), std::move(domain), std::move(codomain));
}

DenseOperator DenseOperator::identity(BlockSpace domain, BlockSpace codomain) {
  if (domain.total_dim() != codomain.total_dim())
    throw SpaceMismatch("identity needs equal dimensions");
  const auto n = static_cast<Eigen::Index>(domain.total_dim());
  return DenseOperator(Eigen::MatrixXd::Identity(n, n), std::move(domain), std::move(codomain));
}

SpaceVector DenseOperator::apply(const SpaceVector& x) const {
  if (!x.space().same_norm(domain_)) throw SpaceMismatch("apply: vector not in domain");
  return SpaceVector(matrix_ * x.coords(), codomain_);
}

DenseOperator DenseOperator::reinterpret(BlockSpace domain, BlockSpace codomain) const {
  return DenseOperator(matrix_, std::move(domain), std::move(codomain));
}

DenseOperator DenseOperator::scaled(double factor) const {
  return DenseOperator(matrix_ * factor, domain_, codomain_);
}

DenseOperator operator+(const DenseOperator& a, const DenseOperator& b) {
  if (!a.domain_.same_norm(b.domain_) || !a.codomain_.same_norm(b.codomain_))
    throw SpaceMismatch("operator sum over different spaces");
  return DenseOperator(a.matrix_ + b.matrix_, a.domain_, a.codomain_);
}

DenseOperator operator-(const DenseOperator& a, const DenseOperator& b) {
  return a + b.scaled(-1.0);
}

// --- norms ----------------------------------------------------------------

double lp_norm(const Eigen::Ref<const Eigen::VectorXd>& x, const ExtExponent& r) {
  if (x.size() == 0) return 0.0;
  const double peak = x.cwiseAbs().maxCoeff();
  if (r.is_sup() || peak == 0.0) return peak;
  const double p = r.value();
  if (p == 1.0) return x.cwiseAbs().sum();
  if (p == 2.0) return x.stableNorm();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) acc += std::pow(std::abs(x[i]) / peak, p);
  return peak * std::pow(acc, 1.0 / p);
}

namespace {

Eigen::VectorXd block_norms(const BlockSpace& space, const Eigen::Ref<const Eigen::VectorXd>& x) {
  Eigen::VectorXd a(static_cast<Eigen::Index>(space.block_count()));
  for (std::size_t b = 0; b < space.block_count(); ++b) {
    const auto off = static_cast<Eigen::Index>(space.offset(b));
    const auto dim = static_cast<Eigen::Index>(space.block(b).dim);
    a[static_cast<Eigen::Index>(b)] = lp_norm(x.segment(off, dim), space.block(b).inner);
  }
  return a;
}

// Dual unit vector norming y in ℓ_r.
Eigen::VectorXd lp_norming(const Eigen::Ref<const Eigen::VectorXd>& y, const ExtExponent& r) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(y.size());
  if (y.size() == 0) return f;
  const double total = lp_norm(y, r);
  if (total == 0.0) return f;
  if (r.is_sup()) {
    Eigen::Index k = 0;
    y.cwiseAbs().maxCoeff(&k);
    f[k] = y[k] > 0 ? 1.0 : -1.0;
    return f;
  }
  const double p = r.value();
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] == 0.0) continue;
    const double s = y[i] > 0 ? 1.0 : -1.0;
    f[i] = p == 1.0 ? s : s * std::pow(std::abs(y[i]) / total, p - 1.0);
  }
  return f;
}

// Conjugate every exponent without the bidual refusal of dual_space.
BlockSpace conjugate_space(const BlockSpace& s) {
  std::vector<Block> blocks = s.blocks();
  for (auto& b : blocks) b.inner = b.inner.conjugate();
  return BlockSpace(std::move(blocks), s.outer().conjugate());
}

double power_factor(double count, double exponent) {
  return exponent <= 0.0 ? 1.0 : std::pow(count, exponent);
}

double inv(const ExtExponent& r) { return r.is_sup() ? 0.0 : 1.0 / r.value(); }

}  // namespace

double norm(const BlockSpace& space, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (static_cast<std::size_t>(x.size()) != space.total_dim())
    throw SpaceMismatch("norm: vector length does not match space");
  if (space.block_count() == 1) return lp_norm(x, space.block(0).inner);
  return lp_norm(block_norms(space, x), space.outer());
}

double vector_norm(const SpaceVector& v) { return norm(v.space(), v.coords()); }

double dual_norm(const BlockSpace& space, const Eigen::Ref<const Eigen::VectorXd>& f) {
  return norm(conjugate_space(space), f);
}

Eigen::VectorXd norming_functional(const BlockSpace& space,
                                   const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (static_cast<std::size_t>(x.size()) != space.total_dim())
    throw SpaceMismatch("norming_functional: vector length does not match space");
  Eigen::VectorXd f = Eigen::VectorXd::Zero(x.size());
  if (space.block_count() == 0) return f;
  const Eigen::VectorXd a = block_norms(space, x);
  const Eigen::VectorXd w =
      space.block_count() == 1 ? Eigen::VectorXd::Ones(1) : lp_norming(a, space.outer());
  for (std::size_t b = 0; b < space.block_count(); ++b) {
    const auto bi = static_cast<Eigen::Index>(b);
    if (w[bi] == 0.0 || a[bi] == 0.0) continue;
    const auto off = static_cast<Eigen::Index>(space.offset(b));
    const auto dim = static_cast<Eigen::Index>(space.block(b).dim);
    f.segment(off, dim) = w[bi] * lp_norming(x.segment(off, dim), space.block(b).inner);
  }
  return f;
}

Eigen::VectorXd norming_vector(const BlockSpace& space,
                               const Eigen::Ref<const Eigen::VectorXd>& f) {
  return norming_functional(conjugate_space(space), f);
}

double euclidean_upper_factor(const BlockSpace& space) {
  if (space.block_count() == 0) return 1.0;
  double inner = 1.0;
  for (const auto& b : space.blocks())
    inner = std::max(inner, power_factor(static_cast<double>(b.dim), inv(b.inner) - 0.5));
  if (space.block_count() == 1) return inner;
  return inner * power_factor(static_cast<double>(space.block_count()), inv(space.outer()) - 0.5);
}

double euclidean_lower_factor(const BlockSpace& space) {
  if (space.block_count() == 0) return 1.0;
  double inner = 1.0;
  for (const auto& b : space.blocks())
    inner = std::max(inner, power_factor(static_cast<double>(b.dim), 0.5 - inv(b.inner)));
  if (space.block_count() == 1) return inner;
  return inner * power_factor(static_cast<double>(space.block_count()), 0.5 - inv(space.outer()));
}

// --- duality and algebra ------------------------------------------------------

BlockSpace dual_space(const BlockSpace& s) {
  if (s.outer().kind() == ExponentKind::infinity && s.block_count() > 1)
    throw HypothesisViolation("dual of an l_inf-sum is not represented (bidual bookkeeping)");
  return conjugate_space(s);
}

DenseOperator adjoint(const DenseOperator& t) {
  return DenseOperator(t.matrix().transpose(), dual_space(t.codomain()), dual_space(t.domain()));
}

DenseOperator compose(const DenseOperator& a, const DenseOperator& b) {
  if (!b.codomain().same_norm(a.domain()))
    throw SpaceMismatch("compose: " + b.codomain().describe() + " vs " + a.domain().describe());
  return DenseOperator(a.matrix() * b.matrix(), b.domain(), a.codomain());
}

DenseOperator block_diag(std::span<const DenseOperator> parts, ExtExponent domain_outer,
                         ExtExponent codomain_outer) {
  std::vector<Block> dom;
  std::vector<Block> cod;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    dom.insert(dom.end(), p.domain().blocks().begin(), p.domain().blocks().end());
    cod.insert(cod.end(), p.codomain().blocks().begin(), p.codomain().blocks().end());
    rows += p.matrix().rows();
    cols += p.matrix().cols();
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
  Eigen::Index r = 0;
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    m.block(r, c, p.matrix().rows(), p.matrix().cols()) = p.matrix();
    r += p.matrix().rows();
    c += p.matrix().cols();
  }
  return DenseOperator(std::move(m), BlockSpace(std::move(dom), domain_outer),
                       BlockSpace(std::move(cod), codomain_outer));
}

DenseOperator mask_blocks(const DenseOperator& t, const std::set<std::size_t>& keep) {
  const auto& dom = t.domain();
  const auto& cod = t.codomain();
  if (dom.block_count() != cod.block_count())
    throw SpaceMismatch("mask_blocks needs matching block counts");
  Eigen::MatrixXd m = t.matrix();
  for (std::size_t b = 0; b < dom.block_count(); ++b) {
    if (keep.contains(b + 1)) continue;
    m.block(static_cast<Eigen::Index>(cod.offset(b)), static_cast<Eigen::Index>(dom.offset(b)),
            static_cast<Eigen::Index>(cod.block(b).dim),
            static_cast<Eigen::Index>(dom.block(b).dim))
        .setZero();
  }
  return DenseOperator(std::move(m), dom, cod);
}

double pairing(const Eigen::Ref<const Eigen::VectorXd>& x,
               const Eigen::Ref<const Eigen::VectorXd>& f) {
  if (x.size() != f.size()) throw SpaceMismatch("pairing: length mismatch");
  return x.dot(f);
}

}  // namespace opideal

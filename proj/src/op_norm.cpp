#include "opideal/core_spaces.hpp"
#include "opideal/random.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>

namespace opideal {

std::string to_string(NormMode mode) {
  switch (mode) {
    case NormMode::exact: return "exact";
    case NormMode::certified_upper: return "certified_upper";
    case NormMode::heuristic_lower: return "heuristic_lower";
    case NormMode::sign_enumeration: return "sign_enumeration";
    case NormMode::spectral: return "spectral";
  }
  return "exact";
}

NormMode parse_norm_mode(std::string_view text) {
  for (auto m : {NormMode::exact, NormMode::certified_upper, NormMode::heuristic_lower,
                 NormMode::sign_enumeration, NormMode::spectral})
    if (to_string(m) == text) return m;
  throw std::invalid_argument("unknown norm mode '" + std::string(text) + "'");
}

double spectral_norm(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()[0];
}

namespace {

NormBound exact(double v, NormMode mode = NormMode::exact) { return NormBound{v, v, mode}; }

double max_column_norm(const DenseOperator& t) {
  double best = 0.0;
  for (Eigen::Index j = 0; j < t.matrix().cols(); ++j)
    best = std::max(best, norm(t.codomain(), t.matrix().col(j)));
  return best;
}

double max_dual_row_norm(const DenseOperator& t) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < t.matrix().rows(); ++i)
    best = std::max(best, dual_norm(t.domain(), t.matrix().row(i).transpose()));
  return best;
}

// Maximum of the codomain norm over the cube's vertices; half the vertices
// suffice by symmetry.
double sign_enumeration(const DenseOperator& t) {
  const auto& a = t.matrix();
  const auto n = static_cast<std::size_t>(a.cols());
  if (n == 0) return 0.0;
  const std::uint64_t count = std::uint64_t{1} << (n - 1);
  Eigen::VectorXd signs = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  Eigen::VectorXd y = a * signs;
  double best = norm(t.codomain(), y);
  for (std::uint64_t k = 1; k < count; ++k) {
    // Gray code: flip the sign at the lowest set bit of k (never column 0).
    const auto j = static_cast<Eigen::Index>(std::countr_zero(k) + 1);
    signs[j] = -signs[j];
    if ((k & 0xff) == 0) {
      y.noalias() = a * signs;
    } else {
      y += (2.0 * signs[j]) * a.col(j);
    }
    best = std::max(best, norm(t.codomain(), y));
  }
  return best;
}

// Alternating ascent: codomain norming functional, then domain norming vector.
// Each sweep is non-decreasing in ||Tx||.
double alternating_ascent(const DenseOperator& t, const NormOptions& opt) {
  const auto& a = t.matrix();
  const auto n = a.cols();
  double best = 0.0;
  for (std::size_t r = 0; r < std::max<std::size_t>(1, opt.restarts); ++r) {
    Rng rng = make_rng(opt.seed, r);
    Eigen::VectorXd x = gaussian_vector(n, rng);
    const double nx = norm(t.domain(), x);
    if (nx == 0.0) continue;
    x /= nx;
    double value = norm(t.codomain(), a * x);
    for (std::size_t it = 0; it < opt.max_iterations; ++it) {
      const Eigen::VectorXd f = norming_functional(t.codomain(), a * x);
      const Eigen::VectorXd z = a.transpose() * f;
      if (z.isZero(0.0)) break;
      Eigen::VectorXd next = norming_vector(t.domain(), z);
      const double nn = norm(t.domain(), next);
      if (nn == 0.0) break;
      next /= nn;
      const double v = norm(t.codomain(), a * next);
      if (!(v > value * (1.0 + 1e-15))) {
        value = std::max(value, v);
        break;
      }
      value = v;
      x = std::move(next);
    }
    best = std::max(best, value);
  }
  return best;
}

}  // namespace

NormBound op_norm(const DenseOperator& t, const NormOptions& opt) {
  if (t.matrix().size() == 0 || t.matrix().isZero(0.0)) return exact(0.0);
  const auto& dom = t.domain();
  const auto& cod = t.codomain();

  if (opt.strategy == NormStrategy::automatic) {
    if (dom.is_l1_type()) return exact(max_column_norm(t));
    if (cod.is_sup_type()) return exact(max_dual_row_norm(t));
    if (dom.is_euclidean() && cod.is_euclidean())
      return exact(spectral_norm(t.matrix()), NormMode::spectral);
    if (dom.is_sup_type() && t.cols() <= opt.sign_enumeration_cap)
      return exact(sign_enumeration(t), NormMode::sign_enumeration);
  }

  const double lower = alternating_ascent(t, opt);
  const double upper = spectral_norm(t.matrix()) * euclidean_upper_factor(cod) *
                       euclidean_lower_factor(dom);
  return NormBound{lower, std::max(upper, lower),
                   opt.strategy == NormStrategy::automatic ? NormMode::certified_upper
                                                           : NormMode::heuristic_lower};
}

namespace {

// Blocks of `space` that meet a nonzero entry of `touched` (per coordinate).
std::vector<std::size_t> live_blocks(const BlockSpace& space, const Eigen::VectorXd& touched) {
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < space.block_count(); ++b)
    if (touched.segment(static_cast<Eigen::Index>(space.offset(b)), static_cast<Eigen::Index>(space.block(b).dim))
            .any())
      out.push_back(b);
  return out;
}

BlockSpace sub_space(const BlockSpace& space, const std::vector<std::size_t>& keep) {
  std::vector<Block> blocks;
  for (auto b : keep) blocks.push_back(space.block(b));
  return BlockSpace(std::move(blocks), space.outer());
}

Eigen::MatrixXd gather(const Eigen::MatrixXd& m, const BlockSpace& rows, const std::vector<std::size_t>& rb,
                       const BlockSpace& cols, const std::vector<std::size_t>& cb) {
  std::vector<Eigen::Index> ri;
  std::vector<Eigen::Index> ci;
  for (auto b : rb)
    for (std::size_t i = 0; i < rows.block(b).dim; ++i) ri.push_back(static_cast<Eigen::Index>(rows.offset(b) + i));
  for (auto b : cb)
    for (std::size_t i = 0; i < cols.block(b).dim; ++i) ci.push_back(static_cast<Eigen::Index>(cols.offset(b) + i));
  return m(ri, ci);
}

}  // namespace

double norm_upper_bound(const DenseOperator& t) {
  if (t.matrix().size() == 0) return 0.0;
  if (t.domain().is_l1_type()) return max_column_norm(t);
  if (t.codomain().is_sup_type()) return max_dual_row_norm(t);
  if (t.domain().is_euclidean() && t.codomain().is_euclidean()) return spectral_norm(t.matrix());
  // Blocks the matrix never touches do not change the norm (lattice norms),
  // and dropping them shrinks the comparison factors.
  const Eigen::MatrixXd nz = t.matrix().cwiseAbs();
  const auto rb = live_blocks(t.codomain(), nz.rowwise().sum());
  const auto cb = live_blocks(t.domain(), nz.colwise().sum().transpose());
  if (rb.empty() || cb.empty()) return 0.0;
  const BlockSpace cod = sub_space(t.codomain(), rb);
  const BlockSpace dom = sub_space(t.domain(), cb);
  const double s = spectral_norm(gather(t.matrix(), t.codomain(), rb, t.domain(), cb));
  return s * euclidean_upper_factor(cod) * euclidean_lower_factor(dom);
}

}  // namespace opideal

#include "opideal/combinatorics.hpp"
#include "opideal/constructions.hpp"
#include "opideal/random.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

namespace opideal {

EmbeddingCertificate certify_embedding(const DenseOperator& j, std::uint64_t vertex_budget) {
  if (!j.codomain().is_sup_type())
    throw SpaceMismatch("certify_embedding needs a sup-type codomain");
  const Eigen::MatrixXd& f = j.matrix();
  const auto d = static_cast<std::size_t>(f.cols());
  const auto m = static_cast<std::size_t>(f.rows());
  EmbeddingCertificate cert;
  for (std::size_t i = 0; i < m; ++i)
    cert.upper = std::max(cert.upper, dual_norm(j.domain(), f.row(static_cast<Eigen::Index>(i)).transpose()));
  if (d == 0) {
    cert.lower = 1.0;
    return cert;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> full(f);
  if (m < d || static_cast<std::size_t>(full.rank()) < d) {
    cert.bounded = false;
    return cert;
  }
  const std::uint64_t subsets = binomial(m, d);
  const std::uint64_t signs = std::uint64_t{1} << (d - 1);
  if (subsets > vertex_budget / signs)
    throw HypothesisViolation("vertex enumeration needs " + std::to_string(subsets) + " x " +
                              std::to_string(signs) + " systems, over budget " +
                              std::to_string(vertex_budget));

  // Vertices of {x : |<x, f_i>| <= 1} have d tight, independent rows; the
  // farthest one (in the norm of E) gives the lower constant.
  const auto dd = static_cast<Eigen::Index>(d);
  std::vector<std::size_t> rows = unrank_combination(0, m, d);
  Eigen::MatrixXd fs(dd, dd);
  Eigen::VectorXd sigma(dd);
  double radius = 0.0;
  do {
    for (Eigen::Index a = 0; a < dd; ++a) fs.row(a) = f.row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(a)]));
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(fs);
    if (std::abs(lu.determinant()) < 1e-13) continue;
    for (std::uint64_t s = 0; s < signs; ++s) {
      sigma[0] = 1.0;
      for (Eigen::Index a = 1; a < dd; ++a) sigma[a] = (s >> (a - 1)) & 1U ? -1.0 : 1.0;
      const Eigen::VectorXd x = lu.solve(sigma);
      ++cert.vertices_examined;
      if ((f * x).cwiseAbs().maxCoeff() > 1.0 + 1e-9) continue;
      radius = std::max(radius, norm(j.domain(), x));
    }
  } while (next_combination(rows, m));
  cert.lower = radius > 0.0 ? 1.0 / radius : 0.0;
  return cert;
}

namespace {

const ExtExponent kInf = ExtExponent::infinity();

// Rows normalized in the dual norm of ℓ_p^d.
Eigen::MatrixXd normalize_dual(Eigen::MatrixXd rows, const ExtExponent& p) {
  const ExtExponent q = p.conjugate();
  for (Eigen::Index i = 0; i < rows.rows(); ++i) rows.row(i) /= lp_norm(rows.row(i).transpose(), q);
  return rows;
}

// Scales to certified lower constant 1 and records the distortion.
NetEmbedding finish(const ExtExponent& p, Eigen::MatrixXd rows, const std::string& method,
                    const NetOptions& opt) {
  const auto d = static_cast<std::size_t>(rows.cols());
  const auto m = static_cast<std::size_t>(rows.rows());
  DenseOperator raw(std::move(rows), BlockSpace::lp(p, d), BlockSpace::lp(kInf, m));
  const EmbeddingCertificate cert = certify_embedding(raw, opt.vertex_budget);
  NetEmbedding out{raw, 0.0, std::numeric_limits<double>::infinity(), method};
  if (!cert.bounded || cert.lower <= 0.0) return out;
  out.op = raw.scaled(1.0 / cert.lower);
  out.lower = 1.0;
  out.distortion = cert.upper / cert.lower;
  return out;
}

Eigen::MatrixXd circle_rows(std::size_t n) {
  Eigen::MatrixXd r(static_cast<Eigen::Index>(n), 2);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    r(static_cast<Eigen::Index>(k), 0) = std::cos(t);
    r(static_cast<Eigen::Index>(k), 1) = std::sin(t);
  }
  return r;
}

Eigen::MatrixXd fibonacci_rows(std::size_t n) {
  Eigen::MatrixXd r(static_cast<Eigen::Index>(n), 3);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t k = 0; k < n; ++k) {
    const double z = 1.0 - (2.0 * static_cast<double>(k) + 1.0) / static_cast<double>(n);
    const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double t = golden * static_cast<double>(k);
    r.row(static_cast<Eigen::Index>(k)) << rad * std::cos(t), rad * std::sin(t), z;
  }
  return r;
}

// Seeded Gaussian directions, dropping any within `gap` (dual norm, up to
// sign) of one already kept.
Eigen::MatrixXd thinned_random_rows(std::size_t n, std::size_t d, const ExtExponent& p,
                                    double gap, std::uint64_t seed) {
  Rng rng(seed);
  const Eigen::MatrixXd raw = normalize_dual(
      gaussian_matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d), rng), p);
  const ExtExponent q = p.conjugate();
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    bool close = false;
    for (auto k : kept) {
      const double a = lp_norm((raw.row(i) - raw.row(k)).transpose(), q);
      const double b = lp_norm((raw.row(i) + raw.row(k)).transpose(), q);
      if (std::min(a, b) < gap) {
        close = true;
        break;
      }
    }
    if (!close) kept.push_back(i);
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(kept.size()), static_cast<Eigen::Index>(d));
  for (std::size_t k = 0; k < kept.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = raw.row(kept[k]);
  return out;
}

[[noreturn]] void net_over_budget(std::size_t dim, double target, const NetOptions& opt) {
  const double eps = 1.0 - 1.0 / target;
  const double need = std::ceil(std::pow(1.0 + 2.0 / eps, static_cast<double>(dim)));
  std::ostringstream os;
  os << "net embedding of dimension " << dim << " with distortion " << target
     << " needs about " << need << " rows; budget is " << opt.max_rows << " rows / "
     << opt.vertex_budget << " vertex systems";
  throw HypothesisViolation(os.str());
}

}  // namespace

NetEmbedding build_circle_net(const ExtExponent& inner_p, std::size_t rows, const NetOptions& options) {
  if (rows < 2) throw std::invalid_argument("circle net needs at least 2 rows");
  NetEmbedding e = finish(inner_p, normalize_dual(circle_rows(rows), inner_p), "circle", options);
  if (e.lower != 1.0) throw HypothesisViolation("circle net rows do not span the plane");
  return e;
}

NetEmbedding build_net_embedding(const ExtExponent& inner_p, std::size_t dim, double target,
                                 const NetOptions& opt) {
  if (!(target > 1.0 && target <= 2.0))
    throw std::invalid_argument("distortion target must lie in (1, 2]");
  if (dim == 0) throw std::invalid_argument("net embedding needs dim >= 1");
  const BlockSpace dom = BlockSpace::lp(inner_p, dim);

  if (dim == 1) {
    Eigen::MatrixXd r(2, 1);
    r << 1.0, -1.0;
    return NetEmbedding{DenseOperator(r, dom, BlockSpace::lp(kInf, 2)), 1.0, 1.0, "interval"};
  }
  if (inner_p.is_sup()) {
    return NetEmbedding{DenseOperator::identity(dom, BlockSpace::lp(kInf, dim)), 1.0, 1.0,
                        "identity"};
  }
  if (inner_p.value() == 1.0) {
    // ‖x‖_1 = max over sign vectors; half of them suffice.
    if (dim - 1 >= 63 || (std::size_t{1} << (dim - 1)) > opt.max_rows) net_over_budget(dim, target, opt);
    const std::size_t n = std::size_t{1} << (dim - 1);
    Eigen::MatrixXd r(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    for (std::size_t s = 0; s < n; ++s) {
      r(static_cast<Eigen::Index>(s), 0) = 1.0;
      for (std::size_t a = 1; a < dim; ++a)
        r(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) = (s >> (a - 1)) & 1U ? -1.0 : 1.0;
    }
    return NetEmbedding{DenseOperator(r, dom, BlockSpace::lp(kInf, n)), 1.0, 1.0, "signs"};
  }

  for (std::size_t n = 2 * dim + 2; n <= opt.max_rows; n *= 2) {
    Eigen::MatrixXd rows;
    std::string method;
    if (dim == 2) {
      rows = normalize_dual(circle_rows(n), inner_p);
      method = "circle";
    } else if (dim == 3) {
      rows = normalize_dual(fibonacci_rows(n), inner_p);
      method = "fibonacci";
    } else {
      rows = thinned_random_rows(n, dim, inner_p, 0.5 * (1.0 - 1.0 / target), substream(opt.seed, n));
      method = "random_thinned";
    }
    std::optional<NetEmbedding> e;
    try {
      e = finish(inner_p, std::move(rows), method, opt);
    } catch (const HypothesisViolation&) {
      net_over_budget(dim, target, opt);
    }
    if (e->lower == 1.0 && e->distortion <= target) return *e;
  }
  net_over_budget(dim, target, opt);
}

}  // namespace opideal

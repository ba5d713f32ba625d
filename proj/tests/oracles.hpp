#pragma once

// Brute-force reference computations used only by the tests. They avoid the
// library's norm engine and eigensolvers on purpose.

#include "opideal/core_spaces.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using opideal::BlockSpace;
using opideal::ExtExponent;

inline double pnorm(const std::vector<double>& a, const ExtExponent& p) {
  if (p.is_sup()) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
  }
  double s = 0.0;
  for (double x : a) s += std::pow(std::abs(x), p.value());
  return std::pow(s, 1.0 / p.value());
}

/// Norm of x in the block space, by explicit loops.
inline double norm(const BlockSpace& space, const Eigen::VectorXd& x) {
  std::vector<double> outer;
  std::size_t pos = 0;
  for (const auto& b : space.blocks()) {
    std::vector<double> inner(x.data() + pos, x.data() + pos + b.dim);
    outer.push_back(pnorm(inner, b.inner));
    pos += b.dim;
  }
  return outer.empty() ? 0.0 : pnorm(outer, space.outer());
}

using Projection = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Maximizes f over the image of `project` (a sphere or a product of
/// spheres): random and axis starts, then a shrinking compass search along
/// coordinates and random directions.
inline double manifold_max(std::size_t n, const std::function<double(const Eigen::VectorXd&)>& f,
                           const Projection& project, std::size_t grid, std::size_t polish,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  const auto dim = static_cast<Eigen::Index>(n);
  std::vector<std::pair<double, Eigen::VectorXd>> pts;
  auto add = [&](const Eigen::VectorXd& x) {
    const Eigen::VectorXd u = project(x);
    pts.emplace_back(f(u), u);
  };
  for (Eigen::Index i = 0; i < dim; ++i) add(Eigen::VectorXd::Unit(dim, i));
  for (std::size_t k = 0; k < grid; ++k) {
    Eigen::VectorXd u(dim);
    for (Eigen::Index i = 0; i < dim; ++i) u[i] = g(rng);
    add(u);
  }
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  double best = pts.front().first;
  for (std::size_t s = 0; s < std::min(polish, pts.size()); ++s) {
    Eigen::VectorXd u = pts[s].second;
    double fu = pts[s].first;
    for (double step = 0.2; step > 1e-11; step *= 0.5) {
      for (int round = 0; round < 200; ++round) {
        bool improved = false;
        for (Eigen::Index i = 0; i < dim + 2 * dim; ++i) {
          Eigen::VectorXd d(dim);
          if (i < dim) d = Eigen::VectorXd::Unit(dim, i);
          else
            for (Eigen::Index j = 0; j < dim; ++j) d[j] = g(rng);
          d.normalize();
          for (double sgn : {1.0, -1.0}) {
            const Eigen::VectorXd v = project(u + sgn * step * d);
            const double fv = f(v);
            if (fv > fu) {
              u = v;
              fu = fv;
              improved = true;
            }
          }
        }
        if (!improved) break;
      }
    }
    best = std::max(best, fu);
  }
  return best;
}

inline double sphere_max(std::size_t n, const std::function<double(const Eigen::VectorXd&)>& f,
                         std::size_t grid = 20000, std::size_t polish = 24, std::uint64_t seed = 7) {
  return manifold_max(n, f, [](const Eigen::VectorXd& x) { return Eigen::VectorXd(x.normalized()); }, grid,
                      polish, seed);
}

/// ‖T‖ by vertex enumeration when the domain ball is a polytope with known
/// vertices (ℓ_∞ cube, ℓ_1 cross-polytope), by search over the product of
/// block spheres for sup-sums of ℓ_2 blocks, otherwise by sphere search.
inline double op_norm(const opideal::DenseOperator& t) {
  const auto& a = t.matrix();
  const auto n = static_cast<std::size_t>(a.cols());
  if (n == 0) return 0.0;
  const auto flat = t.domain().flat_exponent();
  if (flat && flat->is_sup()) {
    double best = 0.0;
    for (std::uint64_t s = 0; s < (std::uint64_t{1} << n); ++s) {
      Eigen::VectorXd x(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) x[static_cast<Eigen::Index>(i)] = (s >> i) & 1U ? -1.0 : 1.0;
      best = std::max(best, oracle::norm(t.codomain(), Eigen::VectorXd(a * x)));
    }
    return best;
  }
  if (flat && flat->value() == 1.0) {
    double best = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) best = std::max(best, oracle::norm(t.codomain(), Eigen::VectorXd(a.col(j))));
    return best;
  }
  const auto& dom = t.domain();
  const bool torus = dom.outer().is_sup() &&
                     std::all_of(dom.blocks().begin(), dom.blocks().end(),
                                 [](const auto& b) { return b.inner.is_finite() && b.inner.value() == 2.0; });
  if (torus) {
    auto project = [&](const Eigen::VectorXd& x) {
      Eigen::VectorXd y = x;
      for (std::size_t i = 0; i < dom.block_count(); ++i) {
        auto seg = y.segment(static_cast<Eigen::Index>(dom.offset(i)), static_cast<Eigen::Index>(dom.block(i).dim));
        seg /= seg.norm();
      }
      return y;
    };
    return manifold_max(
        n, [&](const Eigen::VectorXd& u) { return oracle::norm(t.codomain(), Eigen::VectorXd(a * u)); }, project,
        20000, 24, 7);
  }
  return sphere_max(n, [&](const Eigen::VectorXd& u) {
    return oracle::norm(t.codomain(), Eigen::VectorXd(a * u)) / oracle::norm(t.domain(), u);
  });
}

/// Extremes of ‖A_S c‖² over unit c and all supports S of size k.
struct SparseExtremes {
  double min_sq = std::numeric_limits<double>::infinity();
  double max_sq = 0.0;
};

inline SparseExtremes sparse_ratio(const Eigen::MatrixXd& a, std::size_t k) {
  const auto v = static_cast<std::size_t>(a.cols());
  SparseExtremes out;
  std::vector<std::size_t> s(k);
  for (std::size_t i = 0; i < k; ++i) s[i] = i;
  while (true) {
    Eigen::MatrixXd as(a.rows(), static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) as.col(static_cast<Eigen::Index>(i)) = a.col(static_cast<Eigen::Index>(s[i]));
    auto q = [&](const Eigen::VectorXd& c) { return (as * c).squaredNorm(); };
    out.max_sq = std::max(out.max_sq, sphere_max(k, q, 300, 3));
    out.min_sq = std::min(out.min_sq, -sphere_max(k, [&](const Eigen::VectorXd& c) { return -q(c); }, 300, 3));
    std::size_t i = k;
    while (i > 0 && s[i - 1] == v - k + i - 1) --i;
    if (i == 0) break;
    ++s[i - 1];
    for (std::size_t j = i; j < k; ++j) s[j] = s[j - 1] + 1;
  }
  return out;
}

/// min over x of ‖Jx‖_∞ / ‖x‖_2 for J with two columns, by an angular sweep
/// with golden-section refinement around the best cell.
inline double circle_lower(const Eigen::MatrixXd& j, std::size_t cells = 20000) {
  auto f = [&](double t) {
    Eigen::Vector2d x(std::cos(t), std::sin(t));
    return (j * x).cwiseAbs().maxCoeff();
  };
  double best = std::numeric_limits<double>::infinity();
  double arg = 0.0;
  for (std::size_t c = 0; c < cells; ++c) {
    const double t = std::numbers::pi * static_cast<double>(c) / static_cast<double>(cells);
    if (f(t) < best) {
      best = f(t);
      arg = t;
    }
  }
  double lo = arg - std::numbers::pi / static_cast<double>(cells);
  double hi = arg + std::numbers::pi / static_cast<double>(cells);
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200; ++it) {
    const double a = hi - r * (hi - lo);
    const double b = lo + r * (hi - lo);
    if (f(a) < f(b)) hi = b;
    else lo = a;
  }
  return std::min(best, f(0.5 * (lo + hi)));
}

/// min c^T x, A x = b, x >= 0 by enumerating all bases (tiny problems only).
/// Returns +inf when infeasible.
inline double lp_by_bases(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
  const auto m = static_cast<std::size_t>(a.rows());
  const auto n = static_cast<std::size_t>(a.cols());
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> s(m);
  for (std::size_t i = 0; i < m; ++i) s[i] = i;
  if (m > n) return best;
  while (true) {
    Eigen::MatrixXd basis(a.rows(), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) basis.col(static_cast<Eigen::Index>(i)) = a.col(static_cast<Eigen::Index>(s[i]));
    Eigen::FullPivLU<Eigen::MatrixXd> lu(basis);
    if (lu.isInvertible()) {
      const Eigen::VectorXd xb = lu.solve(b);
      if (xb.minCoeff() >= -1e-10) {
        double val = 0.0;
        for (std::size_t i = 0; i < m; ++i) val += c[static_cast<Eigen::Index>(s[i])] * xb[static_cast<Eigen::Index>(i)];
        best = std::min(best, val);
      }
    }
    std::size_t i = m;
    while (i > 0 && s[i - 1] == n - m + i - 1) --i;
    if (i == 0) break;
    ++s[i - 1];
    for (std::size_t j = i; j < m; ++j) s[j] = s[j - 1] + 1;
  }
  return best;
}

}  // namespace oracle

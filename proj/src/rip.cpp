#include "opideal/rip.hpp"

#include "opideal/combinatorics.hpp"
#include "opideal/parallel.hpp"
#include "opideal/random.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace opideal {

const RipLevel& RipFamily::level(std::size_t n) const {
  if (n == 0 || n > levels.size())
    throw std::out_of_range("rip family has no level " + std::to_string(n));
  return levels[n - 1];
}

std::string to_string(PostPass p) {
  switch (p) {
    case PostPass::none: return "none";
    case PostPass::orthonormalize: return "orthonormalize";
    case PostPass::refine: return "refine";
  }
  return "none";
}

PostPass parse_post_pass(const std::string& text) {
  for (auto p : {PostPass::none, PostPass::orthonormalize, PostPass::refine})
    if (to_string(p) == text) return p;
  throw std::invalid_argument("unknown post pass '" + text + "'");
}

std::string to_string(CertMode m) { return m == CertMode::exhaustive ? "exhaustive" : "sampled"; }

RipLevel make_level(Eigen::MatrixXd columns) {
  if (columns.rows() == 0 || columns.cols() == 0)
    throw std::invalid_argument("rip level needs u >= 1 and v >= 1");
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    const double n = columns.col(j).norm();
    if (n == 0.0) throw std::invalid_argument("rip level has a zero column");
    columns.col(j) /= n;
  }
  RipLevel level;
  level.u = static_cast<std::size_t>(columns.rows());
  level.v = static_cast<std::size_t>(columns.cols());
  level.gram = columns.transpose() * columns;
  level.gram.diagonal().setOnes();
  level.columns = std::move(columns);
  return level;
}

namespace {

void normalize_columns(Eigen::MatrixXd& a) {
  for (Eigen::Index j = 0; j < a.cols(); ++j) a.col(j).normalize();
}

// Gradient descent on Σ_{i≠j} <g_i,g_j>^{2r}, renormalizing after each step.
void refine(Eigen::MatrixXd& a, const GenOptions& opt) {
  const int odd = 2 * opt.refine_power - 1;
  for (std::size_t it = 0; it < opt.refine_iterations; ++it) {
    Eigen::MatrixXd g = a.transpose() * a;
    g.diagonal().setZero();
    const double mu = g.cwiseAbs().maxCoeff();
    if (mu == 0.0) return;
    const Eigen::MatrixXd w = g.array().pow(odd).matrix();
    const double wmax = std::max(1e-300, w.cwiseAbs().maxCoeff());
    a -= (opt.refine_step * mu / wmax) * (a * w);
    normalize_columns(a);
  }
}

}  // namespace

RipLevel gen_gaussian_columns(std::size_t u, std::size_t v, std::uint64_t seed,
                              const GenOptions& options) {
  if (u == 0 || v == 0) throw std::invalid_argument("gen_gaussian_columns: u and v must be >= 1");
  Rng rng(seed);
  Eigen::MatrixXd a = gaussian_matrix(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v), rng);
  normalize_columns(a);
  switch (options.post) {
    case PostPass::none: break;
    case PostPass::orthonormalize: {
      if (u < v) throw std::invalid_argument("orthonormalization needs u >= v");
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
      a = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
      break;
    }
    case PostPass::refine: refine(a, options); break;
  }
  return make_level(std::move(a));
}

RipFamily gen_family(const std::vector<std::pair<std::size_t, std::size_t>>& dims,
                     std::uint64_t seed, const GenOptions& options) {
  RipFamily f;
  f.seed = seed;
  for (std::size_t n = 0; n < dims.size(); ++n) {
    GenOptions o = options;
    if (o.post == PostPass::orthonormalize && dims[n].first < dims[n].second) o.post = PostPass::none;
    f.levels.push_back(gen_gaussian_columns(dims[n].first, dims[n].second, substream(seed, n + 1), o));
  }
  return f;
}

double coherence(const RipLevel& level) {
  Eigen::MatrixXd g = level.gram.cwiseAbs();
  g.diagonal().setZero();
  return level.v > 1 ? g.maxCoeff() : 0.0;
}

namespace {

using SmallMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 64, 64>;

struct Extremes {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  std::uint64_t lo_rank = 0;
  std::uint64_t hi_rank = 0;

  void offer(double l, double h, std::uint64_t rank) {
    if (l < lo || (l == lo && rank < lo_rank)) {
      lo = l;
      lo_rank = rank;
    }
    if (h > hi || (h == hi && rank < hi_rank)) {
      hi = h;
      hi_rank = rank;
    }
  }
  void merge(const Extremes& o) {
    if (o.lo < lo || (o.lo == lo && o.lo_rank < lo_rank)) {
      lo = o.lo;
      lo_rank = o.lo_rank;
    }
    if (o.hi > hi || (o.hi == hi && o.hi_rank < hi_rank)) {
      hi = o.hi;
      hi_rank = o.hi_rank;
    }
  }
};

template <class Matrix>
std::pair<double, double> extreme_eigenvalues(const Eigen::MatrixXd& gram,
                                              const std::vector<std::size_t>& subset,
                                              Matrix& work) {
  const auto k = static_cast<Eigen::Index>(subset.size());
  work.resize(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b)
      work(a, b) = gram(static_cast<Eigen::Index>(subset[static_cast<std::size_t>(a)]),
                        static_cast<Eigen::Index>(subset[static_cast<std::size_t>(b)]));
  if (k == 1) return {work(0, 0), work(0, 0)};
  if (k == 2) {
    const double mean = 0.5 * (work(0, 0) + work(1, 1));
    const double half = 0.5 * (work(0, 0) - work(1, 1));
    const double r = std::hypot(half, work(0, 1));
    return {mean - r, mean + r};
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(work, Eigen::EigenvaluesOnly);
  return {es.eigenvalues()[0], es.eigenvalues()[k - 1]};
}

struct Scan {
  Extremes ext;
  CertMode mode = CertMode::exhaustive;
  std::uint64_t samples = 0;
  std::vector<std::size_t> argmin;
  std::vector<std::size_t> argmax;
};

template <class Matrix>
Scan scan_impl(const Eigen::MatrixXd& gram, std::size_t order, const CertifyOptions& opt) {
  const auto v = static_cast<std::size_t>(gram.rows());
  const std::uint64_t total = binomial(v, order);
  const std::size_t threads = resolve_threads(opt.threads);
  Scan scan;
  if (total <= opt.budget) {
    scan.mode = CertMode::exhaustive;
    scan.samples = total;
    const std::size_t chunks = static_cast<std::size_t>(std::min<std::uint64_t>(total, threads * 4));
    std::vector<Extremes> parts(chunks);
    parallel_for(chunks, threads, [&](std::size_t c) {
      const std::uint64_t begin = total * c / chunks;
      const std::uint64_t end = total * (c + 1) / chunks;
      if (begin >= end) return;
      std::vector<std::size_t> subset = unrank_combination(begin, v, order);
      Matrix work;
      Extremes local;
      for (std::uint64_t r = begin; r < end; ++r) {
        const auto [lo, hi] = extreme_eigenvalues(gram, subset, work);
        local.offer(lo, hi, r);
        next_combination(subset, v);
      }
      parts[c] = local;
    });
    for (const auto& p : parts) scan.ext.merge(p);
    scan.argmin = unrank_combination(scan.ext.lo_rank, v, order);
    scan.argmax = unrank_combination(scan.ext.hi_rank, v, order);
  } else {
    scan.mode = CertMode::sampled;
    scan.samples = std::min(opt.budget, opt.max_samples);
    const std::size_t chunks = static_cast<std::size_t>(std::min<std::uint64_t>(scan.samples, threads * 4));
    std::vector<Extremes> parts(chunks);
    parallel_for(chunks, threads, [&](std::size_t c) {
      const std::uint64_t begin = scan.samples * c / chunks;
      const std::uint64_t end = scan.samples * (c + 1) / chunks;
      Matrix work;
      Extremes local;
      for (std::uint64_t r = begin; r < end; ++r) {
        Rng rng = make_rng(opt.seed, r);
        const auto subset = random_combination(v, order, rng);
        const auto [lo, hi] = extreme_eigenvalues(gram, subset, work);
        local.offer(lo, hi, r);
      }
      parts[c] = local;
    });
    for (const auto& p : parts) scan.ext.merge(p);
    Rng lo_rng = make_rng(opt.seed, scan.ext.lo_rank);
    scan.argmin = random_combination(v, order, lo_rng);
    Rng hi_rng = make_rng(opt.seed, scan.ext.hi_rank);
    scan.argmax = random_combination(v, order, hi_rng);
  }
  return scan;
}

Scan scan_subsets(const Eigen::MatrixXd& gram, std::size_t order, const CertifyOptions& opt) {
  if (gram.rows() != gram.cols()) throw std::invalid_argument("gram matrix must be square");
  if (order == 0) throw std::invalid_argument("certificate order must be >= 1");
  if (order > static_cast<std::size_t>(gram.rows()))
    throw std::invalid_argument("certificate order " + std::to_string(order) +
                                " exceeds the number of columns " + std::to_string(gram.rows()));
  if (order <= 64) return scan_impl<SmallMatrix>(gram, order, opt);
  return scan_impl<Eigen::MatrixXd>(gram, order, opt);
}

}  // namespace

RipCertificate certify_gram(const Eigen::MatrixXd& gram, std::size_t order,
                            const CertifyOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  Scan scan = scan_subsets(gram, order, options);
  RipCertificate c;
  c.order = order;
  c.lambda_min = scan.ext.lo;
  c.lambda_max = scan.ext.hi;
  c.mode = scan.mode;
  c.samples = scan.samples;
  c.argmin = std::move(scan.argmin);
  c.argmax = std::move(scan.argmax);
  c.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return c;
}

RipCertificate certify_almost_on(const RipFamily& family, std::size_t level, std::size_t order,
                                 const CertifyOptions& options) {
  RipCertificate c = certify_gram(family.level(level).gram, order, options);
  c.level = level;
  return c;
}

RipCertificate certify_besselian(const RipFamily& family, std::size_t level, std::size_t order,
                                 const CertifyOptions& options) {
  RipCertificate c = certify_almost_on(family, level, order, options);
  c.besselian_only = true;
  return c;
}

RipDefResult verify_rip_def(const Eigen::MatrixXd& a, std::size_t k, double delta,
                            const CertifyOptions& options) {
  const Eigen::MatrixXd gram = a.transpose() * a;
  const Scan scan = scan_subsets(gram, k, options);
  RipDefResult r;
  r.mode = scan.mode;
  r.samples = scan.samples;
  r.sigma_min = std::sqrt(std::max(0.0, scan.ext.lo));
  r.sigma_max = std::sqrt(std::max(0.0, scan.ext.hi));
  constexpr double slack = 1e-12;
  const bool low_ok = r.sigma_min >= 1.0 - delta - slack;
  const bool high_ok = r.sigma_max <= 1.0 + delta + slack;
  r.holds = low_ok && high_ok;
  if (!r.holds) {
    r.witness_support = low_ok ? scan.argmax : scan.argmin;
    const auto kk = static_cast<Eigen::Index>(k);
    Eigen::MatrixXd sub(kk, kk);
    for (Eigen::Index i = 0; i < kk; ++i)
      for (Eigen::Index j = 0; j < kk; ++j)
        sub(i, j) = gram(static_cast<Eigen::Index>(r.witness_support[static_cast<std::size_t>(i)]),
                         static_cast<Eigen::Index>(r.witness_support[static_cast<std::size_t>(j)]));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub);
    r.witness_coefficients = low_ok ? es.eigenvectors().col(kk - 1) : es.eigenvectors().col(0);
  }
  return r;
}

}  // namespace opideal

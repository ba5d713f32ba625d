#include "opideal/fss_probe.hpp"

#include "opideal/combinatorics.hpp"
#include "opideal/parallel.hpp"
#include "opideal/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace opideal {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

}  // namespace

std::size_t count_ties(const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (y.size() == 0) return 0;
  const double top = y.cwiseAbs().maxCoeff();
  if (top == 0.0) return 0;
  std::size_t n = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (std::abs(y[i]) >= top * (1.0 - kTieTolerance)) ++n;
  return n;
}

namespace {

// Q_S c = σ; accepted when no coordinate off S exceeds 1.
bool try_vertex(const Eigen::MatrixXd& q, const std::vector<std::size_t>& support, std::uint64_t signs,
                MilmanResult& out) {
  const auto d = idx(support.size());
  Eigen::MatrixXd qs(d, d);
  for (Eigen::Index a = 0; a < d; ++a) qs.row(a) = q.row(idx(support[static_cast<std::size_t>(a)]));
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(qs);
  if (std::abs(lu.determinant()) < 1e-13) return false;
  Eigen::VectorXd sigma(d);
  sigma[0] = 1.0;
  for (Eigen::Index a = 1; a < d; ++a) sigma[a] = (signs >> (a - 1)) & 1U ? -1.0 : 1.0;
  const Eigen::VectorXd c = lu.solve(sigma);
  const Eigen::VectorXd y = q * c;
  if (y.cwiseAbs().maxCoeff() > 1.0 + kTieTolerance) return false;
  out.found = true;
  out.y = y;
  out.coefficients = c;
  out.support = support;
  out.ties = count_ties(y);
  return true;
}

}  // namespace

MilmanResult milman_vector(const Eigen::MatrixXd& q, const MilmanOptions& opt) {
  const auto k = static_cast<std::size_t>(q.rows());
  const auto d = static_cast<std::size_t>(q.cols());
  if (d == 0 || d > k) throw std::invalid_argument("milman_vector needs 1 <= d <= K");
  if (static_cast<std::size_t>(Eigen::FullPivLU<Eigen::MatrixXd>(q).rank()) < d)
    throw std::invalid_argument("milman_vector needs independent columns");
  MilmanResult out;
  const std::uint64_t subsets = binomial(k, d);
  const std::uint64_t signs = d - 1 >= 63 ? std::numeric_limits<std::uint64_t>::max()
                                          : (std::uint64_t{1} << (d - 1));
  const bool exhaustive = d - 1 < 63 && subsets <= opt.budget / signs;
  if (exhaustive) {
    out.mode = "exhaustive";
    std::vector<std::size_t> s = unrank_combination(0, k, d);
    do {
      for (std::uint64_t sg = 0; sg < signs; ++sg) {
        ++out.systems;
        if (try_vertex(q, s, sg, out)) return out;
      }
    } while (next_combination(s, k));
    return out;
  }
  out.mode = "heuristic";
  Rng rng(opt.seed);
  std::uniform_int_distribution<std::uint64_t> bit(0, std::numeric_limits<std::uint64_t>::max());
  for (std::uint64_t t = 0; t < opt.heuristic_tries; ++t) {
    ++out.systems;
    const std::vector<std::size_t> support = random_combination(k, d, rng);
    if (try_vertex(q, support, bit(rng), out)) return out;
  }
  return out;
}

// --- profiles --------------------------------------------------------------------------

namespace {

double ratio(const DenseOperator& t, const Eigen::MatrixXd& tq, const Eigen::MatrixXd& basis,
             const Eigen::VectorXd& c) {
  const double den = norm(t.domain(), basis * c);
  return den > 0.0 ? norm(t.codomain(), tq * c) / den : std::numeric_limits<double>::infinity();
}

Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& a) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
}

}  // namespace

double subspace_min(const DenseOperator& t, const Eigen::MatrixXd& basis, std::uint64_t seed,
                    const FssOptions& opt) {
  if (basis.rows() != idx(t.cols())) throw SpaceMismatch("subspace basis has wrong length");
  const Eigen::MatrixXd tq = t.matrix() * basis;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(tq, Eigen::ComputeFullV);
  const auto d = basis.cols();
  if (d == 0) return std::numeric_limits<double>::infinity();
  const bool orthonormal = (basis.transpose() * basis - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-10;
  if (t.domain().is_euclidean() && t.codomain().is_euclidean() && orthonormal)
    return tq.rows() >= d ? svd.singularValues()[d - 1] : 0.0;
  if (tq.rows() < d) return 0.0;  // nontrivial kernel

  std::vector<Eigen::VectorXd> starts{svd.matrixV().col(d - 1)};
  Rng rng(seed);
  for (std::size_t s = 0; s < opt.random_starts; ++s) starts.push_back(gaussian_vector(d, rng));

  double best = std::numeric_limits<double>::infinity();
  for (Eigen::VectorXd c : starts) {
    c.normalize();
    double f = ratio(t, tq, basis, c);
    double step = 0.1;
    for (std::size_t it = 0; it < opt.iterations && step > 1e-10; ++it) {
      const Eigen::VectorXd x = basis * c;
      const Eigen::VectorXd y = tq * c;
      const double nx = norm(t.domain(), x);
      const double ny = norm(t.codomain(), y);
      const Eigen::VectorXd g1 = tq.transpose() * norming_functional(t.codomain(), y);
      const Eigen::VectorXd g2 = basis.transpose() * norming_functional(t.domain(), x);
      Eigen::VectorXd grad = (g1 * nx - ny * g2) / (nx * nx);
      grad -= grad.dot(c) * c;  // tangent to the sphere
      if (grad.norm() < 1e-14) break;
      grad.normalize();
      bool moved = false;
      while (step > 1e-10) {
        const Eigen::VectorXd trial = (c - step * grad).normalized();
        const double ft = ratio(t, tq, basis, trial);
        if (ft < f) {
          c = trial;
          f = ft;
          step *= 1.5;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    best = std::min(best, f);
  }
  return best;
}

FssProfile fss_profile(const DenseOperator& t, const std::vector<std::size_t>& dims, std::uint64_t seed,
                       const FssOptions& opt) {
  const std::size_t n = t.cols();
  struct Job {
    std::size_t d_index;
    Eigen::MatrixXd basis;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    const std::size_t d = dims[k];
    if (d == 0 || d > n) throw std::invalid_argument("profile dimension out of range");
    const std::uint64_t ds = substream(seed, d);
    for (std::size_t tr = 0; tr < opt.trials; ++tr) {
      Rng rng = make_rng(ds, tr);
      jobs.push_back({k, orthonormal_columns(gaussian_matrix(idx(n), idx(d), rng)), substream(ds, tr + 1000)});
    }
    if (!opt.block_aligned) continue;
    for (std::size_t b = 0; b < t.domain().block_count(); ++b) {
      const std::size_t dim = t.domain().block(b).dim;
      if (dim < d) continue;
      Rng rng = make_rng(ds, 1'000'000 + b);
      Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(idx(n), idx(d));
      basis.middleRows(idx(t.domain().offset(b)), idx(dim)) =
          orthonormal_columns(gaussian_matrix(idx(dim), idx(d), rng));
      jobs.push_back({k, std::move(basis), substream(ds, 2'000'000 + b)});
    }
  }
  std::vector<double> values(jobs.size());
  parallel_for(jobs.size(), resolve_threads(opt.threads), [&](std::size_t j) {
    values[j] = subspace_min(t, jobs[j].basis, jobs[j].seed, opt);
  });

  const bool closed = t.domain().is_euclidean() && t.codomain().is_euclidean();
  FssProfile prof;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    FssEntry e;
    e.d = dims[k];
    e.method = closed ? "sigma_min" : "subgradient";
    e.worst = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      if (jobs[j].d_index != k) continue;
      ++e.trials;
      e.raw_value = std::max(e.raw_value, values[j]);
      e.worst = std::min(e.worst, values[j]);
    }
    if (e.trials == 0) e.worst = 0.0;
    prof.entries.push_back(e);
  }
  // Larger subspaces contain smaller ones: the modulus is non-increasing in d.
  std::vector<std::size_t> order(dims.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dims[a] < dims[b]; });
  double running = std::numeric_limits<double>::infinity();
  for (auto k : order) {
    running = std::min(running, prof.entries[k].raw_value);
    prof.entries[k].value = running;
  }
  return prof;
}

std::string profile_to_csv(const FssProfile& profile) {
  std::ostringstream os;
  os.precision(17);
  os << "d,value,raw_value,worst,trials,method\n";
  for (const auto& e : profile.entries)
    os << e.d << ',' << e.value << ',' << e.raw_value << ',' << e.worst << ',' << e.trials << ','
       << e.method << '\n';
  return os.str();
}

// --- explicit construction ---------------------------------------------------------------

std::size_t corollary_m(double epsilon, double q) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  for (std::size_t m = 1; m < (std::size_t{1} << 40); m *= 2) {
    const double md = static_cast<double>(m);
    if (1.0 / md + 2.0 * std::pow(md, -1.0 / q) < epsilon / 2.0) {
      std::size_t lo = m / 2 + 1;
      std::size_t hi = m;
      while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        const double x = static_cast<double>(mid);
        if (1.0 / x + 2.0 * std::pow(x, -1.0 / q) < epsilon / 2.0) hi = mid;
        else lo = mid + 1;
      }
      return hi;
    }
  }
  throw std::invalid_argument("epsilon too small for a representable m");
}

CorollaryReport corollary_check(const ParamSchedule& schedule, const RipFamily& family,
                                const std::set<std::size_t>& M, std::size_t m, const DenseOperator& b,
                                const MilmanOptions& opt) {
  CorollaryReport rep;
  rep.m = m;
  rep.q = std::max(2.0, schedule.p().value());
  const double md = static_cast<double>(m);
  rep.bound = 1.0 / md + 2.0 * std::pow(md, -1.0 / rep.q);
  for (auto n : M)
    if (n > m) rep.N.insert(n);

  const ApproxFactorization f = factor_formal_identity_any_p(b, schedule, family, m, rep.N);
  rep.selected = f.selected();
  rep.residual = f.residual_norm;
  rep.P_norm_upper = f.P_norm.upper;

  std::vector<DenseOperator> parts;
  for (auto n : rep.N) parts.push_back(build_T_n(family, n));
  const DenseOperator d = block_diag(parts, schedule.p(), ExtExponent::c0());
  const Eigen::MatrixXd db = d.matrix() * b.matrix();
  const auto um = idx(schedule.level(m).u);

  const Eigen::MatrixXd& p = f.P.matrix();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(p.rows() > 0 ? p : Eigen::MatrixXd::Zero(1, um));
  if (p.rows() == 0 || lu.rank() < um) {
    rep.branch = "kernel";
    rep.x = lu.kernel().col(0);
  } else {
    MilmanOptions o = opt;
    const MilmanResult y = milman_vector(p, o);
    rep.mode = y.mode;
    if (!y.found) {
      rep.branch = "not_found";
      return rep;
    }
    rep.branch = "milman";
    rep.ties = y.ties;
    rep.x = y.coefficients;  // P x = y
  }
  const double nx = rep.x.norm();
  rep.ratio = db.rows() > 0 ? (db * rep.x).cwiseAbs().maxCoeff() / nx : 0.0;
  const double limit = rep.branch == "kernel" ? 1.0 / md : rep.bound;
  rep.holds = rep.ratio <= limit + 1e-12;
  return rep;
}

}  // namespace opideal

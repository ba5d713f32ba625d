#include "opideal/factorization.hpp"

#include "opideal/combinatorics.hpp"
#include "opideal/lp.hpp"
#include "opideal/parallel.hpp"
#include "opideal/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <tuple>

namespace opideal {

namespace {

const ExtExponent kTwo = ExtExponent::finite(2.0);
const ExtExponent kInf = ExtExponent::infinity();
constexpr double kNormSlack = 1e-9;
// Relative slack on the selection threshold so that ‖B* g‖ = 1/m survives rounding.
constexpr double kThresholdSlack = 1e-12;

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

struct Candidate {
  double weight;
  std::size_t n;
  std::size_t j;  // 0-based
};

ApproxFactorization factor_impl(const DenseOperator& b, const ParamSchedule& schedule,
                                const RipFamily& family, std::size_t m,
                                const std::set<std::size_t>& levels, std::uint64_t s_m) {
  check_family_matches(schedule, family);
  check_mask(schedule, levels);
  if (m == 0 || m > schedule.level_count())
    throw std::invalid_argument("m must be a level index");
  for (auto n : levels)
    if (n <= m) throw std::invalid_argument("levels in N must exceed m");
  const std::size_t u_m = schedule.level(m).u;
  const BlockSpace dom = BlockSpace::lp(kTwo, u_m);
  const BlockSpace expected_cod = schedule.U_sub(levels);
  if (!b.domain().same_norm(dom)) throw SpaceMismatch("B must act on l_2^{u_m}");
  if (b.codomain().blocks() != expected_cod.blocks())
    throw SpaceMismatch("B must map into the l_2-blocks of the levels in N");
  const ExtExponent outer = b.codomain().outer();
  if (levels.size() > 1 && !(outer.is_sup() || outer.value() >= 2.0))
    throw std::invalid_argument("formal-identity factorization needs p >= 2; reduce first");

  ApproxFactorization f;
  f.m = m;
  f.levels.assign(levels.begin(), levels.end());
  f.budget_s_m = s_m;
  f.t = s_m + 1;
  f.threshold = 1.0 / static_cast<double>(m);
  f.B_norm_upper = norm_upper_bound(b);
  if (f.B_norm_upper > 1.0 + kNormSlack) {
    std::ostringstream os;
    os << "||B|| <= 1 is not certified (upper bound " << f.B_norm_upper << ")";
    throw HypothesisViolation(os.str());
  }

  // ‖B* g_j^{(n)}‖ for every (n, j).
  std::vector<Candidate> all;
  std::vector<Eigen::MatrixXd> db_blocks;  // G_n^T B_n
  for (std::size_t k = 0; k < f.levels.size(); ++k) {
    const std::size_t n = f.levels[k];
    const RipLevel& lvl = family.level(n);
    const Eigen::MatrixXd bn = b.matrix().middleRows(idx(b.codomain().offset(k)), idx(lvl.u));
    Eigen::MatrixXd w = lvl.columns.transpose() * bn;
    for (std::size_t j = 0; j < lvl.v; ++j) all.push_back({w.row(idx(j)).norm(), n, j});
    db_blocks.push_back(std::move(w));
  }
  std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& c) {
    if (a.weight != c.weight) return a.weight > c.weight;
    return std::tie(a.n, a.j) < std::tie(c.n, c.j);
  });
  const std::size_t h = static_cast<std::size_t>(std::min<std::uint64_t>(f.t, all.size()));
  std::vector<std::vector<std::size_t>> chosen(f.levels.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    const Candidate& c = all[i];
    if (i < h && c.weight >= f.threshold * (1.0 - kThresholdSlack)) {
      const auto k = static_cast<std::size_t>(
          std::find(f.levels.begin(), f.levels.end(), c.n) - f.levels.begin());
      chosen[k].push_back(c.j);
    } else {
      f.max_excluded = std::max(f.max_excluded, c.weight);
    }
  }

  std::vector<std::size_t> p_dims;
  std::size_t r = 0;
  for (std::size_t k = 0; k < f.levels.size(); ++k) {
    std::sort(chosen[k].begin(), chosen[k].end());
    std::vector<std::size_t> one_based;
    for (auto j : chosen[k]) {
      one_based.push_back(j + 1);
      f.source_coordinates.emplace_back(f.levels[k], j + 1);
    }
    f.index_sets.emplace_back(f.levels[k], std::move(one_based));
    if (!chosen[k].empty()) p_dims.push_back(chosen[k].size());
    r += chosen[k].size();
  }

  const BlockSpace v_sub = schedule.V_sub(levels);
  const BlockSpace mid2 = BlockSpace::sum(kTwo, p_dims, outer);
  const BlockSpace mid_inf = BlockSpace::sum(kInf, p_dims, ExtExponent::c0());
  Eigen::MatrixXd p(idx(r), idx(u_m));
  Eigen::MatrixXd rm = Eigen::MatrixXd::Zero(idx(v_sub.total_dim()), idx(r));
  Eigen::MatrixXd db(idx(v_sub.total_dim()), idx(u_m));
  std::size_t row = 0;
  for (std::size_t k = 0; k < f.levels.size(); ++k) {
    db.middleRows(idx(v_sub.offset(k)), db_blocks[k].rows()) = db_blocks[k];
    for (auto j : chosen[k]) {
      p.row(idx(row)) = db_blocks[k].row(idx(j));
      rm(idx(v_sub.offset(k) + j), idx(row)) = 1.0;
      ++row;
    }
  }
  f.P = DenseOperator(std::move(p), dom, mid2);
  f.I_formal = DenseOperator::identity(mid2, mid_inf);
  f.R = DenseOperator(std::move(rm), mid_inf, v_sub);

  // Domain is Euclidean and the codomain sup-type: the residual norm is the
  // largest row ℓ_2 norm.
  const Eigen::MatrixXd residual = db - f.R.matrix() * f.P.matrix();
  f.residual_norm = residual.rows() > 0 ? residual.rowwise().norm().maxCoeff() : 0.0;

  const double sigma = spectral_norm(f.P.matrix());
  if (mid2.is_euclidean() || r == 0) {
    f.P_norm = NormBound{sigma, sigma, NormMode::spectral};
  } else {
    f.P_norm = NormBound{sigma / euclidean_lower_factor(mid2), sigma, NormMode::certified_upper};
  }
  f.R_norm = op_norm(f.R);
  if (levels.empty()) f.note = "N is empty: degenerate factorization";
  return f;
}

}  // namespace

ApproxFactorization factor_through_formal_identity(const DenseOperator& b,
                                                   const ParamSchedule& schedule,
                                                   const RipFamily& family, std::size_t m,
                                                   const std::set<std::size_t>& levels) {
  return factor_impl(b, schedule, family, m, levels, schedule.s_u64(m));
}

ReducedOperator reduce_p_le_2(const DenseOperator& b, const ParamSchedule& schedule) {
  if (schedule.p().value() > 2.0) throw std::invalid_argument("reduce_p_le_2 needs p <= 2");
  BlockSpace cod(b.codomain().blocks(), kTwo);
  ReducedOperator out{b.reinterpret(b.domain(), std::move(cod)), {}};
  out.note = schedule.p().value() == 2.0
                 ? "p = 2: operator unchanged"
                 : "codomain read as the l_2-sum; the formal identity from the l_" +
                       schedule.p().to_string() + "-sum has norm 1";
  return out;
}

ApproxFactorization factor_formal_identity_any_p(const DenseOperator& b,
                                                 const ParamSchedule& schedule,
                                                 const RipFamily& family, std::size_t m,
                                                 const std::set<std::size_t>& levels) {
  if (schedule.p().value() >= 2.0) return factor_through_formal_identity(b, schedule, family, m, levels);

  const double upper = norm_upper_bound(b);
  if (upper > 1.0 + kNormSlack) {
    std::ostringstream os;
    os << "||B|| <= 1 is not certified (upper bound " << upper << ")";
    throw HypothesisViolation(os.str());
  }
  const ReducedOperator red = reduce_p_le_2(b, schedule);
  ApproxFactorization f = factor_impl(red.b, schedule, family, m, levels, schedule.s_u64(m));
  f.B_norm_upper = upper;
  if (levels.empty()) return f;

  // One block ℓ_2^r -> ℓ_∞^r at n = min N; R keeps the original targets.
  const std::size_t r = f.selected();
  const std::size_t first = *levels.begin();
  for (auto& [n, js] : f.index_sets) {
    js.clear();
    if (n == first)
      for (std::size_t j = 1; j <= r; ++j) js.push_back(j);
  }
  if (r > 0) {
    const BlockSpace mid2 = BlockSpace::lp(kTwo, r);
    const BlockSpace mid_inf = BlockSpace::lp(kInf, r);
    f.P = f.P.reinterpret(f.P.domain(), mid2);
    f.I_formal = DenseOperator::identity(mid2, mid_inf);
    f.R = f.R.reinterpret(mid_inf, f.R.codomain());
    const double sigma = spectral_norm(f.P.matrix());
    f.P_norm = NormBound{sigma, sigma, NormMode::spectral};
  }
  f.relocated = true;
  f.note = red.note + "; selected coordinates placed at n = " + std::to_string(first);
  return f;
}

// --- identity through T_n ---------------------------------------------------

double identity_hypothesis_lhs(std::size_t m, std::size_t M) {
  if (m <= 1) return 0.0;
  if (M <= 1) return std::numeric_limits<double>::infinity();
  const double md = static_cast<double>(m);
  return md * std::sqrt(md * (md - 1.0) / static_cast<double>(M - 1));
}

std::size_t minimal_admissible_M(std::size_t m) {
  if (m <= 1) return std::max<std::size_t>(m, 1);
  // m²·m(m−1)/(M−1) < 1/4  <=>  M − 1 > 4m³(m−1)
  return 4 * m * m * m * (m - 1) + 2;
}

IdentityFactorization factor_identity_through_T_n(const RipFamily& family, std::size_t m,
                                                  std::size_t n, std::size_t M_cols,
                                                  std::uint64_t seed, std::size_t max_tries) {
  const RipLevel& lvl = family.level(n);
  if (m == 0) throw std::invalid_argument("m must be >= 1");
  if (M_cols < m || M_cols > lvl.v)
    throw std::invalid_argument("M_cols must lie between m and v_n");
  IdentityFactorization out;
  out.hypothesis_lhs = identity_hypothesis_lhs(m, M_cols);
  if (!(out.hypothesis_lhs < 0.5)) {
    std::ostringstream os;
    os << "hypothesis m*sqrt(m(m-1)/(M-1)) < 1/2 fails for m = " << m << ", M = " << M_cols
       << " (value " << out.hypothesis_lhs << "); minimal admissible M is " << minimal_admissible_M(m);
    throw HypothesisViolation(os.str());
  }
  out.energy_bound =
      m > 1 ? static_cast<double>(m * (m - 1)) / static_cast<double>(M_cols - 1) : 0.0;

  const auto mm = idx(m);
  Eigen::MatrixXd gs(mm, mm);
  std::vector<std::size_t> best_subset;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t attempt = 0; attempt < max_tries; ++attempt) {
    Rng rng = make_rng(seed, attempt);
    std::vector<std::size_t> s = random_combination(M_cols, m, rng);
    for (Eigen::Index a = 0; a < mm; ++a)
      for (Eigen::Index c = 0; c < mm; ++c)
        gs(a, c) = lvl.gram(idx(s[static_cast<std::size_t>(a)]), idx(s[static_cast<std::size_t>(c)]));
    const double energy = gs.squaredNorm() - gs.diagonal().squaredNorm();
    out.tries = attempt + 1;
    if (energy < best) {
      best = energy;
      best_subset = s;
    }
    if (energy <= out.energy_bound) {
      out.accepted = true;
      break;
    }
  }
  out.gram_energy = best;
  for (auto i : best_subset) out.subset.push_back(i + 1);
  if (!out.accepted) return out;

  for (Eigen::Index a = 0; a < mm; ++a)
    for (Eigen::Index c = 0; c < mm; ++c)
      gs(a, c) = lvl.gram(idx(best_subset[static_cast<std::size_t>(a)]),
                          idx(best_subset[static_cast<std::size_t>(c)]));
  for (Eigen::Index a = 0; a < mm; ++a) {
    double worst = 0.0;
    for (Eigen::Index c = 0; c < mm; ++c)
      if (c != a) worst = std::max(worst, std::abs(gs(a, c)));
    out.diagonal_defect += worst;
  }

  Eigen::MatrixXd bm(idx(lvl.u), mm);
  Eigen::MatrixXd pm = Eigen::MatrixXd::Zero(mm, idx(lvl.v));
  for (std::size_t a = 0; a < m; ++a) {
    bm.col(idx(a)) = lvl.columns.col(idx(best_subset[a]));
    pm(idx(a), idx(best_subset[a])) = 1.0;
  }
  // A u_i = e_i with u_i the columns of the Gram matrix of S.
  const Eigen::MatrixXd am = gs.fullPivLu().inverse();
  out.B = DenseOperator(bm, BlockSpace::lp(kTwo, m), BlockSpace::lp(kTwo, lvl.u));
  out.P = DenseOperator(pm, BlockSpace::lp(kInf, lvl.v), BlockSpace::lp(kInf, m));
  out.A = DenseOperator(am, BlockSpace::lp(kInf, m), BlockSpace::lp(kInf, m));
  const double a_norm = am.cwiseAbs().rowwise().sum().maxCoeff();
  out.A_norm = NormBound{a_norm, a_norm, NormMode::exact};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gs, Eigen::EigenvaluesOnly);
  const double b_norm = std::sqrt(std::max(0.0, es.eigenvalues()[mm - 1]));
  out.B_norm = NormBound{b_norm, b_norm, NormMode::spectral};
  const Eigen::MatrixXd recon = am * pm * lvl.columns.transpose() * bm;
  out.reconstruction_error = (recon - Eigen::MatrixXd::Identity(mm, mm)).cwiseAbs().maxCoeff();
  return out;
}

// --- factorization through embeddings ---------------------------------------------

EmbeddingFactorization factor_through_embedding(const DenseOperator& j, const DenseOperator& t,
                                                const EmbeddingOptions& opt) {
  if (!j.domain().same_norm(t.domain()))
    throw SpaceMismatch("J and T must share their domain");
  if (!j.codomain().is_sup_type() || !t.codomain().is_sup_type())
    throw SpaceMismatch("J and T must map into sup-normed spaces");
  EmbeddingFactorization out;
  out.embedding_lower = opt.certified_lower ? *opt.certified_lower
                                            : certify_embedding(j, opt.vertex_budget).lower;
  if (out.embedding_lower < 1.0 - kNormSlack) {
    std::ostringstream os;
    os << "embedding hypothesis ||x|| <= ||Jx|| fails (lower constant " << out.embedding_lower << ")";
    throw HypothesisViolation(os.str());
  }

  const Eigen::MatrixXd& f = j.matrix();  // rows f_i
  const Eigen::Index m = f.rows();
  const Eigen::Index d = f.cols();
  Eigen::MatrixXd eq(d, 2 * m);
  eq.leftCols(m) = f.transpose();
  eq.rightCols(m) = -f.transpose();
  const Eigen::VectorXd cost = Eigen::VectorXd::Ones(2 * m);

  const auto rows = static_cast<std::size_t>(t.matrix().rows());
  Eigen::MatrixXd a(t.matrix().rows(), m);
  std::vector<lp::Result> results(rows);
  parallel_for(rows, resolve_threads(opt.threads), [&](std::size_t r) {
    results[r] = lp::solve_standard(eq, t.matrix().row(idx(r)).transpose(), cost);
  });
  for (std::size_t r = 0; r < rows; ++r) {
    const lp::Result& res = results[r];
    if (res.status != lp::Status::optimal) {
      throw HypothesisViolation("LP for row " + std::to_string(r + 1) + " of T is " +
                                lp::to_string(res.status) + ": embedding hypothesis violated");
    }
    a.row(idx(r)) = (res.x.head(m) - res.x.tail(m)).transpose();
    out.lp_iterations += static_cast<std::uint64_t>(res.iterations);
  }
  out.A = DenseOperator(std::move(a), j.codomain(), t.codomain());
  out.max_residual = rows > 0 ? (t.matrix() - out.A.matrix() * f).cwiseAbs().maxCoeff() : 0.0;
  out.a_norm = rows > 0 ? out.A.matrix().cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
  out.t_norm = op_norm(t).upper;
  out.norm_ok = out.a_norm <= out.t_norm * (1.0 + opt.lp_tolerance) + 1e-12;
  return out;
}

namespace {

Eigen::MatrixXd block_of(const DenseOperator& t, std::size_t row_block, std::size_t col_block) {
  return t.matrix().block(idx(t.codomain().offset(row_block)), idx(t.domain().offset(col_block)),
                          idx(t.codomain().block(row_block).dim),
                          idx(t.domain().block(col_block).dim));
}

}  // namespace

BlockFactorization factor_through_L(const DenseOperator& t, const std::vector<NetEmbedding>& l,
                                    const EmbeddingOptions& opt) {
  const std::size_t blocks = t.domain().block_count();
  if (t.codomain().block_count() != blocks || l.size() != blocks)
    throw SpaceMismatch("T, L must have one block per level");
  for (std::size_t r = 0; r < blocks; ++r)
    for (std::size_t c = 0; c < blocks; ++c)
      if (r != c && !block_of(t, r, c).isZero(0.0))
        throw SpaceMismatch("T is not block diagonal");

  std::vector<DenseOperator> a_parts;
  std::vector<DenseOperator> l_parts;
  BlockFactorization out;
  for (std::size_t k = 0; k < blocks; ++k) {
    const Block& db = t.domain().block(k);
    const BlockSpace dom = BlockSpace::lp(db.inner, db.dim);
    if (!l[k].op.domain().same_norm(dom)) throw SpaceMismatch("L block does not match T's domain block");
    DenseOperator tk(block_of(t, k, k), dom, BlockSpace::lp(kInf, t.codomain().block(k).dim));
    EmbeddingOptions o = opt;
    o.certified_lower = l[k].lower;
    EmbeddingFactorization ef = factor_through_embedding(l[k].op, tk, o);
    out.block_a_norms.push_back(ef.a_norm);
    out.a_norm = std::max(out.a_norm, ef.a_norm);
    a_parts.push_back(ef.A);
    l_parts.push_back(l[k].op);
  }
  out.A = block_diag(a_parts, ExtExponent::c0(), t.codomain().outer());
  out.L = block_diag(l_parts, t.domain().outer(), ExtExponent::c0());
  out.max_residual =
      t.matrix().size() > 0 ? (t.matrix() - out.A.matrix() * out.L.matrix()).cwiseAbs().maxCoeff() : 0.0;
  out.t_norm = op_norm(t).upper;
  out.norm_ok = out.a_norm <= out.t_norm * (1.0 + opt.lp_tolerance) + 1e-12;
  return out;
}

WitnessFactorization factor_K_through_witnessed_T(const DenseOperator& t,
                                                  const std::vector<Witness>& witnesses,
                                                  const std::vector<NetEmbedding>& k,
                                                  const EmbeddingOptions& opt) {
  if (witnesses.size() != k.size()) throw std::invalid_argument("one K_n per witness required");
  if (!t.codomain().is_sup_type() && t.codomain().outer().is_finite())
    throw SpaceMismatch("T must map into a sup-type block sum");
  std::set<std::size_t> used;
  for (const auto& w : witnesses) {
    if (w.block == 0 || w.block > t.codomain().block_count())
      throw std::invalid_argument("witness block out of range");
    if (!used.insert(w.block).second) throw std::invalid_argument("witness blocks must be distinct");
  }

  WitnessFactorization out;
  std::vector<DenseOperator> a_parts;
  std::vector<Block> b_blocks;
  std::vector<Block> k_cod;
  const Eigen::Index total_cols =
      std::accumulate(witnesses.begin(), witnesses.end(), Eigen::Index{0},
                      [](Eigen::Index acc, const Witness& w) { return acc + w.basis.cols(); });
  Eigen::MatrixXd bm(t.matrix().cols(), total_cols);
  Eigen::Index col = 0;
  std::size_t k_rows = 0;
  for (std::size_t n = 0; n < witnesses.size(); ++n) {
    const Witness& w = witnesses[n];
    const auto dn = static_cast<std::size_t>(w.basis.cols());
    if (w.basis.rows() != t.matrix().cols()) throw SpaceMismatch("witness basis has wrong length");
    if (!(w.epsilon > 0.0)) throw std::invalid_argument("witness epsilon must be positive");
    const BlockSpace e2 = BlockSpace::lp(kTwo, dn);
    if (!k[n].op.domain().same_norm(e2)) throw SpaceMismatch("K_n must act on l_2^{d_n}");

    const Eigen::MatrixXd tj = t.matrix() * w.basis;
    const std::size_t b = w.block - 1;
    const auto off = idx(t.codomain().offset(b));
    const auto rb = idx(t.codomain().block(b).dim);
    Eigen::MatrixXd outside = tj;
    outside.middleRows(off, rb).setZero();
    if (outside.size() > 0 && outside.cwiseAbs().maxCoeff() > 1e-12)
      throw HypothesisViolation("witness " + std::to_string(n + 1) +
                                " is not mapped into its designated block");

    const DenseOperator jn(w.basis, e2, t.domain());
    const double j_upper = norm_upper_bound(jn);
    out.j_norm_upper.push_back(j_upper);
    if (j_upper > (2.0 / w.epsilon) * (1.0 + kNormSlack))
      throw HypothesisViolation("witness " + std::to_string(n + 1) + ": ||J_n|| exceeds 2/epsilon");
    const DenseOperator tjn(tj.middleRows(off, rb), e2, BlockSpace::lp(kInf, static_cast<std::size_t>(rb)));
    const EmbeddingCertificate cert = certify_embedding(tjn, opt.vertex_budget);
    out.lower_constants.push_back(cert.lower);
    if (!cert.bounded || cert.lower < 1.0 - kNormSlack)
      throw HypothesisViolation("witness " + std::to_string(n + 1) +
                                ": ||x|| <= ||T J_n x|| is not certified");

    EmbeddingOptions o = opt;
    o.certified_lower = cert.lower;
    const EmbeddingFactorization ef = factor_through_embedding(tjn, k[n].op, o);
    out.block_a_norms.push_back(ef.a_norm);
    out.block_k_norms.push_back(ef.t_norm);
    out.a_norm = std::max(out.a_norm, ef.a_norm);
    out.b_norm_bound = std::max(out.b_norm_bound, 2.0 / w.epsilon);
    a_parts.push_back(ef.A);
    bm.middleCols(col, idx(dn)) = w.basis;
    col += idx(dn);
    b_blocks.push_back(Block{kTwo, dn});
    k_cod.push_back(Block{kInf, k[n].op.rows()});
    k_rows += k[n].op.rows();
  }

  // A reads block b_n of T's codomain into the n-th block of K's codomain.
  Eigen::MatrixXd am = Eigen::MatrixXd::Zero(idx(k_rows), t.matrix().rows());
  Eigen::MatrixXd km = Eigen::MatrixXd::Zero(idx(k_rows), total_cols);
  std::size_t row = 0;
  col = 0;
  for (std::size_t n = 0; n < witnesses.size(); ++n) {
    const std::size_t b = witnesses[n].block - 1;
    const auto kr = idx(k[n].op.rows());
    am.block(idx(row), idx(t.codomain().offset(b)), kr, idx(t.codomain().block(b).dim)) =
        a_parts[n].matrix();
    km.block(idx(row), col, kr, k[n].op.matrix().cols()) = k[n].op.matrix();
    row += k[n].op.rows();
    col += k[n].op.matrix().cols();
  }
  const BlockSpace k_space(std::move(k_cod), ExtExponent::c0());
  out.A = DenseOperator(std::move(am), t.codomain(), k_space);
  out.B = DenseOperator(std::move(bm), BlockSpace(std::move(b_blocks), t.domain().outer()), t.domain());
  const Eigen::MatrixXd atb = out.A.matrix() * t.matrix() * out.B.matrix();
  out.max_residual = km.size() > 0 ? (km - atb).cwiseAbs().maxCoeff() : 0.0;
  return out;
}

}  // namespace opideal

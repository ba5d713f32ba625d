// Acceptance checks: one PASS/FAIL line per criterion. Tolerances and time
// limits are pinned below.

#include "oracles.hpp"

#include "opideal/cli.hpp"
#include "opideal/factorization.hpp"
#include "opideal/fss_probe.hpp"
#include "opideal/random.hpp"
#include "opideal/separation.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

using namespace opideal;

namespace {

constexpr double kRipTol = 1e-6;
constexpr double kRipSeconds = 10.0;
constexpr double kFormalSeconds = 60.0;
constexpr double kReconTol = 1e-9;
constexpr double kIdentitySeconds = 5.0;
constexpr double kEmbedResidual = 1e-9;
constexpr double kEmbedNormSlack = 1e-6;
constexpr double kEmbedSeconds = 5.0;
constexpr double kPhiTol = 1e-12;
constexpr double kSeparationSeconds = 120.0;
constexpr double kDualTol = 1e-12;
constexpr double kNormTol = 1e-6;
constexpr double kMilmanSeconds = 30.0;

const ExtExponent P1 = ExtExponent::finite(1.0);
const ExtExponent P2 = ExtExponent::finite(2.0);
const ExtExponent INF = ExtExponent::infinity();

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  std::printf("[%s] %2d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

RipFamily refined(const ParamSchedule& s, std::uint64_t seed) {
  GenOptions g;
  g.post = PostPass::refine;
  return gen_family(s.dims(), seed, g);
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

// 1
Outcome rip_oracle() {
  const auto start = std::chrono::steady_clock::now();
  double dev = 0.0;
  std::size_t checks = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const RipLevel lv = gen_gaussian_columns(8, 12, seed);
    for (std::size_t k : {2U, 3U}) {
      const RipCertificate c = certify_gram(lv.gram, k);
      if (!c.exhaustive()) return {false, "certificate not exhaustive"};
      const auto ref = oracle::sparse_ratio(lv.columns, k);
      dev = std::max({dev, std::abs(c.lambda_min - ref.min_sq), std::abs(c.lambda_max - ref.max_sq)});
      ++checks;
    }
  }
  const double secs = seconds_since(start);
  return {dev <= kRipTol && secs < kRipSeconds,
          std::to_string(checks) + " certificates, max deviation " + fmt(dev) + " (tol " + fmt(kRipTol) + "), " +
              fmt(secs) + " s (limit " + fmt(kRipSeconds) + ")"};
}

// 2
Outcome formal_identity() {
  const auto start = std::chrono::steady_clock::now();
  const ParamSchedule tiny = ParamSchedule::preset("tiny");
  const RipFamily f = refined(tiny, 1);
  const std::set<std::size_t> levels{2, 3};
  const std::size_t order = tiny.s_u64(1) + 1;
  for (auto n : levels) {
    const RipCertificate c = certify_besselian(f, n, order);
    if (!c.exhaustive() || !c.besselian())
      return {false, "besselian order " + std::to_string(order) + " not certified at level " + std::to_string(n)};
  }
  Rng rng(2024);
  std::uniform_int_distribution<std::size_t> pick2(0, 19);
  std::uniform_int_distribution<std::size_t> pick3(0, 39);
  const BlockSpace cod = tiny.U_sub(levels);
  double worst_res = 0.0;
  double worst_p = 0.0;
  double worst_r = 0.0;
  std::size_t worst_sel = 0;
  std::size_t nonempty = 0;
  for (int k = 0; k < 100; ++k) {
    Eigen::MatrixXd b = gaussian_matrix(static_cast<Eigen::Index>(cod.total_dim()), 2, rng);
    if (k % 2 == 1) {
      // At m = 1 only B* g of norm ‖B‖ = 1 is selected, which generic B never
      // reach: half of the samples are x -> (g_a <x, w_1>, g_b <x, w_2>) with
      // random family columns g_a, g_b and a random orthonormal pair w.
      const Eigen::MatrixXd w = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian_matrix(2, 2, rng)).householderQ();
      b.setZero();
      b.block(0, 0, 16, 2) = f.level(2).column(pick2(rng)) * w.col(0).transpose();
      b.block(16, 0, 24, 2) = f.level(3).column(pick3(rng)) * w.col(1).transpose();
    }
    DenseOperator op(b, BlockSpace::lp(P2, 2), cod);
    op = op.scaled(1.0 / op_norm(op).upper);
    const auto a = factor_through_formal_identity(op, tiny, f, 1, levels);
    worst_res = std::max(worst_res, a.residual_norm);
    worst_p = std::max(worst_p, a.P_norm.upper);
    worst_r = std::max(worst_r, a.R_norm.upper);
    worst_sel = std::max(worst_sel, a.selected());
    if (a.selected() > 0) ++nonempty;
  }
  const double secs = seconds_since(start);
  const bool ok = worst_res <= 1.0 && worst_sel <= tiny.s_u64(1) && worst_p <= 2.0 && worst_r <= 1.0 &&
                  secs < kFormalSeconds;
  return {ok, "100 B (" + std::to_string(nonempty) + " with J non-empty): max residual " + fmt(worst_res) +
                  " <= 1, max |J| " + std::to_string(worst_sel) + " <= 4, max ||P|| " + fmt(worst_p) +
                  " <= 2, max ||R|| " + fmt(worst_r) + " <= 1, " + fmt(secs) + " s (limit " +
                  fmt(kFormalSeconds) + ")"};
}

// 3
Outcome identity_through_tn() {
  const auto start = std::chrono::steady_clock::now();
  const double lhs = identity_hypothesis_lhs(2, 34);
  // exact form of m·sqrt(m(m−1)/(M−1)) < 1/2: 4m³(m−1) = 32 < 33 = M − 1
  const bool hyp = lhs < 0.5 && 4 * 8 * 1 < 33;
  const RipFamily f = gen_family({{64, 64}}, 3);
  std::size_t max_tries = 0;
  double recon = 0.0;
  double a_norm = 0.0;
  double b_norm = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto r = factor_identity_through_T_n(f, 2, 1, 34, seed, 1000);
    if (!r.accepted) return {false, "seed " + std::to_string(seed) + " not accepted within 1000 tries"};
    max_tries = std::max(max_tries, r.tries);
    recon = std::max(recon, r.reconstruction_error);
    a_norm = std::max(a_norm, r.A_norm.upper);
    b_norm = std::max(b_norm, r.B_norm.upper);
  }
  const double secs = seconds_since(start);
  const bool ok = hyp && recon <= kReconTol && a_norm <= 2.0 && b_norm <= 2.0 && secs < kIdentitySeconds;
  return {ok, "hypothesis " + fmt(lhs) + " < 0.5, 10/10 accepted (max tries " + std::to_string(max_tries) +
                  "), max error " + fmt(recon) + ", max ||A|| " + fmt(a_norm) + ", max ||B|| " + fmt(b_norm) +
                  ", " + fmt(secs) + " s (limit " + fmt(kIdentitySeconds) + ")"};
}

// 4
Outcome embedding() {
  const auto start = std::chrono::steady_clock::now();
  const NetEmbedding j = build_circle_net(P2, 16);
  Rng rng(4);
  double res = 0.0;
  double ratio = 0.0;
  bool all_ok = true;
  for (int k = 0; k < 50; ++k) {
    const DenseOperator t(gaussian_matrix(5, 2, rng), BlockSpace::lp(P2, 2), BlockSpace::lp(INF, 5));
    const auto e = factor_through_embedding(j.op, t);
    res = std::max(res, e.max_residual);
    ratio = std::max(ratio, e.a_norm / e.t_norm);
    all_ok = all_ok && e.max_residual <= kEmbedResidual && e.a_norm <= e.t_norm * (1.0 + kEmbedNormSlack);
  }
  const double secs = seconds_since(start);
  return {all_ok && secs < kEmbedSeconds, "50 runs: max |T - AJ| " + fmt(res) + ", max ||A||/||T|| " +
                                              fmt(ratio) + ", " + fmt(secs) + " s (limit " + fmt(kEmbedSeconds) +
                                              ")"};
}

// 5
Outcome separation() {
  const auto start = std::chrono::steady_clock::now();
  double phi_dev = 0.0;
  double off = 0.0;
  for (const auto& name : ParamSchedule::preset_names()) {
    const ParamSchedule s = ParamSchedule::preset(name);
    const RipFamily f = refined(s, 1);
    const std::set<std::size_t> M{1, 2, 3};
    const DenseOperator tm = build_T_M(s, f, M).realized;
    for (auto m : M) {
      phi_dev = std::max(phi_dev, std::abs(eval_functional(make_functional(FunctionalKind::phi_V, m, s, f), tm) - 1.0));
      std::set<std::size_t> N = M;
      N.erase(m);
      const Eigen::MatrixXd tn = build_T_M(s, f, N).realized.matrix();
      const auto ut = static_cast<Eigen::Index>(s.U().total_dim());
      const auto vt = static_cast<Eigen::Index>(s.V().total_dim());
      off = std::max(off, std::abs(separation_value(s, f, tn, m, Eigen::MatrixXd::Identity(vt, vt),
                                                    Eigen::MatrixXd::Identity(ut, ut))));
    }
  }
  const ParamSchedule tiny = ParamSchedule::preset("tiny");
  const RipFamily f = refined(tiny, 1);
  SeparationOptions opt;
  opt.samples = 10'000;
  const auto r = separation_experiment(tiny, f, {1, 2, 3}, {2, 3}, 1, 1, opt);
  const double worst = std::max(r.max_random, r.max_adversarial);
  const double secs = seconds_since(start);
  const bool ok = phi_dev <= kPhiTol && off == 0.0 && worst <= 1.0 && r.bound_status == "conditional" &&
                  r.bound_vacuous && secs < kSeparationSeconds;
  return {ok, "|Phi(T_M) - 1| <= " + fmt(phi_dev) + ", Phi(T_N) = " + fmt(off) + ", 10^4 samples max " +
                  fmt(r.max_random) + ", adversarial " + fmt(r.max_adversarial) + " <= 1, 6/m bound labelled '" +
                  r.bound_status + "'" + (r.bound_vacuous ? " (vacuous)" : "") + ", " + fmt(secs) +
                  " s (limit " + fmt(kSeparationSeconds) + ")"};
}

// 6
Outcome duality() {
  double dual_dev = 0.0;
  for (const auto& name : ParamSchedule::preset_names()) {
    const ParamSchedule s = ParamSchedule::preset(name);
    const RipFamily f = refined(s, 1);
    for (const std::set<std::size_t>& M : {std::set<std::size_t>{1, 2, 3}, std::set<std::size_t>{1, 3}}) {
      const DenseOperator sm = build_S_M(s, f, M);
      const DenseOperator tm = build_T_M(s, f, M).realized;
      for (std::size_t m = 1; m <= s.level_count(); ++m)
        dual_dev = std::max(dual_dev,
                            std::abs(eval_functional(make_functional(FunctionalKind::psi_dual, m, s, f), sm) -
                                     eval_functional(make_functional(FunctionalKind::phi_V, m, s, f), tm)));
    }
  }
  const std::vector<std::size_t> two{2, 3};
  const std::vector<BlockSpace> spaces{BlockSpace::lp(P1, 4), BlockSpace::lp(ExtExponent::finite(3.0), 5),
                                       BlockSpace::sum(P2, two, ExtExponent::finite(1.5)),
                                       BlockSpace::sum(INF, two, ExtExponent::c0()), BlockSpace::lp(INF, 3)};
  Rng rng(6);
  double pair_dev = 0.0;
  bool involution = true;
  for (int k = 0; k < 1000; ++k) {
    const BlockSpace& a = spaces[static_cast<std::size_t>(k) % spaces.size()];
    const BlockSpace& b = spaces[static_cast<std::size_t>(k / 5) % spaces.size()];
    const DenseOperator t(gaussian_matrix(static_cast<Eigen::Index>(b.total_dim()), static_cast<Eigen::Index>(a.total_dim()), rng), a, b);
    const Eigen::VectorXd x = gaussian_vector(static_cast<Eigen::Index>(a.total_dim()), rng);
    const Eigen::VectorXd g = gaussian_vector(static_cast<Eigen::Index>(b.total_dim()), rng);
    const DenseOperator ts = adjoint(t);
    const DenseOperator tss = adjoint(ts);
    involution = involution && tss.matrix() == t.matrix() && tss.domain().same_norm(a) && tss.codomain().same_norm(b);
    const double lhs = pairing(t.matrix() * x, g);
    pair_dev = std::max(pair_dev, std::abs(lhs - pairing(x, ts.matrix() * g)) / std::max(1.0, std::abs(lhs)));
  }
  const bool ok = dual_dev <= kDualTol && involution && pair_dev <= 1e-12;
  return {ok, "max |psi_dual(S_M) - phi(T_M)| " + fmt(dual_dev) + " (tol " + fmt(kDualTol) +
                  "), 1000 triples: involution " + (involution ? "ok" : "broken") + ", max pairing defect " +
                  fmt(pair_dev)};
}

// 7
Outcome norm_engine() {
  const std::vector<std::size_t> d22{2, 2};
  const std::vector<std::size_t> d33{3, 3};
  const std::vector<std::size_t> d44{4, 4};
  const std::vector<BlockSpace> spaces{
      BlockSpace::lp(P1, 3),  BlockSpace::lp(P1, 8),  BlockSpace::lp(ExtExponent::finite(1.5), 4),
      BlockSpace::lp(P2, 5),  BlockSpace::lp(P2, 8),  BlockSpace::lp(ExtExponent::finite(3.0), 6),
      BlockSpace::lp(INF, 4), BlockSpace::lp(INF, 8), BlockSpace::sum(P2, d22, P1),
      BlockSpace::sum(P2, d33, ExtExponent::finite(3.0)), BlockSpace::sum(P2, d44, ExtExponent::c0()),
      BlockSpace::sum(INF, d33, ExtExponent::c0()), BlockSpace::sum(P1, d22, P1), BlockSpace::sum(P2, d44, P2)};
  Rng rng(7);
  std::size_t compared = 0;
  std::size_t bracketed = 0;
  double dev = 0.0;
  for (const auto& a : spaces) {
    for (const auto& b : spaces) {
      const DenseOperator t(gaussian_matrix(static_cast<Eigen::Index>(b.total_dim()), static_cast<Eigen::Index>(a.total_dim()), rng), a, b);
      const NormBound nb = op_norm(t);
      if (!nb.is_exact()) {
        ++bracketed;
        continue;
      }
      ++compared;
      const double ref = oracle::op_norm(t);
      dev = std::max(dev, std::abs(nb.upper - ref) / std::max(1.0, ref));
    }
  }
  double tn_dev = 0.0;
  for (const auto& name : ParamSchedule::preset_names()) {
    const ParamSchedule s = ParamSchedule::preset(name);
    const RipFamily f = refined(s, 1);
    for (std::size_t n = 1; n <= s.level_count(); ++n)
      tn_dev = std::max(tn_dev, std::abs(op_norm(build_T_n(f, n)).upper - 1.0));
  }
  return {dev <= kNormTol && tn_dev <= 1e-12,
          std::to_string(compared) + " exact-mode pairs vs oracle, max rel deviation " + fmt(dev) + " (tol " +
              fmt(kNormTol) + "; " + std::to_string(bracketed) + " bracketed pairs skipped), max | ||T_n|| - 1 | " +
              fmt(tn_dev)};
}

// 8
Outcome milman() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(8);
  std::size_t valid = 0;
  std::size_t exhaustive = 0;
  for (int k = 0; k < 100; ++k) {
    const auto d = static_cast<Eigen::Index>(1 + k % 4);
    const Eigen::Index K = std::min<Eigen::Index>(12, d + 1 + k % 9);
    const Eigen::MatrixXd q = gaussian_matrix(K, d, rng);
    const MilmanResult r = milman_vector(q);
    if (r.mode == "exhaustive") ++exhaustive;
    if (!r.found) continue;
    // coordinate inspection, independent of count_ties
    double top = 0.0;
    for (Eigen::Index i = 0; i < r.y.size(); ++i) top = std::max(top, std::abs(r.y[i]));
    Eigen::Index tied = 0;
    for (Eigen::Index i = 0; i < r.y.size(); ++i)
      if (top > 0.0 && std::abs(std::abs(r.y[i]) - top) <= 1e-9 * top) ++tied;
    const bool in_span = (q * r.coefficients - r.y).cwiseAbs().maxCoeff() <= 1e-9;
    if (tied >= d && in_span) ++valid;
  }
  const double secs = seconds_since(start);
  return {valid == 100 && exhaustive == 100 && secs < kMilmanSeconds,
          std::to_string(valid) + "/100 valid witnesses, " + std::to_string(exhaustive) + "/100 exhaustive, " +
              fmt(secs) + " s (limit " + fmt(kMilmanSeconds) + ")"};
}

// 9
Outcome schedule_honesty() {
  std::size_t u_growth_false = 0;
  std::size_t beyond = 0;
  std::size_t dependent = 0;
  std::size_t certified = 0;
  for (const auto& name : ParamSchedule::preset_names()) {
    const auto checks = schedule_check(ParamSchedule::preset(name));
    for (std::size_t i = 1; i < checks.size(); ++i) {
      ++beyond;
      if (!checks[i].u_growth) ++u_growth_false;
    }
    for (const std::string cmd : {"separate", "factorize"}) {
      json cfg = {{"command", cmd}, {"schedule", name}, {"budgets", {{"samples", 100}, {"subset_cap", 2000000}}}};
      const auto out = cli::run(cli::parse_config(cfg));
      for (const auto& v : out.report["verdicts"]) {
        bool relies = false;
        for (const auto& r : v["relies_on"]) relies = relies || r == "schedule.u_growth";
        if (!relies) continue;
        ++dependent;
        if (v["status"] == "pass") ++certified;
      }
    }
  }
  return {beyond > 0 && u_growth_false == beyond && dependent > 0 && certified == 0,
          "growth condition false at " + std::to_string(u_growth_false) + "/" + std::to_string(beyond) +
              " levels beyond n = 1; " + std::to_string(dependent) + " dependent verdicts, " +
              std::to_string(certified) + " marked pass"};
}

// 10
Outcome determinism() {
  std::size_t runs = 0;
  std::size_t identical = 0;
  std::string first_diff;
  std::vector<json> configs;
  for (const auto& c : cli::command_names()) {
    if (c == "report-validate") continue;
    if (c == "factorize") {
      for (const auto& l : cli::lemma_names()) configs.push_back({{"command", c}, {"lemma", l}});
    } else {
      json j = {{"command", c}};
      if (c == "separate") j["budgets"] = {{"samples", 500}};
      configs.push_back(j);
    }
  }
  for (const auto& j : configs) {
    const cli::RunConfig cfg = cli::parse_config(j);
    const json a = cli::strip_timing(cli::run(cfg, cli::RunOptions{1}).report);
    const json b = cli::strip_timing(cli::run(cfg, cli::RunOptions{4}).report);
    ++runs;
    if (a == b) ++identical;
    else if (first_diff.empty()) first_diff = cfg.command + "/" + cfg.lemma;
  }
  return {identical == runs, std::to_string(identical) + "/" + std::to_string(runs) +
                                 " command configs identical at 1 vs 4 threads" +
                                 (first_diff.empty() ? "" : ", first difference: " + first_diff)};
}

}  // namespace

int main() {
  criterion(1, "RIP oracle equivalence", rip_oracle);
  criterion(2, "formal-identity factorization", formal_identity);
  criterion(3, "identity through T_n", identity_through_tn);
  criterion(4, "embedding factorization", embedding);
  criterion(5, "separation functionals", separation);
  criterion(6, "duality identities", duality);
  criterion(7, "operator-norm engine", norm_engine);
  criterion(8, "Milman finder", milman);
  criterion(9, "schedule honesty", schedule_honesty);
  criterion(10, "determinism", determinism);
  std::printf("%d/10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}

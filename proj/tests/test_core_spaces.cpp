#include "oracles.hpp"

#include "opideal/core_spaces.hpp"
#include "opideal/random.hpp"

#include <doctest.h>

using namespace opideal;

namespace {

const ExtExponent P1 = ExtExponent::finite(1.0);
const ExtExponent P15 = ExtExponent::finite(1.5);
const ExtExponent P2 = ExtExponent::finite(2.0);
const ExtExponent P3 = ExtExponent::finite(3.0);
const ExtExponent INF = ExtExponent::infinity();
const ExtExponent C0 = ExtExponent::c0();

std::vector<BlockSpace> zoo() {
  const std::vector<std::size_t> two_two{2, 2};
  const std::vector<std::size_t> two_three{2, 3};
  return {BlockSpace::lp(P1, 3),  BlockSpace::lp(P15, 3), BlockSpace::lp(P2, 4),
          BlockSpace::lp(P3, 3),  BlockSpace::lp(INF, 4), BlockSpace::sum(P2, two_two, P1),
          BlockSpace::sum(P2, two_two, P3), BlockSpace::sum(P2, two_two, C0),
          BlockSpace::sum(INF, two_three, C0), BlockSpace::sum(P1, two_two, P1)};
}

}  // namespace

TEST_CASE("exponents parse, conjugate and compare") {
  CHECK(ExtExponent::parse("inf").is_sup());
  CHECK(ExtExponent::parse("c0").kind() == ExponentKind::c0);
  CHECK(ExtExponent::parse("3").value() == 3.0);
  CHECK_THROWS_AS(ExtExponent::parse("0.5"), std::invalid_argument);
  CHECK_THROWS_AS(ExtExponent::parse("abc"), std::invalid_argument);
  CHECK(P1.conjugate().is_sup());
  CHECK(INF.conjugate() == P1);
  CHECK(C0.conjugate() == P1);
  CHECK(P3.conjugate().value() == doctest::Approx(1.5));
  CHECK(INF.same_norm(C0));
  CHECK_FALSE(INF == C0);
}

TEST_CASE("block spaces: offsets, flat exponents and zero spaces") {
  const std::vector<std::size_t> dims{2, 3, 1};
  const BlockSpace s = BlockSpace::sum(P2, dims, P3);
  CHECK(s.total_dim() == 6);
  CHECK(s.offset(1) == 2);
  CHECK(s.offset(3) == 6);
  CHECK_FALSE(s.flat_exponent().has_value());
  CHECK(BlockSpace::sum(P2, dims, P2).is_euclidean());
  CHECK(BlockSpace::sum(INF, dims, C0).is_sup_type());
  CHECK_THROWS_AS(BlockSpace({Block{P2, 0}}, P2), std::invalid_argument);
  const BlockSpace z = BlockSpace::zero();
  CHECK(z.total_dim() == 0);
  CHECK(norm(z, Eigen::VectorXd(0)) == 0.0);
}

TEST_CASE("norms agree with the loop oracle") {
  Rng rng(11);
  for (const auto& s : zoo()) {
    for (int k = 0; k < 20; ++k) {
      const Eigen::VectorXd x = gaussian_vector(static_cast<Eigen::Index>(s.total_dim()), rng);
      CHECK(norm(s, x) == doctest::Approx(oracle::norm(s, x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("norming functionals attain the norm with dual norm one") {
  Rng rng(12);
  for (const auto& s : zoo()) {
    for (int k = 0; k < 10; ++k) {
      const Eigen::VectorXd x = gaussian_vector(static_cast<Eigen::Index>(s.total_dim()), rng);
      const Eigen::VectorXd f = norming_functional(s, x);
      CHECK(dual_norm(s, f) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(pairing(x, f) == doctest::Approx(norm(s, x)).epsilon(1e-12));
      // Hölder: <y, f> <= ‖y‖ for random y
      const Eigen::VectorXd y = gaussian_vector(x.size(), rng);
      CHECK(pairing(y, f) <= norm(s, y) + 1e-12);
      const Eigen::VectorXd v = norming_vector(s, f);
      CHECK(norm(s, v) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("dual_space conjugates and refuses multi-block l_inf sums") {
  const std::vector<std::size_t> dims{2, 2};
  const BlockSpace v = BlockSpace::sum(INF, dims, C0);
  const BlockSpace d = dual_space(v);
  CHECK(d.is_l1_type());
  CHECK_THROWS_AS(dual_space(BlockSpace::sum(INF, dims, INF)), HypothesisViolation);
  CHECK(dual_space(BlockSpace::lp(INF, 3)).is_l1_type());
  const BlockSpace u = BlockSpace::sum(P2, dims, P3);
  CHECK(dual_space(dual_space(u)) == u);
}

TEST_CASE("adjoint is an involution and transports pairings") {
  Rng rng(13);
  // c0-sums of several blocks have ℓ_∞-sum biduals, which dual_space refuses
  std::vector<BlockSpace> spaces;
  for (const auto& s : zoo())
    if (dual_space(s).outer().kind() != ExponentKind::infinity || dual_space(s).block_count() == 1)
      spaces.push_back(s);
  REQUIRE(spaces.size() == 8);
  for (int k = 0; k < 1000; ++k) {
    const BlockSpace& a = spaces[static_cast<std::size_t>(k) % spaces.size()];
    const BlockSpace& b = spaces[static_cast<std::size_t>(k * 7 + 3) % spaces.size()];
    const DenseOperator t(gaussian_matrix(static_cast<Eigen::Index>(b.total_dim()),
                                          static_cast<Eigen::Index>(a.total_dim()), rng),
                          a, b);
    const DenseOperator ts = adjoint(t);
    const DenseOperator tss = adjoint(ts);
    CHECK(tss.matrix() == t.matrix());
    CHECK(tss.domain().same_norm(t.domain()));
    CHECK(tss.codomain().same_norm(t.codomain()));
    const Eigen::VectorXd x = gaussian_vector(static_cast<Eigen::Index>(a.total_dim()), rng);
    const Eigen::VectorXd f = gaussian_vector(static_cast<Eigen::Index>(b.total_dim()), rng);
    const double lhs = pairing(t.matrix() * x, f);
    const double rhs = pairing(x, ts.matrix() * f);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("composition checks spaces") {
  const DenseOperator a = DenseOperator::identity(BlockSpace::lp(P2, 3), BlockSpace::lp(INF, 3));
  const DenseOperator b = DenseOperator::identity(BlockSpace::lp(INF, 3), BlockSpace::lp(P1, 3));
  const DenseOperator ba = compose(b, a);
  CHECK(ba.domain() == a.domain());
  CHECK(ba.codomain() == b.codomain());
  CHECK_THROWS_AS(compose(a, a), SpaceMismatch);
  CHECK_THROWS_AS(DenseOperator(Eigen::MatrixXd::Zero(2, 2), BlockSpace::lp(P2, 3), BlockSpace::lp(P2, 2)),
                  SpaceMismatch);
}

TEST_CASE("block_diag and mask_blocks") {
  const DenseOperator a(Eigen::MatrixXd::Constant(2, 2, 1.0), BlockSpace::lp(P2, 2), BlockSpace::lp(INF, 2));
  const DenseOperator b(Eigen::MatrixXd::Constant(3, 1, 2.0), BlockSpace::lp(P2, 1), BlockSpace::lp(INF, 3));
  const std::vector<DenseOperator> parts{a, b};
  const DenseOperator d = block_diag(parts, P2, C0);
  CHECK(d.rows() == 5);
  CHECK(d.cols() == 3);
  CHECK(d.matrix()(4, 2) == 2.0);
  CHECK(d.matrix()(0, 2) == 0.0);
  const DenseOperator m = mask_blocks(d, {2});
  CHECK(m.matrix().topLeftCorner(2, 2).isZero());
  CHECK(m.matrix()(4, 2) == 2.0);
  const std::vector<DenseOperator> none;
  CHECK(block_diag(none, P2, C0).rows() == 0);
}

TEST_CASE("exact operator norms match exhaustive oracles up to dimension 8") {
  Rng rng(14);
  const auto spaces = zoo();
  std::size_t compared = 0;
  for (const auto& a : spaces) {
    for (const auto& b : spaces) {
      if (a.total_dim() + b.total_dim() > 8 && a.total_dim() > 4) continue;
      const DenseOperator t(gaussian_matrix(static_cast<Eigen::Index>(b.total_dim()),
                                            static_cast<Eigen::Index>(a.total_dim()), rng),
                            a, b);
      const NormBound nb = op_norm(t);
      CHECK(nb.lower <= nb.upper + 1e-12);
      CHECK(norm_upper_bound(t) >= nb.lower - 1e-12);
      if (!nb.is_exact()) continue;
      ++compared;
      INFO(a.describe(), " -> ", b.describe(), " mode ", to_string(nb.mode));
      CHECK(nb.upper == doctest::Approx(oracle::op_norm(t)).epsilon(1e-6));
    }
  }
  CHECK(compared > 40);
}

TEST_CASE("bracketed norms contain the oracle value") {
  Rng rng(15);
  const std::vector<std::size_t> dims{2, 2};
  const BlockSpace a = BlockSpace::sum(P2, dims, P3);
  const BlockSpace b = BlockSpace::lp(P15, 3);
  for (int k = 0; k < 5; ++k) {
    const DenseOperator t(gaussian_matrix(3, 4, rng), a, b);
    const NormBound nb = op_norm(t);
    CHECK(nb.mode == NormMode::certified_upper);
    const double ref = oracle::op_norm(t);
    CHECK(nb.lower <= ref + 1e-9);
    CHECK(nb.upper >= ref - 1e-9);
  }
}

TEST_CASE("op_norm of zero and of the identity") {
  const BlockSpace s = BlockSpace::lp(P3, 4);
  CHECK(op_norm(DenseOperator::zero(s, s)).upper == 0.0);
  CHECK(op_norm(DenseOperator::identity(BlockSpace::lp(P2, 4), BlockSpace::lp(P2, 4))).upper ==
        doctest::Approx(1.0));
  // ℓ_2^n -> ℓ_∞^n identity has norm 1; ℓ_∞^n -> ℓ_2^n has norm sqrt(n)
  CHECK(op_norm(DenseOperator::identity(BlockSpace::lp(P2, 4), BlockSpace::lp(INF, 4))).upper ==
        doctest::Approx(1.0));
  CHECK(op_norm(DenseOperator::identity(BlockSpace::lp(INF, 4), BlockSpace::lp(P2, 4))).upper ==
        doctest::Approx(2.0));
}

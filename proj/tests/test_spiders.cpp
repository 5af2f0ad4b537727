#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace spiderqkd;
using spiderqkd::testing::diag;

namespace {

std::size_t power(std::size_t d, std::size_t e) {
  std::size_t p = 1;
  while (e--) p *= d;
  return p;
}

// (1^{n-k} (x) B) o (A (x) 1^{m2-k}) with explicit identities.
ComplexMatrix dense_compose(const ComplexMatrix& a, std::size_t n, const ComplexMatrix& b, std::size_t m2,
                            std::size_t k, std::size_t d) {
  const ComplexMatrix lower = tensor(a, identity(power(d, m2 - k)));
  const ComplexMatrix upper = tensor(identity(power(d, n - k)), b);
  return upper * lower;
}

Basis rotated(const Basis& b, const ComplexMatrix& u) { return Basis(u * b.vectors()); }

}  // namespace

TEST(Spider, SmallCases) {
  for (std::size_t d : {1, 2, 3}) {
    const Basis b = fourier_basis(d);
    EXPECT_LT(max_abs(spider(b, 1, 1) - identity(d)), 1e-14);
    const ComplexMatrix s = spider(b, 0, 0);
    ASSERT_EQ(s.rows(), 1);
    EXPECT_NEAR(std::abs(s(0, 0) - Complex(static_cast<double>(d))), 0.0, 1e-14);
  }
  const ComplexMatrix copy = spider(Basis::computational(2), 1, 2);
  EXPECT_EQ(copy.rows(), 4);
  EXPECT_EQ(copy(3, 1), Complex(1.0));
  EXPECT_EQ(copy(1, 1), Complex(0.0));
}

TEST(Spider, FusionAgainstDenseComposition) {
  Rng rng(31);
  for (std::size_t d : {2, 3}) {
    const Basis b = rotated(Basis::computational(d), random_unitary(d, rng));
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t m = rng.below(3), n = 1 + rng.below(3), m2 = 1 + rng.below(3), n2 = rng.below(3);
      const std::size_t k = 1 + rng.below(std::min(n, m2));
      const ComplexMatrix a = spider(b, m, n);
      const ComplexMatrix c = spider(b, m2, n2);
      const ComplexMatrix dense = dense_compose(a, n, c, m2, k, d);
      EXPECT_LT(max_abs(compose_along(a, n, c, m2, k, d) - dense), 1e-12);
      EXPECT_LT(max_abs(dense - spider(b, m + m2 - k, n + n2 - k)), 1e-12);
    }
  }
}

TEST(Spider, ComposeAlongGeneralMatrices) {
  Rng rng(32);
  const ComplexMatrix a = random_ginibre(8, 4, rng);  // 2 inputs, 3 outputs at d = 2
  const ComplexMatrix c = random_ginibre(2, 8, rng);  // 3 inputs, 1 output
  EXPECT_LT(max_abs(compose_along(a, 3, c, 3, 2, 2) - dense_compose(a, 3, c, 3, 2, 2)), 1e-12);
  EXPECT_THROW(compose_along(a, 3, c, 3, 4, 2), DimensionError);
}

TEST(Spider, TracePreservationWithOneInput) {
  for (std::size_t d : {2, 3, 4}) {
    const Basis b = fourier_basis(d);
    for (std::size_t n = 1; n <= 3; ++n) {
      const Channel c = doubled(spider(b, 1, n));
      EXPECT_TRUE(c.is_trace_preserving());
      EXPECT_LT(spider_trace_preservation_residual(b, n), 1e-12);
    }
    // two inputs: not trace preserving
    EXPECT_GT(operator_norm(spider(b, 2, 1).adjoint() * spider(b, 2, 1) - identity(d * d)), 0.5);
  }
}

TEST(Doubled, IdentityAndChoiFormula) {
  EXPECT_LT(choi_distance(doubled(identity(3)), identity_channel(3)), 1e-15);
  Rng rng(33);
  const ComplexMatrix v = random_ginibre(3, 2, rng);
  ComplexMatrix omega = ComplexMatrix::Zero(4, 1);
  omega(0, 0) = omega(3, 0) = 1.0;
  const ComplexMatrix w = tensor(v, identity(2)) * omega;
  EXPECT_LT(max_abs(choi(doubled(v)) - w * w.adjoint()), 1e-13);
}

TEST(Doubled, CopySpiderTracedIsDecoherence) {
  for (std::size_t d : {2, 3}) {
    const Basis b = fourier_basis(d);
    const Channel copy = doubled(spider(b, 1, 2)).relabeled({quantum(d)}, {quantum(d), quantum(d)});
    const Channel traced = trace_out(copy, {1});
    EXPECT_LT(spiderqkd::testing::max_output_distance(traced, decoherence(b)), 1e-13);
  }
}

TEST(MeasureEncode, Examples) {
  const SpiderPair p = SpiderPair::standard(3);
  const ComplexMatrix point0 = spiderqkd::apply(measure_map(p.white()), p.white().projector(0));
  EXPECT_LT(max_abs(point0 - diag({1, 0, 0})), 1e-15);
  for (std::size_t i = 0; i < 3; ++i) {
    const ComplexMatrix uniform = spiderqkd::apply(measure_map(p.gray()), p.white().projector(i));
    EXPECT_LT(max_abs(uniform - identity(3) / 3.0), 1e-15);
  }
  EXPECT_LT(max_abs(spiderqkd::apply(encode_map(p.gray()), diag({0, 1, 0})) - p.gray().projector(1)), 1e-15);
}

TEST(MeasureEncode, BornRuleOracle) {
  Rng rng(34);
  const Basis b = rotated(Basis::computational(4), random_unitary(4, rng));
  const ComplexMatrix rho = random_density(4, rng);
  const ComplexMatrix changed = b.vectors().adjoint() * rho * b.vectors();
  const ComplexMatrix out = spiderqkd::apply(measure_map(b), rho);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(std::abs(out(i, j) - (i == j ? changed(i, i) : 0.0)), 0.0, 1e-14);
}

TEST(MeasureEncode, DecoherenceSplit) {
  for (std::size_t d : {2, 3, 4}) {
    const Basis b = fourier_basis(d);
    EXPECT_LT(choi_distance(compose(measure_map(b), encode_map(b)), classical_identity(d)), 1e-12);
    EXPECT_LT(choi_distance(compose(encode_map(b), measure_map(b)), decoherence(b)), 1e-12);
    EXPECT_LT(operator_norm(measure_matrix(b) * encode_matrix(b) - identity(d)), 1e-12);
  }
}

TEST(MeasureEncode, HilbertSchmidtAdjoint) {
  Rng rng(35);
  const Basis b = rotated(Basis::computational(3), random_unitary(3, rng));
  for (int trial = 0; trial < 10; ++trial) {
    const ComplexMatrix v = random_ginibre(3, 1, rng);
    const ComplexMatrix rho = random_ginibre(3, 3, rng);
    // e(v) = sum_i v_i |b_i><b_i| and m(rho)_i = <b_i|rho|b_i>, written out by hand
    ComplexMatrix ev = ComplexMatrix::Zero(3, 3);
    Complex rhs = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      ev += v(static_cast<Eigen::Index>(i), 0) * b.projector(i);
      const Complex mi = (b.vector(i).adjoint() * rho * b.vector(i))(0, 0);
      rhs += std::conj(v(static_cast<Eigen::Index>(i), 0)) * mi;
    }
    EXPECT_LT(std::abs((ev.adjoint() * rho).trace() - rhs), 1e-13);
    EXPECT_LT(max_abs(measure_matrix(b) - encode_matrix(b).adjoint()), 1e-15);
  }
}

TEST(Decoherence, FixedPointsAndIdempotence) {
  const SpiderPair p = SpiderPair::standard(4);
  const Channel dz = decoherence(p.white());
  for (std::size_t i = 0; i < 4; ++i) EXPECT_LT(max_abs(spiderqkd::apply(dz, p.white().projector(i)) - p.white().projector(i)), 1e-15);
  EXPECT_LT(max_abs(spiderqkd::apply(dz, p.gray().projector(0)) - identity(4) / 4.0), 1e-15);
  EXPECT_LT(choi_distance(compose(dz, dz), dz), 1e-14);
}

TEST(ClassicalSpiders, CopyDeleteUniform) {
  const Basis b = Basis::computational(3);
  const ComplexMatrix copy = classical_copy(b), del = classical_delete(b), uni = classical_uniform(b);
  EXPECT_LT(max_abs(copy * ket(3, 2) - tensor(ket(3, 2), ket(3, 2))), 1e-15);
  EXPECT_LT(max_abs(tensor(del, identity(3)) * copy - identity(3)), 1e-15);
  EXPECT_LT(max_abs(tensor(identity(3), del) * copy - identity(3)), 1e-15);
  EXPECT_NEAR(std::abs((del * uni)(0, 0) - 1.0), 0.0, 1e-15);
}

TEST(Nondemolition, Marginals) {
  for (std::size_t d : {2, 3}) {
    const Basis b = fourier_basis(d);
    const Channel nd = nondemolition_measurement(b);
    EXPECT_TRUE(nd.is_trace_preserving());
    for (std::size_t i = 0; i < d; ++i) {
      const ComplexMatrix point = ket(d, i) * ket(d, i).adjoint();
      EXPECT_LT(max_abs(spiderqkd::apply(nd, b.projector(i)) - tensor(b.projector(i), point)), 1e-14);
    }
    Rng rng(36);
    const ComplexMatrix rho = random_density(d, rng);
    const ComplexMatrix out = spiderqkd::apply(nd, rho);
    EXPECT_LT(max_abs(partial_trace(out, {d, d}, {1}) - spiderqkd::apply(decoherence(b), rho)), 1e-14);
    EXPECT_LT(max_abs(partial_trace(out, {d, d}, {0}) - spiderqkd::apply(measure_map(b), rho)), 1e-14);
  }
}

TEST(Antipode, QubitDoubleSumOracle) {
  const SpiderPair p = SpiderPair::standard(2);
  // <z_i|x_j> for the Hadamard pair: 1/sqrt2 except <z_1|x_1> = -1/sqrt2
  const double h = 1.0 / std::sqrt(2.0);
  const ComplexMatrix x0 = (ket(2, 0) + ket(2, 1)) * h, x1 = (ket(2, 0) - ket(2, 1)) * h;
  const ComplexMatrix expected = h * x0 * ket(2, 0).adjoint() + h * x1 * ket(2, 0).adjoint() +
                                 h * x0 * ket(2, 1).adjoint() - h * x1 * ket(2, 1).adjoint();
  EXPECT_LT(max_abs(antipode(p) - expected), 1e-15);
  EXPECT_LT(check_complementarity_thm2(p), 1e-10);
}

TEST(Antipode, UnitaryForRandomPairs) {
  Rng rng(37);
  for (int trial = 0; trial < 10; ++trial) {
    const SpiderPair p(rotated(Basis::computational(3), random_unitary(3, rng)),
                       rotated(Basis::computational(3), random_unitary(3, rng)));
    EXPECT_LT(unitarity_defect(antipode(p)), 1e-12);
  }
}

TEST(Complementarity, StandardPairsPass) {
  for (std::size_t d : {2, 3, 4, 5}) {
    const SpiderPair p = SpiderPair::standard(d);
    EXPECT_LT(check_complementarity_thm1(p), 1e-10) << d;
    EXPECT_LT(check_complementarity_thm2(p), 1e-10) << d;
    EXPECT_TRUE(p.is_unbiased());
  }
}

TEST(Complementarity, SameBasisFails) {
  for (std::size_t d : {2, 3, 4}) {
    const Basis b = fourier_basis(d);
    const SpiderPair p(b, b);
    EXPECT_GE(check_complementarity_thm1(p), 0.5);
    EXPECT_GT(check_complementarity_thm2(p), 0.1);
  }
}

TEST(Complementarity, ResidualsAgreeWithUnbiasedness) {
  Rng rng(38);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t d = 2 + rng.below(3);
    const ComplexMatrix u = random_unitary(d, rng);
    const bool unbiased = trial % 2 == 0;
    const SpiderPair p = unbiased ? SpiderPair(rotated(Basis::computational(d), u), rotated(fourier_basis(d), u))
                                  : SpiderPair(rotated(Basis::computational(d), u),
                                               rotated(Basis::computational(d), random_unitary(d, rng)));
    const double r1 = check_complementarity_thm1(p);
    const double r2 = check_complementarity_thm2(p);
    EXPECT_EQ(r1 <= 1e-10, p.unbiasedness_residual() <= 1e-9);
    EXPECT_EQ(r1 <= 1e-10, r2 <= 1e-10);
    if (!unbiased) {
      EXPECT_GT(r1, 1e-3);
      EXPECT_GT(r2, 1e-3);
    }
  }
}

TEST(Fourier, Examples) {
  const Basis h = fourier_basis(2);
  const double s = 1.0 / std::sqrt(2.0);
  EXPECT_LT(max_abs(h.vector(0) - (ket(2, 0) + ket(2, 1)) * s), 1e-15);
  EXPECT_LT(max_abs(h.vector(1) - (ket(2, 0) - ket(2, 1)) * s), 1e-15);
  EXPECT_LT(max_abs(fourier_basis(1).vectors() - identity(1)), 1e-15);
  const SpiderPair p = SpiderPair::standard(4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      const Complex o = (ket(4, i).adjoint() * p.gray().vector(j))(0, 0);
      EXPECT_NEAR(std::norm(o), 0.25, 1e-15);
    }
  EXPECT_THROW(fourier_basis(0), DimensionError);
}

TEST(Basis, RejectsNonOrthonormal) {
  ComplexMatrix m = identity(2);
  m(0, 1) = 0.1;
  EXPECT_THROW(Basis{m}, PreconditionError);
  EXPECT_THROW(SpiderPair(Basis::computational(2), Basis::computational(3)), DimensionError);
}

TEST(IdentitySuite, AllDimensionsPass) {
  for (std::size_t d : {1, 2, 3, 4, 5}) {
    const auto r = run_spider_identity_suite(d);
    EXPECT_TRUE(r.passed()) << "dim " << d << " worst " << r.worst();
    EXPECT_EQ(r.max_legs, d <= 4 ? 3u : 2u);
    EXPECT_TRUE(r.residuals.count("fusion"));
    EXPECT_TRUE(r.residuals.count("complementarity_antipode"));
  }
}

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "oracles.hpp"
#include "unsharp_bell/random.hpp"
#include "unsharp_bell/spin_povm.hpp"

using namespace ubell;

namespace {

// Marginal of a pair joint observable over the second (which = 0) or
// first (which = 1) sign.
Hermitian<2> pair_marginal(const JointObservable<2>& j, int which, int sign) {
  Hermitian<2> s;
  for (const auto& o : j.outcomes)
    if (o.signs[static_cast<std::size_t>(which)] == sign) s = s + o.effect.op();
  return s;
}

}  // namespace

TEST(UnitVector, NormalizesAndRejectsDegenerate) {
  const UnitVector3 v(3.0, 0.0, 4.0);
  EXPECT_NEAR(v.x(), 0.6, 1e-15);
  EXPECT_NEAR(v.z(), 0.8, 1e-15);
  EXPECT_THROW(UnitVector3(0.0, 0.0, 0.0), PreconditionError);
  EXPECT_THROW(UnitVector3(std::numeric_limits<double>::quiet_NaN(), 0.0, 1.0), PreconditionError);
  EXPECT_THROW(UnitVector3(std::numeric_limits<double>::infinity(), 0.0, 1.0), PreconditionError);
}

TEST(UnitVector, ParseDirection) {
  const auto v = parse_direction("1, 0, 1");
  EXPECT_NEAR(v.x(), 1.0 / std::numbers::sqrt2, 1e-15);
  EXPECT_THROW(parse_direction("1,0"), PreconditionError);
  EXPECT_THROW(parse_direction("1,0,0,0"), PreconditionError);
  EXPECT_THROW(parse_direction("a,b,c"), PreconditionError);
}

TEST(Pauli, MatchExplicitMatrices) {
  const auto& s = pauli_matrices();
  EXPECT_LE(oracle::max_abs(s[0].matrix(), oracle::sigma_x()), 0.0);
  EXPECT_LE(oracle::max_abs(s[1].matrix(), oracle::sigma_y()), 0.0);
  EXPECT_LE(oracle::max_abs(s[2].matrix(), oracle::sigma_z()), 0.0);
}

TEST(UnsharpEffect, MatchesExplicitEntries) {
  Sampler rng(31);
  for (int i = 0; i < 200; ++i) {
    const auto n = rng.direction();
    const double lambda = rng.uniform();
    EXPECT_LE(oracle::max_abs(unsharp_effect(n, lambda).op().matrix(), oracle::effect(n, lambda)), 1e-15);
  }
}

TEST(UnsharpEffect, SpectrumAndCompleteness) {
  Sampler rng(32);
  for (int i = 0; i < 200; ++i) {
    const auto n = rng.direction();
    const double lambda = rng.uniform();
    const auto vals = eigenvalues(unsharp_effect(n, lambda).op());
    EXPECT_NEAR(vals[0], 0.5 * (1.0 - lambda), 1e-12);
    EXPECT_NEAR(vals[1], 0.5 * (1.0 + lambda), 1e-12);
    const UnsharpSpinObservable obs(n, lambda);
    EXPECT_LE(max_abs_diff(obs.effect(1).op() + obs.effect(-1).op(), Hermitian<2>::identity()), 1e-15);
  }
}

TEST(UnsharpEffect, SharpLimitIsProjection) {
  const auto n = UnitVector3(1.0, 2.0, -0.5);
  const auto p = unsharp_effect(n, 1.0).op();
  EXPECT_LE(max_abs_diff(p * p, p.matrix()), 1e-15);
  EXPECT_LE(max_abs_diff(p, spin_projection(n)), 1e-15);
}

TEST(UnsharpEffect, RejectsSharpnessOutOfRange) {
  const UnitVector3 z(0, 0, 1);
  EXPECT_THROW(unsharp_effect(z, -0.01), PreconditionError);
  EXPECT_THROW(unsharp_effect(z, 1.01), PreconditionError);
  EXPECT_THROW(unsharp_effect(z, std::numeric_limits<double>::quiet_NaN()), PreconditionError);
  EXPECT_THROW(UnsharpSpinObservable(z, 0.5).effect(0), PreconditionError);
}

TEST(Coexistence, ThresholdForOrthogonalAxes) {
  const UnitVector3 x(1, 0, 0), y(0, 1, 0);
  const auto at = pair_coexistent(1.0 / std::numbers::sqrt2, x, y);
  EXPECT_TRUE(at.coexistent);
  EXPECT_NEAR(at.margin, 0.0, 1e-12);
  EXPECT_GT(pair_coexistent(1.0 / std::numbers::sqrt2 - 1e-6, x, y).margin, 0.0);
  EXPECT_FALSE(pair_coexistent(1.0 / std::numbers::sqrt2 + 1e-6, x, y).coexistent);
  EXPECT_FALSE(pair_coexistent(1.0, x, y).coexistent);
}

TEST(Coexistence, ParallelAndAntiparallelAlwaysCoexist) {
  const UnitVector3 z(0, 0, 1);
  for (double lambda : {0.0, 0.3, 0.9, 1.0}) {
    EXPECT_TRUE(pair_coexistent(lambda, z, z).coexistent);
    EXPECT_TRUE(pair_coexistent(lambda, z, -z).coexistent);
  }
}

TEST(Coexistence, MarginMatchesHalfAngleForm) {
  Sampler rng(33);
  for (int i = 0; i < 500; ++i) {
    const auto a = rng.direction();
    const auto b = rng.direction();
    const double lambda = rng.uniform();
    const double theta = std::acos(std::clamp(dot(a, b), -1.0, 1.0));
    const double expected = 2.0 - 2.0 * lambda * (std::cos(theta / 2.0) + std::sin(theta / 2.0));
    EXPECT_NEAR(pair_coexistent(lambda, a, b).margin, expected, 1e-12);
  }
}

TEST(JointObservable, MarginalsNormalizationPositivity) {
  Sampler rng(34);
  int built = 0;
  for (int i = 0; i < 500; ++i) {
    const auto a = rng.direction();
    const auto b = rng.direction();
    const double lambda = rng.uniform();
    if (!pair_coexistent(lambda, a, b).coexistent) {
      EXPECT_THROW(joint_observable_pair(lambda, a, b), PreconditionError);
      continue;
    }
    ++built;
    const auto j = joint_observable_pair(lambda, a, b);
    EXPECT_EQ(j.outcomes.size(), 4u);
    EXPECT_LE(max_abs_diff(j.total(), Hermitian<2>::identity()), 1e-12);
    for (int s : {1, -1}) {
      EXPECT_LE(oracle::max_abs(pair_marginal(j, 0, s).matrix(), oracle::effect(s == 1 ? a : -a, lambda)), 1e-12);
      EXPECT_LE(oracle::max_abs(pair_marginal(j, 1, s).matrix(), oracle::effect(s == 1 ? b : -b, lambda)), 1e-12);
    }
    for (const auto& o : j.outcomes) EXPECT_GE(min_eigenvalue(o.effect.op()), -1e-12);
  }
  EXPECT_GT(built, 50);
}

TEST(JointObservable, SmallestEigenvalueIsEighthOfMargin) {
  Sampler rng(35);
  for (int i = 0; i < 300; ++i) {
    const auto a = rng.direction();
    const auto b = rng.direction();
    const double lambda = rng.uniform();
    double lo = INFINITY;
    for (const auto& c : pair_joint_candidates(lambda, a, b)) lo = std::min(lo, min_eigenvalue(c.op));
    EXPECT_NEAR(lo, pair_coexistent(lambda, a, b).margin / 8.0, 1e-12);
  }
}

TEST(JointObservable, OrthogonalAxesGiveProductFormCoefficient) {
  const UnitVector3 x(1, 0, 0), y(0, 1, 0);
  const double lambda = 0.6;
  const auto j = joint_observable_pair(lambda, x, y);
  // (I + lambda (k x + l y).sigma) / 4
  for (const auto& o : j.outcomes) {
    const auto expected = 0.25 * (Hermitian<2>::identity() +
                                  lambda * pauli_dot(Vec3{double(o.signs[0]), double(o.signs[1]), 0.0}));
    EXPECT_LE(max_abs_diff(o.effect.op(), expected), 1e-15);
  }
}

TEST(QuadrupleJoint, MarginalsAndErrors) {
  const double lambda = 0.7;
  Sampler rng(36);
  const auto a = rng.direction(), a2 = rng.direction(), b = rng.direction(), b2 = rng.direction();
  const auto j = quadruple_joint(lambda, a, a2, b, b2);
  EXPECT_EQ(j.outcomes.size(), 16u);
  EXPECT_LE(max_abs_diff(j.total(), Hermitian<4>::identity()), 1e-12);
  for (int s : {1, -1})
    for (int t : {1, -1}) {
      Hermitian<4> m;
      for (const auto& o : j.outcomes)
        if (o.signs[0] == s && o.signs[2] == t) m = m + o.effect.op();
      const auto expected = oracle::kron(oracle::effect(s == 1 ? a : -a, lambda), oracle::effect(t == 1 ? b : -b, lambda));
      EXPECT_LE(oracle::max_abs(m.matrix(), expected), 1e-12);
    }

  const UnitVector3 x(1, 0, 0), y(0, 1, 0);
  try {
    quadruple_joint(0.9, x, x, x, y);
    FAIL() << "expected a precondition error";
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("(n3,n4)"), std::string::npos);
    EXPECT_EQ(std::string(e.what()).find("(n1,n2)"), std::string::npos);
  }
}

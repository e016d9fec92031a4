#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "unsharp_bell/instruments.hpp"
#include "unsharp_bell/random.hpp"

using namespace ubell;

TEST(Instrument, EffectsMustSumToIdentity) {
  const auto half = Effect<2>::from(0.5 * Hermitian<2>::identity());
  EXPECT_NO_THROW(Instrument<2>::from({half, half}));
  EXPECT_THROW(Instrument<2>::from({half}), InvariantError);
  EXPECT_THROW(Instrument<2>::from({}), PreconditionError);
}

TEST(Lueders, ProbabilityReproduction) {
  Sampler rng(61);
  for (int i = 0; i < 1000; ++i) {
    const auto rho = rng.density<4>();
    const auto e = rng.effect<4>();
    const auto rec = lueders_selective(rho, e);
    EXPECT_NEAR(rec.subnormalized_post.trace(), trace_product(rho.op(), e.op()), 1e-12);
    EXPECT_NEAR(rec.probability, trace_product(rho.op(), e.op()), 1e-15);
  }
}

TEST(Lueders, SelectiveMatchesExplicitConjugation) {
  Sampler rng(62);
  const auto rho = rng.density<2>();
  const UnitVector3 n(0.3, -0.4, 0.8);
  const double lambda = 0.6;
  const auto rec = lueders_selective(rho, unsharp_effect(n, lambda));
  // E^(1/2) has eigenvalues sqrt((1 +- lambda)/2) on the +-n eigenprojections.
  const auto p = oracle::effect(n, 1.0);
  const auto q = oracle::effect(-n, 1.0);
  const auto root = std::sqrt(0.5 * (1.0 + lambda)) * p + std::sqrt(0.5 * (1.0 - lambda)) * q;
  const auto expected = oracle::multiply(oracle::multiply(root, rho.op().matrix()), root);
  EXPECT_LE(oracle::max_abs(rec.subnormalized_post.matrix(), expected), 1e-14);
}

TEST(Lueders, SharpMeasurementIsIdealOnEigenstates) {
  Sampler rng(63);
  for (int i = 0; i < 100; ++i) {
    const auto n = rng.direction();
    const auto rho = DensityOperator<2>::from(spin_projection(n));
    const auto rec = lueders_selective(rho, unsharp_effect(n, 1.0));
    ASSERT_FALSE(rec.null_outcome());
    EXPECT_LE(trace_norm(rec.post_state->op() - rho.op()), 1e-10);
  }
}

TEST(Lueders, NullOutcomeIsFlagged) {
  const UnitVector3 z(0, 0, 1);
  const auto rho = DensityOperator<2>::from(spin_projection(z));
  const auto rec = lueders_selective(rho, unsharp_effect(-z, 1.0), 1);
  EXPECT_TRUE(rec.null_outcome());
  EXPECT_NEAR(rec.probability, 0.0, 1e-15);
  EXPECT_EQ(rec.outcome_index, 1);
}

TEST(Lueders, NonselectiveIsTracePreserving) {
  Sampler rng(64);
  for (int i = 0; i < 200; ++i) {
    const auto rho = rng.density<2>();
    const auto out = lueders_nonselective(rho, spin_instrument(UnsharpSpinObservable(rng.direction(), rng.uniform())));
    EXPECT_NEAR(out.op().trace(), 1.0, 1e-12);
    EXPECT_GE(min_eigenvalue(out.op()), -1e-12);
  }
}

TEST(Lueders, NoSignallingAcrossFactors) {
  Sampler rng(65);
  for (int i = 0; i < 500; ++i) {
    const auto rho = rng.density<4>();
    const UnsharpSpinObservable obs(rng.direction(), rng.uniform());
    const auto on_first = lueders_nonselective(rho, spin_instrument(obs, Subsystem::First));
    EXPECT_LE(trace_norm(partial_trace(rho.op(), Subsystem::Second) - partial_trace(on_first.op(), Subsystem::Second)), 1e-12);
    const auto on_second = lueders_nonselective(rho, spin_instrument(obs, Subsystem::Second));
    EXPECT_LE(trace_norm(partial_trace(rho.op(), Subsystem::First) - partial_trace(on_second.op(), Subsystem::First)), 1e-12);
  }
}

TEST(Disturbance, BoundAndMonotonicity) {
  Sampler rng(66);
  int tested = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto rho = rng.density<2>();
    auto e = rng.effect<2>();
    if (trace_product(rho.op(), e.op()) < 0.5) e = e.complement();
    if (trace_product(rho.op(), e.op()) <= 0.5) continue;
    const auto r = disturbance_report(rho, e);
    ++tested;
    EXPECT_TRUE(r.bound_holds) << r.trace_distance << " > " << r.bound;
    EXPECT_TRUE(r.monotone);
    EXPECT_NEAR(r.bound, 2.0 * (r.epsilon + std::sqrt(r.epsilon)), 1e-15);
  }
  EXPECT_GT(tested, 1900);
}

TEST(Disturbance, LooserEpsilonStillHolds) {
  const UnitVector3 z(0, 0, 1);
  const auto rho = DensityOperator<2>::from(spin_projection(z));
  const auto e = unsharp_effect(z, 0.9);
  const auto r = disturbance_report(rho, e, 0.3);
  EXPECT_EQ(r.epsilon, 0.3);
  EXPECT_TRUE(r.bound_holds);
}

TEST(Disturbance, PreconditionErrors) {
  const UnitVector3 z(0, 0, 1);
  const auto rho = DensityOperator<2>::maximally_mixed();
  const auto e = unsharp_effect(z, 0.5);
  EXPECT_THROW(disturbance_report(rho, e), PreconditionError);       // eps = 1/2
  EXPECT_THROW(disturbance_report(rho, e, 0.6), PreconditionError);  // eps out of range
  const auto pure = DensityOperator<2>::from(spin_projection(z));
  EXPECT_THROW(disturbance_report(pure, e, 0.1), PreconditionError);  // tr[rho E] = 0.75 < 0.9
}

TEST(Epr, ReducedStatesAndProbabilityIncrease) {
  Sampler rng(67);
  for (double lambda : {0.0, 0.5, 0.8, 1.0}) {
    const auto n = rng.direction();
    for (int s : {1, -1}) {
      const auto r = epr_measurement(lambda, n, s);
      EXPECT_LE(max_abs_diff(r.reduced_pre, 0.5 * Hermitian<2>::identity()), 1e-12);
      EXPECT_LE(max_abs_diff(r.reduced_post, 0.5 * Hermitian<2>::identity()), 1e-12);
      EXPECT_LE(oracle::max_abs(r.reduced_post_components[0].matrix(), 0.5 * oracle::effect(-n, lambda)), 1e-12);
      EXPECT_LE(oracle::max_abs(r.reduced_post_components[1].matrix(), 0.5 * oracle::effect(n, lambda)), 1e-12);
      EXPECT_NEAR(r.outcome_prob_before, 0.5, 1e-12);
      EXPECT_NEAR(r.outcome_prob_after, 0.5 * (1.0 + lambda * lambda), 1e-12);
      EXPECT_NEAR(r.joint_post_mixture.op().trace(), 1.0, 1e-12);
    }
  }
  EXPECT_NEAR(epr_measurement(0.8, UnitVector3(0, 0, 1), 1).outcome_prob_after, 0.82, 1e-12);
  EXPECT_NEAR(epr_measurement(1.0, UnitVector3(1, 0, 0), -1).outcome_prob_after, 1.0, 1e-12);
  EXPECT_THROW(epr_measurement(0.5, UnitVector3(1, 0, 0), 0), PreconditionError);
}

#include <gtest/gtest.h>

#include <cmath>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "unsharp_bell/instruments.hpp"
#include "unsharp_bell/random.hpp"
#include "unsharp_bell/relativistic.hpp"

using namespace ubell;

namespace {

double interval(const SpacetimeEvent& p, const SpacetimeEvent& q) {
  const double dt = q.t - p.t, dx = q.x - p.x, dy = q.y - p.y, dz = q.z - p.z;
  return dt * dt - dx * dx - dy * dy - dz * dz;
}

const SpacetimeEvent kLeft{0.0, -1.0, 0.0, 0.0};
const SpacetimeEvent kRight{0.0, 1.0, 0.0, 0.0};

MeasurementProgramme singlet_programme(double lambda, std::optional<std::vector<int>> outcomes = std::vector<int>{1, -1}) {
  MeasurementProgramme p;
  p.initial_state = singlet_state();
  p.measurements.push_back({kLeft, UnsharpSpinObservable(UnitVector3(0, 0, 1), lambda), Subsystem::First});
  p.measurements.push_back({kRight, UnsharpSpinObservable(UnitVector3(1, 0, 1), lambda), Subsystem::Second});
  p.outcomes = std::move(outcomes);
  return p;
}

std::size_t regions_containing(const Cover& c, const SpacetimeEvent& q) {
  std::size_t n = 0;
  for (const auto& r : c.regions) n += r.contains(q) ? 1 : 0;
  return n;
}

}  // namespace

TEST(CausalRelation, Classification) {
  const SpacetimeEvent o{};
  EXPECT_EQ(causal_relation(o, {0, 1, 0, 0}), CausalRelation::Spacelike);
  EXPECT_EQ(causal_relation(o, {1, 1, 0, 0}), CausalRelation::LightlikeFuture);
  EXPECT_EQ(causal_relation(o, {-1, 0, 1, 0}), CausalRelation::LightlikePast);
  EXPECT_EQ(causal_relation(o, {2, 1, 0, 0}), CausalRelation::TimelikeFuture);
  EXPECT_EQ(causal_relation(o, {-2, 0, 0, 1}), CausalRelation::TimelikePast);
  EXPECT_EQ(causal_relation(o, o), CausalRelation::Coincident);
  EXPECT_THROW(causal_relation(o, {NAN, 0, 0, 0}), PreconditionError);
}

TEST(CausalRelation, ClosedConesIncludeLightlikeBoundary) {
  const SpacetimeEvent o{};
  EXPECT_TRUE(in_backward_cone(o, {-1, 1, 0, 0}));
  EXPECT_TRUE(in_backward_cone(o, o));
  EXPECT_FALSE(in_backward_cone(o, {1, 0, 0, 0}));
  EXPECT_TRUE(in_forward_cone(o, {3, 0, 3, 0}));
  EXPECT_FALSE(in_forward_cone(o, {0, 1, 0, 0}));
}

TEST(Cover, SingleEvent) {
  const std::vector<SpacetimeEvent> ev = {{0, 0, 0, 0}};
  const auto m = influence_cover(ev);
  ASSERT_EQ(m.regions.size(), 2u);
  EXPECT_EQ(m.region_of({-1, 0, 0, 0}), 0u);
  EXPECT_EQ(m.region_of({1, 0, 0, 0}), 1u);
  EXPECT_EQ(m.region_of({0, 3, 0, 0}), 1u);
  const auto n = information_cover(ev);
  EXPECT_EQ(n.region_of({2, 0, 0, 0}), 1u);
  EXPECT_EQ(n.region_of({-2, 0, 0, 0}), 0u);
}

TEST(Cover, TwoSpacelikeEventsPartitionSpacetime) {
  const std::vector<SpacetimeEvent> ev = {kLeft, kRight};
  const auto m = influence_cover(ev);
  const auto n = information_cover(ev);
  EXPECT_EQ(m.masks, (std::vector<unsigned>{0, 2, 1, 3}));
  EXPECT_EQ(n.masks, (std::vector<unsigned>{0, 1, 2, 3}));
  for (bool e : m.empty) EXPECT_FALSE(e);
  for (bool e : n.empty) EXPECT_FALSE(e);
  EXPECT_EQ(m.masks[m.region_of({-5, 0, 0, 0})], 0u);
  EXPECT_EQ(m.masks[m.region_of({-1, 1.5, 0, 0})], 1u);
  EXPECT_EQ(m.masks[m.region_of({-1, -1.5, 0, 0})], 2u);
  EXPECT_EQ(m.masks[m.region_of({5, 0, 0, 0})], 3u);
  EXPECT_EQ(n.masks[n.region_of({1.5, -1.5, 0, 0})], 1u);
  EXPECT_EQ(n.masks[n.region_of({1.5, 1.5, 0, 0})], 2u);

  Sampler rng(71);
  std::array<int, 4> hits{};
  for (int i = 0; i < 20000; ++i) {
    const auto q = rng.event(4.0);
    ASSERT_EQ(regions_containing(m, q), 1u);
    ASSERT_EQ(regions_containing(n, q), 1u);
    EXPECT_TRUE(m.regions[m.region_of(q)].contains(q));
    EXPECT_TRUE(n.regions[n.region_of(q)].contains(q));
    ++hits[m.region_of(q)];
  }
  for (int h : hits) EXPECT_GT(h, 0);
}

TEST(Cover, TimelikeEventsFlagEmptyRegion) {
  const std::vector<SpacetimeEvent> ev = {{0, 0, 0, 0}, {2, 0, 0, 0}};
  const auto m = influence_cover(ev);
  const auto n = information_cover(ev);
  const std::size_t m_empty = m.region_with_mask(2);
  const std::size_t n_empty = n.region_with_mask(2);
  EXPECT_TRUE(m.empty[m_empty]);
  EXPECT_TRUE(n.empty[n_empty]);
  EXPECT_FALSE(m.empty[m.region_with_mask(1)]);
  Sampler rng(72);
  for (int i = 0; i < 20000; ++i) {
    const auto q = rng.event(4.0);
    EXPECT_FALSE(m.regions[m_empty].contains(q));
    EXPECT_FALSE(n.regions[n_empty].contains(q));
    ASSERT_EQ(regions_containing(m, q), 1u);
  }
}

TEST(Cover, RejectsBadEventCounts) {
  EXPECT_THROW(influence_cover({}), PreconditionError);
  EXPECT_THROW(information_cover({{0, 0, 0, 0}, {0, 1, 0, 0}, {0, 2, 0, 0}}), PreconditionError);
}

TEST(Lorentz, BoostsAndRotationsPreserveInterval) {
  Sampler rng(73);
  for (int i = 0; i < 500; ++i) {
    const auto p = rng.event(5.0);
    const auto q = rng.event(5.0);
    const auto l = LorentzTransform::boost(rng.velocity(0.95)) * LorentzTransform::rotation(rng.direction(), rng.uniform(0.0, 6.0));
    const double before = interval(p, q);
    const double after = interval(l.apply(p), l.apply(q));
    EXPECT_NEAR(before, after, 1e-9 * (1.0 + std::abs(before)));
    if (std::abs(before) > 1e-6) {
      EXPECT_EQ(causal_relation(p, q), causal_relation(l.apply(p), l.apply(q)));
    }
  }
  EXPECT_THROW(LorentzTransform::boost({1.0, 0.0, 0.0}), PreconditionError);
  EXPECT_THROW(LorentzTransform::boost({0.8, 0.7, 0.0}), PreconditionError);
  const SpacetimeEvent e{1, 2, 3, 4};
  EXPECT_EQ(LorentzTransform::identity().apply(e), e);
}

TEST(Lorentz, BoostMatchesStandardFormula) {
  const double v = 0.6, gamma = 1.25;
  const auto e = LorentzTransform::boost({v, 0.0, 0.0}).apply({2.0, 1.0, 3.0, -1.0});
  EXPECT_NEAR(e.t, gamma * (2.0 - v * 1.0), 1e-14);
  EXPECT_NEAR(e.x, gamma * (1.0 - v * 2.0), 1e-14);
  EXPECT_NEAR(e.y, 3.0, 1e-14);
  EXPECT_NEAR(e.z, -1.0, 1e-14);
}

TEST(Chart, UninformedObserverSeesNonselectiveTransforms) {
  const auto prog = singlet_programme(0.8);
  const auto chart = observer_chart({-5, 0, 0, 0}, prog);
  ASSERT_EQ(chart.entries.size(), 4u);
  EXPECT_EQ(chart.information_mask, 0u);
  const auto& rho = prog.initial_state;
  const auto ia = spin_instrument(prog.measurements[0].observable, Subsystem::First);
  const auto ib = spin_instrument(prog.measurements[1].observable, Subsystem::Second);
  for (const auto& e : chart.entries) {
    EXPECT_EQ(e.selective_mask, 0u);
    Hermitian<4> expected = rho.op();
    if (e.influence_mask & 1u) expected = lueders_map(expected, ia);
    if (e.influence_mask & 2u) expected = lueders_map(expected, ib);
    EXPECT_LE(max_abs_diff(e.state, expected), 1e-14);
    EXPECT_NEAR(e.state.trace(), 1.0, 1e-12);
  }
  EXPECT_LE(max_abs_diff(chart.entries[0].state, rho.op()), 0.0);
  EXPECT_EQ(chart.entries[0].definite_values, (std::vector<std::string>{"a indefinite", "b indefinite"}));
  EXPECT_EQ(chart.entries[3].definite_values,
            (std::vector<std::string>{"a objectified, outcome unknown", "b objectified, outcome unknown"}));
}

TEST(Chart, FullyInformedObserverSeesSelectiveTransforms) {
  const double lambda = 0.8;
  const auto prog = singlet_programme(lambda);
  const auto chart = observer_chart({5, 0, 0, 0}, prog);
  EXPECT_EQ(chart.information_mask, 3u);
  for (const auto& e : chart.entries) EXPECT_EQ(e.selective_mask, e.influence_mask);
  const auto& both = chart.entries[chart.cover.region_with_mask(3)];
  const auto a = prog.measurements[0].observable.axis();
  const auto b = prog.measurements[1].observable.axis();
  EXPECT_NEAR(both.state.trace(), singlet_pair_prob(lambda, a, -b), 1e-12);
  const auto& only_a = chart.entries[chart.cover.region_with_mask(1)];
  EXPECT_NEAR(only_a.state.trace(), 0.5, 1e-12);
  EXPECT_LE(chart.order_deviation, 1e-14);
}

TEST(Chart, SharpSelectiveValuesAreDefinite) {
  auto prog = singlet_programme(1.0);
  prog.measurements.pop_back();
  prog.outcomes = std::vector<int>{1};
  const auto chart = observer_chart({5, -1, 0, 0}, prog);
  ASSERT_EQ(chart.entries.size(), 2u);
  EXPECT_EQ(chart.entries[1].selective_mask, 1u);
  EXPECT_EQ(chart.entries[1].definite_values, (std::vector<std::string>{"a(S1)=+1", "a(S2)=-1"}));
  EXPECT_EQ(chart.entries[0].definite_values, (std::vector<std::string>{"a indefinite"}));
}

TEST(Chart, ProgrammeValidation) {
  const auto missing = singlet_programme(0.8, std::nullopt);
  EXPECT_NO_THROW(observer_chart({-5, 0, 0, 0}, missing));
  EXPECT_THROW(observer_chart({5, 0, 0, 0}, missing), PreconditionError);
  auto same = singlet_programme(0.8);
  same.measurements[1].subsystem = Subsystem::First;
  EXPECT_THROW(observer_chart({-5, 0, 0, 0}, same), PreconditionError);
  auto bad = singlet_programme(0.8, std::vector<int>{1, 0});
  EXPECT_THROW(observer_chart({-5, 0, 0, 0}, bad), PreconditionError);
  auto short_list = singlet_programme(0.8, std::vector<int>{1});
  EXPECT_THROW(short_list.validate(), PreconditionError);
}

TEST(Chart, TrivialObservableLeavesStateUnchanged) {
  Sampler rng(74);
  auto prog = singlet_programme(0.0);
  prog.initial_state = rng.density<4>();
  const auto chart = observer_chart({-5, 0, 0, 0}, prog);
  for (const auto& e : chart.entries) EXPECT_LE(max_abs_diff(e.state, prog.initial_state.op()), 1e-14);
}

TEST(Chart, SelectivityGrowsAlongWorldlines) {
  const auto prog = singlet_programme(0.8);
  Sampler rng(75);
  for (int w = 0; w < 20; ++w) {
    const Worldline line{rng.event(2.0), rng.velocity(0.3)};
    auto prev = observer_chart(line.at(-10.0), prog);
    for (int k = -39; k <= 40; ++k) {
      const auto next = observer_chart(line.at(0.25 * k), prog);
      EXPECT_TRUE(chart_refines(prev, next));
      prev = next;
    }
    EXPECT_EQ(prev.information_mask, 3u);
  }
}

TEST(Consistency, SpacelikeProgrammesPass) {
  Sampler rng(76);
  for (int i = 0; i < 20; ++i) {
    auto prog = singlet_programme(rng.uniform());
    prog.initial_state = rng.density<4>();
    prog.measurements[0].observable = UnsharpSpinObservable(rng.direction(), rng.uniform());
    const auto rep = check_consistency(prog);
    EXPECT_EQ(rep.checks.size(), 4u);
    EXPECT_TRUE(rep.all_passed());
  }
  auto timelike = singlet_programme(0.8);
  timelike.measurements[1].event = {5, 1, 0, 0};
  EXPECT_THROW(check_consistency(timelike), PreconditionError);
}

TEST(Chart, ConcurrentEvaluationMatchesSequential) {
  const auto prog = singlet_programme(0.9);
  Sampler rng(77);
  std::vector<SpacetimeEvent> observers;
  for (int i = 0; i < 64; ++i) observers.push_back(rng.event(4.0));
  std::vector<MChart> sequential;
  for (const auto& u : observers) sequential.push_back(observer_chart(u, prog));
  std::vector<MChart> parallel(observers.size());
  {
    std::vector<std::jthread> workers;
    for (std::size_t t = 0; t < 4; ++t)
      workers.emplace_back([&, t] {
        for (std::size_t i = t; i < observers.size(); i += 4) parallel[i] = observer_chart(observers[i], prog);
      });
  }
  for (std::size_t i = 0; i < observers.size(); ++i) {
    EXPECT_EQ(parallel[i].information_mask, sequential[i].information_mask);
    EXPECT_EQ(chart_distance(parallel[i], sequential[i]), 0.0);
  }
}

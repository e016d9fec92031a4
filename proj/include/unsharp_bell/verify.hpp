#pragma once

// The invariant suite behind `verify-all`: one randomized or exhaustive
// check per criterion, each reporting its largest observed deviation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "unsharp_bell/bell.hpp"
#include "unsharp_bell/fine.hpp"
#include "unsharp_bell/instruments.hpp"
#include "unsharp_bell/operators.hpp"
#include "unsharp_bell/random.hpp"
#include "unsharp_bell/relativistic.hpp"
#include "unsharp_bell/spin_povm.hpp"

namespace ubell::verify {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  double max_deviation = 0.0;
  std::string detail;
};

inline std::string show(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

struct Options {
  std::uint64_t seed = kDefaultSeed;
  int scan_grid = 10000;
  int bell_samples = 100000;
  int fine_tables = 1000;
  int lueders_samples = 10000;
  int programmes = 100;
  int partition_points = 100000;
  int boosts = 100;
};

inline CriterionResult coexistence_threshold(const Options& opt) {
  (void)opt;
  CriterionResult r{1, "coexistence threshold", false, 0.0, {}};
  const UnitVector3 x(1, 0, 0), y(0, 1, 0);
  const double at = pair_coexistent(Thresholds::lambda2, x, y).margin;
  const double below = pair_coexistent(Thresholds::lambda2 - 1e-6, x, y).margin;
  double worst_eig = 0.0;
  std::size_t coexistent_points = 0;
  for (int i = 1; i <= 200; ++i)
    for (int k = 0; k < 200; ++k) {
      const double lambda = i / 200.0;
      const double angle = k * std::numbers::pi / 199.0;
      const UnitVector3 n2(std::cos(angle), std::sin(angle), 0.0);
      if (!pair_coexistent(lambda, x, n2).coexistent) continue;
      ++coexistent_points;
      for (const auto& c : pair_joint_candidates(lambda, x, n2)) worst_eig = std::min(worst_eig, min_eigenvalue(c.op));
    }
  r.max_deviation = std::max(std::abs(at), -worst_eig);
  r.passed = std::abs(at) <= 1e-12 && below > 0.0 && worst_eig >= -1e-10;
  r.detail = "margin(1/sqrt2)=" + show(at) + ", coexistent grid points=" + std::to_string(coexistent_points);
  return r;
}

inline CriterionResult chsh_threshold(const Options& opt) {
  CriterionResult r{2, "CHSH threshold", false, 0.0, {}};
  const auto scan = scan_lambda_threshold(opt.scan_grid);
  const double step = 1.0 / opt.scan_grid;
  r.max_deviation = std::abs(scan.lambda_star - Thresholds::lambda_chsh);
  const double split = std::abs(scan.lambda_star_singlet - scan.lambda_star_operator);
  // The threshold can only be located to within one grid step.
  r.passed = r.max_deviation <= std::max(2e-4, step) && split <= step + 1e-15;
  r.detail = "lambda*=" + show(scan.lambda_star) + " (singlet " + show(scan.lambda_star_singlet) +
             ", operator " + show(scan.lambda_star_operator) + ")";
  return r;
}

inline CriterionResult gap_region(const Options& opt) {
  (void)opt;
  CriterionResult r{3, "gap region", false, 0.0, {}};
  const auto cfg = cirelson_configuration(0.78);
  const auto coex1 = pair_coexistent(cfg.lambda, cfg.n1, cfg.n2);
  const auto coex2 = pair_coexistent(cfg.lambda, cfg.n3, cfg.n4);
  const auto op = operator_chsh_holds(cfg);
  r.passed = !coex1.coexistent && !coex2.coexistent && op.holds;
  r.max_deviation = std::max({0.0, -op.min_eig, op.max_eig - 1.0});
  r.detail = "margin=" + show(coex1.margin) + ", B~ spectrum [" + show(op.min_eig) + ", " +
             show(op.max_eig) + "]";
  return r;
}

inline CriterionResult cirelson_bound(const Options& opt) {
  CriterionResult r{4, "Cirel'son bound", false, 0.0, {}};
  Sampler rng(opt.seed + 4);
  double max_norm = 0.0, closed_gap = 0.0;
  for (int i = 0; i < opt.bell_samples; ++i) {
    const auto cfg = rng.configuration(1.0);
    const double norm = spectral_norm(bell_operator(cfg));
    max_norm = std::max(max_norm, norm);
    closed_gap = std::max(closed_gap, std::abs(norm - bell_norm_closed_form(cfg)));
  }
  const double at_optimum = spectral_norm(bell_operator(cirelson_configuration(1.0)));
  const double attained = std::abs(at_optimum - Thresholds::cirelson);
  r.max_deviation = std::max({closed_gap, attained, max_norm - Thresholds::cirelson});
  r.passed = max_norm <= Thresholds::cirelson + 1e-9 && attained <= 1e-9 && closed_gap <= 1e-9;
  r.detail = "max ||B||=" + show(max_norm) + " over " + std::to_string(opt.bell_samples) + " configurations";
  return r;
}

// Half of the tables are marginals of random quadruple distributions, half
// come from spin measurements: random pure states at random settings, or the
// singlet at coplanar settings with sharpness biased towards 1.
inline ProbabilityTable fine_sample_table(Sampler& rng, int index) {
  if (index % 2 == 0) return marginals(rng.jpd());
  if (index % 4 == 1) return table_from_quantum(rng.pure_state<4>(), rng.configuration(rng.uniform()));
  const double lambda = std::sqrt(rng.uniform());
  return table_from_quantum(singlet_state(), coplanar_configuration(lambda, rng.uniform(0.0, std::numbers::pi / 2.0)));
}

inline CriterionResult fine_equivalence(const Options& opt) {
  CriterionResult r{5, "Fine equivalence", false, 0.0, {}};
  Sampler rng(opt.seed + 5);
  int disagreements = 0, feasible = 0;
  double residual = 0.0;
  for (int i = 0; i < opt.fine_tables; ++i) {
    const auto t = fine_sample_table(rng, i);
    const bool chsh = chsh_check(t).all_hold;
    const auto rec = reconstruct_jpd(t);
    const auto oracle = feasibility_oracle(t);
    if (chsh != rec.feasible() || chsh != oracle.feasible()) ++disagreements;
    if (rec.feasible()) {
      ++feasible;
      residual = std::max(residual, marginal_residual(rec.jpd(), t));
      residual = std::max(residual, -rec.jpd().min());
    }
  }
  r.max_deviation = residual;
  r.passed = disagreements == 0 && residual <= kRoundTripTol;
  r.detail = std::to_string(disagreements) + " disagreements, " + std::to_string(feasible) + " feasible / " +
             std::to_string(opt.fine_tables - feasible) + " infeasible";
  return r;
}

inline CriterionResult singlet_formula(const Options& opt) {
  CriterionResult r{6, "singlet formula", false, 0.0, {}};
  Sampler rng(opt.seed + 6);
  const auto psi = singlet_state();
  double dev = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double lambda = rng.uniform();
    const auto ni = rng.direction();
    const auto nj = rng.direction();
    const double direct = trace_product(psi.op(), tensor(unsharp_effect(ni, lambda), unsharp_effect(nj, lambda)).op());
    dev = std::max(dev, std::abs(direct - singlet_pair_prob(lambda, ni, nj)));
  }
  const double fmax = std::abs(correlation_sum(cirelson_configuration(1.0)) - Thresholds::cirelson);
  const double eps = std::abs(Thresholds::epsilon_chsh - 0.5 * (1.0 - 1.0 / std::sqrt(2.0)));
  const double eps_from_lambda = std::abs(unsharpness_epsilon(Thresholds::lambda_chsh) - Thresholds::epsilon_chsh);
  r.max_deviation = std::max({dev, fmax, eps, eps_from_lambda});
  r.passed = dev <= 1e-12 && fmax <= 1e-12 && eps <= 1e-12 && eps_from_lambda <= 1e-12;
  r.detail = "max |p_ij closed - trace|=" + show(dev);
  return r;
}

// Random (rho, E) with tr[rho E] > 1/2, E replaced by I - E when needed.
// A quarter of the draws use a nearly pure eigenstate of E to probe small
// epsilon; another quarter sit just above tr[rho E] = 1/2.
template <std::size_t N>
inline void lueders_case(Sampler& rng, int index, double& worst_bound, double& worst_monotone, int& violations) {
  auto rho = rng.density<N>();
  auto e = rng.effect<N>();
  if (index % 4 == 1) {
    const auto sys = eigen_hermitian(e.op());
    Matrix<N> p;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) p(i, j) = sys[N - 1].vector[i] * std::conj(sys[N - 1].vector[j]);
    const double w = rng.uniform(0.9, 1.0);
    rho = DensityOperator<N>::assume(w * Hermitian<N>::hermitize(p) + (1.0 - w) * rho.op());
  } else if (index % 4 == 2) {
    const double target = rng.uniform(0.5 + 1e-9, 0.51);
    const double w = target / std::max(trace_product(rho.op(), e.op()), 1e-300);
    if (w < 1.0) e = Effect<N>::assume(w * e.op());
  }
  double p = trace_product(rho.op(), e.op());
  if (p < 0.5) {
    e = e.complement();
    p = 1.0 - p;
  }
  if (!(p > 0.5)) return;
  const auto rep = disturbance_report(rho, e);
  worst_bound = std::max(worst_bound, rep.trace_distance - rep.bound);
  worst_monotone = std::max(worst_monotone, rep.prob - rep.prob_after);
  if (!rep.bound_holds || !rep.monotone) ++violations;
}

inline CriterionResult lueders_disturbance(const Options& opt) {
  CriterionResult r{7, "Lueders disturbance bound", false, 0.0, {}};
  Sampler rng(opt.seed + 7);
  double worst_bound = -INFINITY, worst_monotone = -INFINITY;
  int violations = 0;
  for (int i = 0; i < opt.lueders_samples; ++i) {
    if (i % 2 == 0)
      lueders_case<2>(rng, i / 2, worst_bound, worst_monotone, violations);
    else
      lueders_case<4>(rng, i / 2, worst_bound, worst_monotone, violations);
  }
  r.max_deviation = std::max({0.0, worst_bound, worst_monotone});
  r.passed = violations == 0;
  r.detail = std::to_string(violations) + " violations; max (distance - bound)=" + show(worst_bound);
  return r;
}

inline CriterionResult epr_calculus(const Options& opt) {
  CriterionResult r{8, "EPR calculus", false, 0.0, {}};
  Sampler rng(opt.seed + 8);
  double dev = 0.0;
  for (double lambda : {0.0, 0.5, 0.8, 1.0})
    for (int trial = 0; trial < 5; ++trial) {
      const auto n = rng.direction();
      for (int outcome : {1, -1}) {
        const auto rep = epr_measurement(lambda, n, outcome);
        dev = std::max(dev, max_abs_diff(rep.reduced_post_components[0], 0.5 * unsharp_effect(-n, lambda).op()));
        dev = std::max(dev, max_abs_diff(rep.reduced_post_components[1], 0.5 * unsharp_effect(n, lambda).op()));
        dev = std::max(dev, std::abs(rep.outcome_prob_after - 0.5 * (1.0 + lambda * lambda)));
        dev = std::max(dev, max_abs_diff(rep.reduced_post, 0.5 * Hermitian<2>::identity()));
        dev = std::max(dev, max_abs_diff(rep.reduced_pre, 0.5 * Hermitian<2>::identity()));
      }
    }
  r.max_deviation = dev;
  r.passed = dev <= 1e-12;
  r.detail = "lambda in {0, 0.5, 0.8, 1}";
  return r;
}

inline MeasurementProgramme random_spacelike_programme(Sampler& rng) {
  SpacetimeEvent a, b;
  do {
    a = rng.event();
    b = rng.event();
  } while (causal_relation(a, b) != CausalRelation::Spacelike);
  const double lambda = rng.uniform();
  MeasurementProgramme prog;
  const bool swap = rng.integer(0, 1) == 1;
  prog.measurements.push_back({a, UnsharpSpinObservable(rng.direction(), lambda), swap ? Subsystem::Second : Subsystem::First});
  prog.measurements.push_back({b, UnsharpSpinObservable(rng.direction(), lambda), swap ? Subsystem::First : Subsystem::Second});
  prog.initial_state = rng.integer(0, 1) == 0 ? singlet_state() : rng.density<4>();
  prog.outcomes = std::vector<int>{rng.sign(), rng.sign()};
  return prog;
}

// Number of regions of `c` containing q, by the region predicates.
inline int containing_regions(const Cover& c, const SpacetimeEvent& q) {
  int n = 0;
  for (const auto& region : c.regions)
    if (region.contains(q)) ++n;
  return n;
}

inline CriterionResult relativistic_consistency(const Options& opt) {
  CriterionResult r{9, "relativistic consistency", false, 0.0, {}};
  Sampler rng(opt.seed + 9);
  double dev = 0.0;
  int failed_programmes = 0;
  for (int i = 0; i < opt.programmes; ++i) {
    const auto prog = random_spacelike_programme(rng);
    const auto rep = check_consistency(prog);
    for (const auto& c : rep.checks) dev = std::max(dev, c.max_deviation);
    if (!rep.all_passed()) ++failed_programmes;
  }

  int partition_failures = 0;
  const std::vector<std::vector<SpacetimeEvent>> event_sets = {
      {{0, -1, 0, 0}, {0, 1, 0, 0}}, {{0, 0, 0, 0}, {2, 0.5, 0, 0}}, {{0, 0, 0, 0}, {1, 1, 0, 0}}, {{0, 0, 0, 0}}};
  for (int i = 0; i < opt.partition_points; ++i) {
    const auto& events = event_sets[static_cast<std::size_t>(i) % event_sets.size()];
    const auto q = rng.event(4.0);
    if (containing_regions(influence_cover(events), q) != 1) ++partition_failures;
    if (containing_regions(information_cover(events), q) != 1) ++partition_failures;
  }

  int classification_changes = 0;
  for (int i = 0; i < opt.boosts; ++i) {
    const auto lt = LorentzTransform::rotation(rng.direction(), rng.uniform(0.0, 2.0 * std::numbers::pi)) *
                    LorentzTransform::boost(rng.velocity(0.99));
    for (int k = 0; k < 20; ++k) {
      const auto p = rng.event();
      SpacetimeEvent q = rng.event();
      if (k % 4 == 0) {
        const auto u = rng.direction();
        const double dt = rng.uniform(-3.0, 3.0);
        const double d = std::abs(dt);
        q = {p.t + dt, p.x + d * u.x(), p.y + d * u.y(), p.z + d * u.z()};
      }
      if (causal_relation(p, q) != causal_relation(lt.apply(p), lt.apply(q))) ++classification_changes;
    }
  }

  r.max_deviation = dev;
  r.passed = failed_programmes == 0 && dev <= 1e-12 && partition_failures == 0 && classification_changes == 0;
  r.detail = std::to_string(failed_programmes) + " failing programmes, " + std::to_string(partition_failures) +
             " partition failures, " + std::to_string(classification_changes) + " classification changes";
  return r;
}

inline std::vector<CriterionResult> run_all(const Options& opt) {
  return {coexistence_threshold(opt), chsh_threshold(opt), gap_region(opt), cirelson_bound(opt),
          fine_equivalence(opt),     singlet_formula(opt), lueders_disturbance(opt), epr_calculus(opt),
          relativistic_consistency(opt)};
}

}  // namespace ubell::verify

#pragma once

// Lueders state transformers rho -> E^(1/2) rho E^(1/2) for sharp and unsharp
// observables, the approximate-ideality bound, and the EPR calculus for a
// Lueders measurement on one half of the singlet.

#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "unsharp_bell/bell.hpp"
#include "unsharp_bell/error.hpp"
#include "unsharp_bell/operators.hpp"
#include "unsharp_bell/spin_povm.hpp"

namespace ubell {

inline constexpr double kNullOutcomeProbability = 1e-12;

// A POVM whose outcomes act through Lueders transformations.
template <std::size_t N>
class Instrument {
 public:
  static Instrument from(std::vector<Effect<N>> effects, double tol = kStructuralTol) {
    if (effects.empty()) throw PreconditionError("instrument needs at least one effect");
    Hermitian<N> total;
    for (const auto& e : effects) total = total + e.op();
    const double defect = max_abs_diff(total, Hermitian<N>::identity());
    if (defect > tol) {
      std::ostringstream os;
      os << "instrument effects do not sum to the identity (defect " << defect << ")";
      throw InvariantError(os.str());
    }
    return Instrument(std::move(effects));
  }

  const std::vector<Effect<N>>& effects() const { return effects_; }

 private:
  explicit Instrument(std::vector<Effect<N>> effects) : effects_(std::move(effects)) {}
  std::vector<Effect<N>> effects_;
};

inline Instrument<2> spin_instrument(const UnsharpSpinObservable& obs) {
  return Instrument<2>::from({obs.effect(1), obs.effect(-1)});
}

// The same spin observable acting on one factor of a qubit pair.
inline Instrument<4> spin_instrument(const UnsharpSpinObservable& obs, Subsystem on) {
  const auto id = Effect<2>::identity();
  std::vector<Effect<4>> effects;
  for (int s : {1, -1}) effects.push_back(on == Subsystem::First ? tensor(obs.effect(s), id) : tensor(id, obs.effect(s)));
  return Instrument<4>::from(std::move(effects));
}

template <std::size_t N>
struct MeasurementOutcomeRecord {
  int outcome_index = 0;
  double probability = 0.0;
  // Normalized conditional state; empty for a null outcome.
  std::optional<DensityOperator<N>> post_state;
  Hermitian<N> subnormalized_post;
  bool null_outcome() const { return !post_state.has_value(); }
};

template <std::size_t N>
MeasurementOutcomeRecord<N> lueders_selective(const DensityOperator<N>& rho, const Effect<N>& effect,
                                              int outcome_index = 0) {
  MeasurementOutcomeRecord<N> rec;
  rec.outcome_index = outcome_index;
  rec.subnormalized_post = sandwich(sqrt_psd(effect), rho.op());
  rec.probability = trace_product(rho.op(), effect.op());
  if (rec.probability > kNullOutcomeProbability) {
    const auto normalized = (1.0 / rec.subnormalized_post.trace()) * rec.subnormalized_post;
    rec.post_state = DensityOperator<N>::assume(normalized);
  }
  return rec;
}

// sum_i E_i^(1/2) rho E_i^(1/2) on an arbitrary positive operator.
template <std::size_t N>
Hermitian<N> lueders_map(const Hermitian<N>& rho, const Instrument<N>& instrument) {
  Hermitian<N> out;
  for (const auto& e : instrument.effects()) out = out + sandwich(sqrt_psd(e), rho);
  return out;
}

template <std::size_t N>
DensityOperator<N> lueders_nonselective(const DensityOperator<N>& rho, const Instrument<N>& instrument) {
  return DensityOperator<N>::assume(lueders_map(rho.op(), instrument));
}

// ---------------------------------------------------------------------------
// Approximate ideality.

struct DisturbanceReport {
  double prob = 0.0;            // tr[rho E]
  double trace_distance = 0.0;  // || rho - E^(1/2) rho E^(1/2) / tr[rho E] ||_1
  double bound = 0.0;           // 2 (eps + sqrt eps)
  bool bound_holds = false;
  double prob_after = 0.0;      // tr[post E]
  bool monotone = false;
  double epsilon = 0.0;
};

// If tr[rho E] >= 1 - eps with eps in [0, 1/2), the normalized Lueders
// post-state stays within 2 (eps + sqrt eps) of rho in trace norm and the
// probability of E does not decrease. eps defaults to 1 - tr[rho E].
template <std::size_t N>
DisturbanceReport disturbance_report(const DensityOperator<N>& rho, const Effect<N>& effect,
                                     std::optional<double> epsilon = std::nullopt) {
  DisturbanceReport r;
  r.prob = trace_product(rho.op(), effect.op());
  r.epsilon = epsilon.value_or(std::max(0.0, 1.0 - r.prob));
  if (!(r.epsilon >= 0.0 && r.epsilon < 0.5)) {
    std::ostringstream os;
    os << "disturbance_report: epsilon must lie in [0, 1/2), got " << r.epsilon;
    throw PreconditionError(os.str());
  }
  if (r.prob < 1.0 - r.epsilon) {
    std::ostringstream os;
    os << "disturbance_report: hypothesis not met, tr[rho E] = " << r.prob << " < 1 - eps = " << 1.0 - r.epsilon;
    throw PreconditionError(os.str());
  }
  const auto post = lueders_selective(rho, effect);
  const auto& sigma = post.post_state->op();
  r.trace_distance = trace_norm(rho.op() - sigma);
  r.bound = 2.0 * (r.epsilon + std::sqrt(r.epsilon));
  r.bound_holds = r.trace_distance <= r.bound + 1e-10;
  r.prob_after = trace_product(sigma, effect.op());
  r.monotone = r.prob_after >= r.prob - 1e-10;
  return r;
}

// ---------------------------------------------------------------------------
// EPR: Lueders measurement of E(+-n, lambda) on the first half of the singlet.

struct EprReport {
  // sum over both outcomes of (E^(1/2) (x) I) P[Psi] (E^(1/2) (x) I)
  DensityOperator<4> joint_post_mixture = DensityOperator<4>::maximally_mixed();
  // Components for outcome +1 and -1 (subnormalized).
  std::array<Hermitian<4>, 2> component_posts{};
  Hermitian<2> reduced_pre;
  Hermitian<2> reduced_post;
  // Second-system reductions of the +1 and -1 components; equal to
  // E(-n)/2 and E(n)/2.
  std::array<Hermitian<2>, 2> reduced_post_components{};
  // Probability of the anticorrelated effect E(-s n, lambda) in the
  // normalized conditional second-system state for the chosen outcome s.
  double outcome_prob_after = 0.0;
  // Same effect before the measurement (reduced state I/2).
  double outcome_prob_before = 0.0;
  int outcome = 1;
};

inline EprReport epr_measurement(double lambda, const UnitVector3& n, int outcome) {
  require_sharpness(lambda);
  if (outcome != 1 && outcome != -1) throw PreconditionError("outcome must be +1 or -1");
  const auto psi = singlet_state();
  const UnsharpSpinObservable obs(n, lambda);
  const auto id = Hermitian<2>::identity();

  EprReport r;
  r.outcome = outcome;
  Hermitian<4> mixture;
  for (int idx = 0; idx < 2; ++idx) {
    const int s = idx == 0 ? 1 : -1;
    const auto root = tensor(sqrt_psd(obs.effect(s)), id);
    r.component_posts[idx] = sandwich(root, psi.op());
    mixture = mixture + r.component_posts[idx];
    r.reduced_post_components[idx] = partial_trace(r.component_posts[idx], Subsystem::Second);
  }
  r.joint_post_mixture = DensityOperator<4>::assume(mixture);
  r.reduced_pre = partial_trace(psi.op(), Subsystem::Second);
  r.reduced_post = partial_trace(mixture, Subsystem::Second);

  const auto& comp = r.reduced_post_components[outcome == 1 ? 0 : 1];
  const auto conditional = (1.0 / comp.trace()) * comp;
  const auto anticorrelated = obs.effect(-outcome).op();
  r.outcome_prob_after = trace_product(conditional, anticorrelated);
  r.outcome_prob_before = trace_product(r.reduced_pre, anticorrelated);
  return r;
}

}  // namespace ubell

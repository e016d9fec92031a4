#pragma once

// Covariant bookkeeping of Lueders state changes for point-like measurements
// in Minkowski space (c = 1): causal classification, influence and
// information covers, and the M-chart an observer at a spacetime point
// assigns to the influence regions.
//
// Cone convention: Backward(e) is the closed backward light cone of e. The
// influence region of a measurement at e is its complement, so the region
// inside every Backward(e) carries the initial state.

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "unsharp_bell/error.hpp"
#include "unsharp_bell/instruments.hpp"
#include "unsharp_bell/operators.hpp"
#include "unsharp_bell/spin_povm.hpp"

namespace ubell {

struct SpacetimeEvent {
  double t = 0.0, x = 0.0, y = 0.0, z = 0.0;

  bool finite() const { return std::isfinite(t) && std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
  friend bool operator==(const SpacetimeEvent&, const SpacetimeEvent&) = default;
};

enum class CausalRelation { Spacelike, TimelikeFuture, TimelikePast, LightlikeFuture, LightlikePast, Coincident };

inline const char* to_string(CausalRelation r) {
  switch (r) {
    case CausalRelation::Spacelike: return "spacelike";
    case CausalRelation::TimelikeFuture: return "timelike-future";
    case CausalRelation::TimelikePast: return "timelike-past";
    case CausalRelation::LightlikeFuture: return "lightlike-future";
    case CausalRelation::LightlikePast: return "lightlike-past";
    case CausalRelation::Coincident: return "coincident";
  }
  return "?";
}

inline constexpr double kLightconeRelTol = 1e-12;

// Position of q relative to p. Intervals within a relative 1e-12 of zero
// count as lightlike, so the closed cones include their boundary.
inline CausalRelation causal_relation(const SpacetimeEvent& p, const SpacetimeEvent& q) {
  if (!p.finite() || !q.finite()) throw PreconditionError("spacetime coordinates must be finite");
  const double dt = q.t - p.t;
  const double dr2 = (q.x - p.x) * (q.x - p.x) + (q.y - p.y) * (q.y - p.y) + (q.z - p.z) * (q.z - p.z);
  if (dt == 0.0 && dr2 == 0.0) return CausalRelation::Coincident;
  const double interval = dt * dt - dr2;
  const double scale = dt * dt + dr2;
  if (std::abs(interval) <= kLightconeRelTol * scale)
    return dt > 0.0 ? CausalRelation::LightlikeFuture : CausalRelation::LightlikePast;
  if (interval > 0.0) return dt > 0.0 ? CausalRelation::TimelikeFuture : CausalRelation::TimelikePast;
  return CausalRelation::Spacelike;
}

inline bool in_backward_cone(const SpacetimeEvent& apex, const SpacetimeEvent& q) {
  const auto r = causal_relation(apex, q);
  return r == CausalRelation::Coincident || r == CausalRelation::TimelikePast || r == CausalRelation::LightlikePast;
}

inline bool in_forward_cone(const SpacetimeEvent& apex, const SpacetimeEvent& q) {
  const auto r = causal_relation(apex, q);
  return r == CausalRelation::Coincident || r == CausalRelation::TimelikeFuture || r == CausalRelation::LightlikeFuture;
}

enum class Cone { Backward, BackwardComplement, Forward, ForwardComplement };

struct CausalRegion {
  std::vector<std::pair<SpacetimeEvent, Cone>> generators;

  bool contains(const SpacetimeEvent& q) const {
    for (const auto& [e, cone] : generators) {
      bool in = false;
      switch (cone) {
        case Cone::Backward: in = in_backward_cone(e, q); break;
        case Cone::BackwardComplement: in = !in_backward_cone(e, q); break;
        case Cone::Forward: in = in_forward_cone(e, q); break;
        case Cone::ForwardComplement: in = !in_forward_cone(e, q); break;
      }
      if (!in) return false;
    }
    return true;
  }
};

enum class CoverKind { MCover, NCover };

// Partition of Minkowski space into 2^k regions for k measurement events.
// masks[r] has bit i set when event i influences region r (M-cover) or when
// the outcome of event i is available in region r (N-cover).
struct Cover {
  CoverKind kind = CoverKind::MCover;
  std::vector<SpacetimeEvent> events;
  std::vector<CausalRegion> regions;
  std::vector<unsigned> masks;
  std::vector<bool> empty;

  std::size_t region_of(const SpacetimeEvent& q) const {
    unsigned mask = 0;
    for (std::size_t i = 0; i < events.size(); ++i) {
      const bool bit = kind == CoverKind::MCover ? !in_backward_cone(events[i], q) : in_forward_cone(events[i], q);
      if (bit) mask |= 1u << i;
    }
    for (std::size_t r = 0; r < masks.size(); ++r)
      if (masks[r] == mask) return r;
    throw Error("region_of: mask not present in cover");
  }

  std::size_t region_with_mask(unsigned mask) const {
    for (std::size_t r = 0; r < masks.size(); ++r)
      if (masks[r] == mask) return r;
    throw Error("region_with_mask: mask not present in cover");
  }
};

namespace detail {

inline void require_cover_events(const std::vector<SpacetimeEvent>& events) {
  if (events.empty() || events.size() > 2)
    throw PreconditionError("covers are defined for one or two measurement events");
  for (const auto& e : events)
    if (!e.finite()) throw PreconditionError("spacetime coordinates must be finite");
}

inline Cover make_cover(CoverKind kind, const std::vector<SpacetimeEvent>& events) {
  require_cover_events(events);
  Cover c;
  c.kind = kind;
  c.events = events;
  // One event: {none, it}. Two events x, y: influence regions ordered
  // {none, y, x, both}, information regions {none, x, y, both}.
  if (events.size() == 1)
    c.masks = {0u, 1u};
  else if (kind == CoverKind::MCover)
    c.masks = {0u, 2u, 1u, 3u};
  else
    c.masks = {0u, 1u, 2u, 3u};

  for (unsigned mask : c.masks) {
    CausalRegion region;
    for (std::size_t i = 0; i < events.size(); ++i) {
      const bool bit = mask & (1u << i);
      const Cone cone = kind == CoverKind::MCover ? (bit ? Cone::BackwardComplement : Cone::Backward)
                                                  : (bit ? Cone::Forward : Cone::ForwardComplement);
      region.generators.emplace_back(events[i], cone);
    }
    c.regions.push_back(region);

    // With two events a mixed region is empty exactly when one closed cone
    // contains the other.
    bool empty = false;
    if (events.size() == 2 && (mask == 1u || mask == 2u)) {
      const std::size_t in = mask == 1u ? 0 : 1;
      const std::size_t out = 1 - in;
      empty = kind == CoverKind::MCover ? in_backward_cone(events[in], events[out])
                                        : in_forward_cone(events[out], events[in]);
    }
    c.empty.push_back(empty);
  }
  return c;
}

}  // namespace detail

// Regions cut out by the backward cones; region 0 lies in every backward
// cone (no influence).
inline Cover influence_cover(const std::vector<SpacetimeEvent>& events) {
  return detail::make_cover(CoverKind::MCover, events);
}

// Regions cut out by the closed forward cones; region 0 lies outside every
// forward cone (no information).
inline Cover information_cover(const std::vector<SpacetimeEvent>& events) {
  return detail::make_cover(CoverKind::NCover, events);
}

// ---------------------------------------------------------------------------
// Lorentz transformations.

class LorentzTransform {
 public:
  static LorentzTransform identity() {
    LorentzTransform l;
    for (std::size_t i = 0; i < 4; ++i) l.m_[i * 4 + i] = 1.0;
    return l;
  }

  // Pure boost to a frame moving with velocity v (|v| < 1).
  static LorentzTransform boost(const Vec3& v) {
    const double v2 = dot(v, v);
    if (!(v2 < 1.0)) throw PreconditionError("boost speed must be below the speed of light");
    if (v2 == 0.0) return identity();
    const double gamma = 1.0 / std::sqrt(1.0 - v2);
    const std::array<double, 3> u = {v.x, v.y, v.z};
    LorentzTransform l;
    l.m_[0] = gamma;
    for (std::size_t i = 0; i < 3; ++i) {
      l.m_[0 * 4 + (i + 1)] = -gamma * u[i];
      l.m_[(i + 1) * 4 + 0] = -gamma * u[i];
      for (std::size_t j = 0; j < 3; ++j)
        l.m_[(i + 1) * 4 + (j + 1)] = (i == j ? 1.0 : 0.0) + (gamma - 1.0) * u[i] * u[j] / v2;
    }
    return l;
  }

  // Spatial rotation by `angle` about `axis` (Rodrigues).
  static LorentzTransform rotation(const UnitVector3& axis, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    const std::array<double, 3> k = {axis.x(), axis.y(), axis.z()};
    LorentzTransform l;
    l.m_[0] = 1.0;
    const double cross_mat[3][3] = {{0, -k[2], k[1]}, {k[2], 0, -k[0]}, {-k[1], k[0], 0}};
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        l.m_[(i + 1) * 4 + (j + 1)] = (i == j ? c : 0.0) + s * cross_mat[i][j] + (1.0 - c) * k[i] * k[j];
    return l;
  }

  SpacetimeEvent apply(const SpacetimeEvent& e) const {
    const std::array<double, 4> in = {e.t, e.x, e.y, e.z};
    std::array<double, 4> out{};
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) out[i] += m_[i * 4 + j] * in[j];
    return {out[0], out[1], out[2], out[3]};
  }

  friend LorentzTransform operator*(const LorentzTransform& a, const LorentzTransform& b) {
    LorentzTransform r;
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t k = 0; k < 4; ++k) r.m_[i * 4 + j] += a.m_[i * 4 + k] * b.m_[k * 4 + j];
    return r;
  }

 private:
  std::array<double, 16> m_{};
};

// Straight timelike worldline t -> origin + (t, v t).
struct Worldline {
  SpacetimeEvent origin;
  Vec3 velocity;

  SpacetimeEvent at(double dt) const {
    return {origin.t + dt, origin.x + velocity.x * dt, origin.y + velocity.y * dt, origin.z + velocity.z * dt};
  }
};

// ---------------------------------------------------------------------------
// Measurement programmes and charts.

struct Measurement {
  SpacetimeEvent event;
  UnsharpSpinObservable observable;
  Subsystem subsystem = Subsystem::First;
};

struct MeasurementProgramme {
  std::vector<Measurement> measurements;
  DensityOperator<4> initial_state = DensityOperator<4>::maximally_mixed();
  std::optional<std::vector<int>> outcomes;

  void validate() const {
    if (measurements.empty() || measurements.size() > 2)
      throw PreconditionError("a programme has one or two measurements");
    if (measurements.size() == 2 && measurements[0].subsystem == measurements[1].subsystem)
      throw PreconditionError("measurements must act on distinct subsystems (same-factor programmes do not commute)");
    for (const auto& m : measurements)
      if (!m.event.finite()) throw PreconditionError("spacetime coordinates must be finite");
    if (outcomes) {
      if (outcomes->size() != measurements.size())
        throw PreconditionError("outcome list length must match the number of measurements");
      for (int o : *outcomes)
        if (o != 1 && o != -1) throw PreconditionError("outcomes must be +1 or -1");
    }
  }

  std::vector<SpacetimeEvent> events() const {
    std::vector<SpacetimeEvent> ev;
    for (const auto& m : measurements) ev.push_back(m.event);
    return ev;
  }
};

inline std::string measurement_name(std::size_t i) { return i == 0 ? "a" : i == 1 ? "b" : "m" + std::to_string(i); }

struct ChartEntry {
  Hermitian<4> state;
  unsigned influence_mask = 0;
  // Bit i set when measurement i enters this region selectively.
  unsigned selective_mask = 0;
  bool selective() const { return selective_mask != 0; }
  bool empty_region = false;
  std::vector<std::string> definite_values;
};

struct MChart {
  SpacetimeEvent observer;
  std::size_t information_region = 0;
  unsigned information_mask = 0;
  Cover cover;
  std::vector<ChartEntry> entries;
  // Largest entrywise difference between the two application orders.
  double order_deviation = 0.0;
};

namespace detail {

inline Hermitian<4> lift(const Hermitian<2>& op, Subsystem on) {
  return on == Subsystem::First ? tensor(op, Hermitian<2>::identity()) : tensor(Hermitian<2>::identity(), op);
}

// Lueders transform of measurement m: selective for the given outcome, or
// nonselective when `outcome` is empty. States stay subnormalized.
inline Hermitian<4> apply_measurement(const Hermitian<4>& state, const Measurement& m, std::optional<int> outcome) {
  if (outcome) return sandwich(lift(sqrt_psd(m.observable.effect(*outcome)), m.subsystem), state);
  Hermitian<4> out;
  for (int s : {1, -1}) out = out + sandwich(lift(sqrt_psd(m.observable.effect(s)), m.subsystem), state);
  return out;
}

inline std::string format_probability(double p) {
  std::ostringstream os;
  os << std::setprecision(6) << p;
  return os.str();
}

// Value assertions for a selectively entered region, read off the
// normalized region state: for each subsystem, the sign whose unsharp
// effect is more probable, marked definite when that probability is 1.
inline std::vector<std::string> value_assertions(const Hermitian<4>& state, const MeasurementProgramme& prog,
                                                 unsigned influence, unsigned selective) {
  std::vector<std::string> out;
  const double tr = state.trace();
  for (std::size_t i = 0; i < prog.measurements.size(); ++i) {
    const auto name = measurement_name(i);
    if (!(influence & (1u << i))) {
      out.push_back(name + " indefinite");
      continue;
    }
    if (!(selective & (1u << i))) {
      out.push_back(name + " objectified, outcome unknown");
      continue;
    }
    const auto& obs = prog.measurements[i].observable;
    for (Subsystem k : {Subsystem::First, Subsystem::Second}) {
      const double p_plus = trace_product(state, lift(obs.effect(1).op(), k)) / tr;
      const int sign = p_plus >= 0.5 ? 1 : -1;
      const double p = sign == 1 ? p_plus : 1.0 - p_plus;
      std::string s = name + "(S" + std::to_string(k == Subsystem::First ? 1 : 2) + ")=" + (sign == 1 ? "+1" : "-1");
      if (p < 1.0 - 1e-9) s += " (p=" + format_probability(p) + ")";
      out.push_back(s);
    }
  }
  return out;
}

}  // namespace detail

inline MChart observer_chart(const SpacetimeEvent& u, const MeasurementProgramme& prog) {
  prog.validate();
  if (!u.finite()) throw PreconditionError("observer coordinates must be finite");
  const auto events = prog.events();
  MChart chart;
  chart.observer = u;
  chart.cover = influence_cover(events);
  const auto ncover = information_cover(events);
  chart.information_region = ncover.region_of(u);
  chart.information_mask = ncover.masks[chart.information_region];
  for (std::size_t i = 0; i < events.size(); ++i)
    if ((chart.information_mask & (1u << i)) && !prog.outcomes)
      throw PreconditionError("observer is informed of measurement " + measurement_name(i) + " but no outcome was given");

  auto outcome_for = [&](std::size_t i) -> std::optional<int> {
    if (chart.information_mask & (1u << i)) return (*prog.outcomes)[i];
    return std::nullopt;
  };

  for (std::size_t r = 0; r < chart.cover.masks.size(); ++r) {
    const unsigned mask = chart.cover.masks[r];
    ChartEntry entry;
    entry.influence_mask = mask;
    entry.empty_region = chart.cover.empty[r];
    Hermitian<4> forward = prog.initial_state.op();
    for (std::size_t i = 0; i < events.size(); ++i)
      if (mask & (1u << i)) forward = detail::apply_measurement(forward, prog.measurements[i], outcome_for(i));
    Hermitian<4> reverse = prog.initial_state.op();
    for (std::size_t i = events.size(); i-- > 0;)
      if (mask & (1u << i)) reverse = detail::apply_measurement(reverse, prog.measurements[i], outcome_for(i));
    chart.order_deviation = std::max(chart.order_deviation, max_abs_diff(forward, reverse));
    entry.state = forward;
    entry.selective_mask = mask & chart.information_mask;
    entry.definite_values = detail::value_assertions(forward, prog, mask, entry.selective_mask);
    chart.entries.push_back(std::move(entry));
  }
  return chart;
}

// True when every selective flag of `earlier` is still set in `later`.
inline bool chart_refines(const MChart& earlier, const MChart& later) {
  if (earlier.entries.size() != later.entries.size()) return false;
  for (std::size_t r = 0; r < earlier.entries.size(); ++r)
    if ((earlier.entries[r].selective_mask & ~later.entries[r].selective_mask) != 0) return false;
  return true;
}

inline double chart_distance(const MChart& a, const MChart& b) {
  if (a.entries.size() != b.entries.size()) return INFINITY;
  double d = 0.0;
  for (std::size_t r = 0; r < a.entries.size(); ++r) d = std::max(d, max_abs_diff(a.entries[r].state, b.entries[r].state));
  return d;
}

// ---------------------------------------------------------------------------
// Consistency of a two-measurement programme.

struct ConsistencyCheck {
  std::string name;
  double max_deviation = 0.0;
  bool passed = false;
};

struct ConsistencyReport {
  std::vector<ConsistencyCheck> checks;
  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
  }
};

inline constexpr double kConsistencyTol = 1e-12;

inline std::vector<Worldline> default_worldlines(const MeasurementProgramme& prog) {
  std::vector<Worldline> w;
  for (const auto& m : prog.measurements) {
    w.push_back({m.event, {0.0, 0.0, 0.0}});
    w.push_back({m.event, {0.5, 0.0, 0.0}});
    w.push_back({m.event, {-0.5, 0.2, 0.0}});
  }
  return w;
}

// (i) the nonselective transforms commute and equal the product instrument;
// (ii) mixed selective / nonselective sequences are order independent;
// (iii) the unmeasured side's reduced state is unchanged by each
// nonselective transform; (iv) observers in the same information region
// along the sampled worldlines assign identical charts.
inline ConsistencyReport check_consistency(const MeasurementProgramme& prog,
                                           std::vector<Worldline> worldlines = {}) {
  prog.validate();
  if (prog.measurements.size() != 2) throw PreconditionError("consistency check needs two measurements");
  const auto rel = causal_relation(prog.measurements[0].event, prog.measurements[1].event);
  if (rel != CausalRelation::Spacelike) throw PreconditionError("consistency check needs spacelike-separated measurements");
  if (worldlines.empty()) worldlines = default_worldlines(prog);

  const auto& ma = prog.measurements[0];
  const auto& mb = prog.measurements[1];
  const auto& rho = prog.initial_state.op();
  using detail::apply_measurement;
  ConsistencyReport rep;

  {
    const auto ab = apply_measurement(apply_measurement(rho, ma, std::nullopt), mb, std::nullopt);
    const auto ba = apply_measurement(apply_measurement(rho, mb, std::nullopt), ma, std::nullopt);
    Hermitian<4> joint;
    for (int s : {1, -1})
      for (int t : {1, -1}) {
        const auto root = detail::lift(sqrt_psd(ma.observable.effect(s)), ma.subsystem).matrix() *
                          detail::lift(sqrt_psd(mb.observable.effect(t)), mb.subsystem).matrix();
        joint = joint + Hermitian<4>::hermitize(root * rho.matrix() * root.adjoint());
      }
    const double dev = std::max({max_abs_diff(ab, ba), max_abs_diff(ab, joint), max_abs_diff(ba, joint)});
    rep.checks.push_back({"nonselective order independence", dev, dev <= kConsistencyTol});
  }
  {
    double dev = 0.0;
    const std::array<std::optional<int>, 3> choices = {std::nullopt, 1, -1};
    for (const auto& sa : choices)
      for (const auto& sb : choices) {
        if (!sa && !sb) continue;
        const auto ab = apply_measurement(apply_measurement(rho, ma, sa), mb, sb);
        const auto ba = apply_measurement(apply_measurement(rho, mb, sb), ma, sa);
        dev = std::max(dev, max_abs_diff(ab, ba));
      }
    rep.checks.push_back({"selective/nonselective order independence", dev, dev <= kConsistencyTol});
  }
  {
    double dev = 0.0;
    for (const auto* m : {&ma, &mb}) {
      const Subsystem other = m->subsystem == Subsystem::First ? Subsystem::Second : Subsystem::First;
      const auto after = apply_measurement(rho, *m, std::nullopt);
      dev = std::max(dev, trace_norm(partial_trace(rho, other) - partial_trace(after, other)));
    }
    rep.checks.push_back({"no-signalling", dev, dev <= kConsistencyTol});
  }
  {
    MeasurementProgramme informed = prog;
    if (!informed.outcomes) informed.outcomes = std::vector<int>(prog.measurements.size(), 1);
    std::vector<std::optional<MChart>> reference(4);
    double dev = 0.0;
    for (const auto& w : worldlines)
      for (int step = -40; step <= 40; ++step) {
        const auto chart = observer_chart(w.at(0.25 * step), informed);
        auto& ref = reference[chart.information_region];
        if (!ref)
          ref = chart;
        else
          dev = std::max(dev, chart_distance(*ref, chart));
        dev = std::max(dev, chart.order_deviation);
      }
    rep.checks.push_back({"observer agreement", dev, dev <= kConsistencyTol});
  }
  return rep;
}

}  // namespace ubell

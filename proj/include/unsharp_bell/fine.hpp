#pragma once

// Joint-distribution problem for four dichotomic variables: CHSH evaluation
// on probability tables, constructive reconstruction of a quadruple joint
// distribution, and an exact rational feasibility oracle.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "unsharp_bell/bell.hpp"
#include "unsharp_bell/error.hpp"
#include "unsharp_bell/fourier_motzkin.hpp"
#include "unsharp_bell/operators.hpp"
#include "unsharp_bell/probability_table.hpp"

namespace ubell {

// Sums of the four jpd entries that share each signed pair of outcomes,
// written out letter by letter; singles are row sums of the pairs.
inline ProbabilityTable marginals(const Jpd4& jpd) {
  const auto& x = jpd.entries();
  const double a = x[0], b = x[1], c = x[2], d = x[3], e = x[4], f = x[5], g = x[6], h = x[7];
  const double k = x[8], l = x[9], m = x[10], n = x[11], p = x[12], q = x[13], r = x[14], s = x[15];
  ProbabilityTable t;
  t.pair(1, 3) = a + b + e + f;
  t.pair(1, -3) = c + d + g + h;
  t.pair(1, 4) = a + c + e + g;
  t.pair(1, -4) = b + d + f + h;
  t.pair(2, 3) = a + b + k + l;
  t.pair(2, -3) = c + d + m + n;
  t.pair(2, 4) = a + c + k + m;
  t.pair(2, -4) = b + d + l + n;
  t.pair(-1, 3) = k + l + p + q;
  t.pair(-1, -3) = m + n + r + s;
  t.pair(-1, 4) = k + m + p + r;
  t.pair(-1, -4) = l + n + q + s;
  t.pair(-2, 3) = e + f + p + q;
  t.pair(-2, -3) = g + h + r + s;
  t.pair(-2, 4) = e + g + p + r;
  t.pair(-2, -4) = f + h + q + s;
  for (int i : kFirstSideIndices) t.single(i) = t.pair(i, 3) + t.pair(i, -3);
  for (int j : kSecondSideIndices) t.single(j) = t.pair(1, j) + t.pair(-1, j);
  return t;
}

// ---------------------------------------------------------------------------
// CHSH inequalities.

inline constexpr double kChshTol = 1e-12;
inline constexpr double kChshConsistencyLimit = 1e-6;

struct ChshWitness {
  std::string inequality;  // e.g. "bell1[2]"
  double value = 0.0;
  // Distance of `value` outside [0, 1]; positive means violated.
  double slack = 0.0;
};

struct ChshCheck {
  bool all_hold = false;
  // Pair-only form: 0 <= p(1,-3) + p(-1,4) - p(2,4) + p(2,3) <= 1, ...
  std::array<double, 4> bell1{};
  // Form with singles: 0 <= p1 + p4 - p13 - p14 - p24 + p23 <= 1, ...
  std::array<double, 4> bell2{};
  // max |bell1[i] - bell2[i]|; zero on marginal-consistent tables.
  double form_disagreement = 0.0;

  std::array<double, 8> values() const {
    return {bell1[0], bell1[1], bell1[2], bell1[3], bell2[0], bell2[1], bell2[2], bell2[3]};
  }

  // The most violated (or least slack) pair-only inequality.
  ChshWitness worst() const {
    ChshWitness w{"bell1[1]", bell1[0], -1.0};
    for (std::size_t i = 0; i < 4; ++i) {
      const double slack = std::max(-bell1[i], bell1[i] - 1.0);
      if (slack > w.slack) w = {"bell1[" + std::to_string(i + 1) + "]", bell1[i], slack};
    }
    return w;
  }
};

inline double chsh_slack(double value) { return std::max(-value, value - 1.0); }

inline ChshCheck chsh_check(const ProbabilityTable& t) {
  const double cons = t.consistency_defect();
  if (!(cons <= kChshConsistencyLimit)) {
    std::ostringstream os;
    os << "chsh_check: table marginals inconsistent by " << cons;
    throw InvariantError(os.str());
  }
  auto p = [&t](int i, int j) { return t.pair(i, j); };
  auto s = [&t](int k) { return t.single(k); };
  ChshCheck r;
  r.bell1 = {p(1, -3) + p(-1, 4) - p(2, 4) + p(2, 3), p(1, -4) + p(-1, 3) - p(2, 3) + p(2, 4),
             p(2, -3) + p(-2, 4) - p(1, 4) + p(1, 3), p(2, -4) + p(-2, 3) - p(1, 3) + p(1, 4)};
  r.bell2 = {s(1) + s(4) - p(1, 3) - p(1, 4) - p(2, 4) + p(2, 3), s(1) + s(3) - p(1, 3) - p(1, 4) - p(2, 3) + p(2, 4),
             s(2) + s(4) - p(2, 3) - p(1, 4) - p(2, 4) + p(1, 3), s(2) + s(3) - p(1, 3) - p(2, 3) - p(2, 4) + p(1, 4)};
  r.all_hold = true;
  for (double v : r.values())
    if (chsh_slack(v) > kChshTol) r.all_hold = false;
  for (std::size_t i = 0; i < 4; ++i) r.form_disagreement = std::max(r.form_disagreement, std::abs(r.bell1[i] - r.bell2[i]));
  return r;
}

// ---------------------------------------------------------------------------
// Feasibility.

struct Feasible {
  Jpd4 jpd;
};

struct Infeasible {
  ChshWitness witness;
};

struct FeasibilityResult {
  std::variant<Feasible, Infeasible> outcome;
  // Which procedure produced the verdict ("intervals" or "exact").
  std::string decided_by;

  bool feasible() const { return std::holds_alternative<Feasible>(outcome); }
  const Jpd4& jpd() const { return std::get<Feasible>(outcome).jpd; }
  const ChshWitness& witness() const { return std::get<Infeasible>(outcome).witness; }
};

// max |marginals(jpd) - table| over singles and pairs.
inline double marginal_residual(const Jpd4& jpd, const ProbabilityTable& t) {
  const auto m = marginals(jpd);
  double r = 0.0;
  for (int k : kSingleIndices) r = std::max(r, std::abs(m.single(k) - t.single(k)));
  for (int i : kFirstSideIndices)
    for (int j : kSecondSideIndices) r = std::max(r, std::abs(m.pair(i, j) - t.pair(i, j)));
  return r;
}

inline constexpr double kRoundTripTol = 1e-8;
inline constexpr double kBoundarySlack = 1e-7;

namespace detail {

// Free parameters of the joint distribution, in this variable order.
enum FreeVar : std::size_t { kA, kB, kC, kD, kE, kK, kP };
inline constexpr std::array<std::size_t, 7> kFreeSlots = {0, 1, 2, 3, 4, 8, 12};
// Eliminate e, k, p, a, d, c, leaving b; back-substitution runs b, c, d, a, ...
inline constexpr std::array<std::size_t, 7> kEliminationOrder = {kE, kK, kP, kA, kD, kC, kB};

inline void require_valid_table(const ProbabilityTable& t) { t.validate(kTableTol); }

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline constexpr long long kMaxDenominator = 1000000000LL;

// Closest fraction to `x` with denominator at most `max_den`.
inline Rational limit_denominator(double x, long long max_den = kMaxDenominator) {
  const Rational exact(x);
  const bool negative = exact < 0;
  const Rational v = negative ? Rational(-exact) : exact;
  BigInt num = boost::multiprecision::numerator(v), den = boost::multiprecision::denominator(v);
  if (den <= max_den) return exact;
  BigInt p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  BigInt n = num, d = den;
  while (true) {
    const BigInt a = n / d;
    const BigInt q2 = q0 + a * q1;
    if (q2 > max_den) break;
    const BigInt p2 = p0 + a * p1;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    const BigInt rem = n - a * d;
    n = d;
    d = rem;
    if (d == 0) break;
  }
  const BigInt k = (BigInt(max_den) - q0) / q1;
  const Rational bound1(p0 + k * p1, q0 + k * q1);
  const Rational bound2(p1, q1);
  const Rational diff1 = bound1 > v ? Rational(bound1 - v) : Rational(v - bound1);
  const Rational diff2 = bound2 > v ? Rational(bound2 - v) : Rational(v - bound2);
  const Rational best = diff2 <= diff1 ? bound2 : bound1;
  return negative ? Rational(-best) : best;
}

struct RationalTable {
  std::array<Rational, 8> singles;
  std::array<Rational, 16> pairs;
  const Rational& single(int k) const { return singles[ProbabilityTable::single_slot(k)]; }
  const Rational& pair(int i, int j) const { return pairs[ProbabilityTable::pair_slot(i, j)]; }
};

inline RationalTable rationalize(const ProbabilityTable& t) {
  RationalTable r;
  for (int k = 1; k <= 4; ++k) {
    r.singles[ProbabilityTable::single_slot(k)] = limit_denominator(t.single(k));
    r.singles[ProbabilityTable::single_slot(-k)] = Rational(1) - r.singles[ProbabilityTable::single_slot(k)];
  }
  for (int i : {1, 2})
    for (int j : {3, 4}) {
      const Rational pij = limit_denominator(t.pair(i, j));
      const Rational& pi = r.singles[ProbabilityTable::single_slot(i)];
      const Rational& pj = r.singles[ProbabilityTable::single_slot(j)];
      r.pairs[ProbabilityTable::pair_slot(i, j)] = pij;
      r.pairs[ProbabilityTable::pair_slot(i, -j)] = pi - pij;
      r.pairs[ProbabilityTable::pair_slot(-i, j)] = pj - pij;
      r.pairs[ProbabilityTable::pair_slot(-i, -j)] = Rational(1) - pi - pj + pij;
    }
  return r;
}

struct Parametrization {
  bool consistent = true;
  // x_slot = constant + sum_v coef[v] * free_v for each of the 16 slots.
  std::array<fm::Constraint<Rational, 7>, 16> slots;
};

// Row-reduces the marginal equations exactly, pivoting only on the nine
// dependent slots.
inline Parametrization parametrize(const RationalTable& rt) {
  constexpr std::size_t kCols = 16;
  std::vector<std::array<Rational, kCols + 1>> rows;
  for (int i : kFirstSideIndices)
    for (int j : kSecondSideIndices) {
      std::array<Rational, kCols + 1> row{};
      const int vi = std::abs(i) - 1, vj = std::abs(j) - 1;
      for (std::size_t s = 0; s < kCols; ++s)
        if (Jpd4::sign_of(s, vi) == (i > 0 ? 1 : -1) && Jpd4::sign_of(s, vj) == (j > 0 ? 1 : -1)) row[s] = 1;
      row[kCols] = rt.pair(i, j);
      rows.push_back(row);
    }
  {
    std::array<Rational, kCols + 1> row{};
    for (std::size_t s = 0; s < kCols; ++s) row[s] = 1;
    row[kCols] = 1;
    rows.push_back(row);
  }

  std::array<bool, kCols> is_free{};
  for (std::size_t s : kFreeSlots) is_free[s] = true;

  Parametrization par;
  std::vector<bool> used(rows.size(), false);
  std::array<std::optional<std::size_t>, kCols> pivot_row{};
  for (std::size_t col = 0; col < kCols; ++col) {
    if (is_free[col]) continue;
    std::optional<std::size_t> pr;
    for (std::size_t r = 0; r < rows.size(); ++r)
      if (!used[r] && rows[r][col] != 0) {
        pr = r;
        break;
      }
    if (!pr) throw Error("feasibility_oracle: marginal equations do not determine the dependent entries");
    used[*pr] = true;
    pivot_row[col] = *pr;
    const Rational piv = rows[*pr][col];
    for (auto& x : rows[*pr]) x /= piv;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (r == *pr || rows[r][col] == 0) continue;
      const Rational factor = rows[r][col];
      for (std::size_t c = 0; c <= kCols; ++c) rows[r][c] -= factor * rows[*pr][c];
    }
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (used[r]) continue;
    for (std::size_t c = 0; c < kCols; ++c)
      if (rows[r][c] != 0) throw Error("feasibility_oracle: unexpected extra equality among free entries");
    if (rows[r][kCols] != 0) par.consistent = false;
  }

  for (std::size_t v = 0; v < 7; ++v) {
    auto& c = par.slots[kFreeSlots[v]];
    c.coef[v] = 1;
  }
  for (std::size_t col = 0; col < kCols; ++col) {
    if (is_free[col]) continue;
    const auto& row = rows[*pivot_row[col]];
    auto& c = par.slots[col];
    c.constant = row[kCols];
    for (std::size_t v = 0; v < 7; ++v) c.coef[v] = -row[kFreeSlots[v]];
  }
  return par;
}

}  // namespace detail

// Exact decision of the linear feasibility problem: 16 nonnegative unknowns,
// 16 pair-marginal equations and normalization.
//
// The table is rationalized through its independent coordinates (p1..p4,
// p13, p14, p23, p24, each the nearest fraction with denominator <= 1e9)
// with every other entry derived from them, so the rational table is
// exactly marginal-consistent. The nine dependent unknowns are expressed in
// the seven free ones by exact row reduction and the remaining inequality
// system is decided by exact Fourier-Motzkin elimination.
inline FeasibilityResult feasibility_oracle(const ProbabilityTable& t) {
  using detail::Rational;
  detail::require_valid_table(t);
  const auto rt = detail::rationalize(t);
  const auto par = detail::parametrize(rt);

  auto infeasible = [&t]() {
    return FeasibilityResult{Infeasible{chsh_check(t).worst()}, "exact"};
  };
  if (!par.consistent) return infeasible();

  std::vector<fm::Constraint<Rational, 7>> system(par.slots.begin(), par.slots.end());
  const auto res = fm::solve<Rational, 7>(system, detail::kEliminationOrder);
  if (!res.feasible) return infeasible();

  std::array<double, 16> entries{};
  for (std::size_t s = 0; s < 16; ++s) {
    Rational v = par.slots[s].constant;
    for (std::size_t i = 0; i < 7; ++i) v += par.slots[s].coef[i] * (*res.solution)[i];
    entries[s] = static_cast<double>(v);
  }
  return FeasibilityResult{Feasible{Jpd4(entries)}, "exact"};
}

// Reconstruction through the free parameters a, b, c, d, e, k, p:
//   f = p13 - a - b - e              l = p23 - a - b - k
//   g = p14 - a - c - e              m = p24 - a - c - k
//   h = p1-3 - p14 + a + e - d       n = p2-3 - p24 + a + k - d
//   q = p-13 - p23 + a + b - p
//   r = p-14 - p24 + a + c - p
//   s = p-2-3 - p1-3 - p-14 + p24 + d + p - a
// Nonnegativity of the nine derived entries bounds a+e, a+k and p-a by
// intervals; eliminating e, k, p, a, d, c from the full system leaves an
// interval system for b. b, c, d, a take the midpoints of their intervals
// and e, k, p are then chosen inside their a+e, a+k, p-a windows.
//
// Tables within 1e-7 of a CHSH facet, and any case where the floating-point
// construction fails its own round-trip check, are settled by
// feasibility_oracle.
inline FeasibilityResult reconstruct_jpd(const ProbabilityTable& t) {
  using detail::kA, detail::kB, detail::kC, detail::kD, detail::kE, detail::kK, detail::kP;
  detail::require_valid_table(t);
  auto p = [&t](int i, int j) { return t.pair(i, j); };

  using C = fm::Constraint<double, 7>;
  auto free_var = [](std::size_t v) {
    C c;
    c.coef[v] = 1.0;
    return c;
  };
  auto derived = [](double constant, std::initializer_list<std::pair<std::size_t, double>> terms) {
    C c;
    c.constant = constant;
    for (const auto& [v, w] : terms) c.coef[v] = w;
    return c;
  };
  std::vector<C> system;
  for (std::size_t v = 0; v < 7; ++v) system.push_back(free_var(v));
  system.push_back(derived(p(1, 3), {{kA, -1}, {kB, -1}, {kE, -1}}));                              // f
  system.push_back(derived(p(1, 4), {{kA, -1}, {kC, -1}, {kE, -1}}));                              // g
  system.push_back(derived(p(1, -3) - p(1, 4), {{kA, 1}, {kE, 1}, {kD, -1}}));                     // h
  system.push_back(derived(p(2, 3), {{kA, -1}, {kB, -1}, {kK, -1}}));                              // l
  system.push_back(derived(p(2, 4), {{kA, -1}, {kC, -1}, {kK, -1}}));                              // m
  system.push_back(derived(p(2, -3) - p(2, 4), {{kA, 1}, {kK, 1}, {kD, -1}}));                     // n
  system.push_back(derived(p(-1, 3) - p(2, 3), {{kA, 1}, {kB, 1}, {kP, -1}}));                     // q
  system.push_back(derived(p(-1, 4) - p(2, 4), {{kA, 1}, {kC, 1}, {kP, -1}}));                     // r
  system.push_back(derived(p(-2, -3) - p(1, -3) - p(-1, 4) + p(2, 4), {{kD, 1}, {kP, 1}, {kA, -1}}));  // s

  const auto chsh = chsh_check(t);
  const auto worst = chsh.worst();
  const bool near_facet = std::abs(worst.slack) <= kBoundarySlack;

  const auto res = fm::solve<double, 7>(system, detail::kEliminationOrder, 1e-12);
  if (!res.feasible) {
    if (near_facet) return feasibility_oracle(t);
    return FeasibilityResult{Infeasible{worst.slack > 0.0 ? worst : ChshWitness{"elimination", res.worst_constant, -res.worst_constant}},
                             "intervals"};
  }

  const auto& x = *res.solution;
  const double a = x[kA], b = x[kB], c = x[kC], d = x[kD];
  auto window = [](double lo, double hi) { return 0.5 * (lo + hi); };
  // a + e in [p14 - p1-3 + d, min(p13 - b, p14 - c)], e >= 0
  const double e = window(std::max(0.0, p(1, 4) - p(1, -3) + d - a), std::min(p(1, 3) - b, p(1, 4) - c) - a);
  // a + k in [p24 - p2-3 + d, min(p23 - b, p24 - c)], k >= 0
  const double k = window(std::max(0.0, p(2, 4) - p(2, -3) + d - a), std::min(p(2, 3) - b, p(2, 4) - c) - a);
  // p - a in [p1-3 + p-14 - p-2-3 - p24 - d, min(p-13 - p23 + b, p-14 - p24 + c)], p >= 0
  const double pp = window(std::max(0.0, p(1, -3) + p(-1, 4) - p(-2, -3) - p(2, 4) - d + a),
                           std::min(p(-1, 3) - p(2, 3) + b, p(-1, 4) - p(2, 4) + c) + a);

  std::array<double, 16> entries{};
  entries[0] = a;
  entries[1] = b;
  entries[2] = c;
  entries[3] = d;
  entries[4] = e;
  entries[5] = p(1, 3) - a - b - e;
  entries[6] = p(1, 4) - a - c - e;
  entries[7] = p(1, -3) - p(1, 4) + a + e - d;
  entries[8] = k;
  entries[9] = p(2, 3) - a - b - k;
  entries[10] = p(2, 4) - a - c - k;
  entries[11] = p(2, -3) - p(2, 4) + a + k - d;
  entries[12] = pp;
  entries[13] = p(-1, 3) - p(2, 3) + a + b - pp;
  entries[14] = p(-1, 4) - p(2, 4) + a + c - pp;
  entries[15] = p(-2, -3) - p(1, -3) - p(-1, 4) + p(2, 4) + d + pp - a;

  const double lowest = *std::min_element(entries.begin(), entries.end());
  for (auto& v : entries)
    if (v < 0.0 && v >= -1e-12) v = 0.0;
  const Jpd4 jpd(entries);
  if (lowest < -1e-12 || marginal_residual(jpd, t) > kRoundTripTol) return feasibility_oracle(t);
  return FeasibilityResult{Feasible{jpd}, "intervals"};
}

// ---------------------------------------------------------------------------
// Quantum tables.

// Pairs tr[rho E(+-ni) (x) E(+-nj)], singles tr[rho E(+-n) (x) I] and
// tr[rho I (x) E(+-n)].
inline ProbabilityTable table_from_quantum(const DensityOperator<4>& state, const BellConfiguration& cfg) {
  ProbabilityTable t;
  const auto& rho = state.op();
  const auto id = Hermitian<2>::identity();
  auto eff = [&cfg](int k) { return unsharp_effect(cfg.signed_direction(k), cfg.lambda).op(); };
  for (int i : kFirstSideIndices) t.single(i) = trace_product(rho, tensor(eff(i), id));
  for (int j : kSecondSideIndices) t.single(j) = trace_product(rho, tensor(id, eff(j)));
  for (int i : kFirstSideIndices)
    for (int j : kSecondSideIndices) t.pair(i, j) = trace_product(rho, tensor(eff(i), eff(j)));
  return t;
}

// Quadruple distribution tr[rho (E_ij (x) E_kl)] from the product joint
// observable; requires both pairs to be coexistent.
inline Jpd4 jpd_from_quadruple_joint(const DensityOperator<4>& state, const BellConfiguration& cfg) {
  const auto joint = quadruple_joint(cfg.lambda, cfg.n1, cfg.n2, cfg.n3, cfg.n4);
  std::array<double, 16> entries{};
  for (const auto& o : joint.outcomes)
    entries[Jpd4::slot(o.signs[0], o.signs[1], o.signs[2], o.signs[3])] = trace_product(state.op(), o.effect.op());
  return Jpd4(entries);
}

}  // namespace ubell

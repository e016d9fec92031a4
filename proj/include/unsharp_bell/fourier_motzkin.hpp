#pragma once

// Fourier-Motzkin elimination over a small fixed number of variables, generic
// in the scalar type so that the same procedure runs in floating point and in
// exact rational arithmetic.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <vector>

namespace ubell::fm {

// sum_i coef[i] x_i + constant >= 0
template <typename Scalar, std::size_t V>
struct Constraint {
  std::array<Scalar, V> coef{};
  Scalar constant{};
};

template <typename Scalar>
Scalar abs_value(const Scalar& x) {
  return x < Scalar(0) ? Scalar(-x) : x;
}

template <typename Scalar>
bool is_zero(const Scalar& x) {
  return x == Scalar(0);
}

template <typename Scalar, std::size_t V>
struct EliminationResult {
  bool feasible = false;
  // Most negative constant among variable-free constraints (exact slack of
  // the contradiction when infeasible).
  Scalar worst_constant{};
  // Solution in variable order; present when feasible.
  std::optional<std::array<Scalar, V>> solution;
  // Constraint counts after each elimination step.
  std::vector<std::size_t> sizes;
};

namespace detail {

// Scale so the first nonzero coefficient has magnitude 1; constraints that
// differ only in their constant then compare equal on `coef` and the tightest
// one (smallest constant) is kept.
template <typename Scalar, std::size_t V>
void normalize(Constraint<Scalar, V>& c) {
  for (std::size_t i = 0; i < V; ++i) {
    if (!is_zero(c.coef[i])) {
      const Scalar s = abs_value(c.coef[i]);
      for (auto& x : c.coef) x /= s;
      c.constant /= s;
      return;
    }
  }
}

template <typename Scalar, std::size_t V>
struct CoefLess {
  bool operator()(const std::array<Scalar, V>& a, const std::array<Scalar, V>& b) const {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  }
};

}  // namespace detail

// Eliminates variables in `order` (indices into 0..V-1, all V of them), then
// back-substitutes in reverse order picking the midpoint of each variable's
// feasible interval. `tol` is the slack below which a variable-free
// constraint counts as violated (0 for exact arithmetic).
template <typename Scalar, std::size_t V>
EliminationResult<Scalar, V> solve(std::vector<Constraint<Scalar, V>> system, const std::array<std::size_t, V>& order,
                                   const Scalar& tol = Scalar(0)) {
  using C = Constraint<Scalar, V>;
  EliminationResult<Scalar, V> res;
  res.worst_constant = Scalar(0);
  bool contradiction = false;

  auto reduce = [&](std::vector<C>& sys) {
    std::map<std::array<Scalar, V>, Scalar, detail::CoefLess<Scalar, V>> tightest;
    for (auto c : sys) {
      detail::normalize(c);
      const bool no_vars = std::all_of(c.coef.begin(), c.coef.end(), [](const Scalar& x) { return is_zero(x); });
      if (no_vars) {
        if (c.constant < res.worst_constant) res.worst_constant = c.constant;
        if (c.constant < -tol) contradiction = true;
        continue;
      }
      auto [it, inserted] = tightest.try_emplace(c.coef, c.constant);
      if (!inserted && c.constant < it->second) it->second = c.constant;
    }
    sys.clear();
    for (const auto& [coef, constant] : tightest) sys.push_back(C{coef, constant});
  };

  std::vector<std::vector<C>> levels;
  reduce(system);
  levels.push_back(system);
  res.sizes.push_back(system.size());

  for (std::size_t step = 0; step < V; ++step) {
    const std::size_t v = order[step];
    const auto& cur = levels.back();
    std::vector<C> pos, neg, next;
    for (const auto& c : cur) {
      if (Scalar(0) < c.coef[v])
        pos.push_back(c);
      else if (c.coef[v] < Scalar(0))
        neg.push_back(c);
      else
        next.push_back(c);
    }
    for (const auto& p : pos)
      for (const auto& n : neg) {
        const Scalar wp = -n.coef[v];
        const Scalar wn = p.coef[v];
        C comb;
        for (std::size_t i = 0; i < V; ++i) comb.coef[i] = wp * p.coef[i] + wn * n.coef[i];
        comb.coef[v] = Scalar(0);
        comb.constant = wp * p.constant + wn * n.constant;
        next.push_back(comb);
      }
    reduce(next);
    levels.push_back(std::move(next));
    res.sizes.push_back(levels.back().size());
  }

  res.feasible = !contradiction;
  if (!res.feasible) return res;

  std::array<Scalar, V> x{};
  std::array<bool, V> assigned{};
  for (std::size_t step = V; step-- > 0;) {
    const std::size_t v = order[step];
    std::optional<Scalar> lo, hi;
    for (const auto& c : levels[step]) {
      if (is_zero(c.coef[v])) continue;
      Scalar rest = c.constant;
      for (std::size_t i = 0; i < V; ++i)
        if (i != v && assigned[i]) rest += c.coef[i] * x[i];
      const Scalar bound = -rest / c.coef[v];
      if (Scalar(0) < c.coef[v]) {
        if (!lo || *lo < bound) lo = bound;
      } else {
        if (!hi || bound < *hi) hi = bound;
      }
    }
    if (lo && hi)
      x[v] = (*lo + *hi) / Scalar(2);
    else if (lo)
      x[v] = *lo;
    else if (hi)
      x[v] = *hi;
    else
      x[v] = Scalar(0);
    assigned[v] = true;
  }
  res.solution = x;
  return res;
}

}  // namespace ubell::fm

#pragma once

// Single and pair probabilities of a two-setting-per-side experiment, and
// quadruple joint distributions over the four dichotomic variables.
//
// Observables 1, 2 belong to the first system and 3, 4 to the second. A
// negative index denotes the complementary outcome.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <sstream>
#include <string>

#include "unsharp_bell/error.hpp"

namespace ubell {

inline constexpr std::array<int, 4> kFirstSideIndices = {1, -1, 2, -2};
inline constexpr std::array<int, 4> kSecondSideIndices = {3, -3, 4, -4};
inline constexpr std::array<int, 8> kSingleIndices = {1, -1, 2, -2, 3, -3, 4, -4};

inline constexpr double kTableTol = 1e-9;

class ProbabilityTable {
 public:
  ProbabilityTable() = default;

  double single(int k) const { return singles_[single_slot(k)]; }
  double& single(int k) { return singles_[single_slot(k)]; }
  double pair(int i, int j) const { return pairs_[pair_slot(i, j)]; }
  double& pair(int i, int j) { return pairs_[pair_slot(i, j)]; }

  // Largest violation of p_k + p_{-k} = 1 and of the pair-to-single
  // marginal equations.
  double consistency_defect() const {
    double d = 0.0;
    for (int k = 1; k <= 4; ++k) d = std::max(d, std::abs(single(k) + single(-k) - 1.0));
    for (int i : kFirstSideIndices)
      for (int obs : {3, 4}) d = std::max(d, std::abs(pair(i, obs) + pair(i, -obs) - single(i)));
    for (int j : kSecondSideIndices)
      for (int obs : {1, 2}) d = std::max(d, std::abs(pair(obs, j) + pair(-obs, j) - single(j)));
    return d;
  }

  // Largest distance of an entry outside [0, 1].
  double range_defect() const {
    double d = 0.0;
    auto check = [&d](double p) {
      if (!std::isfinite(p)) d = INFINITY;
      d = std::max({d, -p, p - 1.0});
    };
    for (double p : singles_) check(p);
    for (double p : pairs_) check(p);
    return d;
  }

  void validate(double tol = kTableTol) const {
    const double range = range_defect();
    if (range > 1e-12) {
      std::ostringstream os;
      os << "probability table entry outside [0,1] by " << range;
      throw InvariantError(os.str());
    }
    const double cons = consistency_defect();
    if (!(cons <= tol)) {
      std::ostringstream os;
      os << "probability table is not marginal-consistent (defect " << cons << " > " << tol << ")";
      throw InvariantError(os.str());
    }
  }

  // Uniform table: singles 1/2, pairs 1/4.
  static ProbabilityTable uniform() {
    ProbabilityTable t;
    t.singles_.fill(0.5);
    t.pairs_.fill(0.25);
    return t;
  }

  static std::size_t single_slot(int k) {
    const int a = std::abs(k);
    if (a < 1 || a > 4) throw PreconditionError("single index must be one of +-1..+-4");
    return static_cast<std::size_t>(2 * (a - 1) + (k < 0 ? 1 : 0));
  }

  static std::size_t pair_slot(int i, int j) {
    const int ai = std::abs(i), aj = std::abs(j);
    if (ai < 1 || ai > 2 || aj < 3 || aj > 4)
      throw PreconditionError("pair index must be (+-1|+-2, +-3|+-4)");
    const int first = 2 * (ai - 1) + (i < 0 ? 1 : 0);
    const int second = 2 * (aj - 3) + (j < 0 ? 1 : 0);
    return static_cast<std::size_t>(4 * first + second);
  }

 private:
  std::array<double, 8> singles_{};
  std::array<double, 16> pairs_{};
};

// Joint distribution over the 16 sign assignments of the four variables.
// Slot = 8 [1 barred] + 4 [2 barred] + 2 [3 barred] + [4 barred], so slots
// 0..15 are the letters a b c d e f g h k l m n p q r s.
class Jpd4 {
 public:
  Jpd4() = default;
  explicit Jpd4(const std::array<double, 16>& entries) : p_(entries) {}

  static Jpd4 uniform() {
    std::array<double, 16> e{};
    e.fill(1.0 / 16.0);
    return Jpd4(e);
  }

  static std::size_t slot(int s1, int s2, int s3, int s4) {
    auto bar = [](int s) -> std::size_t {
      if (s != 1 && s != -1) throw PreconditionError("jpd signs must be +1 or -1");
      return s < 0 ? 1 : 0;
    };
    return 8 * bar(s1) + 4 * bar(s2) + 2 * bar(s3) + bar(s4);
  }

  // +1 / -1 value of variable `var` (0..3) in slot `s`.
  static int sign_of(std::size_t s, int var) { return ((s >> (3 - var)) & 1u) ? -1 : 1; }

  double at(int s1, int s2, int s3, int s4) const { return p_[slot(s1, s2, s3, s4)]; }
  double operator[](std::size_t s) const { return p_[s]; }
  double& operator[](std::size_t s) { return p_[s]; }
  const std::array<double, 16>& entries() const { return p_; }

  double sum() const {
    double s = 0.0;
    for (double x : p_) s += x;
    return s;
  }
  double min() const { return *std::min_element(p_.begin(), p_.end()); }

  void validate(double tol = kTableTol) const {
    if (min() < -1e-12 || std::abs(sum() - 1.0) > tol) {
      std::ostringstream os;
      os << "invalid quadruple distribution (min " << min() << ", sum " << sum() << ")";
      throw InvariantError(os.str());
    }
  }

 private:
  std::array<double, 16> p_{};
};

}  // namespace ubell

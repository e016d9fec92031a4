#pragma once

// Bell operators for unsharp spins, operator CHSH inequalities, singlet-state
// probabilities and the sharpness thresholds that separate coexistence,
// Bell-CHSH validity and violation.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>
#include <vector>

#include "unsharp_bell/operators.hpp"
#include "unsharp_bell/probability_table.hpp"
#include "unsharp_bell/spin_povm.hpp"

namespace ubell {

struct Thresholds {
  // Pairwise coexistence for every pair of directions.
  static inline const double lambda2 = 1.0 / std::numbers::sqrt2;
  // All operator CHSH inequalities hold.
  static inline const double lambda_chsh = std::pow(2.0, -0.25);
  static inline const double epsilon_chsh = 0.5 * (1.0 - 1.0 / std::numbers::sqrt2);
  static inline const double cirelson = 2.0 * std::numbers::sqrt2;
};

// Sharpness plus a, a' (first system) and b, b' (second system).
struct BellConfiguration {
  double lambda = 1.0;
  UnitVector3 n1, n2, n3, n4;

  BellConfiguration(double lam, const UnitVector3& a, const UnitVector3& a2, const UnitVector3& b,
                    const UnitVector3& b2)
      : lambda(lam), n1(a), n2(a2), n3(b), n4(b2) {
    require_sharpness(lam);
  }

  // Direction for observable index 1..4.
  const UnitVector3& direction(int k) const {
    switch (k) {
      case 1: return n1;
      case 2: return n2;
      case 3: return n3;
      case 4: return n4;
      default: throw PreconditionError("observable index must be 1..4");
    }
  }

  // Direction for a signed index, -k meaning the opposite direction.
  UnitVector3 signed_direction(int k) const { return k > 0 ? direction(k) : -direction(-k); }
};

// Coplanar family with angles (n1,n3) = (n1,n4) = (n2,n4) = theta and
// (n2,n3) = 3 theta. theta = pi/4 maximizes the singlet correlation sum.
inline BellConfiguration coplanar_configuration(double lambda, double theta) {
  auto at = [](double phi) { return UnitVector3(std::sin(phi), 0.0, std::cos(phi)); };
  return BellConfiguration(lambda, at(theta), at(3.0 * theta), at(0.0), at(2.0 * theta));
}

inline BellConfiguration cirelson_configuration(double lambda) {
  return coplanar_configuration(lambda, std::numbers::pi / 4.0);
}

// B = a (x) (b + b') + a' (x) (b' - b)
inline Hermitian<4> bell_operator(const BellConfiguration& cfg) {
  const auto a = pauli_dot(cfg.n1);
  const auto a2 = pauli_dot(cfg.n2);
  const auto b = pauli_dot(cfg.n3);
  const auto b2 = pauli_dot(cfg.n4);
  return tensor(a, b + b2) + tensor(a2, b2 - b);
}

// ||B|| = 2 [1 + |n1 x n2| |n3 x n4|]^(1/2)
inline double bell_norm_closed_form(const BellConfiguration& cfg) {
  return 2.0 * std::sqrt(1.0 + cross(cfg.n1.vec(), cfg.n2.vec()).norm() * cross(cfg.n3.vec(), cfg.n4.vec()).norm());
}

// 4 I - 4 (n1 x n2).sigma (x) (n3 x n4).sigma
inline Hermitian<4> bell_square_closed_form(const BellConfiguration& cfg) {
  return 4.0 * Hermitian<4>::identity() -
         4.0 * tensor(pauli_dot(cross(cfg.n1.vec(), cfg.n2.vec())), pauli_dot(cross(cfg.n3.vec(), cfg.n4.vec())));
}

// E(a)(x)E(-b) + E(-a)(x)E(b') - E(a')(x)E(b') + E(a')(x)E(b), summed term by
// term as effects.
inline Hermitian<4> generalized_bell_operator(const BellConfiguration& cfg) {
  const double l = cfg.lambda;
  auto e = [l](const UnitVector3& n) { return unsharp_effect(n, l).op(); };
  return tensor(e(cfg.n1), e(-cfg.n3)) + tensor(e(-cfg.n1), e(cfg.n4)) - tensor(e(cfg.n2), e(cfg.n4)) +
         tensor(e(cfg.n2), e(cfg.n3));
}

// 1/2 I - (lambda^2 / 4) B
inline Hermitian<4> generalized_bell_closed_form(const BellConfiguration& cfg) {
  return 0.5 * Hermitian<4>::identity() - (cfg.lambda * cfg.lambda / 4.0) * bell_operator(cfg);
}

struct OperatorChshResult {
  bool holds = false;
  double min_eig = 0.0;
  double max_eig = 0.0;
  // Same inequality through -2 <= lambda^2 B <= 2.
  bool holds_via_norm = false;
};

// O <= B~ <= I
inline OperatorChshResult operator_chsh_holds(const BellConfiguration& cfg) {
  const auto vals = eigenvalues(generalized_bell_operator(cfg));
  OperatorChshResult r;
  r.min_eig = vals.front();
  r.max_eig = vals.back();
  r.holds = r.min_eig >= -kStructuralTol && r.max_eig <= 1.0 + kStructuralTol;
  r.holds_via_norm = cfg.lambda * cfg.lambda * spectral_norm(bell_operator(cfg)) <= 2.0 + 4.0 * kStructuralTol;
  return r;
}

// ---------------------------------------------------------------------------
// Singlet state.

// psi_n, the +1 eigenvector of n.sigma, and psi_-n.
inline std::array<std::array<Complex, 2>, 2> spin_eigenbasis(const UnitVector3& n) {
  const double theta = std::acos(std::clamp(n.z(), -1.0, 1.0));
  const double phi = std::atan2(n.y(), n.x());
  const Complex phase = std::polar(1.0, phi);
  const double c = std::cos(theta / 2.0), s = std::sin(theta / 2.0);
  return {{{Complex(c), phase * s}, {Complex(s), -phase * c}}};
}

// Projection onto (psi_n (x) psi_-n - psi_-n (x) psi_n) / sqrt 2. The result
// does not depend on n.
inline DensityOperator<4> singlet_state(const UnitVector3& n = UnitVector3(0.0, 0.0, 1.0)) {
  const auto basis = spin_eigenbasis(n);
  const auto& up = basis[0];
  const auto& down = basis[1];
  std::array<Complex, 4> psi{};
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) psi[2 * i + j] = (up[i] * down[j] - down[i] * up[j]) / std::numbers::sqrt2;
  Matrix<4> p;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) p(i, j) = psi[i] * std::conj(psi[j]);
  return DensityOperator<4>::assume(Hermitian<4>::hermitize(p));
}

// <Psi| E(ni, lambda) (x) E(nj, lambda) Psi> = (1 - lambda^2 ni.nj) / 4
inline double singlet_pair_prob(double lambda, const UnitVector3& ni, const UnitVector3& nj) {
  require_sharpness(lambda);
  return 0.25 * (1.0 - lambda * lambda * dot(ni, nj));
}

inline double unsharpness_epsilon(double lambda) { return 0.5 * (1.0 - lambda * lambda); }

struct ChshReport {
  double f = 0.0;
  // 2 / (1 - 2 eps); infinite at lambda = 0.
  double F = 0.0;
  double epsilon = 0.0;
  bool violated = false;
  ProbabilityTable pair_probs;
};

// |n1.n3 + n1.n4 - n2.n3 + n2.n4|
inline double correlation_sum(const BellConfiguration& cfg) {
  return std::abs(dot(cfg.n1, cfg.n3) + dot(cfg.n1, cfg.n4) - dot(cfg.n2, cfg.n3) + dot(cfg.n2, cfg.n4));
}

inline double chsh_bound(double epsilon) {
  const double d = 1.0 - 2.0 * epsilon;
  return d > 0.0 ? 2.0 / d : std::numeric_limits<double>::infinity();
}

inline ChshReport chsh_report(const BellConfiguration& cfg) {
  ChshReport r;
  r.f = correlation_sum(cfg);
  r.epsilon = unsharpness_epsilon(cfg.lambda);
  r.F = chsh_bound(r.epsilon);
  r.violated = r.f > r.F + kStructuralTol;
  for (int k : kSingleIndices) r.pair_probs.single(k) = 0.5;
  for (int i : kFirstSideIndices)
    for (int j : kSecondSideIndices)
      r.pair_probs.pair(i, j) = singlet_pair_prob(cfg.lambda, cfg.signed_direction(i), cfg.signed_direction(j));
  return r;
}

// ---------------------------------------------------------------------------
// Threshold scan.

struct ScanRow {
  double lambda = 0.0;
  double f = 0.0;
  double F = 0.0;
  // max over the swept configurations of max(-min eig, max eig - 1) of B~.
  double max_op_violation = 0.0;
  bool singlet_violated = false;
  bool operator_violated = false;
  bool violated() const { return singlet_violated || operator_violated; }
};

struct ScanResult {
  double lambda_star = 0.0;
  double lambda_star_singlet = 0.0;
  double lambda_star_operator = 0.0;
  std::vector<ScanRow> rows;
};

inline constexpr int kScanAngleSteps = 16;

inline ScanRow scan_row(double lambda) {
  ScanRow row;
  row.lambda = lambda;
  row.F = chsh_bound(unsharpness_epsilon(lambda));
  row.max_op_violation = -std::numeric_limits<double>::infinity();
  for (int m = 0; m <= kScanAngleSteps; ++m) {
    const double theta = m * (std::numbers::pi / 2.0) / kScanAngleSteps;
    const auto cfg = coplanar_configuration(lambda, theta);
    row.f = std::max(row.f, correlation_sum(cfg));
    const auto op = operator_chsh_holds(cfg);
    row.max_op_violation = std::max({row.max_op_violation, -op.min_eig, op.max_eig - 1.0});
  }
  row.singlet_violated = row.f > row.F + kStructuralTol;
  row.operator_violated = row.max_op_violation > kStructuralTol;
  return row;
}

// Rows for lambda = k / grid, k = 0..grid. lambda_star is the largest grid
// value at which neither the singlet nor the operator inequality is violated.
inline ScanResult scan_lambda_threshold(int grid, unsigned threads = 0) {
  if (grid < 10) throw PreconditionError("scan grid must be at least 10");
  ScanResult res;
  res.rows.resize(static_cast<std::size_t>(grid) + 1);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(res.rows.size()));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&res, grid, t, threads] {
        for (std::size_t k = t; k < res.rows.size(); k += threads)
          res.rows[k] = scan_row(static_cast<double>(k) / grid);
      });
  }
  for (const auto& row : res.rows) {
    if (!row.violated()) res.lambda_star = row.lambda;
    if (!row.singlet_violated) res.lambda_star_singlet = row.lambda;
    if (!row.operator_violated) res.lambda_star_operator = row.lambda;
  }
  return res;
}

}  // namespace ubell

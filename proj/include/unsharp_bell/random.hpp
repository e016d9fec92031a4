#pragma once

// Seeded samplers for directions, states, effects, probability tables and
// spacetime data. All draws go through one std::mt19937_64.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "unsharp_bell/bell.hpp"
#include "unsharp_bell/operators.hpp"
#include "unsharp_bell/probability_table.hpp"
#include "unsharp_bell/relativistic.hpp"
#include "unsharp_bell/spin_povm.hpp"

namespace ubell {

inline constexpr std::uint64_t kDefaultSeed = 20260101;

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed = kDefaultSeed) : rng_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  int sign() { return integer(0, 1) == 0 ? 1 : -1; }

  // Uniform on the sphere.
  UnitVector3 direction() {
    for (;;) {
      const Vec3 v{normal(), normal(), normal()};
      if (v.norm() > 1e-6) return UnitVector3(v);
    }
  }

  // Uniform on the x-z great circle.
  UnitVector3 planar_direction() {
    const double phi = uniform(0.0, 2.0 * std::numbers::pi);
    return UnitVector3(std::sin(phi), 0.0, std::cos(phi));
  }

  template <std::size_t N>
  Matrix<N> ginibre() {
    Matrix<N> g;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) g(i, j) = Complex(normal(), normal());
    return g;
  }

  template <std::size_t N>
  Hermitian<N> hermitian() {
    const auto g = ginibre<N>();
    return Hermitian<N>::hermitize(g + g.adjoint());
  }

  // Density operator G G^dag / tr, with a random rank between 1 and N.
  template <std::size_t N>
  DensityOperator<N> density() {
    const int rank = integer(1, static_cast<int>(N));
    auto g = ginibre<N>();
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = static_cast<std::size_t>(rank); j < N; ++j) g(i, j) = 0.0;
    const auto p = Hermitian<N>::hermitize(g * g.adjoint());
    return DensityOperator<N>::assume((1.0 / p.trace()) * p);
  }

  template <std::size_t N>
  DensityOperator<N> pure_state() {
    std::array<Complex, N> psi{};
    double norm = 0.0;
    for (auto& c : psi) {
      c = Complex(normal(), normal());
      norm += std::norm(c);
    }
    Matrix<N> p;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) p(i, j) = psi[i] * std::conj(psi[j]) / norm;
    return DensityOperator<N>::assume(Hermitian<N>::hermitize(p));
  }

  // Effect with spectrum drawn uniformly from [0, 1] in a random eigenbasis.
  template <std::size_t N>
  Effect<N> effect() {
    const auto sys = eigen_hermitian(hermitian<N>());
    std::array<double, N> spectrum{};
    for (auto& v : spectrum) v = uniform();
    Matrix<N> m;
    for (std::size_t k = 0; k < N; ++k)
      for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j)
          m(i, j) += spectrum[k] * sys[k].vector[i] * std::conj(sys[k].vector[j]);
    return Effect<N>::assume(Hermitian<N>::hermitize(m));
  }

  BellConfiguration configuration(double lambda) {
    return BellConfiguration(lambda, direction(), direction(), direction(), direction());
  }

  Jpd4 jpd() {
    Jpd4 j;
    double total = 0.0;
    for (std::size_t s = 0; s < 16; ++s) {
      j[s] = -std::log(uniform(1e-300, 1.0));
      total += j[s];
    }
    for (std::size_t s = 0; s < 16; ++s) j[s] /= total;
    return j;
  }

  SpacetimeEvent event(double extent = 5.0) {
    return {uniform(-extent, extent), uniform(-extent, extent), uniform(-extent, extent), uniform(-extent, extent)};
  }

  Vec3 velocity(double max_speed = 0.99) {
    const auto d = direction();
    return uniform(0.0, max_speed) * d.vec();
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace ubell

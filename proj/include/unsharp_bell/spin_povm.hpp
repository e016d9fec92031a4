#pragma once

// Unsharp spin-1/2 observables E(n, lambda) = (I + lambda n.sigma) / 2,
// pairwise coexistence and explicit joint observables.

#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "unsharp_bell/error.hpp"
#include "unsharp_bell/operators.hpp"

namespace ubell {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }

  friend Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
  friend Vec3 operator*(double s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

// Direction on the unit sphere; normalized at construction.
class UnitVector3 {
 public:
  UnitVector3() = default;

  UnitVector3(double x, double y, double z) : UnitVector3(Vec3{x, y, z}) {}

  explicit UnitVector3(const Vec3& v) {
    const double n = v.norm();
    if (!std::isfinite(n) || n == 0.0) throw PreconditionError("direction must be a finite nonzero vector");
    v_ = (1.0 / n) * v;
  }

  double x() const { return v_.x; }
  double y() const { return v_.y; }
  double z() const { return v_.z; }
  const Vec3& vec() const { return v_; }

  UnitVector3 operator-() const {
    UnitVector3 r;
    r.v_ = -v_;
    return r;
  }

  friend bool operator==(const UnitVector3&, const UnitVector3&) = default;

 private:
  Vec3 v_{0.0, 0.0, 1.0};
};

inline double dot(const UnitVector3& a, const UnitVector3& b) { return dot(a.vec(), b.vec()); }

// Parses "x,y,z" and normalizes.
inline UnitVector3 parse_direction(std::string_view text) {
  std::array<double, 3> c{};
  std::string s(text);
  std::istringstream is(s);
  for (std::size_t i = 0; i < 3; ++i) {
    if (!(is >> c[i])) throw PreconditionError("direction must be three comma-separated numbers: '" + s + "'");
    if (i < 2) {
      char sep = 0;
      if (!(is >> sep) || sep != ',') throw PreconditionError("direction must be three comma-separated numbers: '" + s + "'");
    }
  }
  is >> std::ws;
  if (!is.eof()) throw PreconditionError("trailing characters in direction: '" + s + "'");
  return UnitVector3(c[0], c[1], c[2]);
}

inline const std::array<Hermitian<2>, 3>& pauli_matrices() {
  static const std::array<Hermitian<2>, 3> sigma = [] {
    Matrix<2> s1, s2, s3;
    s1(0, 1) = 1.0;
    s1(1, 0) = 1.0;
    s2(0, 1) = Complex(0.0, -1.0);
    s2(1, 0) = Complex(0.0, 1.0);
    s3(0, 0) = 1.0;
    s3(1, 1) = -1.0;
    return std::array<Hermitian<2>, 3>{Hermitian<2>::hermitize(s1), Hermitian<2>::hermitize(s2),
                                       Hermitian<2>::hermitize(s3)};
  }();
  return sigma;
}

// v . sigma for an arbitrary (not necessarily unit) vector.
inline Hermitian<2> pauli_dot(const Vec3& v) {
  const auto& s = pauli_matrices();
  return v.x * s[0] + v.y * s[1] + v.z * s[2];
}

inline Hermitian<2> pauli_dot(const UnitVector3& n) { return pauli_dot(n.vec()); }

inline void require_sharpness(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    std::ostringstream os;
    os << "sharpness lambda must lie in [0,1], got " << lambda;
    throw PreconditionError(os.str());
  }
}

// Sharp spectral projection P_n = (I + n.sigma) / 2.
inline Hermitian<2> spin_projection(const UnitVector3& n) {
  return 0.5 * (Hermitian<2>::identity() + pauli_dot(n));
}

inline Effect<2> unsharp_effect(const UnitVector3& n, double lambda) {
  require_sharpness(lambda);
  return Effect<2>::assume(0.5 * (Hermitian<2>::identity() + lambda * pauli_dot(n)));
}

// The two-outcome POVM {E(n, lambda), E(-n, lambda)}.
class UnsharpSpinObservable {
 public:
  UnsharpSpinObservable(const UnitVector3& axis, double lambda) : axis_(axis), lambda_(lambda) {
    require_sharpness(lambda);
  }

  const UnitVector3& axis() const { return axis_; }
  double lambda() const { return lambda_; }

  // outcome is +1 or -1.
  Effect<2> effect(int outcome) const {
    if (outcome != 1 && outcome != -1) throw PreconditionError("spin outcome must be +1 or -1");
    return unsharp_effect(outcome == 1 ? axis_ : -axis_, lambda_);
  }

  std::array<Effect<2>, 2> povm() const { return {effect(1), effect(-1)}; }

 private:
  UnitVector3 axis_;
  double lambda_;
};

// ---------------------------------------------------------------------------
// Coexistence.

struct CoexistenceResult {
  bool coexistent = false;
  // 2 - lambda (|n1 + n2| + |n1 - n2|); nonnegative exactly when coexistent.
  double margin = 0.0;
};

inline CoexistenceResult pair_coexistent(double lambda, const UnitVector3& n1, const UnitVector3& n2) {
  require_sharpness(lambda);
  const double margin = 2.0 - lambda * ((n1.vec() + n2.vec()).norm() + (n1.vec() - n2.vec()).norm());
  return {margin >= -kStructuralTol, margin};
}

// A finite-outcome POVM with outcomes labelled by tuples of +1/-1, one slot
// per observable it jointly measures.
template <std::size_t N>
struct JointObservable {
  struct Outcome {
    std::vector<int> signs;
    Effect<N> effect;
  };
  std::vector<Outcome> outcomes;

  const Effect<N>& at(const std::vector<int>& signs) const {
    for (const auto& o : outcomes)
      if (o.signs == signs) return o.effect;
    throw PreconditionError("no such outcome in joint observable");
  }

  Hermitian<N> total() const {
    Hermitian<N> s;
    for (const auto& o : outcomes) s = s + o.effect.op();
    return s;
  }
};

struct PairJointCandidate {
  std::array<int, 2> signs{};
  Hermitian<2> op;
};

// The four operators E_kl, k labelling +-n1 and l labelling +-n2:
//   E_kl = 1/4 [(1 + k l x) I + lambda (k n1 + l n2) . sigma]
// with x = lambda (|n1 + n2| - |n1 - n2|) / 2. The marginals are
// E(+-n1, lambda), E(+-n2, lambda) for every x; this x balances the two
// positivity conditions so that the smallest eigenvalue of the family is
// margin / 8, i.e. all four are positive exactly when the pair is
// coexistent. At n1 orthogonal to n2 it coincides with x = n1.n2 / 2.
inline std::array<PairJointCandidate, 4> pair_joint_candidates(double lambda, const UnitVector3& n1,
                                                                const UnitVector3& n2) {
  require_sharpness(lambda);
  const double x = 0.5 * lambda * ((n1.vec() + n2.vec()).norm() - (n1.vec() - n2.vec()).norm());
  std::array<PairJointCandidate, 4> out{};
  std::size_t idx = 0;
  for (int k : {1, -1})
    for (int l : {1, -1}) {
      const Vec3 v = double(k) * n1.vec() + double(l) * n2.vec();
      out[idx++] = {{k, l}, 0.25 * ((1.0 + k * l * x) * Hermitian<2>::identity() + lambda * pauli_dot(v))};
    }
  return out;
}

inline JointObservable<2> joint_observable_pair(double lambda, const UnitVector3& n1, const UnitVector3& n2) {
  const auto coex = pair_coexistent(lambda, n1, n2);
  const auto candidates = pair_joint_candidates(lambda, n1, n2);
  if (!coex.coexistent) {
    double lo = 1.0;
    for (const auto& c : candidates) lo = std::min(lo, min_eigenvalue(c.op));
    std::ostringstream os;
    os << "observables are not coexistent (margin " << coex.margin << "); joint candidate has minimum eigenvalue "
       << lo;
    throw PreconditionError(os.str());
  }
  JointObservable<2> j;
  for (const auto& c : candidates)
    j.outcomes.push_back({{c.signs[0], c.signs[1]}, Effect<2>::from(c.op, 1e-10)});
  return j;
}

// Joint observable for four unsharp spins, a = n1, a' = n2 on the first
// system and b = n3, b' = n4 on the second, as products E_ij (x) E_kl.
// Outcome tuples are (sign n1, sign n2, sign n3, sign n4).
inline JointObservable<4> quadruple_joint(double lambda, const UnitVector3& n1, const UnitVector3& n2,
                                          const UnitVector3& n3, const UnitVector3& n4) {
  require_sharpness(lambda);
  const auto c12 = pair_coexistent(lambda, n1, n2);
  const auto c34 = pair_coexistent(lambda, n3, n4);
  if (!c12.coexistent || !c34.coexistent) {
    std::ostringstream os;
    os << "quadruple not coexistent: ";
    if (!c12.coexistent) os << "pair (n1,n2) fails with margin " << c12.margin << (c34.coexistent ? "" : "; ");
    if (!c34.coexistent) os << "pair (n3,n4) fails with margin " << c34.margin;
    throw PreconditionError(os.str());
  }
  const auto first = joint_observable_pair(lambda, n1, n2);
  const auto second = joint_observable_pair(lambda, n3, n4);
  JointObservable<4> j;
  for (const auto& a : first.outcomes)
    for (const auto& b : second.outcomes)
      j.outcomes.push_back({{a.signs[0], a.signs[1], b.signs[0], b.signs[1]}, tensor(a.effect, b.effect)});
  return j;
}

}  // namespace ubell

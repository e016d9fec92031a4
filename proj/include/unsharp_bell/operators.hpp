#pragma once

// Dense complex linear algebra for the two operator dimensions that occur in
// a two-spin experiment: single qubit (2) and qubit pair (4).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <sstream>
#include <string>

#include "unsharp_bell/error.hpp"

namespace ubell {

using Complex = std::complex<double>;

inline constexpr double kStructuralTol = 1e-12;
inline constexpr double kHermitianInputTol = 1e-9;
inline constexpr double kPsdRejectTol = 1e-9;

template <std::size_t N>
concept SupportedDim = (N == 2 || N == 4);

template <std::size_t N>
class Matrix {
 public:
  static constexpr std::size_t dim = N;

  Matrix() = default;

  static Matrix identity() {
    Matrix m;
    for (std::size_t i = 0; i < N; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix diagonal(const std::array<double, N>& d) {
    Matrix m;
    for (std::size_t i = 0; i < N; ++i) m(i, i) = d[i];
    return m;
  }

  Complex& operator()(std::size_t i, std::size_t j) { return data_[i * N + j]; }
  const Complex& operator()(std::size_t i, std::size_t j) const { return data_[i * N + j]; }

  Matrix adjoint() const {
    Matrix r;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) r(i, j) = std::conj((*this)(j, i));
    return r;
  }

  Complex trace() const {
    Complex t = 0.0;
    for (std::size_t i = 0; i < N; ++i) t += (*this)(i, i);
    return t;
  }

  // Largest entry modulus.
  double max_abs() const {
    double m = 0.0;
    for (const auto& z : data_) m = std::max(m, std::abs(z));
    return m;
  }

  // Largest |A(i,j) - conj(A(j,i))|.
  double hermiticity_defect() const {
    double m = 0.0;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = i; j < N; ++j)
        m = std::max(m, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
    return m;
  }

  Matrix& operator+=(const Matrix& o) {
    for (std::size_t k = 0; k < N * N; ++k) data_[k] += o.data_[k];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    for (std::size_t k = 0; k < N * N; ++k) data_[k] -= o.data_[k];
    return *this;
  }
  Matrix& operator*=(Complex s) {
    for (auto& z : data_) z *= s;
    return *this;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator-(Matrix a) { return a *= -1.0; }
  friend Matrix operator*(Complex s, Matrix a) { return a *= s; }
  friend Matrix operator*(Matrix a, Complex s) { return a *= s; }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    Matrix r;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t k = 0; k < N; ++k) {
        const Complex aik = a(i, k);
        if (aik == Complex{}) continue;
        for (std::size_t j = 0; j < N; ++j) r(i, j) += aik * b(k, j);
      }
    return r;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::array<Complex, N * N> data_{};
};

template <std::size_t N>
double max_abs_diff(const Matrix<N>& a, const Matrix<N>& b) {
  return (a - b).max_abs();
}

// Kronecker product, factor `a` indexes the slow (first-system) index.
template <std::size_t A, std::size_t B>
Matrix<A * B> kron(const Matrix<A>& a, const Matrix<B>& b) {
  Matrix<A * B> r;
  for (std::size_t i = 0; i < A; ++i)
    for (std::size_t j = 0; j < A; ++j)
      for (std::size_t k = 0; k < B; ++k)
        for (std::size_t l = 0; l < B; ++l) r(i * B + k, j * B + l) = a(i, j) * b(k, l);
  return r;
}

// Self-adjoint operator. Construction through `from` validates hermiticity;
// `hermitize` symmetrizes a matrix that is Hermitian up to round-off.
template <std::size_t N>
class Hermitian {
 public:
  static constexpr std::size_t dim = N;

  Hermitian() = default;

  static Hermitian from(const Matrix<N>& m, double tol = kStructuralTol) {
    const double defect = m.hermiticity_defect();
    if (!(defect <= tol)) {
      std::ostringstream os;
      os << "matrix is not Hermitian (asymmetry " << defect << " > " << tol << ")";
      throw InvariantError(os.str());
    }
    return hermitize(m);
  }

  static Hermitian hermitize(const Matrix<N>& m) {
    Hermitian h;
    h.m_ = 0.5 * (m + m.adjoint());
    for (std::size_t i = 0; i < N; ++i) h.m_(i, i) = h.m_(i, i).real();
    return h;
  }

  static Hermitian identity() { return hermitize(Matrix<N>::identity()); }
  static Hermitian diagonal(const std::array<double, N>& d) { return hermitize(Matrix<N>::diagonal(d)); }

  const Matrix<N>& matrix() const { return m_; }
  const Complex& operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  double trace() const { return m_.trace().real(); }

  friend Hermitian operator+(const Hermitian& a, const Hermitian& b) { return raw(a.m_ + b.m_); }
  friend Hermitian operator-(const Hermitian& a, const Hermitian& b) { return raw(a.m_ - b.m_); }
  friend Hermitian operator-(const Hermitian& a) { return raw(-a.m_); }
  friend Hermitian operator*(double s, const Hermitian& a) { return raw(s * a.m_); }
  friend Hermitian operator*(const Hermitian& a, double s) { return raw(s * a.m_); }
  friend Matrix<N> operator*(const Hermitian& a, const Hermitian& b) { return a.m_ * b.m_; }

  friend bool operator==(const Hermitian&, const Hermitian&) = default;

 private:
  static Hermitian raw(const Matrix<N>& m) {
    Hermitian h;
    h.m_ = m;
    return h;
  }

  Matrix<N> m_{};
};

template <std::size_t N>
double max_abs_diff(const Hermitian<N>& a, const Hermitian<N>& b) {
  return max_abs_diff(a.matrix(), b.matrix());
}

// A V* B V-style conjugation that is Hermitian by construction.
template <std::size_t N>
Hermitian<N> sandwich(const Hermitian<N>& outer, const Hermitian<N>& inner) {
  return Hermitian<N>::hermitize(outer.matrix() * inner.matrix() * outer.matrix());
}

// tr[A B] for Hermitian A, B (real).
template <std::size_t N>
double trace_product(const Hermitian<N>& a, const Hermitian<N>& b) {
  double t = 0.0;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t k = 0; k < N; ++k) t += (a(i, k) * b(k, i)).real();
  return t;
}

inline Hermitian<4> tensor(const Hermitian<2>& a, const Hermitian<2>& b) {
  return Hermitian<4>::hermitize(kron(a.matrix(), b.matrix()));
}

// ---------------------------------------------------------------------------
// Spectral decomposition.

namespace detail {

// Cyclic Jacobi rotations on a real symmetric M x M matrix (row-major).
// On return `a` is diagonal up to round-off and the columns of `v` hold the
// corresponding orthonormal eigenvectors.
template <std::size_t M>
void jacobi_symmetric(std::array<double, M * M>& a, std::array<double, M * M>& v) {
  auto at = [](std::array<double, M * M>& x, std::size_t i, std::size_t j) -> double& { return x[i * M + j]; };
  v.fill(0.0);
  for (std::size_t i = 0; i < M; ++i) at(v, i, i) = 1.0;

  double frob2 = 0.0;
  for (double x : a) frob2 += x * x;
  if (frob2 == 0.0) return;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off2 = 0.0;
    for (std::size_t p = 0; p < M; ++p)
      for (std::size_t q = p + 1; q < M; ++q) off2 += at(a, p, q) * at(a, p, q);
    if (off2 <= 1e-32 * frob2) return;

    for (std::size_t p = 0; p < M; ++p) {
      for (std::size_t q = p + 1; q < M; ++q) {
        const double apq = at(a, p, q);
        if (apq == 0.0) continue;
        const double theta = (at(a, q, q) - at(a, p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < M; ++k) {
          const double akp = at(a, k, p);
          const double akq = at(a, k, q);
          at(a, k, p) = c * akp - s * akq;
          at(a, k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < M; ++k) {
          const double apk = at(a, p, k);
          const double aqk = at(a, q, k);
          at(a, p, k) = c * apk - s * aqk;
          at(a, q, k) = s * apk + c * aqk;
        }
        at(a, p, q) = 0.0;
        at(a, q, p) = 0.0;
        for (std::size_t k = 0; k < M; ++k) {
          const double vkp = at(v, k, p);
          const double vkq = at(v, k, q);
          at(v, k, p) = c * vkp - s * vkq;
          at(v, k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
}

}  // namespace detail

template <std::size_t N>
struct EigenPair {
  double value = 0.0;
  std::array<Complex, N> vector{};
};

template <std::size_t N>
using EigenSystem = std::array<EigenPair<N>, N>;

// Eigenvalues ascending with orthonormal eigenvectors.
//
// H = X + iY is diagonalized through the real symmetric embedding
// [[X, -Y], [Y, X]], whose spectrum is that of H with every eigenvalue
// doubled. The complex eigenvectors are recovered from the real ones by
// complex Gram-Schmidt, always taking the candidate with the largest
// residual so that each complex eigenspace is filled exactly once.
template <std::size_t N>
EigenSystem<N> eigen_hermitian(const Hermitian<N>& h) {
  constexpr std::size_t M = 2 * N;
  std::array<double, M * M> a{};
  std::array<double, M * M> v{};
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) {
      const double x = h(i, j).real();
      const double y = h(i, j).imag();
      a[i * M + j] = x;
      a[(i + N) * M + (j + N)] = x;
      a[(i + N) * M + j] = y;
      a[i * M + (j + N)] = -y;
    }
  detail::jacobi_symmetric<M>(a, v);

  std::array<std::array<Complex, N>, M> candidates{};
  for (std::size_t c = 0; c < M; ++c)
    for (std::size_t i = 0; i < N; ++i) candidates[c][i] = Complex(v[i * M + c], v[(i + N) * M + c]);

  EigenSystem<N> out{};
  std::array<bool, M> used{};
  for (std::size_t found = 0; found < N; ++found) {
    std::size_t best = M;
    double best_norm = -1.0;
    std::array<Complex, N> best_vec{};
    for (std::size_t c = 0; c < M; ++c) {
      if (used[c]) continue;
      std::array<Complex, N> r = candidates[c];
      for (std::size_t f = 0; f < found; ++f) {
        Complex overlap = 0.0;
        for (std::size_t i = 0; i < N; ++i) overlap += std::conj(out[f].vector[i]) * r[i];
        for (std::size_t i = 0; i < N; ++i) r[i] -= overlap * out[f].vector[i];
      }
      double norm = 0.0;
      for (const auto& z : r) norm += std::norm(z);
      norm = std::sqrt(norm);
      if (norm > best_norm) {
        best_norm = norm;
        best = c;
        best_vec = r;
      }
    }
    used[best] = true;
    for (auto& z : best_vec) z /= best_norm;
    // Re-orthogonalize once more against the accepted vectors.
    for (std::size_t f = 0; f < found; ++f) {
      Complex overlap = 0.0;
      for (std::size_t i = 0; i < N; ++i) overlap += std::conj(out[f].vector[i]) * best_vec[i];
      for (std::size_t i = 0; i < N; ++i) best_vec[i] -= overlap * out[f].vector[i];
    }
    double norm = 0.0;
    for (const auto& z : best_vec) norm += std::norm(z);
    norm = std::sqrt(norm);
    for (auto& z : best_vec) z /= norm;

    double rayleigh = 0.0;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) rayleigh += (std::conj(best_vec[i]) * h(i, j) * best_vec[j]).real();
    out[found] = {rayleigh, best_vec};
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.value < y.value; });
  return out;
}

// Entry point for raw matrices: rejects inputs that are not Hermitian to
// within 1e-9.
template <std::size_t N>
EigenSystem<N> eigen_hermitian(const Matrix<N>& m) {
  return eigen_hermitian(Hermitian<N>::from(m, kHermitianInputTol));
}

template <std::size_t N>
std::array<double, N> eigenvalues(const Hermitian<N>& h) {
  const auto sys = eigen_hermitian(h);
  std::array<double, N> vals{};
  for (std::size_t i = 0; i < N; ++i) vals[i] = sys[i].value;
  return vals;
}

template <std::size_t N>
double min_eigenvalue(const Hermitian<N>& h) {
  return eigenvalues(h).front();
}

template <std::size_t N>
double max_eigenvalue(const Hermitian<N>& h) {
  return eigenvalues(h).back();
}

// Largest |eigenvalue|.
template <std::size_t N>
double spectral_norm(const Hermitian<N>& h) {
  const auto vals = eigenvalues(h);
  return std::max(std::abs(vals.front()), std::abs(vals.back()));
}

// sum_i f(lambda_i) v_i v_i^*
template <std::size_t N, typename F>
Hermitian<N> spectral_map(const EigenSystem<N>& sys, F&& f) {
  Matrix<N> r;
  for (const auto& [value, vec] : sys) {
    const double w = f(value);
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) r(i, j) += w * vec[i] * std::conj(vec[j]);
  }
  return Hermitian<N>::hermitize(r);
}

template <std::size_t N>
Hermitian<N> reconstruct(const EigenSystem<N>& sys) {
  return spectral_map(sys, [](double x) { return x; });
}

// Sum of absolute eigenvalues.
template <std::size_t N>
double trace_norm(const Hermitian<N>& h) {
  double s = 0.0;
  for (double x : eigenvalues(h)) s += std::abs(x);
  return s;
}

// Positive square root. Eigenvalues in [-1e-9, 0) are treated as round-off
// and clamped to zero; anything more negative is rejected.
template <std::size_t N>
Hermitian<N> sqrt_psd(const Hermitian<N>& h) {
  const auto sys = eigen_hermitian(h);
  if (sys.front().value < -kPsdRejectTol) {
    std::ostringstream os;
    os << "sqrt_psd: operator is not positive semidefinite (min eigenvalue " << sys.front().value << ")";
    throw PreconditionError(os.str());
  }
  return spectral_map(sys, [](double x) { return std::sqrt(std::max(x, 0.0)); });
}

enum class Subsystem { First = 1, Second = 2 };

// Reduced operator on the kept factor of a two-qubit operator.
inline Hermitian<2> partial_trace(const Hermitian<4>& rho, Subsystem keep) {
  Matrix<2> r;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t k = 0; k < 2; ++k) {
        if (keep == Subsystem::First)
          r(i, j) += rho(2 * i + k, 2 * j + k);
        else
          r(i, j) += rho(2 * k + i, 2 * k + j);
      }
  return Hermitian<2>::hermitize(r);
}

// ---------------------------------------------------------------------------
// Validated operator kinds.

// O <= E <= I.
template <std::size_t N>
class Effect {
 public:
  static Effect from(const Hermitian<N>& h, double tol = kStructuralTol) {
    const auto vals = eigenvalues(h);
    if (vals.front() < -tol || vals.back() > 1.0 + tol) {
      std::ostringstream os;
      os << "operator is not an effect (spectrum [" << vals.front() << ", " << vals.back() << "])";
      throw InvariantError(os.str());
    }
    return Effect(h);
  }

  // For operators that are effects by construction (products of commuting
  // effects, complements); skips the spectral check.
  static Effect assume(const Hermitian<N>& h) { return Effect(h); }

  static Effect identity() { return Effect(Hermitian<N>::identity()); }

  const Hermitian<N>& op() const { return op_; }
  Effect complement() const { return Effect(Hermitian<N>::identity() - op_); }

 private:
  explicit Effect(const Hermitian<N>& h) : op_(h) {}
  Hermitian<N> op_;
};

// Positive, unit trace.
template <std::size_t N>
class DensityOperator {
 public:
  static DensityOperator from(const Hermitian<N>& h, double tol = kStructuralTol) {
    const double tr = h.trace();
    if (std::abs(tr - 1.0) > tol) {
      std::ostringstream os;
      os << "state does not have unit trace (trace " << tr << ")";
      throw InvariantError(os.str());
    }
    const double lo = min_eigenvalue(h);
    if (lo < -tol) {
      std::ostringstream os;
      os << "state is not positive (min eigenvalue " << lo << ")";
      throw InvariantError(os.str());
    }
    return DensityOperator(h);
  }

  static DensityOperator assume(const Hermitian<N>& h) { return DensityOperator(h); }

  static DensityOperator maximally_mixed() { return DensityOperator((1.0 / N) * Hermitian<N>::identity()); }

  const Hermitian<N>& op() const { return op_; }

 private:
  explicit DensityOperator(const Hermitian<N>& h) : op_(h) {}
  Hermitian<N> op_;
};

template <std::size_t N>
Hermitian<N> sqrt_psd(const Effect<N>& e) {
  return sqrt_psd(e.op());
}

inline Effect<4> tensor(const Effect<2>& a, const Effect<2>& b) {
  return Effect<4>::assume(tensor(a.op(), b.op()));
}

}  // namespace ubell

#pragma once
// Polynomials in the unit-delay operator z^-1.
//
// A DelayPoly stores the coefficient sequence [c0, c1, ..., cn] of
//   p(z^-1) = c0 + c1*z^-1 + ... + cn*z^-n
// in ascending delay powers.  The empty sequence is the zero polynomial;
// its degree is the sentinel k_zero_poly_degree (think "-infinity").
// Trailing coefficients with magnitude <= k_eps_trim are dropped on
// construction and after every arithmetic operation.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace istc {

inline constexpr double k_eps_trim = 1e-12;      // trailing-coefficient trim threshold
inline constexpr double k_eps_stability = 1e-9;  // strict-stability margin on root moduli
inline constexpr int k_zero_poly_degree = std::numeric_limits<int>::min();

template <typename Scalar>
using Coeffs = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar = double>
class DelayPoly {
 public:
  DelayPoly() = default;

  explicit DelayPoly(Coeffs<Scalar> c) : c_(std::move(c)) { trim(); }

  DelayPoly(std::initializer_list<Scalar> c)
      : c_(Eigen::Map<const Coeffs<Scalar>>(c.begin(),
                                            static_cast<Eigen::Index>(c.size()))) {
    trim();
  }

  static DelayPoly zero() { return DelayPoly(); }
  static DelayPoly one() { return DelayPoly({Scalar(1)}); }

  // Degree of the polynomial; k_zero_poly_degree for the zero polynomial.
  int degree() const {
    return c_.size() == 0 ? k_zero_poly_degree : static_cast<int>(c_.size()) - 1;
  }
  bool is_zero() const { return c_.size() == 0; }
  Eigen::Index size() const { return c_.size(); }

  // Coefficient of z^-i; zero beyond the stored range (any i is valid).
  Scalar coeff(Eigen::Index i) const {
    return (i >= 0 && i < c_.size()) ? c_(i) : Scalar(0);
  }
  Scalar operator[](Eigen::Index i) const { return coeff(i); }
  const Coeffs<Scalar>& coeffs() const { return c_; }

  friend bool operator==(const DelayPoly& a, const DelayPoly& b) {
    return a.c_.size() == b.c_.size() && a.c_ == b.c_;
  }

 private:
  void trim() {
    Eigen::Index n = c_.size();
    while (n > 0 && std::abs(c_(n - 1)) <= Scalar(k_eps_trim)) --n;
    c_.conservativeResize(n);
  }

  Coeffs<Scalar> c_;  // ascending powers of z^-1; empty means zero
};

// ---------------------------------------------------------------------------
// Arithmetic
// ---------------------------------------------------------------------------

template <typename Scalar>
DelayPoly<Scalar> add(const DelayPoly<Scalar>& a, const DelayPoly<Scalar>& b) {
  Eigen::Index n = std::max(a.size(), b.size());
  Coeffs<Scalar> c = Coeffs<Scalar>::Zero(n);
  c.head(a.size()) += a.coeffs();
  c.head(b.size()) += b.coeffs();
  return DelayPoly<Scalar>(std::move(c));
}

template <typename Scalar>
DelayPoly<Scalar> sub(const DelayPoly<Scalar>& a, const DelayPoly<Scalar>& b) {
  Eigen::Index n = std::max(a.size(), b.size());
  Coeffs<Scalar> c = Coeffs<Scalar>::Zero(n);
  c.head(a.size()) += a.coeffs();
  c.head(b.size()) -= b.coeffs();
  return DelayPoly<Scalar>(std::move(c));
}

template <typename Scalar>
DelayPoly<Scalar> scale(const DelayPoly<Scalar>& a, Scalar s) {
  return DelayPoly<Scalar>(Coeffs<Scalar>(a.coeffs() * s));
}

// Convolution product; degree = deg a + deg b.
template <typename Scalar>
DelayPoly<Scalar> mul(const DelayPoly<Scalar>& a, const DelayPoly<Scalar>& b) {
  if (a.is_zero() || b.is_zero()) return DelayPoly<Scalar>::zero();
  Coeffs<Scalar> c = Coeffs<Scalar>::Zero(a.size() + b.size() - 1);
  for (Eigen::Index i = 0; i < a.size(); ++i)
    c.segment(i, b.size()) += a.coeffs()(i) * b.coeffs();
  return DelayPoly<Scalar>(std::move(c));
}

template <typename Scalar>
DelayPoly<Scalar> operator+(const DelayPoly<Scalar>& a, const DelayPoly<Scalar>& b) {
  return add(a, b);
}
template <typename Scalar>
DelayPoly<Scalar> operator-(const DelayPoly<Scalar>& a, const DelayPoly<Scalar>& b) {
  return sub(a, b);
}
template <typename Scalar>
DelayPoly<Scalar> operator*(const DelayPoly<Scalar>& a, const DelayPoly<Scalar>& b) {
  return mul(a, b);
}
template <typename Scalar>
DelayPoly<Scalar> operator*(Scalar s, const DelayPoly<Scalar>& a) {
  return scale(a, s);
}
template <typename Scalar>
DelayPoly<Scalar> operator*(const DelayPoly<Scalar>& a, Scalar s) {
  return scale(a, s);
}

// p(z^-1) multiplied by z^-k (coefficient shift by k delay steps).
template <typename Scalar>
DelayPoly<Scalar> shift(const DelayPoly<Scalar>& a, int k) {
  if (k < 0) throw std::invalid_argument("shift: negative delay");
  if (a.is_zero() || k == 0) return a;
  Coeffs<Scalar> c = Coeffs<Scalar>::Zero(a.size() + k);
  c.tail(a.size()) = a.coeffs();
  return DelayPoly<Scalar>(std::move(c));
}

// Horner evaluation at a value of z^-1 (real or complex).
template <typename Scalar, typename T>
T eval(const DelayPoly<Scalar>& p, const T& zinv) {
  T acc{};
  for (Eigen::Index i = p.size(); i-- > 0;) acc = acc * zinv + T(p.coeffs()(i));
  return acc;
}

// Delta = 1 - z^-1 and its powers.
template <typename Scalar = double>
DelayPoly<Scalar> delta() {
  return DelayPoly<Scalar>({Scalar(1), Scalar(-1)});
}

template <typename Scalar = double>
DelayPoly<Scalar> delta_pow(int m) {
  if (m < 0) throw std::invalid_argument("delta_pow: negative exponent");
  DelayPoly<Scalar> out = DelayPoly<Scalar>::one();
  for (int i = 0; i < m; ++i) out = mul(out, delta<Scalar>());
  return out;
}

// 1 - z^-1 * p(z^-1); appears as the output-feedback factor of closed loops.
template <typename Scalar>
DelayPoly<Scalar> one_minus_shift(const DelayPoly<Scalar>& p) {
  return sub(DelayPoly<Scalar>::one(), shift(p, 1));
}

// ---------------------------------------------------------------------------
// Roots and stability
// ---------------------------------------------------------------------------

// Roots in the z-plane of z^n * p(z^-1), computed via companion-matrix
// eigenvalues.  Leading near-zero coefficients (pure-delay factors) are
// stripped first: a factor z^-k contributes no finite z-plane roots.
template <typename Scalar>
std::vector<std::complex<Scalar>> z_roots(const DelayPoly<Scalar>& p) {
  if (p.degree() < 1)
    throw std::invalid_argument("z_roots: no roots defined");
  Eigen::Index lead = 0;
  while (lead < p.size() && std::abs(p.coeffs()(lead)) <= Scalar(k_eps_trim)) ++lead;
  const Eigen::Index m = p.size() - 1 - lead;  // root count after delay strip
  std::vector<std::complex<Scalar>> roots;
  if (m <= 0) return roots;
  // Monic polynomial in z: z^m + (c_{lead+1}/c_lead) z^{m-1} + ... + c_n/c_lead.
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Mat companion = Mat::Zero(m, m);
  for (Eigen::Index i = 0; i + 1 < m; ++i) companion(i + 1, i) = Scalar(1);
  const Scalar c0 = p.coeffs()(lead);
  for (Eigen::Index i = 0; i < m; ++i)
    companion(i, m - 1) = -p.coeffs()(p.size() - 1 - i) / c0;
  Eigen::EigenSolver<Mat> es(companion, /*computeEigenvectors=*/false);
  roots.reserve(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) roots.push_back(es.eigenvalues()(i));
  return roots;
}

template <typename Scalar>
struct StabilityVerdict {
  std::vector<std::complex<Scalar>> roots;  // z-plane roots
  Scalar max_modulus{0};
  bool stable{true};
  Scalar margin{1};  // 1 - max_modulus
};

// Strict Schur stability: every z-plane root inside the unit disk with
// margin k_eps_stability.  Constants have no roots and are stable, margin 1.
template <typename Scalar>
StabilityVerdict<Scalar> is_strictly_stable(const DelayPoly<Scalar>& p) {
  if (p.is_zero())
    throw std::invalid_argument("is_strictly_stable: zero polynomial");
  StabilityVerdict<Scalar> v;
  if (p.degree() >= 1) v.roots = z_roots(p);
  for (const auto& r : v.roots) v.max_modulus = std::max(v.max_modulus, std::abs(r));
  v.margin = Scalar(1) - v.max_modulus;
  v.stable = v.max_modulus < Scalar(1) - Scalar(k_eps_stability);
  return v;
}

// ---------------------------------------------------------------------------
// Unit-root factoring and final-value limits
// ---------------------------------------------------------------------------

template <typename Scalar>
struct DeltaFactoring {
  int m{0};                  // multiplicity of the (1 - z^-1) factor
  DelayPoly<Scalar> reduced; // p / Delta^m, with |reduced(1)| > tol
};

// Largest m with p = Delta^m * reduced.  Each synthetic division by
// (1 - z^-1) uses prefix sums; the remainder is p(1), so division proceeds
// while |p(1)| <= tol.
template <typename Scalar>
DeltaFactoring<Scalar> factor_delta(const DelayPoly<Scalar>& p, Scalar tol = Scalar(1e-9)) {
  DeltaFactoring<Scalar> out;
  out.reduced = p;
  if (p.is_zero()) return out;
  while (!out.reduced.is_zero() &&
         std::abs(eval(out.reduced, Scalar(1))) <= tol) {
    const auto& c = out.reduced.coeffs();
    // p = (1 - z^-1) q + p(1) z^-n with q_i = sum_{j<=i} c_j.
    Coeffs<Scalar> q(c.size() - 1);
    Scalar acc = 0;
    for (Eigen::Index i = 0; i + 1 < c.size(); ++i) {
      acc += c(i);
      q(i) = acc;
    }
    out.reduced = DelayPoly<Scalar>(std::move(q));
    ++out.m;
  }
  return out;
}

// Rational transfer function in z^-1.
template <typename Scalar = double>
struct RationalTf {
  DelayPoly<Scalar> num;
  DelayPoly<Scalar> den;
};

template <typename Scalar>
struct Limit {
  bool finite{true};
  Scalar value{0};  // meaningful only when finite

  static Limit finite_value(Scalar v) { return Limit{true, v}; }
  static Limit diverges() { return Limit{false, Scalar(0)}; }
};

// Final value of the signal with transform f(z) * R(z), where R has a pole
// of order n+1 at z = 1 and its numerator evaluates to input_num_at_1 there:
//   lim_{k->inf} x(k) = lim_{z->1} (1 - z^-1) f(z) R(z).
// Common Delta factors shared by f.num and f.den are cancelled first; the
// remaining den must not vanish at z = 1.  With p the surviving numerator
// unit-root multiplicity: p > n gives Finite(0); p = n gives
// Finite(reduced_num(1) * input_num_at_1 / den(1)); p < n diverges.
template <typename Scalar>
Limit<Scalar> final_value_limit(const RationalTf<Scalar>& f, int input_pole_order,
                                Scalar input_num_at_1, Scalar tol = Scalar(1e-9)) {
  if (input_pole_order < 1)
    throw std::invalid_argument("final_value_limit: input pole order must be >= 1");
  const int n = input_pole_order - 1;
  if (f.num.is_zero()) {
    // Zero transfer: the output signal is identically zero.
    return Limit<Scalar>::finite_value(Scalar(0));
  }
  DeltaFactoring<Scalar> fn = factor_delta(f.num, tol);
  DeltaFactoring<Scalar> fd = factor_delta(f.den, tol);
  const int common = std::min(fn.m, fd.m);
  const int p = fn.m - common;
  const int q = fd.m - common;
  if (q > 0 || std::abs(eval(fd.reduced, Scalar(1))) <= tol)
    throw std::invalid_argument("final_value_limit: indeterminate limit");
  if (p > n) return Limit<Scalar>::finite_value(Scalar(0));
  if (p < n) return Limit<Scalar>::diverges();
  return Limit<Scalar>::finite_value(eval(fn.reduced, Scalar(1)) * input_num_at_1 /
                                     eval(fd.reduced, Scalar(1)));
}

}  // namespace istc

#pragma once
// Controller synthesis and closed-loop analysis for the incremental
// self-tuning law
//   H(z^-1) du(k) = E(z^-1) [y*(k+d) - y(k)] - G(z^-1) dy(k).
//
// Synthesis routes:
//  - synth_pole_placement: H, G, E chosen so the closed-loop characteristic
//    polynomial equals (1 + z^-1 phi_w) * Delta * A_m with numerator B_m
//    (which must carry a Delta factor; see the DC-constraint note below).
//  - synth_min_phase: E fixed in PID form, H and G solve the Delta-free
//    identity (1 - z^-1 phi_y) H + z^-d phi_u G = target_T1.
//  - synth_mfac: the closed-form family H = lambda*Delta^m + phi_{Ly+1} phi_u,
//    E = phi_{Ly+1}, G = phi_{Ly+1} phi_y (m = 0 is the classical special
//    case; m >= 1 inserts integrators into the lambda path).
//
// Both matching systems share a one-dimensional solution family
//   (H, G) -> (H + t z^-d phi_u, G - t (1 - z^-1 phi_y)),
// because the perturbation degrees fit the unknown degrees exactly.  The
// solver returns the minimum-norm least-squares solution and then picks the
// family member minimizing ||G|| so results are reproducible.

#include "istc/model.hpp"
#include "istc/poly.hpp"

#include <map>
#include <string>
#include <variant>

namespace istc {

inline constexpr double k_eps_h = 1e-8;  // invertibility threshold for h_0

template <typename Scalar = double>
struct ControllerPolys {
  DelayPoly<Scalar> H;
  DelayPoly<Scalar> E;
  DelayPoly<Scalar> G;
  int d{1};

  void validate() const {
    if (d < 1) throw std::invalid_argument("ControllerPolys: d >= 1 required");
    if (std::abs(H.coeff(0)) <= Scalar(k_eps_h))
      throw std::invalid_argument("ControllerPolys: singular control gain (|h_0| too small)");
  }
};

template <typename Scalar = double>
struct DesignSpec {
  DelayPoly<Scalar> A_m;  // desired stable pole polynomial
  DelayPoly<Scalar> B_m;  // desired zero polynomial; must vanish at z = 1
  std::optional<DelayPoly<Scalar>> explicit_E;  // bypasses the B_m division
};

template <typename Scalar = double>
struct PidSpec {
  Scalar k_p{0};
  Scalar k_i{0};
  Scalar k_d{0};
};

// E = k_p (1 - z^-1) + k_i + k_d (1 - 2 z^-1 + z^-2).
template <typename Scalar>
DelayPoly<Scalar> pid_to_e(const PidSpec<Scalar>& pid) {
  return DelayPoly<Scalar>(
      {pid.k_p + pid.k_i + pid.k_d, -pid.k_p - Scalar(2) * pid.k_d, pid.k_d});
}

namespace detail {

// Least-squares solution of conv(den, q) = num with quotient length q_len;
// returns the quotient and the max-norm residual.
template <typename Scalar>
std::pair<DelayPoly<Scalar>, Scalar> divide_ls(const DelayPoly<Scalar>& num,
                                               const DelayPoly<Scalar>& den,
                                               Eigen::Index q_len) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (den.is_zero()) throw std::invalid_argument("divide_ls: zero divisor");
  q_len = std::max<Eigen::Index>(q_len, 1);
  const Eigen::Index rows = std::max<Eigen::Index>(den.size() + q_len - 1, num.size());
  Mat M = Mat::Zero(rows, q_len);
  for (Eigen::Index j = 0; j < q_len; ++j)
    M.block(j, j, den.size(), 1) = den.coeffs();
  Coeffs<Scalar> b = Coeffs<Scalar>::Zero(rows);
  b.head(num.size()) = num.coeffs();
  Coeffs<Scalar> q = M.completeOrthogonalDecomposition().solve(b);
  const Scalar resid = (M * q - b).template lpNorm<Eigen::Infinity>();
  return {DelayPoly<Scalar>(std::move(q)), resid};
}

template <typename Scalar>
struct MatchingResult {
  DelayPoly<Scalar> H;
  DelayPoly<Scalar> G;
  Scalar residual{0};
};

// Solves sum_i h_i col_h(i) + sum_j g_j col_g(j) = target by coefficient
// matching, where col_h(i) = z^-i * base_h and col_g(j) = z^-j * base_g.
// H has n_h coefficients, G has n_g.  The structural kernel direction
// (base_g-shaped shift on H, -base_h-shaped shift on G at matched lags) is
// resolved by minimizing ||G||.  Rank collapse beyond that one-dimensional
// family raises an error carrying a conditioning diagnostic.
template <typename Scalar>
MatchingResult<Scalar> solve_matching(const DelayPoly<Scalar>& base_h,
                                      const DelayPoly<Scalar>& base_g,
                                      const DelayPoly<Scalar>& target,
                                      Eigen::Index n_h, Eigen::Index n_g,
                                      const DelayPoly<Scalar>& kernel_h,
                                      const DelayPoly<Scalar>& kernel_g) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index rows_h = base_h.is_zero() ? n_h : base_h.size() + n_h - 1;
  const Eigen::Index rows_g = base_g.is_zero() ? n_g : base_g.size() + n_g - 1;
  const Eigen::Index rows =
      std::max({rows_h, rows_g, static_cast<Eigen::Index>(target.size()),
                Eigen::Index(1)});
  Mat M = Mat::Zero(rows, n_h + n_g);
  for (Eigen::Index i = 0; i < n_h && !base_h.is_zero(); ++i)
    M.block(i, i, base_h.size(), 1) = base_h.coeffs();
  for (Eigen::Index j = 0; j < n_g && !base_g.is_zero(); ++j)
    M.block(j, n_h + j, base_g.size(), 1) = base_g.coeffs();
  Coeffs<Scalar> b = Coeffs<Scalar>::Zero(rows);
  b.head(target.size()) = target.coeffs();

  auto cod = M.completeOrthogonalDecomposition();
  cod.setThreshold(Scalar(1e-9));
  if (cod.rank() < n_h + n_g - 1) {
    std::ostringstream os;
    os << "solve_matching: singular matching system (rank " << cod.rank()
       << " of " << n_h + n_g << " unknowns; structural kernel accounts for 1)";
    throw std::runtime_error(os.str());
  }
  Coeffs<Scalar> x = cod.solve(b);

  // Canonical member of the one-dimensional family: minimize ||G||.
  Coeffs<Scalar> kh = Coeffs<Scalar>::Zero(n_h);
  Coeffs<Scalar> kg = Coeffs<Scalar>::Zero(n_g);
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(kernel_h.size(), n_h); ++i)
    kh(i) = kernel_h.coeffs()(i);
  for (Eigen::Index j = 0; j < std::min<Eigen::Index>(kernel_g.size(), n_g); ++j)
    kg(j) = kernel_g.coeffs()(j);
  const Scalar kg2 = kg.squaredNorm();
  if (kg2 > Scalar(0)) {
    const Scalar t = -x.tail(n_g).dot(kg) / kg2;
    x.head(n_h) += t * kh;
    x.tail(n_g) += t * kg;
  }

  MatchingResult<Scalar> out;
  out.H = DelayPoly<Scalar>(Coeffs<Scalar>(x.head(n_h)));
  out.G = DelayPoly<Scalar>(Coeffs<Scalar>(x.tail(n_g)));
  out.residual = (M * x - b).template lpNorm<Eigen::Infinity>();
  return out;
}

}  // namespace detail

// Closed-loop characteristic polynomial
//   T = H (1 - z^-1 phi_y) Delta + z^-d phi_u (E + G Delta).
template <typename Scalar>
DelayPoly<Scalar> char_poly(const PgModel<Scalar>& pg, const ControllerPolys<Scalar>& c) {
  const DelayPoly<Scalar> fb = one_minus_shift(pg.phi_y_poly());
  const DelayPoly<Scalar> left = mul(mul(c.H, fb), delta<Scalar>());
  const DelayPoly<Scalar> right =
      shift(mul(pg.phi_u_poly(), add(c.E, mul(c.G, delta<Scalar>()))), c.d);
  return add(left, right);
}

// Pole placement (full disturbance-aware design).  E solves
// phi_u * E = B_m exactly; H and G match
//   H (1 - z^-1 phi_y) Delta + z^-d phi_u (E + G Delta)
//     = (1 + z^-1 phi_w) Delta A_m
// with deg H = L_u + d - 1 and deg G = L_y.  The left side of the
// H/G identity vanishes at z = 1 once E is fixed with B_m(1) = 0, so a
// nonzero B_m(1) is rejected as an incompatible DC constraint.
template <typename Scalar>
ControllerPolys<Scalar> synth_pole_placement(const PgModel<Scalar>& pg,
                                             const DesignSpec<Scalar>& spec) {
  const ModelOrders& o = pg.orders;
  if (spec.A_m.is_zero() || !is_strictly_stable(spec.A_m).stable)
    throw std::invalid_argument("synth_pole_placement: A_m must be strictly stable");
  if (spec.A_m.degree() + o.L_w > o.L_y + o.L_u + o.d - 1) {
    std::ostringstream os;
    os << "synth_pole_placement: degree condition violated (deg A_m + L_w = "
       << spec.A_m.degree() + o.L_w << " > " << o.L_y + o.L_u + o.d - 1 << ")";
    throw std::invalid_argument(os.str());
  }
  const DelayPoly<Scalar> phi_u = pg.phi_u_poly();
  if (std::abs(eval(phi_u, Scalar(1))) <= Scalar(k_eps_h))
    throw std::invalid_argument("synth_pole_placement: phi_u(1) is zero");

  DelayPoly<Scalar> E;
  if (spec.explicit_E) {
    E = *spec.explicit_E;
  } else {
    if (std::abs(eval(spec.B_m, Scalar(1))) > Scalar(1e-9))
      throw std::invalid_argument("synth_pole_placement: incompatible DC constraint (B_m(1) != 0)");
    const Eigen::Index q_len =
        std::max<Eigen::Index>(spec.B_m.size() - phi_u.size() + 1, 1);
    auto [q, resid] = detail::divide_ls(spec.B_m, phi_u, q_len);
    if (resid > Scalar(1e-9))
      throw std::invalid_argument("synth_pole_placement: unattainable zero polynomial");
    E = q;
  }

  // Target for the H/G matching: (1 + z^-1 phi_w) Delta A_m - z^-d phi_u E.
  DelayPoly<Scalar> noise_poly =
      o.L_w > 0 ? add(DelayPoly<Scalar>::one(), shift(pg.phi_w_poly(), 1))
                : DelayPoly<Scalar>::one();
  const DelayPoly<Scalar> target_full = mul(mul(noise_poly, delta<Scalar>()), spec.A_m);
  const DelayPoly<Scalar> rhs = sub(target_full, shift(mul(phi_u, E), o.d));

  const DelayPoly<Scalar> fb = one_minus_shift(pg.phi_y_poly());
  const DelayPoly<Scalar> base_h = mul(fb, delta<Scalar>());
  const DelayPoly<Scalar> base_g = mul(shift(phi_u, o.d), delta<Scalar>());
  auto sol = detail::solve_matching(base_h, base_g, rhs,
                                    Eigen::Index(o.L_u + o.d), Eigen::Index(o.L_y + 1),
                                    shift(phi_u, o.d), scale(fb, Scalar(-1)));
  if (sol.residual > Scalar(1e-9)) {
    std::ostringstream os;
    os << "synth_pole_placement: matching identity unattainable (residual "
       << sol.residual << ")";
    throw std::runtime_error(os.str());
  }
  ControllerPolys<Scalar> c{sol.H, E, sol.G, o.d};
  c.validate();
  return c;
}

// PID-based design for minimum-phase plants.  H and G solve the Delta-free
// identity (1 - z^-1 phi_y) H + z^-d phi_u G = target_T1 in the least-squares
// sense (minimum-norm + minimal ||G||); E comes from the PID gains.  When
// used inside an adaptive loop the minimum-phase test on transient estimates
// can be disabled.
template <typename Scalar>
ControllerPolys<Scalar> synth_min_phase(const PgModel<Scalar>& pg,
                                        const DelayPoly<Scalar>& target_T1,
                                        const PidSpec<Scalar>& pid,
                                        bool check_min_phase = true) {
  const ModelOrders& o = pg.orders;
  const DelayPoly<Scalar> phi_u = pg.phi_u_poly();
  if (phi_u.is_zero())
    throw std::invalid_argument("synth_min_phase: phi_u is zero");
  if (check_min_phase && phi_u.degree() >= 1 && !is_strictly_stable(phi_u).stable)
    throw std::invalid_argument("synth_min_phase: phi_u is not strictly minimum phase");
  if (target_T1.is_zero() || !is_strictly_stable(target_T1).stable)
    throw std::invalid_argument("synth_min_phase: target_T1 must be strictly stable");

  const DelayPoly<Scalar> fb = one_minus_shift(pg.phi_y_poly());
  auto sol = detail::solve_matching(fb, shift(phi_u, o.d), target_T1,
                                    Eigen::Index(o.L_u + o.d), Eigen::Index(o.L_y + 1),
                                    shift(phi_u, o.d), scale(fb, Scalar(-1)));
  ControllerPolys<Scalar> c{sol.H, pid_to_e(pid), sol.G, o.d};
  c.validate();
  return c;
}

// Closed-form family around the classical certainty-equivalence law.
// m_integrators = 0 reproduces it exactly; m >= 1 replaces lambda by
// lambda * Delta^m inside H.
template <typename Scalar>
ControllerPolys<Scalar> synth_mfac(const PgModel<Scalar>& pg, Scalar lambda,
                                   int m_integrators = 0) {
  const ModelOrders& o = pg.orders;
  if (o.d != 1)
    throw std::invalid_argument("synth_mfac: requires d = 1");
  if (lambda < Scalar(0))
    throw std::invalid_argument("synth_mfac: lambda must be >= 0");
  if (m_integrators < 0)
    throw std::invalid_argument("synth_mfac: m_integrators must be >= 0");
  const Scalar phi_lead = pg.phi_u(0);  // phi_{Ly+1}, the leading input gain
  const Scalar h0 = lambda + phi_lead * phi_lead;
  if (std::abs(h0) <= Scalar(k_eps_h))
    throw std::runtime_error("synth_mfac: singular control gain");
  ControllerPolys<Scalar> c;
  c.H = add(scale(delta_pow<Scalar>(m_integrators), lambda),
            scale(pg.phi_u_poly(), phi_lead));
  c.E = DelayPoly<Scalar>({phi_lead});
  c.G = scale(pg.phi_y_poly(), phi_lead);
  c.d = 1;
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Closed-loop analysis
// ---------------------------------------------------------------------------

template <typename Scalar = double>
struct StepInput {
  Scalar amplitude{1};
};
template <typename Scalar = double>
struct RampInput {
  Scalar T_s{1};
};
struct PowerInput {
  int n{2};
};

template <typename Scalar = double>
using InputClass = std::variant<StepInput<Scalar>, RampInput<Scalar>, PowerInput>;

// Transfer from reference to tracking error.  The reference-to-output path
// is z^-d phi_u E / T acting on y*(k+d); the d-step preview cancels the
// delay, so e(k) = y*(k) - y(k) has numerator T - phi_u E over T.
template <typename Scalar>
RationalTf<Scalar> error_transfer(const PgModel<Scalar>& pg,
                                  const ControllerPolys<Scalar>& c) {
  const DelayPoly<Scalar> T = char_poly(pg, c);
  return RationalTf<Scalar>{sub(T, mul(pg.phi_u_poly(), c.E)), T};
}

namespace detail {
inline double factorial(int n) {
  double f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}
}  // namespace detail

// Steady tracking error for a polynomial reference class through the loop.
// Requires the characteristic polynomial to be strictly stable once the
// Delta factors cancelled by the limit are removed.
template <typename Scalar>
Limit<Scalar> static_error(const PgModel<Scalar>& pg, const ControllerPolys<Scalar>& c,
                           const InputClass<Scalar>& input) {
  const RationalTf<Scalar> tf = error_transfer(pg, c);
  if (tf.num.is_zero()) return Limit<Scalar>::finite_value(Scalar(0));
  const auto fn = factor_delta(tf.num);
  const auto fd = factor_delta(tf.den);
  const int common = std::min(fn.m, fd.m);
  // Denominator after removing the Delta factors the limit cancels.
  const DelayPoly<Scalar> den_reduced =
      fd.m - common > 0 ? mul(delta_pow<Scalar>(fd.m - common), fd.reduced)
                        : fd.reduced;
  if (!is_strictly_stable(den_reduced).stable)
    throw std::runtime_error("static_error: limit undefined for unstable system");

  int pole_order = 1;
  Scalar num_at_1 = 1;
  if (std::holds_alternative<StepInput<Scalar>>(input)) {
    pole_order = 1;
    num_at_1 = std::get<StepInput<Scalar>>(input).amplitude;
  } else if (std::holds_alternative<RampInput<Scalar>>(input)) {
    pole_order = 2;
    num_at_1 = std::get<RampInput<Scalar>>(input).T_s;
  } else {
    const int n = std::get<PowerInput>(input).n;
    if (n < 0) throw std::invalid_argument("static_error: power exponent must be >= 0");
    pole_order = n + 1;
    num_at_1 = Scalar(detail::factorial(n));
  }
  return final_value_limit(tf, pole_order, num_at_1);
}

template <typename Scalar = double>
struct ClosedLoopReport {
  DelayPoly<Scalar> char_poly;
  StabilityVerdict<Scalar> verdict;
  RationalTf<Scalar> tf_ref_to_y;
  RationalTf<Scalar> tf_ref_to_u;
  RationalTf<Scalar> tf_dist_to_y;
  std::map<std::string, Limit<Scalar>> static_errors;  // "step", "ramp"
};

template <typename Scalar>
ClosedLoopReport<Scalar> closed_loop_report(const PgModel<Scalar>& pg,
                                            const ControllerPolys<Scalar>& c,
                                            Scalar ramp_T_s = Scalar(1)) {
  ClosedLoopReport<Scalar> r;
  r.char_poly = char_poly(pg, c);
  r.verdict = is_strictly_stable(r.char_poly);
  const DelayPoly<Scalar> phi_u = pg.phi_u_poly();
  r.tf_ref_to_y = RationalTf<Scalar>{shift(mul(phi_u, c.E), c.d), r.char_poly};
  r.tf_ref_to_u =
      RationalTf<Scalar>{mul(c.E, one_minus_shift(pg.phi_y_poly())), r.char_poly};
  r.tf_dist_to_y = RationalTf<Scalar>{mul(c.H, delta<Scalar>()), r.char_poly};
  try {
    r.static_errors.emplace("step",
                            static_error(pg, c, InputClass<Scalar>(StepInput<Scalar>{1})));
    r.static_errors.emplace(
        "ramp", static_error(pg, c, InputClass<Scalar>(RampInput<Scalar>{ramp_T_s})));
  } catch (const std::exception&) {
    // Unstable loop: the verdict carries the information; no limits exist.
  }
  return r;
}

}  // namespace istc

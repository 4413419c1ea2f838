#pragma once
// Online estimation of the stacked PG vector for certainty-equivalence
// adaptation: plain recursive least squares and the projection algorithm.

#include "istc/model.hpp"
#include "istc/poly.hpp"

#include <cmath>

namespace istc {

inline constexpr double k_rls_symmetry_tol = 1e-6;

template <typename Scalar = double>
struct RlsState {
  Coeffs<Scalar> theta_hat;                                  // stacked PG estimate
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> P;   // SPD covariance

  static RlsState init(Eigen::Index dim, Scalar theta_fill = Scalar(0.001),
                       Scalar p0 = Scalar(1e6)) {
    RlsState s;
    s.theta_hat = Coeffs<Scalar>::Constant(dim, theta_fill);
    s.P = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Identity(dim, dim) * p0;
    return s;
  }
};

// One RLS update with unit forgetting factor.  Returns the prediction
// residual dy - dH^T theta_hat evaluated at the incoming estimate.
template <typename Scalar>
Scalar rls_update(RlsState<Scalar>& s, const Coeffs<Scalar>& dH, Scalar dy) {
  if (dH.size() != s.theta_hat.size())
    throw std::invalid_argument("rls_update: dimension mismatch");
  if (!dH.allFinite() || !std::isfinite(dy))
    throw std::invalid_argument("rls_update: non-finite input");
  if ((s.P - s.P.transpose()).template lpNorm<Eigen::Infinity>() >
      Scalar(k_rls_symmetry_tol))
    throw std::runtime_error("rls_update: covariance corrupted");

  const Coeffs<Scalar> Ph = s.P * dH;
  const Scalar denom = Scalar(1) + dH.dot(Ph);
  const Coeffs<Scalar> gain = Ph / denom;
  const Scalar residual = dy - dH.dot(s.theta_hat);
  s.theta_hat += gain * residual;
  s.P -= gain * Ph.transpose();
  s.P = ((s.P + s.P.transpose()) / Scalar(2)).eval();
  return residual;
}

template <typename Scalar = double>
struct ProjectionState {
  Coeffs<Scalar> phi_hat;
  Scalar eta{Scalar(0.2)};        // step gain, in (0, 2]
  Scalar mu{Scalar(1)};           // regularizer, > 0
  Scalar eps_reset{Scalar(1e-5)};
  Coeffs<Scalar> phi_hat_init;    // retained verbatim for resets
  Eigen::Index sign_guard_index{0};  // index of the leading input-gain entry

  static ProjectionState init(const Coeffs<Scalar>& phi0, Scalar eta, Scalar mu,
                              Eigen::Index leading_input_index,
                              Scalar eps_reset = Scalar(1e-5)) {
    if (!(eta > Scalar(0) && eta <= Scalar(2)))
      throw std::invalid_argument("ProjectionState: eta must be in (0, 2]");
    if (!(mu > Scalar(0)))
      throw std::invalid_argument("ProjectionState: mu must be > 0");
    if (leading_input_index < 0 || leading_input_index >= phi0.size())
      throw std::invalid_argument("ProjectionState: bad sign-guard index");
    ProjectionState s;
    s.phi_hat = phi0;
    s.eta = eta;
    s.mu = mu;
    s.eps_reset = eps_reset;
    s.phi_hat_init = phi0;
    s.sign_guard_index = leading_input_index;
    return s;
  }
};

namespace detail {
template <typename Scalar>
int sign_of(Scalar x) {
  return (x > Scalar(0)) - (x < Scalar(0));
}
}  // namespace detail

// One projection update followed by the reset rule: reset to the initial
// estimate when the estimate or the regressor collapses, or when the leading
// input-gain entry flips sign relative to the initial estimate (the control
// law divides by a quantity built from that entry).
template <typename Scalar>
void projection_update(ProjectionState<Scalar>& s, const Coeffs<Scalar>& dH, Scalar dy) {
  if (dH.size() != s.phi_hat.size())
    throw std::invalid_argument("projection_update: dimension mismatch");
  if (!dH.allFinite() || !std::isfinite(dy))
    throw std::invalid_argument("projection_update: non-finite input");

  const Scalar residual = dy - dH.dot(s.phi_hat);
  s.phi_hat += s.eta * dH * residual / (s.mu + dH.squaredNorm());

  const bool sign_flip =
      detail::sign_of(s.phi_hat(s.sign_guard_index)) !=
      detail::sign_of(s.phi_hat_init(s.sign_guard_index));
  if (s.phi_hat.norm() <= s.eps_reset || dH.norm() <= s.eps_reset || sign_flip)
    s.phi_hat = s.phi_hat_init;
}

// Table-style initializers keyed by the model orders.
template <typename Scalar>
RlsState<Scalar> estimator_init_rls(const ModelOrders& orders,
                                    Scalar theta_fill = Scalar(0.001),
                                    Scalar p0 = Scalar(1e6)) {
  orders.validate();
  return RlsState<Scalar>::init(orders.dim(), theta_fill, p0);
}

template <typename Scalar>
ProjectionState<Scalar> estimator_init_projection(const ModelOrders& orders,
                                                  const Coeffs<Scalar>& phi0,
                                                  Scalar eta, Scalar mu,
                                                  Scalar eps_reset = Scalar(1e-5)) {
  orders.validate();
  if (phi0.size() != orders.dim())
    throw std::invalid_argument("estimator_init_projection: phi0 size mismatch");
  return ProjectionState<Scalar>::init(phi0, eta, mu, orders.L_y, eps_reset);
}

}  // namespace istc

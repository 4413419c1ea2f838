#pragma once
// Model types for incremental self-tuning control:
//  - PgModel: the pseudo-gradient (PG) description of the incremental plant
//      dy(k+1) = phi_y*dY(k) + phi_u*dU(k-d+1) + phi_w*dW(k) + dw(k+1)
//    stored as fixed-size, zero-padded coefficient blocks so every order slot
//    keeps its position even when a coefficient is zero.
//  - ArmaxModel / ArmaxSim: the level-form difference equation
//      A(z^-1) y(k+1) = z^(-d+1) B(z^-1) u(k) + C(z^-1) zeta(k)
//    used as the "true plant" in simulations (DARMA when C is absent).
//  - RegressorWindow: ring buffers assembling the regressor dH(k) with the
//    d-1 input-delay alignment.
//  - Conversions between the two forms.

#include "istc/poly.hpp"

#include <functional>
#include <optional>
#include <sstream>

namespace istc {

struct ModelOrders {
  int L_y{1};  // output-increment lags, >= 1
  int L_u{1};  // input-increment lags, >= 1
  int L_w{0};  // disturbance-increment lags, >= 0 (0 = deterministic model)
  int d{1};    // input-output delay in samples, >= 1

  int dim() const { return L_y + L_u + L_w; }

  void validate() const {
    if (L_y < 1 || L_u < 1 || L_w < 0 || d < 1)
      throw std::invalid_argument(
          "ModelOrders: require L_y >= 1, L_u >= 1, L_w >= 0, d >= 1");
  }

  friend bool operator==(const ModelOrders&, const ModelOrders&) = default;
};

// Fixed-size history ring: lag 0 is the newest value; unfilled slots are 0.
template <typename Scalar = double>
class History {
 public:
  explicit History(Eigen::Index n)
      : v_(Coeffs<Scalar>::Zero(std::max<Eigen::Index>(n, 0))) {}

  void push(Scalar x) {
    if (v_.size() == 0) return;
    for (Eigen::Index i = v_.size() - 1; i > 0; --i) v_(i) = v_(i - 1);
    v_(0) = x;
  }
  Scalar at(Eigen::Index lag) const {
    return (lag >= 0 && lag < v_.size()) ? v_(lag) : Scalar(0);
  }
  void set_newest(Scalar x) {
    if (v_.size() > 0) v_(0) = x;
  }
  void reset() { v_.setZero(); }
  Eigen::Index size() const { return v_.size(); }
  const Coeffs<Scalar>& values() const { return v_; }

 private:
  Coeffs<Scalar> v_;
};

// ---------------------------------------------------------------------------
// PG model
// ---------------------------------------------------------------------------

template <typename Scalar = double>
struct PgModel {
  ModelOrders orders;
  Coeffs<Scalar> phi_y;  // size L_y, zero-padded
  Coeffs<Scalar> phi_u;  // size L_u, zero-padded
  Coeffs<Scalar> phi_w;  // size L_w, empty when L_w == 0
  std::optional<Scalar> bound_b;  // optional norm bound on the stacked vector

  DelayPoly<Scalar> phi_y_poly() const { return DelayPoly<Scalar>(phi_y); }
  DelayPoly<Scalar> phi_u_poly() const { return DelayPoly<Scalar>(phi_u); }
  DelayPoly<Scalar> phi_w_poly() const { return DelayPoly<Scalar>(phi_w); }

  Coeffs<Scalar> stacked() const {
    Coeffs<Scalar> v(orders.dim());
    v << phi_y, phi_u, phi_w;
    return v;
  }

  static PgModel from_stacked(const ModelOrders& o, const Coeffs<Scalar>& v) {
    o.validate();
    if (v.size() != o.dim())
      throw std::invalid_argument("PgModel: stacked vector size mismatch");
    PgModel m;
    m.orders = o;
    m.phi_y = v.head(o.L_y);
    m.phi_u = v.segment(o.L_y, o.L_u);
    m.phi_w = v.tail(o.L_w);
    return m;
  }

  void validate() const {
    orders.validate();
    if (phi_y.size() != orders.L_y || phi_u.size() != orders.L_u ||
        phi_w.size() != orders.L_w)
      throw std::invalid_argument("PgModel: coefficient block sizes must match orders");
    if (!stacked().allFinite())
      throw std::invalid_argument("PgModel: non-finite coefficient");
    if (bound_b && stacked().norm() > *bound_b)
      throw std::invalid_argument("PgModel: stacked norm exceeds bound_b");
    if (orders.L_w > 0) {
      // 1 + z^-1 phi_w must be strictly stable (noise-shaping polynomial).
      DelayPoly<Scalar> noise = add(DelayPoly<Scalar>::one(), shift(phi_w_poly(), 1));
      if (!is_strictly_stable(noise).stable)
        throw std::invalid_argument("PgModel: 1 + z^-1 phi_w is not strictly stable");
    }
  }
};

// ---------------------------------------------------------------------------
// ARMAX / DARMA model and simulator
// ---------------------------------------------------------------------------

template <typename Scalar = double>
struct ArmaxModel {
  DelayPoly<Scalar> A;  // monic
  DelayPoly<Scalar> B;
  DelayPoly<Scalar> C;  // monic, or zero polynomial for DARMA
  int d{1};
  Scalar noise_variance{0};

  void validate() const {
    if (A.is_zero() || std::abs(A.coeff(0) - Scalar(1)) > Scalar(k_eps_trim))
      throw std::invalid_argument("ArmaxModel: A must be monic");
    if (B.is_zero()) throw std::invalid_argument("ArmaxModel: B must be nonzero");
    if (!C.is_zero() && std::abs(C.coeff(0) - Scalar(1)) > Scalar(k_eps_trim))
      throw std::invalid_argument("ArmaxModel: C must be monic or absent");
    if (d < 1) throw std::invalid_argument("ArmaxModel: d >= 1 required");
    if (noise_variance < Scalar(0))
      throw std::invalid_argument("ArmaxModel: noise_variance must be >= 0");
    if (C.is_zero() && noise_variance > Scalar(0))
      throw std::invalid_argument("ArmaxModel: noise_variance > 0 requires C");
  }
};

// Simulates A y(k+1) = z^(-d+1) B u(k) + C zeta(k) one step at a time.
// All histories start at zero.
template <typename Scalar = double>
class ArmaxSim {
 public:
  explicit ArmaxSim(ArmaxModel<Scalar> m)
      : m_(std::move(m)),
        y_(std::max(m_.A.degree(), 0)),
        u_(m_.d - 1 + m_.B.size()),
        z_(m_.C.is_zero() ? 0 : m_.C.degree()) {
    m_.validate();
  }

  // u_k is u(k); zeta_next is the fresh noise draw used by this step.
  // Returns y(k+1) and advances all histories.
  Scalar step(Scalar u_k, Scalar zeta_next) {
    u_.push(u_k);
    Scalar y_next = 0;
    for (int i = 1; i <= m_.A.degree(); ++i)
      y_next += -m_.A.coeff(i) * y_.at(i - 1);
    for (Eigen::Index j = 0; j < m_.B.size(); ++j)
      y_next += m_.B.coeff(j) * u_.at(m_.d - 1 + j);
    y_next += zeta_next;
    for (int i = 1; i <= (m_.C.is_zero() ? 0 : m_.C.degree()); ++i)
      y_next += m_.C.coeff(i) * z_.at(i - 1);
    z_.push(zeta_next);
    y_.push(y_next);
    return y_next;
  }

  void reset() {
    y_.reset();
    u_.reset();
    z_.reset();
  }

  const ArmaxModel<Scalar>& model() const { return m_; }
  Scalar latest_output() const { return y_.at(0); }

 private:
  ArmaxModel<Scalar> m_;
  History<Scalar> y_, u_, z_;
};

template <typename Scalar>
Scalar armax_step(ArmaxSim<Scalar>& sim, Scalar u_k, Scalar zeta_next) {
  return sim.step(u_k, zeta_next);
}

// User-supplied single-step plant map (must be deterministic in its
// arguments).  Histories are passed newest-first with the stated depths;
// the fresh disturbance draw w(k+1) arrives separately from past draws.
template <typename Scalar = double>
struct PlantContract {
  int y_depth{2};
  int u_depth{2};
  int w_depth{1};
  std::function<Scalar(const Coeffs<Scalar>& y_hist, const Coeffs<Scalar>& u_hist,
                       Scalar w_next, const Coeffs<Scalar>& w_hist)>
      step;
};

// ---------------------------------------------------------------------------
// Regressor window
// ---------------------------------------------------------------------------

// Maintains the component rings of dH(k) = [dY(k); dU(k-d+1); dW(k)].
// The newest input increment enters its ring at lag 0 and is read back at
// lag d-1, which realizes the d-1 delay alignment of the input block.
template <typename Scalar = double>
class RegressorWindow {
 public:
  explicit RegressorWindow(ModelOrders o)
      : orders_(o), dy_(o.L_y), du_(o.d - 1 + o.L_u), dw_(o.L_w) {
    o.validate();
  }

  void push_dy(Scalar dy) { dy_.push(dy); }
  void push_du(Scalar du) { du_.push(du); }
  void push_dw(Scalar dw) { dw_.push(dw); }
  void push(Scalar dy, Scalar du, Scalar dw = Scalar(0)) {
    push_dy(dy);
    push_du(du);
    push_dw(dw);
  }

  Coeffs<Scalar> assemble() const {
    Coeffs<Scalar> h(orders_.dim());
    for (int i = 0; i < orders_.L_y; ++i) h(i) = dy_.at(i);
    for (int j = 0; j < orders_.L_u; ++j)
      h(orders_.L_y + j) = du_.at(orders_.d - 1 + j);
    for (int l = 0; l < orders_.L_w; ++l) h(orders_.L_y + orders_.L_u + l) = dw_.at(l);
    return h;
  }

  void reset() {
    dy_.reset();
    du_.reset();
    dw_.reset();
  }

  const ModelOrders& orders() const { return orders_; }

 private:
  ModelOrders orders_;
  History<Scalar> dy_, du_, dw_;
};

template <typename Scalar>
void regressor_push(RegressorWindow<Scalar>& w, Scalar dy, Scalar du,
                    Scalar dw = Scalar(0)) {
  w.push(dy, du, dw);
}

// One step of the incremental model.  Call protocol: before the call the
// window holds dy up to dy(k) and dw up to dw(k); du_new is the newest input
// increment.  The call pushes du_new, forms dH(k), computes
//   dy(k+1) = phi^T dH(k) + dw_next,
// then pushes dy(k+1) and dw_next so the invariant holds for the next step.
template <typename Scalar>
Scalar edlm_step(const PgModel<Scalar>& pg, RegressorWindow<Scalar>& win,
                 Scalar du_new, Scalar dw_next) {
  if (!(win.orders() == pg.orders))
    throw std::invalid_argument("edlm_step: window orders mismatch");
  win.push_du(du_new);
  const Scalar dy_next = pg.stacked().dot(win.assemble()) + dw_next;
  win.push_dy(dy_next);
  win.push_dw(dw_next);
  return dy_next;
}

// ---------------------------------------------------------------------------
// Conversions
// ---------------------------------------------------------------------------

// Level-form ARMAX to PG blocks: phi_y = (-a_1, ..., -a_na), phi_u = B's
// coefficients, phi_w = (c_1, ..., c_nc), each zero-padded to its order.
// The disturbance is identified as w == zeta, which makes the increment
// matching exact when C is monic.
template <typename Scalar>
PgModel<Scalar> armax_to_edlm(const ArmaxModel<Scalar>& m, const ModelOrders& orders) {
  m.validate();
  orders.validate();
  const int na = std::max(m.A.degree(), 0);
  const int nb_len = static_cast<int>(m.B.size());
  const int nc = m.C.is_zero() ? 0 : m.C.degree();
  if (orders.L_y < na || orders.L_u < nb_len || orders.L_w < nc || orders.d != m.d) {
    std::ostringstream os;
    os << "armax_to_edlm: orders too small; require L_y >= " << na
       << ", L_u >= " << nb_len << ", L_w >= " << nc << ", d == " << m.d;
    throw std::invalid_argument(os.str());
  }
  PgModel<Scalar> pg;
  pg.orders = orders;
  pg.phi_y = Coeffs<Scalar>::Zero(orders.L_y);
  for (int i = 1; i <= na; ++i) pg.phi_y(i - 1) = -m.A.coeff(i);
  pg.phi_u = Coeffs<Scalar>::Zero(orders.L_u);
  for (int j = 0; j < nb_len; ++j) pg.phi_u(j) = m.B.coeff(j);
  pg.phi_w = Coeffs<Scalar>::Zero(orders.L_w);
  for (int l = 1; l <= nc; ++l) pg.phi_w(l - 1) = m.C.coeff(l);
  pg.validate();
  return pg;
}

template <typename Scalar>
PgModel<Scalar> darma_to_edlm(const ArmaxModel<Scalar>& m, const ModelOrders& orders) {
  if (!m.C.is_zero())
    throw std::invalid_argument("darma_to_edlm: C must be absent");
  if (orders.L_w != 0)
    throw std::invalid_argument("darma_to_edlm: L_w must be 0");
  return armax_to_edlm(m, orders);
}

// Reconstructs the level-form polynomials from PG blocks (round-trip of the
// conversion above; padding zeros trim away).
template <typename Scalar>
ArmaxModel<Scalar> edlm_to_armax(const PgModel<Scalar>& pg, Scalar noise_variance = Scalar(0)) {
  ArmaxModel<Scalar> m;
  m.A = sub(DelayPoly<Scalar>::one(), shift(pg.phi_y_poly(), 1));
  m.B = pg.phi_u_poly();
  m.C = pg.orders.L_w > 0
            ? add(DelayPoly<Scalar>::one(), shift(pg.phi_w_poly(), 1))
            : DelayPoly<Scalar>::zero();
  m.d = pg.orders.d;
  m.noise_variance = noise_variance;
  return m;
}

}  // namespace istc

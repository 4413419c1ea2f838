#pragma once
// Runtime evaluation of the incremental control law
//   H(z^-1) du(k) = E(z^-1) err(k) - G(z^-1) dy(k),   err(k) = y*(k+d) - y(k),
// which integrates by construction: u(k) = u(k-1) + du(k).

#include "istc/model.hpp"
#include "istc/synth.hpp"

namespace istc {

template <typename Scalar = double>
class ControllerState {
 public:
  // Buffer capacities fixed at bind time from polynomial degrees: past du
  // (deg H entries), past err (deg E), past dy (deg G).  Rebinding to new
  // polynomials of the same degrees keeps the history intact.
  ControllerState(Eigen::Index du_depth, Eigen::Index err_depth, Eigen::Index dy_depth)
      : du_hist_(du_depth), err_hist_(err_depth), dy_hist_(dy_depth) {}

  static ControllerState for_polys(const ControllerPolys<Scalar>& c) {
    return ControllerState(std::max(c.H.degree(), 0), std::max(c.E.degree(), 0),
                           std::max(c.G.degree(), 0));
  }

  Scalar u_prev() const { return u_prev_; }
  Scalar y_prev() const { return y_prev_; }
  Scalar last_du() const { return last_du_; }

  void reset() {
    du_hist_.reset();
    err_hist_.reset();
    dy_hist_.reset();
    u_prev_ = y_prev_ = last_du_ = 0;
  }

  // Replaces the input just issued (e.g. after saturation by the caller):
  // shifts u(k) to u_new and folds the difference into du(k).
  void override_latest_input(Scalar u_new) {
    const Scalar shift = u_new - u_prev_;
    last_du_ += shift;
    du_hist_.set_newest(last_du_);
    u_prev_ = u_new;
  }

  template <typename S>
  friend S control_step(const ControllerPolys<S>&, ControllerState<S>&, S, S);
  template <typename S>
  friend S control_hold(ControllerState<S>&, S, S);

 private:
  void advance(Scalar du, Scalar err_now, Scalar dy_now, Scalar u_now, Scalar y_now) {
    du_hist_.push(du);
    err_hist_.push(err_now);
    dy_hist_.push(dy_now);
    last_du_ = du;
    u_prev_ = u_now;
    y_prev_ = y_now;
  }

  History<Scalar> du_hist_, err_hist_, dy_hist_;
  Scalar u_prev_{0};
  Scalar y_prev_{0};
  Scalar last_du_{0};
};

// One evaluation of the law; advances the state and returns u(k).
template <typename Scalar>
Scalar control_step(const ControllerPolys<Scalar>& c, ControllerState<Scalar>& s,
                    Scalar y_ref_future, Scalar y_now) {
  if (std::abs(c.H.coeff(0)) <= Scalar(k_eps_h))
    throw std::runtime_error("control_step: singular control gain");
  if (c.H.degree() > static_cast<int>(s.du_hist_.size()) ||
      c.E.degree() > static_cast<int>(s.err_hist_.size()) ||
      c.G.degree() > static_cast<int>(s.dy_hist_.size()))
    throw std::invalid_argument("control_step: polynomial degrees exceed state capacity");

  const Scalar dy_now = y_now - s.y_prev_;
  const Scalar err_now = y_ref_future - y_now;
  Scalar acc = c.E.coeff(0) * err_now;
  for (int i = 1; i <= c.E.degree(); ++i) acc += c.E.coeff(i) * s.err_hist_.at(i - 1);
  acc -= c.G.coeff(0) * dy_now;
  for (int j = 1; j <= c.G.degree(); ++j) acc -= c.G.coeff(j) * s.dy_hist_.at(j - 1);
  for (int i = 1; i <= c.H.degree(); ++i) acc -= c.H.coeff(i) * s.du_hist_.at(i - 1);
  const Scalar du = acc / c.H.coeff(0);
  const Scalar u = s.u_prev_ + du;
  s.advance(du, err_now, dy_now, u, y_now);
  return u;
}

// Fallback when synthesis failed this step: hold u(k) = u(k-1) but keep the
// signal histories time-aligned (du(k) = 0).
template <typename Scalar>
Scalar control_hold(ControllerState<Scalar>& s, Scalar y_ref_future, Scalar y_now) {
  const Scalar dy_now = y_now - s.y_prev_;
  const Scalar err_now = y_ref_future - y_now;
  const Scalar u = s.u_prev_;
  s.advance(Scalar(0), err_now, dy_now, u, y_now);
  return u;
}

template <typename Scalar>
void controller_reset(ControllerState<Scalar>& s) {
  s.reset();
}

}  // namespace istc

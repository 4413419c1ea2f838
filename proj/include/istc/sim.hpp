#pragma once
// Deterministic closed-loop experiment runner: plant, estimator, per-step
// controller synthesis, control law, trajectory and noise generation,
// trace recording, and metrics.
//
// Noise reproducibility contract: the stream is a 64-bit Mersenne Twister
// (std::mt19937_64, standard-fixed algorithm) seeded directly with the run
// seed.  Each normal draw consumes exactly two engine outputs x, y and maps
//   u1 = ((x >> 11) + 1) * 2^-53   in (0, 1]
//   u2 = (y >> 11) * 2^-53         in [0, 1)
//   draw = sigma * sqrt(-2 ln u1) * cos(2 pi u2)
// (Box-Muller, cosine branch only, no pair caching).  Same seed, same
// sequence, bit for bit.

#include "istc/control.hpp"
#include "istc/estimate.hpp"
#include "istc/model.hpp"
#include "istc/synth.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace istc {

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

template <typename Scalar = double>
struct SquareWave {
  Scalar amplitude{10};
  int half_period{100};
};
template <typename Scalar = double>
struct RampTraj {
  Scalar T_s{1};
};
struct PowerTraj {
  int n{10};
};
template <typename Scalar = double>
struct ConstantTraj {
  Scalar level{0};
};

template <typename Scalar = double>
using Trajectory =
    std::variant<SquareWave<Scalar>, RampTraj<Scalar>, PowerTraj, ConstantTraj<Scalar>>;

template <typename Scalar>
Scalar trajectory_eval(const Trajectory<Scalar>& t, long k) {
  if (k < 0) throw std::invalid_argument("trajectory_eval: k must be >= 0");
  if (std::holds_alternative<SquareWave<Scalar>>(t)) {
    const auto& sw = std::get<SquareWave<Scalar>>(t);
    if (sw.half_period <= 0)
      throw std::invalid_argument("trajectory_eval: half_period must be > 0");
    // llround rounds halves away from zero, fixing the switch phase.
    const long long r = std::llround(static_cast<double>(k) / sw.half_period);
    return (r % 2 == 0) ? sw.amplitude : -sw.amplitude;
  }
  if (std::holds_alternative<RampTraj<Scalar>>(t))
    return std::get<RampTraj<Scalar>>(t).T_s * Scalar(k);
  if (std::holds_alternative<PowerTraj>(t)) {
    const int n = std::get<PowerTraj>(t).n;
    if (n < 0) throw std::invalid_argument("trajectory_eval: power exponent >= 0");
    Scalar acc = 1;  // iterated product: deterministic across libm versions
    for (int i = 0; i < n; ++i) acc *= Scalar(k);
    return acc;
  }
  return std::get<ConstantTraj<Scalar>>(t).level;
}

// ---------------------------------------------------------------------------
// Noise
// ---------------------------------------------------------------------------

inline constexpr double k_two_pi = 6.283185307179586;  // double(2*pi)

class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, double variance) : eng_(seed) {
    if (variance < 0) throw std::invalid_argument("GaussianStream: variance >= 0");
    sigma_ = std::sqrt(variance);
  }

  double next() {
    if (sigma_ == 0.0) return 0.0;
    const double u1 = (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    return sigma_ * std::sqrt(-2.0 * std::log(u1)) * std::cos(k_two_pi * u2);
  }

 private:
  std::mt19937_64 eng_;
  double sigma_;
};

// k-th element (0-based) of the stream for (seed, variance); testing helper.
inline double gaussian_noise(std::uint64_t seed, double variance, long k) {
  if (k < 0) throw std::invalid_argument("gaussian_noise: k must be >= 0");
  GaussianStream g(seed, variance);
  double v = 0;
  for (long i = 0; i <= k; ++i) v = g.next();
  return v;
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

enum class EstimatorKind { rls, projection, frozen };

template <typename Scalar = double>
struct EstimatorConfig {
  EstimatorKind kind{EstimatorKind::frozen};
  // rls
  Scalar theta0_fill{Scalar(0.001)};
  Scalar p0{Scalar(1e6)};
  // projection
  Coeffs<Scalar> phi0;
  Scalar eta{Scalar(0.2)};
  Scalar mu{Scalar(1)};
  Scalar eps_reset{Scalar(1e-5)};
  // frozen
  Coeffs<Scalar> frozen_phi;  // stacked true PG values
};

template <typename Scalar = double>
struct Case1Config {
  DelayPoly<Scalar> A_m;
  DelayPoly<Scalar> B_m;
};
template <typename Scalar = double>
struct Case2Config {
  DelayPoly<Scalar> target_T1;
  PidSpec<Scalar> pid;
  bool check_min_phase{false};  // transient estimates may be non-minimum-phase
};
template <typename Scalar = double>
struct Case4Config {
  Scalar lambda{5};
  int m_integrators{0};
};

template <typename Scalar = double>
using ControllerCase =
    std::variant<Case1Config<Scalar>, Case2Config<Scalar>, Case4Config<Scalar>>;

template <typename Scalar = double>
struct OutputDisturbance {
  Scalar level{0};
  int start_k{1};  // applied to measurements for k >= start_k
};

template <typename Scalar = double>
struct ExperimentConfig {
  std::string name{"custom"};
  std::variant<ArmaxModel<Scalar>, PlantContract<Scalar>> plant;
  ModelOrders orders;
  EstimatorConfig<Scalar> estimator;
  ControllerCase<Scalar> controller;
  Trajectory<Scalar> trajectory;
  int horizon{100};
  std::uint64_t seed{1};
  Scalar noise_variance{0};
  std::optional<OutputDisturbance<Scalar>> output_disturbance;
  std::optional<Scalar> input_clamp;  // |u| <= clamp when present

  void validate() const {
    orders.validate();
    if (horizon < 1) throw std::invalid_argument("ExperimentConfig: horizon >= 1");
    if (noise_variance < Scalar(0))
      throw std::invalid_argument("ExperimentConfig: noise variance >= 0");
    if (std::holds_alternative<ArmaxModel<Scalar>>(plant))
      std::get<ArmaxModel<Scalar>>(plant).validate();
    else if (!std::get<PlantContract<Scalar>>(plant).step)
      throw std::invalid_argument("ExperimentConfig: plant contract has no step map");
    if (input_clamp && !(*input_clamp > Scalar(0)))
      throw std::invalid_argument("ExperimentConfig: input clamp must be > 0");
    const auto& est = estimator;
    if (est.kind == EstimatorKind::projection) {
      if (orders.L_w != 0)
        throw std::invalid_argument(
            "ExperimentConfig: projection estimator requires L_w = 0");
      if (est.phi0.size() != orders.dim())
        throw std::invalid_argument("ExperimentConfig: projection phi0 size mismatch");
      if (!(est.eta > Scalar(0) && est.eta <= Scalar(2)) || !(est.mu > Scalar(0)))
        throw std::invalid_argument("ExperimentConfig: projection parameters out of range");
    }
    if (est.kind == EstimatorKind::frozen && est.frozen_phi.size() != orders.dim())
      throw std::invalid_argument("ExperimentConfig: frozen PG size mismatch");
    if (std::holds_alternative<Case4Config<Scalar>>(controller)) {
      const auto& c4 = std::get<Case4Config<Scalar>>(controller);
      if (c4.lambda < Scalar(0) || c4.m_integrators < 0)
        throw std::invalid_argument("ExperimentConfig: bad Case4 parameters");
      if (orders.d != 1)
        throw std::invalid_argument("ExperimentConfig: Case4 requires d = 1");
    }
  }
};

// ---------------------------------------------------------------------------
// Trace and metrics
// ---------------------------------------------------------------------------

template <typename Scalar = double>
struct TraceRow {
  int k;
  Scalar y_ref, y, u, du, e;
  Coeffs<Scalar> phi;  // stacked PG estimate used at this step
};

template <typename Scalar = double>
struct Trace {
  std::vector<TraceRow<Scalar>> rows;
  std::uint64_t seed{0};
  std::string config_hash;
  bool aborted{false};
  int abort_step{-1};
  std::string abort_reason;
  std::vector<std::pair<int, std::string>> events;  // e.g. synthesis holds
};

struct MetricWindows {
  int mae_lo{1};
  int mae_hi{std::numeric_limits<int>::max()};
  int sse_last_n{100};
};

template <typename Scalar = double>
struct Metrics {
  Scalar mean_abs_error{0};     // over [mae_lo, mae_hi]
  Scalar terminal_error{0};     // e at the last row
  Scalar steady_state_error{0}; // mean signed e over the last sse_last_n rows
  Scalar max_abs_u{0};
};

template <typename Scalar>
Metrics<Scalar> compute_metrics(const Trace<Scalar>& tr, const MetricWindows& w) {
  if (w.mae_lo < 0 || w.mae_hi < w.mae_lo || w.sse_last_n < 1)
    throw std::invalid_argument("compute_metrics: invalid windows");
  Metrics<Scalar> m;
  if (tr.rows.empty()) return m;
  Scalar abs_sum = 0;
  long abs_n = 0;
  for (const auto& r : tr.rows) {
    if (r.k >= w.mae_lo && r.k <= w.mae_hi) {
      abs_sum += std::abs(r.e);
      ++abs_n;
    }
    m.max_abs_u = std::max(m.max_abs_u, std::abs(r.u));
  }
  m.mean_abs_error = abs_n > 0 ? abs_sum / Scalar(abs_n) : Scalar(0);
  m.terminal_error = tr.rows.back().e;
  const std::size_t n_sse =
      std::min<std::size_t>(tr.rows.size(), static_cast<std::size_t>(w.sse_last_n));
  Scalar sse_sum = 0;
  for (std::size_t i = tr.rows.size() - n_sse; i < tr.rows.size(); ++i)
    sse_sum += tr.rows[i].e;
  m.steady_state_error = sse_sum / Scalar(n_sse);
  return m;
}

// ---------------------------------------------------------------------------
// Config signature (FNV-1a over a canonical text dump)
// ---------------------------------------------------------------------------

namespace detail {

inline void hash_feed(std::uint64_t& h, const std::string& s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
}

template <typename Scalar>
std::string dump_coeffs(const Coeffs<Scalar>& v) {
  std::ostringstream os;
  os.precision(17);
  os << "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? "," : "") << v(i);
  os << "]";
  return os.str();
}

template <typename Scalar>
std::string dump_poly(const DelayPoly<Scalar>& p) {
  return dump_coeffs<Scalar>(p.coeffs());
}

}  // namespace detail

template <typename Scalar>
std::string config_signature(const ExperimentConfig<Scalar>& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "name=" << cfg.name << ";orders=" << cfg.orders.L_y << "," << cfg.orders.L_u
     << "," << cfg.orders.L_w << "," << cfg.orders.d << ";";
  if (std::holds_alternative<ArmaxModel<Scalar>>(cfg.plant)) {
    const auto& p = std::get<ArmaxModel<Scalar>>(cfg.plant);
    os << "plant=armax:A" << detail::dump_poly(p.A) << ":B" << detail::dump_poly(p.B)
       << ":C" << detail::dump_poly(p.C) << ":d" << p.d << ":v" << p.noise_variance
       << ";";
  } else {
    os << "plant=custom;";
  }
  os << "est=" << static_cast<int>(cfg.estimator.kind) << ":"
     << cfg.estimator.theta0_fill << ":" << cfg.estimator.p0 << ":"
     << detail::dump_coeffs(cfg.estimator.phi0) << ":" << cfg.estimator.eta << ":"
     << cfg.estimator.mu << ":" << cfg.estimator.eps_reset << ":"
     << detail::dump_coeffs(cfg.estimator.frozen_phi) << ";";
  if (std::holds_alternative<Case1Config<Scalar>>(cfg.controller)) {
    const auto& c = std::get<Case1Config<Scalar>>(cfg.controller);
    os << "ctl=case1:Am" << detail::dump_poly(c.A_m) << ":Bm" << detail::dump_poly(c.B_m)
       << ";";
  } else if (std::holds_alternative<Case2Config<Scalar>>(cfg.controller)) {
    const auto& c = std::get<Case2Config<Scalar>>(cfg.controller);
    os << "ctl=case2:T1" << detail::dump_poly(c.target_T1) << ":pid" << c.pid.k_p << ","
       << c.pid.k_i << "," << c.pid.k_d << ":chk" << c.check_min_phase << ";";
  } else {
    const auto& c = std::get<Case4Config<Scalar>>(cfg.controller);
    os << "ctl=case4:lambda" << c.lambda << ":m" << c.m_integrators << ";";
  }
  if (std::holds_alternative<SquareWave<Scalar>>(cfg.trajectory)) {
    const auto& t = std::get<SquareWave<Scalar>>(cfg.trajectory);
    os << "traj=square:" << t.amplitude << ":" << t.half_period << ";";
  } else if (std::holds_alternative<RampTraj<Scalar>>(cfg.trajectory)) {
    os << "traj=ramp:" << std::get<RampTraj<Scalar>>(cfg.trajectory).T_s << ";";
  } else if (std::holds_alternative<PowerTraj>(cfg.trajectory)) {
    os << "traj=power:" << std::get<PowerTraj>(cfg.trajectory).n << ";";
  } else {
    os << "traj=const:" << std::get<ConstantTraj<Scalar>>(cfg.trajectory).level << ";";
  }
  os << "horizon=" << cfg.horizon << ";seed=" << cfg.seed << ";var="
     << cfg.noise_variance << ";";
  if (cfg.output_disturbance)
    os << "dist=" << cfg.output_disturbance->level << ":" << cfg.output_disturbance->start_k
       << ";";
  if (cfg.input_clamp) os << "clamp=" << *cfg.input_clamp << ";";
  std::uint64_t h = 14695981039346656037ull;
  detail::hash_feed(h, os.str());
  std::ostringstream hex;
  hex << std::hex << h;
  return hex.str();
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

namespace detail {

// Drives a user-supplied plant map with the same zero-initialized histories
// the ARMAX simulator uses.
template <typename Scalar>
class ContractSim {
 public:
  explicit ContractSim(const PlantContract<Scalar>& c)
      : c_(c), y_(c.y_depth), u_(c.u_depth), w_(c.w_depth) {}

  Scalar step(Scalar u_k, Scalar w_next) {
    u_.push(u_k);
    const Scalar y_next = c_.step(y_.values(), u_.values(), w_next, w_.values());
    w_.push(w_next);
    y_.push(y_next);
    return y_next;
  }

 private:
  PlantContract<Scalar> c_;
  History<Scalar> y_, u_, w_;
};

}  // namespace detail

// Runs the certainty-equivalence loop.  Per step k:
//   1. read y(k) (plus any output disturbance),
//   2. form dy(k) and the tracking error e(k) = y*(k) - y(k),
//   3. estimator update with the pair (dH(k-1), dy(k)),
//   4. re-synthesize the controller from the current estimate,
//   5. control step with the previewed reference y*(k+d) -> u(k)
//      (on synthesis failure: hold u(k) = u(k-1) and log the event),
//   6. advance the regressor window and the plant with a fresh noise draw.
// When L_w > 0 the unmeasured disturbance slots of the regressor are fed
// with a-posteriori prediction residuals dy(k) - theta^T dH(k-1).
template <typename Scalar>
Trace<Scalar> run_experiment(const ExperimentConfig<Scalar>& cfg) {
  cfg.validate();
  const ModelOrders& o = cfg.orders;

  GaussianStream noise(cfg.seed, static_cast<double>(cfg.noise_variance));
  std::optional<ArmaxSim<Scalar>> armax;
  std::optional<detail::ContractSim<Scalar>> contract;
  if (std::holds_alternative<ArmaxModel<Scalar>>(cfg.plant))
    armax.emplace(std::get<ArmaxModel<Scalar>>(cfg.plant));
  else
    contract.emplace(std::get<PlantContract<Scalar>>(cfg.plant));

  RegressorWindow<Scalar> win(o);
  std::optional<RlsState<Scalar>> rls;
  std::optional<ProjectionState<Scalar>> proj;
  Coeffs<Scalar> frozen;
  switch (cfg.estimator.kind) {
    case EstimatorKind::rls:
      rls = estimator_init_rls<Scalar>(o, cfg.estimator.theta0_fill, cfg.estimator.p0);
      break;
    case EstimatorKind::projection:
      proj = estimator_init_projection<Scalar>(o, cfg.estimator.phi0, cfg.estimator.eta,
                                               cfg.estimator.mu, cfg.estimator.eps_reset);
      break;
    case EstimatorKind::frozen:
      frozen = cfg.estimator.frozen_phi;
      break;
  }
  auto theta_now = [&]() -> const Coeffs<Scalar>& {
    if (rls) return rls->theta_hat;
    if (proj) return proj->phi_hat;
    return frozen;
  };

  // Controller-state capacities from the structural degrees of each case.
  Eigen::Index nh = o.L_u + o.d - 1, ne = 2, ng = o.L_y;
  if (std::holds_alternative<Case1Config<Scalar>>(cfg.controller))
    ne = std::max<Eigen::Index>(
        std::get<Case1Config<Scalar>>(cfg.controller).B_m.size(), 1) - 1;
  else if (std::holds_alternative<Case4Config<Scalar>>(cfg.controller)) {
    const auto& c4 = std::get<Case4Config<Scalar>>(cfg.controller);
    nh = std::max<Eigen::Index>(c4.m_integrators, o.L_u - 1);
    ne = 0;
    ng = o.L_y - 1;
  }
  ControllerState<Scalar> cstate(nh, ne, ng);

  Trace<Scalar> tr;
  tr.seed = cfg.seed;
  tr.config_hash = config_signature(cfg);
  tr.rows.reserve(static_cast<std::size_t>(cfg.horizon));

  Coeffs<Scalar> dH_prev = Coeffs<Scalar>::Zero(o.dim());
  Scalar y_plant = 0;   // plant output at the current step
  Scalar y_prev = 0;    // previous measured output
  for (int k = 1; k <= cfg.horizon; ++k) {
    Scalar y_meas = y_plant;
    if (cfg.output_disturbance && k >= cfg.output_disturbance->start_k)
      y_meas += cfg.output_disturbance->level;
    if (!std::isfinite(static_cast<double>(y_meas))) {
      tr.aborted = true;
      tr.abort_step = k;
      tr.abort_reason = "non-finite plant output";
      break;
    }

    const Scalar y_ref = trajectory_eval(cfg.trajectory, k);
    const Scalar e = y_ref - y_meas;
    const Scalar dy = y_meas - y_prev;

    if (rls) rls_update(*rls, dH_prev, dy);
    if (proj) projection_update(*proj, dH_prev, dy);
    const Coeffs<Scalar>& theta = theta_now();
    const Scalar w_slot = o.L_w > 0 ? dy - dH_prev.dot(theta) : Scalar(0);

    PgModel<Scalar> pg_hat = PgModel<Scalar>::from_stacked(o, theta);
    bool synth_ok = true;
    ControllerPolys<Scalar> c;
    try {
      if (std::holds_alternative<Case1Config<Scalar>>(cfg.controller)) {
        const auto& cc = std::get<Case1Config<Scalar>>(cfg.controller);
        c = synth_pole_placement(pg_hat, DesignSpec<Scalar>{cc.A_m, cc.B_m, std::nullopt});
      } else if (std::holds_alternative<Case2Config<Scalar>>(cfg.controller)) {
        const auto& cc = std::get<Case2Config<Scalar>>(cfg.controller);
        c = synth_min_phase(pg_hat, cc.target_T1, cc.pid, cc.check_min_phase);
      } else {
        const auto& cc = std::get<Case4Config<Scalar>>(cfg.controller);
        c = synth_mfac(pg_hat, cc.lambda, cc.m_integrators);
      }
    } catch (const std::exception& ex) {
      synth_ok = false;
      tr.events.emplace_back(k, std::string("synthesis hold: ") + ex.what());
    }

    const Scalar y_ref_future = trajectory_eval(cfg.trajectory, k + o.d);
    Scalar u;
    if (synth_ok) {
      try {
        u = control_step(c, cstate, y_ref_future, y_meas);
      } catch (const std::exception& ex) {
        tr.events.emplace_back(k, std::string("control hold: ") + ex.what());
        u = control_hold(cstate, y_ref_future, y_meas);
      }
    } else {
      u = control_hold(cstate, y_ref_future, y_meas);
    }
    if (!std::isfinite(static_cast<double>(u))) {
      tr.aborted = true;
      tr.abort_step = k;
      tr.abort_reason = "non-finite control input";
      break;
    }
    if (cfg.input_clamp && std::abs(u) > *cfg.input_clamp) {
      const Scalar u_clamped = u > Scalar(0) ? *cfg.input_clamp : -*cfg.input_clamp;
      cstate.override_latest_input(u_clamped);
      u = u_clamped;
    }
    const Scalar du = cstate.last_du();

    tr.rows.push_back(TraceRow<Scalar>{k, y_ref, y_meas, u, du, e, theta});

    win.push(dy, du, w_slot);
    dH_prev = win.assemble();

    const Scalar zeta = Scalar(noise.next());
    y_plant = armax ? armax->step(u, zeta) : contract->step(u, zeta);
    y_prev = y_meas;
  }
  return tr;
}

}  // namespace istc

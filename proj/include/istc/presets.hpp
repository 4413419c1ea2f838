#pragma once
// Canonical experiment presets.  Two benchmark plants are used throughout:
//  - plant A (delay 6, colored noise):
//      y(k+1) = 1.5 y(k) - 0.5 y(k-1) + 0.1 u(k-5) + 0.05 u(k-6)
//               + zeta(k) + 0.4 zeta(k-1)
//  - plant B (delay 1, deterministic, written on increments):
//      dy(k+1) = -0.8 dy(k) - 0.5 du(k) + 0.2 du(k-1)
//    whose level form is y(k+1) = -0.8 y(k) - 0.5 u(k) + 0.2 u(k-1).

#include "istc/sim.hpp"

#include <array>
#include <string>

namespace istc::presets {

inline const std::array<std::string, 6> k_preset_names = {
    "ex1_1_case2", "ex1_1_case3", "ex1_2", "ex2_1_istc", "ex2_1_mfac", "ex2_2"};

// Short aliases accepted on the command line.
inline std::string canonical_name(const std::string& name) {
  if (name == "ex1_1") return "ex1_1_case2";
  if (name == "ex2_1") return "ex2_1_istc";
  return name;
}

inline ArmaxModel<double> plant_a(double variance) {
  ArmaxModel<double> m;
  m.A = DelayPoly<double>({1.0, -1.5, 0.5});
  m.B = DelayPoly<double>({0.1, 0.05});
  m.C = DelayPoly<double>({1.0, 0.4});
  m.d = 6;
  m.noise_variance = variance;
  return m;
}

inline ArmaxModel<double> plant_b() {
  ArmaxModel<double> m;
  m.A = DelayPoly<double>({1.0, 0.8});
  m.B = DelayPoly<double>({-0.5, 0.2});
  m.C = DelayPoly<double>::zero();
  m.d = 1;
  m.noise_variance = 0.0;
  return m;
}

// Stable target for the delay-6 presets, built so that with the nominal
// E = [0.5, -0.3] the closed loop at the true plant parameters becomes
// 0.12 (1 - 0.5 z^-1)^2 (all poles at 0.5).
inline DelayPoly<double> plant_a_target_T1() {
  return DelayPoly<double>({0.12, 0.0, 0.03, 0.03, 0.03, 0.03, -0.02, -0.015});
}

inline ExperimentConfig<double> preset_ex1_1(bool with_noise_lag, PidSpec<double> pid,
                                             double variance, const std::string& name) {
  ExperimentConfig<double> cfg;
  cfg.name = name;
  cfg.plant = plant_a(variance);
  cfg.orders = ModelOrders{2, 2, with_noise_lag ? 1 : 0, 6};
  cfg.estimator.kind = EstimatorKind::rls;
  cfg.estimator.theta0_fill = 0.001;
  cfg.estimator.p0 = 1e6;
  cfg.controller = Case2Config<double>{plant_a_target_T1(), pid, false};
  cfg.trajectory = SquareWave<double>{10.0, 100};
  cfg.horizon = 400;
  cfg.seed = 1;
  cfg.noise_variance = variance;
  cfg.input_clamp = 300.0;
  return cfg;
}

inline ExperimentConfig<double> preset_ex2_1(int m_integrators, const std::string& name) {
  ExperimentConfig<double> cfg;
  cfg.name = name;
  cfg.plant = plant_b();
  cfg.orders = ModelOrders{1, 2, 0, 1};
  cfg.estimator.kind = EstimatorKind::projection;
  cfg.estimator.phi0 = (Coeffs<double>(3) << -0.1, -0.1, -0.1).finished();
  cfg.estimator.eta = 0.2;
  cfg.estimator.mu = 1.0;
  cfg.estimator.eps_reset = 1e-5;
  cfg.controller = Case4Config<double>{5.0, m_integrators};
  cfg.trajectory = RampTraj<double>{1.0};
  cfg.horizon = 2000;
  cfg.seed = 1;
  cfg.noise_variance = 0.0;
  return cfg;
}

inline ExperimentConfig<double> cmd_preset(const std::string& raw_name) {
  const std::string name = canonical_name(raw_name);
  if (name == "ex1_1_case2")
    return preset_ex1_1(true, PidSpec<double>{0.3, 0.2, 0.0}, 0.01, name);
  if (name == "ex1_1_case3")
    return preset_ex1_1(false, PidSpec<double>{0.3, 0.2, 0.0}, 0.01, name);
  if (name == "ex1_2")
    return preset_ex1_1(true, PidSpec<double>{0.35, 0.15, 0.0}, 0.0, name);
  if (name == "ex2_1_istc") return preset_ex2_1(1, name);
  if (name == "ex2_1_mfac") return preset_ex2_1(0, name);
  if (name == "ex2_2") {
    ExperimentConfig<double> cfg = preset_ex2_1(0, name);
    cfg.trajectory = PowerTraj{10};
    cfg.horizon = 700;
    return cfg;
  }
  std::string known;
  for (const auto& n : k_preset_names) known += (known.empty() ? "" : ", ") + n;
  throw std::invalid_argument("unknown preset '" + raw_name + "'; known presets: " + known);
}

}  // namespace istc::presets

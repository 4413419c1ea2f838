#pragma once
// JSON serialization of experiment configurations.  The schema is documented
// in README.md; round-tripping a config through to_json/from_json preserves
// every field bit-exactly (doubles are emitted in shortest round-trip form).

#include "istc/presets.hpp"
#include "istc/sim.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>
#include <vector>

namespace istc {

namespace detail {

inline nlohmann::json coeffs_to_json(const Coeffs<double>& c) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < c.size(); ++i) arr.push_back(c[i]);
  return arr;
}

inline Coeffs<double> coeffs_from_json(const nlohmann::json& arr, const std::string& field) {
  if (!arr.is_array()) throw std::invalid_argument("config field '" + field + "' must be an array");
  Coeffs<double> c(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw std::invalid_argument("config field '" + field + "' must contain numbers");
    c[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return c;
}

inline nlohmann::json poly_to_json(const DelayPoly<double>& p) { return coeffs_to_json(p.coeffs()); }

inline DelayPoly<double> poly_from_json(const nlohmann::json& arr, const std::string& field) {
  return DelayPoly<double>(coeffs_from_json(arr, field));
}

template <typename T>
T require(const nlohmann::json& j, const std::string& field) {
  if (!j.contains(field)) throw std::invalid_argument("config is missing required field '" + field + "'");
  try {
    return j.at(field).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument("config field '" + field + "' has the wrong type");
  }
}

}  // namespace detail

inline nlohmann::json config_to_json(const ExperimentConfig<double>& cfg) {
  using detail::coeffs_to_json;
  using detail::poly_to_json;
  nlohmann::json j;
  j["name"] = cfg.name;

  if (!std::holds_alternative<ArmaxModel<double>>(cfg.plant))
    throw std::invalid_argument("custom plant callbacks cannot be serialized to JSON");
  const auto& plant = std::get<ArmaxModel<double>>(cfg.plant);
  j["plant"] = {{"A", poly_to_json(plant.A)},
                {"B", poly_to_json(plant.B)},
                {"C", poly_to_json(plant.C)},
                {"d", plant.d},
                {"noise_variance", plant.noise_variance}};

  j["orders"] = {{"L_y", cfg.orders.L_y}, {"L_u", cfg.orders.L_u}, {"L_w", cfg.orders.L_w}, {"d", cfg.orders.d}};

  nlohmann::json est;
  switch (cfg.estimator.kind) {
    case EstimatorKind::rls:
      est = {{"kind", "rls"}, {"theta0_fill", cfg.estimator.theta0_fill}, {"p0", cfg.estimator.p0}};
      break;
    case EstimatorKind::projection:
      est = {{"kind", "projection"},
             {"phi0", coeffs_to_json(cfg.estimator.phi0)},
             {"eta", cfg.estimator.eta},
             {"mu", cfg.estimator.mu},
             {"eps_reset", cfg.estimator.eps_reset}};
      break;
    case EstimatorKind::frozen:
      est = {{"kind", "frozen"}, {"phi", coeffs_to_json(cfg.estimator.frozen_phi)}};
      break;
  }
  j["estimator"] = est;

  nlohmann::json ctl;
  if (const auto* c1 = std::get_if<Case1Config<double>>(&cfg.controller)) {
    ctl = {{"case", "pole_placement"}, {"A_m", poly_to_json(c1->A_m)}, {"B_m", poly_to_json(c1->B_m)}};
  } else if (const auto* c2 = std::get_if<Case2Config<double>>(&cfg.controller)) {
    ctl = {{"case", "min_phase"},
           {"target_T1", poly_to_json(c2->target_T1)},
           {"pid", {{"k_p", c2->pid.k_p}, {"k_i", c2->pid.k_i}, {"k_d", c2->pid.k_d}}},
           {"check_min_phase", c2->check_min_phase}};
  } else {
    const auto& c4 = std::get<Case4Config<double>>(cfg.controller);
    ctl = {{"case", "mfac"}, {"lambda", c4.lambda}, {"m_integrators", c4.m_integrators}};
  }
  j["controller"] = ctl;

  nlohmann::json traj;
  if (const auto* sq = std::get_if<SquareWave<double>>(&cfg.trajectory)) {
    traj = {{"kind", "square"}, {"amplitude", sq->amplitude}, {"half_period", sq->half_period}};
  } else if (const auto* rp = std::get_if<RampTraj<double>>(&cfg.trajectory)) {
    traj = {{"kind", "ramp"}, {"T_s", rp->T_s}};
  } else if (const auto* pw = std::get_if<PowerTraj>(&cfg.trajectory)) {
    traj = {{"kind", "power"}, {"n", pw->n}};
  } else {
    traj = {{"kind", "constant"}, {"level", std::get<ConstantTraj<double>>(cfg.trajectory).level}};
  }
  j["trajectory"] = traj;

  j["horizon"] = cfg.horizon;
  j["seed"] = cfg.seed;
  j["noise_variance"] = cfg.noise_variance;
  if (cfg.output_disturbance)
    j["output_disturbance"] = {{"level", cfg.output_disturbance->level}, {"start_k", cfg.output_disturbance->start_k}};
  if (cfg.input_clamp) j["input_clamp"] = *cfg.input_clamp;
  return j;
}

inline ExperimentConfig<double> config_from_json(const nlohmann::json& j) {
  using detail::coeffs_from_json;
  using detail::poly_from_json;
  using detail::require;
  ExperimentConfig<double> cfg;
  cfg.name = j.value("name", std::string("custom"));

  if (!j.contains("plant")) throw std::invalid_argument("config is missing required field 'plant'");
  const auto& pj = j.at("plant");
  ArmaxModel<double> plant;
  plant.A = poly_from_json(pj.contains("A") ? pj.at("A") : nlohmann::json::array(), "plant.A");
  plant.B = poly_from_json(pj.contains("B") ? pj.at("B") : nlohmann::json::array(), "plant.B");
  plant.C = pj.contains("C") ? poly_from_json(pj.at("C"), "plant.C") : DelayPoly<double>::zero();
  plant.d = require<int>(pj, "d");
  plant.noise_variance = pj.value("noise_variance", 0.0);
  cfg.plant = plant;

  if (!j.contains("orders")) throw std::invalid_argument("config is missing required field 'orders'");
  const auto& oj = j.at("orders");
  cfg.orders = ModelOrders{require<int>(oj, "L_y"), require<int>(oj, "L_u"), require<int>(oj, "L_w"),
                           require<int>(oj, "d")};

  if (!j.contains("estimator")) throw std::invalid_argument("config is missing required field 'estimator'");
  const auto& ej = j.at("estimator");
  const std::string ekind = require<std::string>(ej, "kind");
  if (ekind == "rls") {
    cfg.estimator.kind = EstimatorKind::rls;
    cfg.estimator.theta0_fill = ej.value("theta0_fill", 0.001);
    cfg.estimator.p0 = ej.value("p0", 1e6);
  } else if (ekind == "projection") {
    cfg.estimator.kind = EstimatorKind::projection;
    if (!ej.contains("phi0")) throw std::invalid_argument("projection estimator requires 'phi0'");
    cfg.estimator.phi0 = coeffs_from_json(ej.at("phi0"), "estimator.phi0");
    cfg.estimator.eta = ej.value("eta", 0.2);
    cfg.estimator.mu = ej.value("mu", 1.0);
    cfg.estimator.eps_reset = ej.value("eps_reset", 1e-5);
  } else if (ekind == "frozen") {
    cfg.estimator.kind = EstimatorKind::frozen;
    if (!ej.contains("phi")) throw std::invalid_argument("frozen estimator requires 'phi'");
    cfg.estimator.frozen_phi = coeffs_from_json(ej.at("phi"), "estimator.phi");
  } else {
    throw std::invalid_argument("unknown estimator kind '" + ekind + "' (expected rls, projection, or frozen)");
  }

  if (!j.contains("controller")) throw std::invalid_argument("config is missing required field 'controller'");
  const auto& cj = j.at("controller");
  const std::string ckind = require<std::string>(cj, "case");
  if (ckind == "pole_placement") {
    Case1Config<double> c1;
    if (!cj.contains("A_m")) throw std::invalid_argument("pole_placement controller requires 'A_m'");
    if (!cj.contains("B_m")) throw std::invalid_argument("pole_placement controller requires 'B_m'");
    c1.A_m = poly_from_json(cj.at("A_m"), "controller.A_m");
    c1.B_m = poly_from_json(cj.at("B_m"), "controller.B_m");
    cfg.controller = c1;
  } else if (ckind == "min_phase") {
    Case2Config<double> c2;
    if (!cj.contains("target_T1")) throw std::invalid_argument("min_phase controller requires 'target_T1'");
    c2.target_T1 = poly_from_json(cj.at("target_T1"), "controller.target_T1");
    if (cj.contains("pid")) {
      const auto& pid = cj.at("pid");
      c2.pid = PidSpec<double>{pid.value("k_p", 0.0), pid.value("k_i", 0.0), pid.value("k_d", 0.0)};
    }
    c2.check_min_phase = cj.value("check_min_phase", false);
    cfg.controller = c2;
  } else if (ckind == "mfac") {
    Case4Config<double> c4;
    c4.lambda = cj.value("lambda", 5.0);
    c4.m_integrators = cj.value("m_integrators", 0);
    cfg.controller = c4;
  } else {
    throw std::invalid_argument("unknown controller case '" + ckind +
                                "' (expected pole_placement, min_phase, or mfac)");
  }

  if (!j.contains("trajectory")) throw std::invalid_argument("config is missing required field 'trajectory'");
  const auto& tj = j.at("trajectory");
  const std::string tkind = require<std::string>(tj, "kind");
  if (tkind == "square") {
    cfg.trajectory = SquareWave<double>{tj.value("amplitude", 10.0), tj.value("half_period", 100)};
  } else if (tkind == "ramp") {
    cfg.trajectory = RampTraj<double>{tj.value("T_s", 1.0)};
  } else if (tkind == "power") {
    cfg.trajectory = PowerTraj{tj.value("n", 2)};
  } else if (tkind == "constant") {
    cfg.trajectory = ConstantTraj<double>{tj.value("level", 0.0)};
  } else {
    throw std::invalid_argument("unknown trajectory kind '" + tkind +
                                "' (expected square, ramp, power, or constant)");
  }

  cfg.horizon = j.value("horizon", 100);
  cfg.seed = j.value("seed", std::uint64_t{1});
  cfg.noise_variance = j.value("noise_variance", 0.0);
  if (j.contains("output_disturbance")) {
    const auto& dj = j.at("output_disturbance");
    cfg.output_disturbance = OutputDisturbance<double>{require<double>(dj, "level"), dj.value("start_k", 1)};
  }
  if (j.contains("input_clamp")) cfg.input_clamp = require<double>(j, "input_clamp");
  return cfg;
}

}  // namespace istc

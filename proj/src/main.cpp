// Command-line front end: run seeded closed-loop experiments to CSV, analyze
// closed-loop stability and static error for a configuration, and list or
// show the built-in experiment presets.

#include "istc/config_io.hpp"
#include "istc/model.hpp"
#include "istc/poly.hpp"
#include "istc/presets.hpp"
#include "istc/sim.hpp"
#include "istc/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <clocale>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string poly_str(const istc::DelayPoly<double>& p) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (i) s += ", ";
    s += fmt6(p.coeff(i));
  }
  return s + "]";
}

istc::ExperimentConfig<double> load_config(const std::string& config_path, const std::string& preset_name) {
  const bool have_config = !config_path.empty();
  const bool have_preset = !preset_name.empty();
  if (have_config == have_preset)
    throw std::invalid_argument("exactly one of --config and --preset must be given");
  if (have_preset) return istc::presets::cmd_preset(preset_name);
  std::ifstream in(config_path);
  if (!in) throw std::invalid_argument("cannot open config file '" + config_path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config parse error in '" + config_path + "': " + e.what());
  }
  return istc::config_from_json(j);
}

void write_csv(const istc::Trace<double>& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: guarantee LF line endings
  if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
  const Eigen::Index n_phi = trace.rows.empty() ? 0 : trace.rows.front().phi.size();
  out << "k,y_ref,y,u,du,e";
  for (Eigen::Index i = 0; i < n_phi; ++i) out << ",phi_" << (i + 1);
  out << "\n";
  for (const auto& r : trace.rows) {
    out << r.k << ',' << fmt17(r.y_ref) << ',' << fmt17(r.y) << ',' << fmt17(r.u) << ',' << fmt17(r.du)
        << ',' << fmt17(r.e);
    for (Eigen::Index i = 0; i < r.phi.size(); ++i) out << ',' << fmt17(r.phi[i]);
    out << "\n";
  }
  if (!out) throw std::runtime_error("failed writing output file '" + path + "'");
}

int cmd_run(const std::string& config_path, const std::string& preset_name, const std::string& out_path,
            std::optional<std::uint64_t> seed, std::optional<int> horizon) {
  istc::ExperimentConfig<double> cfg = load_config(config_path, preset_name);
  if (seed) cfg.seed = *seed;
  if (horizon) cfg.horizon = *horizon;
  cfg.validate();
  const istc::Trace<double> trace = istc::run_experiment(cfg);
  write_csv(trace, out_path);

  std::cout << "name: " << cfg.name << "\n";
  std::cout << "seed: " << trace.seed << "\n";
  std::cout << "rows: " << trace.rows.size() << "\n";
  std::cout << "trace: " << out_path << "\n";
  if (!trace.rows.empty()) {
    const istc::Metrics<double> m = istc::compute_metrics(trace, istc::MetricWindows{});
    std::cout << "mean_abs_error: " << fmt6(m.mean_abs_error) << "\n";
    std::cout << "terminal_error: " << fmt6(m.terminal_error) << "\n";
    std::cout << "steady_state_error: " << fmt6(m.steady_state_error) << " (mean e, last 100 rows)\n";
    std::cout << "max_abs_u: " << fmt6(m.max_abs_u) << "\n";
  }
  if (!trace.events.empty()) {
    std::cout << "events: " << trace.events.size() << "\n";
    for (const auto& ev : trace.events) std::cout << "  step " << ev.first << ": " << ev.second << "\n";
  }
  if (trace.aborted) {
    std::cout << "aborted: step " << trace.abort_step << " (" << trace.abort_reason << ")\n";
    return 3;
  }
  return 0;
}

int cmd_analyze(const std::string& config_path, const std::string& preset_name) {
  istc::ExperimentConfig<double> cfg = load_config(config_path, preset_name);
  const auto* plant = std::get_if<istc::ArmaxModel<double>>(&cfg.plant);
  if (!plant) throw std::invalid_argument("analyze requires a plant given in transfer-function form");
  plant->validate();
  cfg.orders.validate();
  const istc::PgModel<double> pg = plant->C.is_zero() ? istc::darma_to_edlm(*plant, cfg.orders)
                                                      : istc::armax_to_edlm(*plant, cfg.orders);

  istc::ControllerPolys<double> ctl;
  if (const auto* c1 = std::get_if<istc::Case1Config<double>>(&cfg.controller)) {
    ctl = istc::synth_pole_placement(pg, istc::DesignSpec<double>{c1->A_m, c1->B_m, std::nullopt});
  } else if (const auto* c2 = std::get_if<istc::Case2Config<double>>(&cfg.controller)) {
    ctl = istc::synth_min_phase(pg, c2->target_T1, c2->pid, c2->check_min_phase);
  } else {
    const auto& c4 = std::get<istc::Case4Config<double>>(cfg.controller);
    ctl = istc::synth_mfac(pg, c4.lambda, c4.m_integrators);
  }

  const double ramp_ts = std::holds_alternative<istc::RampTraj<double>>(cfg.trajectory)
                             ? std::get<istc::RampTraj<double>>(cfg.trajectory).T_s
                             : 1.0;
  const istc::ClosedLoopReport<double> report = istc::closed_loop_report(pg, ctl, ramp_ts);

  std::cout << "controller H: " << poly_str(ctl.H) << "\n";
  std::cout << "controller E: " << poly_str(ctl.E) << "\n";
  std::cout << "controller G: " << poly_str(ctl.G) << "\n";
  std::cout << "characteristic polynomial: " << poly_str(report.char_poly) << "\n";
  std::cout << "roots (modulus):\n";
  for (const auto& r : report.verdict.roots) {
    std::cout << "  ";
    if (std::abs(r.imag()) > 1e-12)
      std::cout << fmt6(r.real()) << (r.imag() >= 0 ? "+" : "-") << fmt6(std::abs(r.imag())) << "i";
    else
      std::cout << fmt6(r.real());
    std::cout << " (" << fmt6(std::abs(r)) << ")\n";
  }
  std::cout << "stability: " << (report.verdict.stable ? "STABLE" : "UNSTABLE") << " (max modulus "
            << fmt6(report.verdict.max_modulus) << ")\n";

  auto print_error = [&](const std::string& label, const char* key) {
    auto it = report.static_errors.find(key);
    std::cout << "static error (" << label << "): ";
    if (it == report.static_errors.end())
      std::cout << "undefined (unstable loop)\n";
    else if (!it->second.finite)
      std::cout << "diverges\n";
    else
      std::cout << fmt6(it->second.value) << "\n";
  };
  print_error("step", "step");
  print_error("ramp, T_s=" + fmt6(ramp_ts), "ramp");
  if (const auto* pw = std::get_if<istc::PowerTraj>(&cfg.trajectory)) {
    std::cout << "static error (power, n=" << pw->n << "): ";
    try {
      const istc::Limit<double> lim =
          istc::static_error(pg, ctl, istc::InputClass<double>{istc::PowerInput{pw->n}});
      if (!lim.finite)
        std::cout << "diverges\n";
      else
        std::cout << fmt6(lim.value) << "\n";
    } catch (const std::exception&) {
      std::cout << "undefined (unstable loop)\n";
    }
  }
  return 0;
}

int cmd_preset_cli(const std::string& action, const std::string& name) {
  if (action == "list") {
    for (const auto& n : istc::presets::k_preset_names) std::cout << n << "\n";
    return 0;
  }
  if (action == "show") {
    if (name.empty()) throw std::invalid_argument("preset show requires a preset name");
    const istc::ExperimentConfig<double> cfg = istc::presets::cmd_preset(name);
    std::cout << istc::config_to_json(cfg).dump(2) << "\n";
    return 0;
  }
  throw std::invalid_argument("unknown preset action '" + action + "' (expected list or show)");
}

}  // namespace

int main(int argc, char** argv) {
  std::setlocale(LC_NUMERIC, "C");  // '.' decimal separator regardless of environment

  CLI::App app{"Incremental self-tuning control toolkit: seeded closed-loop experiments,\n"
               "pole-placement/PID/adaptive controller synthesis, and stability analysis."};
  app.require_subcommand(1);

  std::string config_path;
  std::string preset_name;
  std::string out_path = "trace.csv";
  std::optional<std::uint64_t> seed_override;
  std::optional<int> horizon_override;

  CLI::App* run = app.add_subcommand("run", "Run a closed-loop experiment and write the trace as CSV");
  run->add_option("--config", config_path, "JSON experiment config file");
  run->add_option("--preset", preset_name, "Built-in preset name (see 'preset list')");
  run->add_option("--out", out_path, "Output CSV path")->capture_default_str();
  run->add_option("--seed", seed_override, "Override the config's RNG seed");
  run->add_option("--horizon", horizon_override, "Override the config's horizon");

  CLI::App* analyze = app.add_subcommand("analyze", "Print closed-loop poles, stability, and static errors");
  analyze->add_option("--config", config_path, "JSON experiment config file");
  analyze->add_option("--preset", preset_name, "Built-in preset name (see 'preset list')");

  std::string preset_action = "list";
  std::string preset_arg;
  CLI::App* preset = app.add_subcommand("preset", "List built-in presets or show one as JSON");
  preset->add_option("action", preset_action, "'list' or 'show'");
  preset->add_option("name", preset_arg, "Preset name for 'show'");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, preset_name, out_path, seed_override, horizon_override);
    if (analyze->parsed()) return cmd_analyze(config_path, preset_name);
    if (preset->parsed()) return cmd_preset_cli(preset_action, preset_arg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

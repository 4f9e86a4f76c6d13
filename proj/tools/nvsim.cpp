// Command-line front end: simulate, sweep, predict, pumpprobe, fit, reproduce.
#include <CLI11.hpp>

#include <iostream>
#include <thread>

#include "nvmem/app.hpp"
#include "nvmem/datasets.hpp"
#include "nvmem/units.hpp"

using namespace nvmem;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<long> trials;
  std::optional<std::string> out_dir;
  bool strict = false;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
};

void add_common(CLI::App* sub, Common& c, bool need_config) {
  auto* cfg = sub->add_option("--config", c.config, "scenario file (YAML, schema nvsim/1)");
  if (need_config) cfg->required();
  sub->add_option("--seed", c.seed, "master seed (overrides the file)");
  sub->add_option("--trials", c.trials, "Monte-Carlo trials / trajectories per run");
  sub->add_option("--out-dir", c.out_dir, "directory for CSV/JSON artifacts");
  sub->add_flag("--strict", c.strict, "exit 4 when any fit fails");
  sub->add_option("--threads", c.threads, "worker threads (results do not depend on it)")
      ->check(CLI::Range(1, 1024));
}

RunOptions options(const Common& c) {
  RunOptions o;
  o.seed = c.seed;
  o.trials = c.trials;
  o.out_dir = c.out_dir;
  o.strict = c.strict;
  o.threads = c.threads;
  o.budget = budget_from_env();
  return o;
}

int report(const RunReport& r) {
  for (const auto& line : r.lines) std::cout << line << "\n";
  return 0;
}

int run_file(const std::string& path, const Common& c, std::optional<Command> expect) {
  auto cfg = load_config(path);
  if (expect && cfg.command != *expect) {
    fail(ErrorCode::schema_violation, std::string("command: config declares '") + to_string(cfg.command) +
                                          "', not '" + to_string(*expect) + "'");
  }
  return report(run_config(std::move(cfg), options(c)));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nuclear-spin memory robustness simulator"};
  app.require_subcommand(1);

  Common sim, swp, pre, pp, rep;
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo coherence curves + stretched-exp fits");
  add_common(simulate, sim, true);
  auto* sweep = app.add_subcommand("sweep", "parameter sweeps of fitted decay constants");
  add_common(sweep, swp, true);

  auto* predict = app.add_subcommand("predict", "analytic predictions (repump-limited decay, revivals)");
  add_common(predict, pre, false);
  std::string model = "blok", tau_s, dw_s;
  double p1 = 0.5;
  predict->add_option("--model", model, "blok or revival (flag mode supports blok)");
  predict->add_option("--tau", tau_s, "mean reset time, e.g. 52ns");
  predict->add_option("--dw", dw_s, "coupling strength delta omega / 2pi, e.g. 376.5kHz");
  predict->add_option("--p1", p1, "probability of ending an attempt in |+-1>");

  auto* pumpprobe = app.add_subcommand("pumpprobe", "singlet pump-probe quantum-jump simulation");
  add_common(pumpprobe, pp, true);

  auto* fit = app.add_subcommand("fit", "fit a CSV curve");
  FitRequest freq;
  std::string form = "stretched";
  std::optional<double> fix_m;
  bool unweighted = false;
  fit->add_option("--input", freq.input, "CSV file")->required();
  fit->add_option("--out", freq.output, "JSON result path");
  fit->add_option("--form", form, "stretched, saturation, rise or decay");
  fit->add_option("--x", freq.x, "x column (default: first)");
  fit->add_option("--y", freq.y, "y column (default: second)");
  fit->add_option("--sigma", freq.sigma, "1-sigma column (default: third)");
  fit->add_option("--fix-m", fix_m, "hold the stretch exponent fixed");
  fit->add_flag("--unweighted", unweighted, "ignore the sigma column");
  fit->add_flag("--strict", freq.strict, "exit 4 when the fit fails");

  auto* reproduce = app.add_subcommand("reproduce", "regenerate a figure's data tables");
  add_common(reproduce, rep, false);
  std::string figure;
  reproduce->add_option("figure", figure, "fig1d, fig2, fig3a, fig3b, fig4a, fig4b or fig5b")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (simulate->parsed()) return run_file(sim.config, sim, Command::simulate);
    if (sweep->parsed()) return run_file(swp.config, swp, Command::sweep);
    if (pumpprobe->parsed()) return run_file(pp.config, pp, Command::pumpprobe);
    if (predict->parsed()) {
      if (!pre.config.empty()) return run_file(pre.config, pre, Command::predict);
      if (model != "blok") fail(ErrorCode::schema_violation, "--model: flag mode supports 'blok' only");
      if (tau_s.empty() || dw_s.empty()) {
        fail(ErrorCode::schema_violation, "predict: give --config or both --tau and --dw");
      }
      ScenarioConfig cfg;
      cfg.command = Command::predict;
      cfg.name = "predict";
      Scenario sc;
      sc.name = "cli";
      sc.run.spin = NuclearSpinParams::from_delta_omega(
          "cli", parse_quantity(dw_s, Dimension::angular_frequency, "--dw"), 1.0);
      sc.run.noise.tau = parse_quantity(tau_s, Dimension::time, "--tau");
      sc.run.n_attempts_grid = {0};
      cfg.scenarios.push_back(sc);
      cfg.predict = PredictConfig{};
      cfg.predict->p1 = p1;
      return report(run_config(std::move(cfg), options(pre)));
    }
    if (fit->parsed()) {
      freq.form = fit_form_from_string(form);
      freq.options.fix_m = fix_m;
      freq.options.weighted = !unweighted;
      return report(run_fit(freq));
    }
    if (reproduce->parsed()) {
      if (!rep.out_dir) rep.out_dir = "out/" + figure;
      return run_file(figure_config_path(figure), rep, std::nullopt);
    }
  } catch (const Error& e) {
    std::cerr << "nvsim: " << e.what() << "\n";
    return exit_status(e);
  } catch (const std::exception& e) {
    std::cerr << "nvsim: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

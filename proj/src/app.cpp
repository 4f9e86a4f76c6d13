#include "nvmem/app.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>

#include "nvmem/analytic.hpp"
#include "nvmem/datasets.hpp"
#include "nvmem/io.hpp"

namespace nvmem {

namespace {

std::string g4(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string with_error(const FitResult& f, const char* name) {
  return g4(f.value(name)) + " +- " + g4(f.error(name));
}

struct Output {
  std::string dir;
  std::string prefix;
  RunReport report;

  std::string path(const std::string& stem, const char* ext) const {
    return (std::filesystem::path(dir) / (prefix + "_" + stem + ext)).string();
  }
  void write(const std::string& p, const std::string& content) {
    write_text(p, content);
    report.artifacts.push_back(p);
  }
};

// Runs a fit, recording failure instead of throwing.
template <class F>
std::optional<FitResult> try_fit(F&& fit, bool& failed) {
  try {
    FitResult r = fit();
    if (!r.converged || !r.identifiable) failed = true;
    return r;
  } catch (const Error&) {
    failed = true;
    return std::nullopt;
  }
}

nlohmann::json header(const ScenarioConfig& cfg) {
  return {{"schema", cfg.schema},
          {"command", to_string(cfg.command)},
          {"name", cfg.name},
          {"config_digest", config_digest(cfg)},
          {"seed", cfg.seed}};
}

void run_simulate(const ScenarioConfig& cfg, const RunOptions& opt, Output& out) {
  auto summary = header(cfg);
  summary["scenarios"] = nlohmann::json::array();
  for (const auto& sc : cfg.scenarios) {
    const auto curve = simulate_curve(sc.run, EngineOptions{opt.threads});
    out.write(out.path(sc.name, ".csv"), to_csv(curve_table(curve)));
    bool failed = false;
    const auto fit = try_fit([&] { return fit_stretched_exp(curve, cfg.fit); }, failed);
    out.report.fit_failed |= failed;
    nlohmann::json s = {{"name", sc.name},
                        {"digest", curve.digest},
                        {"seed", curve.seed},
                        {"trials", sc.run.n_trials}};
    s["fit"] = fit ? to_json(*fit) : nlohmann::json(nullptr);
    summary["scenarios"].push_back(s);
    std::string line = sc.name + ": ";
    if (fit && fit->unbounded) {
      line += "N_1e = inf (no decay resolved)";
    } else if (fit) {
      line += "N_1e = " + with_error(*fit, "N_1e") + ", m = " + with_error(*fit, "m") +
              ", A = " + with_error(*fit, "A");
    } else {
      line += "fit failed";
    }
    out.report.lines.push_back(line);
  }
  out.write(out.path("summary", ".json"), summary.dump(2) + "\n");
}

void run_sweep(const ScenarioConfig& cfg, const RunOptions& opt, Output& out) {
  const auto& sw = *cfg.sweep;
  SweepOptions so = sw.options;
  so.fit = cfg.fit;
  so.engine.threads = opt.threads;
  auto summary = header(cfg);
  summary["scenarios"] = nlohmann::json::array();
  for (const auto& sc : cfg.scenarios) {
    const auto points = sweep(sc.run, sw.dims, so);
    CsvTable t;
    for (const auto& d : sw.dims) t.header.push_back(to_string(d.axis));
    for (const char* h : {"N_1e", "N_1e_err", "m", "m_err", "A", "A_err", "converged", "unbounded",
                          "digest", "seed"}) {
      t.header.push_back(h);
    }
    bool failed = false;
    double best = 0.0;
    std::vector<DataPoint> sat;
    for (const auto& p : points) {
      std::vector<std::string> row;
      for (double v : p.values) row.push_back(format_double(v));
      for (const char* name : {"N_1e", "m", "A"}) {
        row.push_back(format_double(p.fit.value(name)));
        row.push_back(format_double(p.fit.error(name)));
      }
      row.push_back(p.fit.converged ? "1" : "0");
      row.push_back(p.fit.unbounded ? "1" : "0");
      row.push_back(p.curve.digest);
      row.push_back(std::to_string(p.curve.seed));
      t.rows.push_back(std::move(row));
      if (!p.fit.converged) failed = true;
      const double n1e = p.fit.value("N_1e");
      if (std::isfinite(n1e)) best = std::max(best, n1e);
      if (sw.dims.size() == 1 && std::isfinite(n1e)) {
        sat.push_back({p.values[0], n1e, p.fit.error("N_1e")});
      }
    }
    out.write(out.path(sc.name + "_sweep", ".csv"), to_csv(t));
    nlohmann::json s = {{"name", sc.name}, {"seed", sc.run.master_seed}, {"points", points.size()},
                        {"max_N_1e", best}};
    std::string line = sc.name + ": " + std::to_string(points.size()) + " points, max N_1e = " + g4(best);
    if (sw.fit_saturation && sw.dims.size() == 1 && sw.dims[0].axis == SweepAxis::repump_power) {
      const auto fit = try_fit([&] { return fit_saturation(sat, cfg.fit); }, failed);
      s["saturation"] = fit ? to_json(*fit) : nlohmann::json(nullptr);
      if (fit) {
        line += ", N_sat = " + with_error(*fit, "N_sat") + ", P_sat = " + g4(fit->value("P_sat") / 1e-9) +
                " +- " + g4(fit->error("P_sat") / 1e-9) + " nW";
      }
    }
    out.report.fit_failed |= failed;
    summary["scenarios"].push_back(s);
    out.report.lines.push_back(line);
  }
  out.write(out.path("summary", ".json"), summary.dump(2) + "\n");
}

void run_predict(const ScenarioConfig& cfg, Output& out) {
  const auto& pc = *cfg.predict;
  auto summary = header(cfg);
  summary["scenarios"] = nlohmann::json::array();
  for (const auto& sc : cfg.scenarios) {
    const auto& r = sc.run;
    nlohmann::json s = {{"name", sc.name}};
    CsvTable t;
    std::string line = sc.name + ": ";
    if (pc.model == PredictModel::blok) {
      const double dw = delta_omega(r.spin, r.field);
      const double n1e = blok_decay_constant(r.noise.tau, dw, pc.p1);
      std::vector<long> grid = r.n_attempts_grid;
      if (grid.size() < 2) {
        grid.clear();
        const double top = std::isfinite(n1e) ? 3.0 * n1e : 1000.0;
        for (int k = 0; k <= 30; ++k) grid.push_back(std::lround(top * k / 30.0));
        grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
      }
      t.header = {"N", "coherence"};
      for (long n : grid) {
        const double c = blok_coherence({r.noise.tau, dw, pc.p1, static_cast<double>(n)});
        t.rows.push_back({std::to_string(n), format_double(c)});
      }
      s["N_1e"] = n1e;
      s["tau"] = r.noise.tau;
      s["delta_omega"] = dw;
      s["p1"] = pc.p1;
      line += "N_1e = " + g4(n1e);
    } else {
      const auto curve = revival_curve(r.spin, r.field, r.seq, pc.delays, pc.n, pc.p_init, pc.amplitude);
      t.header = {"T", "coherence"};
      // Report the strongest revival: the highest interior local maximum.
      double best_t = 0.0, best_c = -1.0;
      for (size_t i = 0; i < curve.size(); ++i) {
        const auto& p = curve[i];
        t.rows.push_back({format_double(p.delay), format_double(p.coherence)});
        const bool peak = i > 0 && i + 1 < curve.size() && p.coherence >= curve[i - 1].coherence &&
                          p.coherence >= curve[i + 1].coherence;
        if (peak && p.coherence > best_c) best_c = p.coherence, best_t = p.delay;
      }
      s["best_delay"] = best_t;
      s["best_coherence"] = best_c;
      line += "revival " + g4(best_c) + " at T = " + g4(best_t / 1e-6) + " us";
    }
    out.write(out.path(sc.name + "_predict", ".csv"), to_csv(t));
    summary["scenarios"].push_back(s);
    out.report.lines.push_back(line);
  }
  out.write(out.path("summary", ".json"), summary.dump(2) + "\n");
}

void run_pumpprobe(const ScenarioConfig& cfg, const RunOptions& opt, Output& out) {
  const auto& pp = *cfg.pumpprobe;
  PumpProbeOptions o = pp.options;
  o.threads = opt.threads;
  const auto pulse = calibrated_pi_pulse(pp.pulse_fwhm);
  const auto res = pump_probe_curve(pp.model, pulse, pp.delays, o);
  CsvTable t;
  t.header = {"delay", "F0", "std_err", "digest", "seed"};
  const std::string digest = config_digest(cfg);
  std::vector<DataPoint> data;
  for (const auto& p : res.points) {
    t.rows.push_back({format_double(p.delay), format_double(p.f0), format_double(p.std_err), digest,
                      std::to_string(o.seed)});
    if (p.delay >= pp.fit_from) data.push_back({p.delay, p.f0, p.std_err});
  }
  out.write(out.path("pumpprobe", ".csv"), to_csv(t));
  bool failed = false;
  const auto fit = try_fit([&] { return fit_exponential(data, ExpDirection::rise, cfg.fit); }, failed);
  out.report.fit_failed |= failed;
  auto summary = header(cfg);
  summary["p_s"] = res.pulse.p_singlet;
  summary["p_excited"] = res.pulse.p_excited;
  summary["p_double_excitation"] = res.pulse.p_double_excitation;
  summary["isc_rate"] = pp.model.isc_rate();
  summary["fit"] = fit ? to_json(*fit) : nlohmann::json(nullptr);
  std::string line = "pumpprobe: p_s = " + g4(res.pulse.p_singlet) +
                     ", double excitation = " + g4(res.pulse.p_double_excitation);
  if (fit) {
    const double asymptote = fit->value("A") + fit->value("c");
    summary["lifetime"] = fit->value("T");
    summary["lifetime_err"] = fit->error("T");
    summary["f0_asymptote"] = asymptote;
    line += ", lifetime = " + g4(fit->value("T") / 1e-9) + " +- " + g4(fit->error("T") / 1e-9) + " ns";
    try {
      const auto b = branching_from_measurement(res.pulse.p_singlet, asymptote, true);
      summary["branching"] = {b.b0, b.b_plus, b.b_minus};
      summary["branching_ratio"] = b.ratio_to_minus();
      line += ", branching = " + g4(b.ratio_to_minus()) + ":1:1";
    } catch (const Error& e) {
      summary["branching"] = nullptr;
      summary["branching_error"] = e.what();
    }
  } else {
    line += ", fit failed";
  }
  out.write(out.path("summary", ".json"), summary.dump(2) + "\n");
  out.report.lines.push_back(line);
}

}  // namespace

RunReport run_config(ScenarioConfig cfg, const RunOptions& opt) {
  if (opt.seed) cfg.set_seed(*opt.seed);
  if (opt.trials) cfg.set_trials(*opt.trials);
  if (opt.budget) cfg.set_budget(*opt.budget);
  if (opt.out_dir) cfg.out_dir = *opt.out_dir;
  Output out{cfg.out_dir, cfg.name, {}};
  out.write(out.path("effective", ".yaml"), emit_config(cfg));
  switch (cfg.command) {
    case Command::simulate: run_simulate(cfg, opt, out); break;
    case Command::sweep: run_sweep(cfg, opt, out); break;
    case Command::predict: run_predict(cfg, out); break;
    case Command::pumpprobe: run_pumpprobe(cfg, opt, out); break;
  }
  if (opt.strict && out.report.fit_failed) {
    fail(ErrorCode::fit_failure, "fit failed for " + cfg.name + " (see " + out.path("summary", ".json") + ")");
  }
  return out.report;
}

FitForm fit_form_from_string(const std::string& s) {
  if (s == "stretched") return FitForm::stretched;
  if (s == "saturation") return FitForm::saturation;
  if (s == "rise") return FitForm::rise;
  if (s == "decay") return FitForm::decay;
  fail(ErrorCode::schema_violation, "--form: '" + s + "' is not one of stretched, saturation, rise, decay");
}

RunReport run_fit(const FitRequest& req) {
  const auto table = parse_csv(read_text(req.input));
  const auto data = table_data(table, req.x, req.y, req.sigma);
  RunReport report;
  FitResult fit;
  try {
    switch (req.form) {
      case FitForm::stretched: fit = fit_stretched_exp(data, req.options); break;
      case FitForm::saturation: fit = fit_saturation(data, req.options); break;
      case FitForm::rise: fit = fit_exponential(data, ExpDirection::rise, req.options); break;
      case FitForm::decay: fit = fit_exponential(data, ExpDirection::decay, req.options); break;
    }
  } catch (const Error& e) {
    if (req.strict) fail(ErrorCode::fit_failure, std::string("fit failed: ") + e.what());
    report.fit_failed = true;
    report.lines.push_back(std::string("fit failed: ") + e.what());
    return report;
  }
  report.fit_failed = !fit.converged || !fit.identifiable;
  auto j = to_json(fit);
  j["input"] = req.input;
  j["points"] = data.size();
  const std::string path =
      req.output.empty() ? std::filesystem::path(req.input).replace_extension(".fit.json").string()
                         : req.output;
  write_text(path, j.dump(2) + "\n");
  report.artifacts.push_back(path);
  std::string line = fit.model + ":";
  for (const auto& p : fit.params) line += " " + p.name + " = " + g4(p.value) + " +- " + g4(p.error) + ";";
  if (fit.unbounded) line += " (no decay resolved)";
  report.lines.push_back(line);
  if (req.strict && report.fit_failed) fail(ErrorCode::fit_failure, "fit did not converge");
  return report;
}

const std::vector<std::string>& figure_ids() {
  static const std::vector<std::string> ids = {"fig1d", "fig2", "fig3a", "fig3b",
                                               "fig4a", "fig4b", "fig5b"};
  return ids;
}

std::string figure_config_path(const std::string& id) {
  bool known = false;
  for (const auto& f : figure_ids()) known |= f == id;
  if (!known) fail(ErrorCode::invalid_argument, "unknown figure '" + id + "'");
  return (std::filesystem::path(data_root()) / "configs" / (id + ".yaml")).string();
}

int exit_status(const Error& e) {
  switch (e.code()) {
    case ErrorCode::schema_violation: return 2;
    case ErrorCode::budget_exceeded: return 3;
    case ErrorCode::fit_failure: return 4;
    default: return 1;
  }
}

std::optional<double> budget_from_env() {
  const char* v = std::getenv("NVSIM_BUDGET");
  if (!v || !*v) return std::nullopt;
  char* end = nullptr;
  const double b = std::strtod(v, &end);
  if (end == v || *end != '\0' || !(b > 0.0) || !std::isfinite(b)) {
    fail(ErrorCode::schema_violation, std::string("NVSIM_BUDGET: expected a positive number, got '") + v + "'");
  }
  return b;
}

}  // namespace nvmem

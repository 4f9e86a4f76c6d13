#include "nvmem/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "nvmem/datasets.hpp"
#include "nvmem/error.hpp"

namespace nvmem {

const char* to_string(Command c) {
  switch (c) {
    case Command::simulate: return "simulate";
    case Command::sweep: return "sweep";
    case Command::predict: return "predict";
    case Command::pumpprobe: return "pumpprobe";
  }
  return "?";
}

void ScenarioConfig::set_seed(std::uint64_t s) {
  seed = s;
  for (auto& sc : scenarios) sc.run.master_seed = s;
  if (pumpprobe) pumpprobe->options.seed = s;
}

void ScenarioConfig::set_trials(long trials) {
  require(trials >= 1, "--trials must be >= 1");
  for (auto& sc : scenarios) sc.run.n_trials = trials;
  if (pumpprobe) pumpprobe->options.trials = trials;
}

void ScenarioConfig::set_budget(double budget) {
  require(budget > 0.0, "attempt budget must be positive");
  for (auto& sc : scenarios) sc.run.budget = budget;
}

namespace {

[[noreturn]] void schema(const std::string& path, const std::string& why) {
  fail(ErrorCode::schema_violation, path + ": " + why);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// A config section seen through an optional scenario overlay: keys are
// looked up in the overlay first, then in the base document.
class Section {
 public:
  Section(YAML::Node base, std::string base_path, std::set<std::string> allowed,
          YAML::Node over = YAML::Node(), std::string over_path = {})
      : allowed_(std::move(allowed)) {
    add(over, over_path);
    add(base, base_path);
  }

  bool has(const std::string& key) const { return find(key).has_value(); }

  std::string path(const std::string& key) const {
    auto f = find(key);
    return f ? f->second : join(layers_.empty() ? std::string() : layers_.back().second, key);
  }

  YAML::Node node(const std::string& key) const {
    auto f = find(key);
    return f ? f->first : YAML::Node();
  }

  double quantity(const std::string& key, Dimension dim, double fallback) const {
    auto f = find(key);
    if (!f) return fallback;
    return parse_quantity(scalar(*f), dim, f->second);
  }

  double number(const std::string& key, double fallback) const {
    auto f = find(key);
    if (!f) return fallback;
    return as_number(f->first, f->second);
  }

  long integer(const std::string& key, long fallback) const {
    auto f = find(key);
    if (!f) return fallback;
    const double v = as_number(f->first, f->second);
    if (v != std::floor(v) || std::abs(v) > 9e15) schema(f->second, "expected an integer");
    return static_cast<long>(v);
  }

  bool boolean(const std::string& key, bool fallback) const {
    auto f = find(key);
    if (!f) return fallback;
    try {
      return f->first.as<bool>();
    } catch (const YAML::Exception&) {
      schema(f->second, "expected true or false");
    }
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    auto f = find(key);
    if (!f) return fallback;
    return scalar(*f);
  }

  static double as_number(const YAML::Node& n, const std::string& path) {
    if (!n.IsScalar()) schema(path, "expected a number");
    try {
      return n.as<double>();
    } catch (const YAML::Exception&) {
      schema(path, "expected a plain number, got '" + n.Scalar() + "'");
    }
  }

 private:
  using Entry = std::pair<YAML::Node, std::string>;

  void add(const YAML::Node& n, const std::string& path) {
    if (!n || n.IsNull()) return;
    if (!n.IsMap()) schema(path, "expected a table of keys");
    for (const auto& kv : n) {
      const auto key = kv.first.as<std::string>();
      if (!allowed_.count(key)) schema(join(path, key), "unknown key");
    }
    layers_.emplace_back(n, path);
  }

  std::optional<Entry> find(const std::string& key) const {
    for (const auto& [n, p] : layers_) {
      if (n[key]) return Entry{n[key], join(p, key)};
    }
    return std::nullopt;
  }

  static std::string scalar(const Entry& e) {
    if (!e.first.IsScalar()) schema(e.second, "expected a single value");
    return e.first.Scalar();
  }

  std::set<std::string> allowed_;
  std::vector<Entry> layers_;
};

void check_keys(const YAML::Node& n, const std::string& path, const std::set<std::string>& allowed) {
  if (!n.IsMap()) schema(path.empty() ? "document" : path, "expected a table of keys");
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) schema(join(path, key), "unknown key");
  }
}

// "from"/"to"/"points" range or explicit list of quantities.
std::vector<double> quantity_list(const YAML::Node& n, const std::string& path, Dimension dim,
                                  bool dimensionless = false) {
  auto item = [&](const YAML::Node& v, const std::string& p) {
    if (dimensionless) return Section::as_number(v, p);
    if (!v.IsScalar()) schema(p, "expected a single value");
    return parse_quantity(v.Scalar(), dim, p);
  };
  std::vector<double> out;
  if (n.IsSequence()) {
    for (size_t i = 0; i < n.size(); ++i) out.push_back(item(n[i], path + "[" + std::to_string(i) + "]"));
  } else if (n.IsMap()) {
    check_keys(n, path, {"from", "to", "points"});
    for (const char* k : {"from", "to", "points"}) {
      if (!n[k]) schema(join(path, k), "missing");
    }
    const double a = item(n["from"], join(path, "from"));
    const double b = item(n["to"], join(path, "to"));
    const double pts = Section::as_number(n["points"], join(path, "points"));
    if (pts < 2 || pts != std::floor(pts)) schema(join(path, "points"), "expected an integer >= 2");
    const int m = static_cast<int>(pts);
    for (int k = 0; k < m; ++k) out.push_back(a + (b - a) * k / (m - 1));
  } else {
    schema(path, "expected a list or a from/to/points range");
  }
  if (out.empty()) schema(path, "must not be empty");
  return out;
}

std::vector<long> attempt_grid(const YAML::Node& n, const std::string& path) {
  std::vector<long> out;
  for (double v : quantity_list(n, path, Dimension::time, true)) {
    const long k = std::lround(v);
    if (v < 0) schema(path, "attempt counts must be >= 0");
    if (out.empty() || k > out.back()) out.push_back(k);
  }
  return out;
}

template <class E>
E choose(const std::string& value, const std::string& path,
         std::initializer_list<std::pair<const char*, E>> options) {
  std::string names;
  for (const auto& [name, e] : options) {
    if (value == name) return e;
    names += names.empty() ? name : std::string(", ") + name;
  }
  schema(path, "'" + value + "' is not one of: " + names);
}

// Sections of a scenario after overlaying.
struct Layers {
  YAML::Node base, over;
  std::string over_path;
  YAML::Node b(const char* k) const { return base ? base[k] : YAML::Node(); }
  YAML::Node o(const char* k) const { return over ? over[k] : YAML::Node(); }
  std::string op(const char* k) const { return join(over_path, k); }
};

FieldParams parse_field(const Layers& l) {
  // An overlay field replaces the base one entirely.
  const bool from_over = l.o("field") && !l.o("field").IsNull();
  YAML::Node n = from_over ? l.o("field") : l.b("field");
  const std::string path = from_over ? l.op("field") : "field";
  if (!n) return FieldParams::reference();
  Section s(n, path, {"larmor", "b", "gamma"});
  if (s.has("larmor") == s.has("b")) schema(path, "give exactly one of 'larmor' or 'b'");
  if (s.has("larmor")) {
    const double w = s.quantity("larmor", Dimension::angular_frequency, 0.0);
    if (!(w > 0.0)) schema(s.path("larmor"), "must be positive");
    return FieldParams::from_larmor(w);
  }
  const double g = s.quantity("b", Dimension::magnetic_field, 0.0);
  if (!(g > 0.0)) schema(s.path("b"), "must be positive");
  const double gamma = s.number("gamma", kGammaC13);
  return FieldParams::from_field(g, gamma);
}

NuclearSpinParams parse_spin(const Layers& l) {
  Section s(l.b("spin"), "spin",
            {"table", "label", "delta_omega", "a_par", "a_perp", "t2_star", "t2_hahn",
             "approximate"},
            l.o("spin"), l.op("spin"));
  std::string label = "spin";
  double dw = 0.0, t2_star = 1.0;
  bool have_dw = false;
  if (s.has("table")) {
    const auto key = s.text("table", "");
    const SpinRecord* rec = nullptr;
    for (const auto& r : builtin_spins()) {
      if (r.label == key) rec = &r;
    }
    if (!rec) schema(s.path("table"), "unknown spin '" + key + "'");
    label = rec->label;
    dw = units::angular(rec->delta_omega_hz);
    t2_star = rec->t2_star;
    have_dw = true;
  }
  label = s.text("label", label);
  t2_star = s.quantity("t2_star", Dimension::time, t2_star);
  const double t2_hahn = s.quantity("t2_hahn", Dimension::time, kDefaultT2Hahn);
  if (!(t2_star > 0.0)) schema(s.path("t2_star"), "must be positive");
  if (!(t2_hahn > 0.0)) schema(s.path("t2_hahn"), "must be positive");
  if (s.has("a_par") || s.has("a_perp")) {
    if (s.has("delta_omega")) schema(s.path("delta_omega"), "give either delta_omega or a_par/a_perp");
    Hyperfine hf;
    hf.a_par = s.quantity("a_par", Dimension::angular_frequency, 0.0);
    hf.a_perp = s.quantity("a_perp", Dimension::angular_frequency, 0.0);
    if (hf.a_perp < 0.0) schema(s.path("a_perp"), "must be >= 0");
    return NuclearSpinParams::from_hyperfine(label, hf, t2_star, t2_hahn);
  }
  if (s.has("delta_omega")) {
    dw = s.quantity("delta_omega", Dimension::angular_frequency, 0.0);
    have_dw = true;
  }
  if (!have_dw) schema("spin", "give 'table', 'delta_omega' or 'a_par'/'a_perp'");
  if (dw < 0.0) schema(s.path("delta_omega"), "must be >= 0");
  return NuclearSpinParams::from_delta_omega(label, dw, t2_star, t2_hahn, s.boolean("approximate", true));
}

AttemptSequence parse_sequence(const Layers& l) {
  Section s(l.b("sequence"), "sequence",
            {"alpha", "middle_pi", "delay", "delay_rule", "delay_multiple", "post_repump_delay",
             "repump_duration", "pre_wait", "attempt_duration", "compensate_repump_mean",
             "generic_alpha"},
            l.o("sequence"), l.op("sequence"));
  AttemptSequence q;
  q.alpha = s.quantity("alpha", Dimension::angle, q.alpha);
  q.has_middle_pi = s.boolean("middle_pi", q.has_middle_pi);
  q.inter_pulse_delay = s.quantity("delay", Dimension::time, q.inter_pulse_delay);
  q.delay_rule = choose<DelayRule>(s.text("delay_rule", "fixed"), s.path("delay_rule"),
                                   {{"fixed", DelayRule::fixed},
                                    {"larmor_period", DelayRule::larmor_period},
                                    {"phase_matched", DelayRule::phase_matched}});
  q.delay_multiple = static_cast<int>(s.integer("delay_multiple", q.delay_multiple));
  q.post_repump_delay = s.quantity("post_repump_delay", Dimension::time, q.post_repump_delay);
  q.repump_duration = s.quantity("repump_duration", Dimension::time, q.repump_duration);
  // The idle time before the first pulse is kept when a delay rule later
  // changes t; attempt_duration is the exact total for the delay given here.
  if (s.has("pre_wait") && s.has("attempt_duration")) {
    schema(s.path("pre_wait"), "conflicts with attempt_duration");
  }
  if (s.has("attempt_duration")) {
    q.attempt_duration = s.quantity("attempt_duration", Dimension::time, 0.0);
  } else {
    const double pre = s.quantity("pre_wait", Dimension::time, 0.0);
    if (pre < 0.0) schema(s.path("pre_wait"), "must be >= 0");
    q.attempt_duration = q.scheduled_duration() + pre;
  }
  q.compensate_repump_mean = s.boolean("compensate_repump_mean", q.compensate_repump_mean);
  q.generic_alpha = s.boolean("generic_alpha", q.generic_alpha);
  try {
    q.validate();
  } catch (const Error& e) {
    schema(l.over ? l.op("sequence") : "sequence", e.what());
  }
  return q;
}

NoiseModel parse_noise(const Layers& l, const NuclearSpinParams& spin) {
  Section s(l.b("noise"), "noise",
            {"p_mw", "p_init", "tau", "sigma_tau", "sigma_detuning", "detuning_from_t2_star",
             "p_depol", "depol_decay_constant", "half_pi_can_fail"},
            l.o("noise"), l.op("noise"));
  NoiseModel m;
  m.p_mw = s.number("p_mw", 0.0);
  m.p_init = s.number("p_init", 0.0);
  m.tau = s.quantity("tau", Dimension::time, 0.0);
  m.sigma_tau_qs = s.quantity("sigma_tau", Dimension::time, 0.0);
  if (s.has("sigma_detuning") && s.has("detuning_from_t2_star")) {
    schema(s.path("detuning_from_t2_star"), "conflicts with sigma_detuning");
  }
  m.sigma_detuning_qs = s.quantity("sigma_detuning", Dimension::angular_frequency, 0.0);
  if (s.boolean("detuning_from_t2_star", false)) {
    m.sigma_detuning_qs = detuning_width_for_t2_star(spin.t2_star());
  }
  if (s.has("p_depol") && s.has("depol_decay_constant")) {
    schema(s.path("depol_decay_constant"), "conflicts with p_depol");
  }
  m.p_depol_per_attempt = s.number("p_depol", 0.0);
  if (s.has("depol_decay_constant")) {
    const double n = s.number("depol_decay_constant", 0.0);
    if (!(n > 0.0)) schema(s.path("depol_decay_constant"), "must be positive");
    m.p_depol_per_attempt = depolarization_for_decay_constant(n);
  }
  m.half_pi_can_fail = s.boolean("half_pi_can_fail", true);
  try {
    m.validate();
  } catch (const Error& e) {
    schema(l.over ? l.op("noise") : "noise", e.what());
  }
  return m;
}

void parse_run(const Layers& l, RunSpec& r) {
  Section s(l.b("run"), "run",
            {"trials", "grid", "echo_count", "initial", "intrinsic_envelope", "budget"}, l.o("run"),
            l.op("run"));
  r.n_trials = s.integer("trials", r.n_trials);
  if (r.n_trials < 1) schema(s.path("trials"), "must be >= 1");
  if (!s.has("grid")) schema(s.path("grid"), "missing");
  r.n_attempts_grid = attempt_grid(s.node("grid"), s.path("grid"));
  r.echo_count = static_cast<int>(s.integer("echo_count", 0));
  if (r.echo_count < 0 || r.echo_count > 2) schema(s.path("echo_count"), "must be 0, 1 or 2");
  r.initial = choose<NuclearInit>(s.text("initial", "superposition"), s.path("initial"),
                                  {{"superposition", NuclearInit::superposition},
                                   {"eigenstate", NuclearInit::eigenstate}});
  r.intrinsic_envelope = s.boolean("intrinsic_envelope", true);
  r.budget = s.number("budget", kDefaultAttemptBudget);
  if (!(r.budget > 0.0)) schema(s.path("budget"), "must be positive");
}

RunSpec parse_run_spec(const Layers& l, std::uint64_t seed, bool need_grid) {
  RunSpec r;
  r.field = parse_field(l);
  r.spin = parse_spin(l);
  r.seq = parse_sequence(l);
  r.noise = parse_noise(l, r.spin);
  r.master_seed = seed;
  const bool has_run = (l.b("run") && !l.b("run").IsNull()) || (l.o("run") && !l.o("run").IsNull());
  if (need_grid || has_run) {
    parse_run(l, r);
  } else {
    r.n_attempts_grid = {0};
  }
  return r;
}

SweepConfig parse_sweep(const YAML::Node& n) {
  Section s(n, "sweep",
            {"dimensions", "auto_grid", "pilot_trials", "max_attempts", "grid_points", "grid_span",
             "tau_min", "p_sat", "power_mapping", "fit_saturation"});
  SweepConfig c;
  const auto dims = s.node("dimensions");
  if (!dims || !dims.IsSequence() || dims.size() == 0) schema("sweep.dimensions", "expected a non-empty list");
  for (size_t i = 0; i < dims.size(); ++i) {
    const std::string p = "sweep.dimensions[" + std::to_string(i) + "]";
    check_keys(dims[i], p, {"axis", "values"});
    if (!dims[i]["axis"]) schema(p + ".axis", "missing");
    if (!dims[i]["values"]) schema(p + ".values", "missing");
    SweepDimension d;
    const auto name = dims[i]["axis"].as<std::string>();
    try {
      d.axis = sweep_axis_from_string(name);
    } catch (const Error&) {
      schema(p + ".axis", "unknown sweep axis '" + name + "'");
    }
    Dimension dim = Dimension::time;
    bool plain = false;
    switch (d.axis) {
      case SweepAxis::repump_power: dim = Dimension::power; break;
      case SweepAxis::b_field: dim = Dimension::magnetic_field; break;
      case SweepAxis::tau: dim = Dimension::time; break;
      case SweepAxis::delta_omega: dim = Dimension::angular_frequency; break;
      case SweepAxis::alpha: dim = Dimension::angle; break;
      case SweepAxis::p_mw:
      case SweepAxis::p_init: plain = true; break;
    }
    d.values = quantity_list(dims[i]["values"], p + ".values", dim, plain);
    c.dims.push_back(std::move(d));
  }
  auto& o = c.options;
  o.auto_grid = s.boolean("auto_grid", o.auto_grid);
  o.pilot_trials = s.integer("pilot_trials", o.pilot_trials);
  o.max_attempts = s.integer("max_attempts", o.max_attempts);
  o.grid_points = static_cast<int>(s.integer("grid_points", o.grid_points));
  o.grid_span = s.number("grid_span", o.grid_span);
  o.tau_min = s.quantity("tau_min", Dimension::time, o.tau_min);
  o.p_sat = s.quantity("p_sat", Dimension::power, o.p_sat);
  o.power_mapping = choose<PowerMapping>(s.text("power_mapping", "rate"), s.path("power_mapping"),
                                         {{"rate", PowerMapping::rate},
                                          {"saturating_decay", PowerMapping::saturating_decay}});
  c.fit_saturation = s.boolean("fit_saturation", false);
  if (o.pilot_trials < 1) schema(s.path("pilot_trials"), "must be >= 1");
  if (o.max_attempts < 1) schema(s.path("max_attempts"), "must be >= 1");
  if (o.grid_points < 2) schema(s.path("grid_points"), "must be >= 2");
  if (!(o.grid_span > 0.0)) schema(s.path("grid_span"), "must be positive");
  for (const auto& d : c.dims) {
    if (d.axis == SweepAxis::repump_power && !(o.tau_min > 0.0 && o.p_sat > 0.0)) {
      schema("sweep", "repump_power axis needs tau_min and p_sat");
    }
  }
  return c;
}

PredictConfig parse_predict(const YAML::Node& n) {
  Section s(n, "predict", {"model", "p1", "delays", "n", "p_init", "amplitude"});
  PredictConfig c;
  c.model = choose<PredictModel>(s.text("model", "blok"), s.path("model"),
                                 {{"blok", PredictModel::blok}, {"revival", PredictModel::revival}});
  c.p1 = s.number("p1", c.p1);
  if (!(c.p1 >= 0.0 && c.p1 <= 1.0)) schema(s.path("p1"), "must lie in [0, 1]");
  if (s.has("delays")) c.delays = quantity_list(s.node("delays"), s.path("delays"), Dimension::time);
  c.n = static_cast<int>(s.integer("n", c.n));
  c.p_init = s.number("p_init", c.p_init);
  c.amplitude = s.number("amplitude", c.amplitude);
  if (c.model == PredictModel::revival && c.delays.empty()) schema("predict.delays", "missing");
  if (c.n < 0) schema(s.path("n"), "must be >= 0");
  return c;
}

PumpProbeConfig parse_pumpprobe(const YAML::Node& n, std::uint64_t seed) {
  Section s(n, "pumpprobe",
            {"optical", "pulse_fwhm", "delays", "fit_from", "window", "readout", "trials",
             "max_rate_dt"});
  PumpProbeConfig c;
  if (s.has("optical")) {
    Section o(s.node("optical"), "pumpprobe.optical",
              {"t_ex", "t_eprime", "isc_es", "isc_xs", "t_singlet", "branching", "symmetric",
               "strain_shift"});
    auto& m = c.model;
    m.t_ex = o.quantity("t_ex", Dimension::time, m.t_ex);
    m.t_eprime = o.quantity("t_eprime", Dimension::time, m.t_eprime);
    m.isc_es = o.quantity("isc_es", Dimension::angular_frequency, 0.0);  // 0: derived
    m.isc_xs = o.quantity("isc_xs", Dimension::angular_frequency, m.isc_xs);
    m.t_singlet = o.quantity("t_singlet", Dimension::time, m.t_singlet);
    m.symmetric = o.boolean("symmetric", m.symmetric);
    m.strain_shift_hz = o.quantity("strain_shift", Dimension::frequency, m.strain_shift_hz);
    if (o.has("branching")) {
      const auto b = o.node("branching");
      const auto p = o.path("branching");
      if (!b.IsSequence() || b.size() != 3) schema(p, "expected [zero, plus, minus]");
      try {
        m.branching = Branching::from_ratio(Section::as_number(b[0], p + "[0]"),
                                            Section::as_number(b[1], p + "[1]"),
                                            Section::as_number(b[2], p + "[2]"));
      } catch (const Error& e) {
        if (e.code() == ErrorCode::schema_violation) throw;
        schema(p, e.what());
      }
    }
    try {
      m.validate();
    } catch (const Error& e) {
      schema("pumpprobe.optical", e.what());
    }
  }
  c.pulse_fwhm = s.quantity("pulse_fwhm", Dimension::time, c.pulse_fwhm);
  if (!(c.pulse_fwhm > 0.0)) schema(s.path("pulse_fwhm"), "must be positive");
  if (!s.has("delays")) schema("pumpprobe.delays", "missing");
  c.delays = quantity_list(s.node("delays"), s.path("delays"), Dimension::time);
  for (double d : c.delays) {
    if (d < 0.0) schema(s.path("delays"), "delays must be >= 0");
  }
  c.fit_from = s.quantity("fit_from", Dimension::time, c.fit_from);
  auto& o = c.options;
  o.probe_window = s.quantity("window", Dimension::time, o.probe_window);
  o.readout = choose<ProbeReadout>(s.text("readout", "window_start"), s.path("readout"),
                                   {{"window_start", ProbeReadout::window_start},
                                    {"window_mean", ProbeReadout::window_mean},
                                    {"window_end", ProbeReadout::window_end}});
  o.trials = s.integer("trials", o.trials);
  if (o.trials < 1) schema(s.path("trials"), "must be >= 1");
  o.jump.max_rate_dt = s.number("max_rate_dt", o.jump.max_rate_dt);
  if (!(o.jump.max_rate_dt > 0.0 && o.jump.max_rate_dt <= 0.1)) {
    schema(s.path("max_rate_dt"), "must lie in (0, 0.1]");
  }
  o.seed = seed;
  return c;
}

FitOptions parse_fit(const YAML::Node& n) {
  FitOptions f;
  if (!n) return f;
  Section s(n, "fit", {"weighted", "fix_m", "max_iterations"});
  f.weighted = s.boolean("weighted", f.weighted);
  if (s.has("fix_m")) f.fix_m = s.number("fix_m", 1.0);
  f.max_iterations = static_cast<int>(s.integer("max_iterations", f.max_iterations));
  if (f.max_iterations < 1) schema(s.path("max_iterations"), "must be >= 1");
  return f;
}

// ---- emission -------------------------------------------------------------

std::string q(double v, Dimension d) { return format_quantity(v, d); }

void emit_run_spec(YAML::Emitter& e, const RunSpec& r) {
  e << YAML::Key << "field" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "larmor" << YAML::Value << q(r.field.larmor, Dimension::angular_frequency);
  e << YAML::EndMap;

  e << YAML::Key << "spin" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "label" << YAML::Value << r.spin.label();
  if (const auto& hf = r.spin.hyperfine()) {
    e << YAML::Key << "a_par" << YAML::Value << q(hf->a_par, Dimension::angular_frequency);
    e << YAML::Key << "a_perp" << YAML::Value << q(hf->a_perp, Dimension::angular_frequency);
  } else {
    e << YAML::Key << "delta_omega" << YAML::Value
      << q(*r.spin.direct_delta_omega(), Dimension::angular_frequency);
    e << YAML::Key << "approximate" << YAML::Value << r.spin.delta_omega_approximation();
  }
  e << YAML::Key << "t2_star" << YAML::Value << q(r.spin.t2_star(), Dimension::time);
  e << YAML::Key << "t2_hahn" << YAML::Value << q(r.spin.t2_hahn(), Dimension::time);
  e << YAML::EndMap;

  const auto& s = r.seq;
  const char* rule = s.delay_rule == DelayRule::fixed           ? "fixed"
                     : s.delay_rule == DelayRule::larmor_period ? "larmor_period"
                                                                : "phase_matched";
  e << YAML::Key << "sequence" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "alpha" << YAML::Value << q(s.alpha, Dimension::angle);
  e << YAML::Key << "middle_pi" << YAML::Value << s.has_middle_pi;
  e << YAML::Key << "delay" << YAML::Value << q(s.inter_pulse_delay, Dimension::time);
  e << YAML::Key << "delay_rule" << YAML::Value << rule;
  e << YAML::Key << "delay_multiple" << YAML::Value << s.delay_multiple;
  e << YAML::Key << "post_repump_delay" << YAML::Value << q(s.post_repump_delay, Dimension::time);
  e << YAML::Key << "repump_duration" << YAML::Value << q(s.repump_duration, Dimension::time);
  e << YAML::Key << "attempt_duration" << YAML::Value << q(s.attempt_duration, Dimension::time);
  e << YAML::Key << "compensate_repump_mean" << YAML::Value << s.compensate_repump_mean;
  e << YAML::Key << "generic_alpha" << YAML::Value << s.generic_alpha;
  e << YAML::EndMap;

  const auto& n = r.noise;
  e << YAML::Key << "noise" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "p_mw" << YAML::Value << format_double(n.p_mw);
  e << YAML::Key << "p_init" << YAML::Value << format_double(n.p_init);
  e << YAML::Key << "tau" << YAML::Value << q(n.tau, Dimension::time);
  e << YAML::Key << "sigma_tau" << YAML::Value << q(n.sigma_tau_qs, Dimension::time);
  e << YAML::Key << "sigma_detuning" << YAML::Value
    << q(n.sigma_detuning_qs, Dimension::angular_frequency);
  e << YAML::Key << "p_depol" << YAML::Value << format_double(n.p_depol_per_attempt);
  e << YAML::Key << "half_pi_can_fail" << YAML::Value << n.half_pi_can_fail;
  e << YAML::EndMap;

  e << YAML::Key << "run" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "trials" << YAML::Value << r.n_trials;
  e << YAML::Key << "grid" << YAML::Value << YAML::Flow << r.n_attempts_grid;
  e << YAML::Key << "echo_count" << YAML::Value << r.echo_count;
  e << YAML::Key << "initial" << YAML::Value
    << (r.initial == NuclearInit::superposition ? "superposition" : "eigenstate");
  e << YAML::Key << "intrinsic_envelope" << YAML::Value << r.intrinsic_envelope;
  e << YAML::Key << "budget" << YAML::Value << format_double(r.budget);
  e << YAML::EndMap;
}

void emit_list(YAML::Emitter& e, const std::vector<double>& v, Dimension d, bool plain) {
  e << YAML::Flow << YAML::BeginSeq;
  for (double x : v) e << (plain ? format_double(x) : q(x, d));
  e << YAML::EndSeq;
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
  YAML::Node doc;
  try {
    doc = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    schema("document", std::string("not valid YAML: ") + e.what());
  }
  if (!doc || doc.IsNull()) schema("document", "empty");
  ScenarioConfig c;
  Section top(doc, "", {"schema", "command", "name", "seed", "out_dir", "field", "spin", "sequence",
                        "noise", "run", "scenarios", "sweep", "predict", "pumpprobe", "fit"});
  if (!top.has("schema")) schema("schema", "missing (expected '" + std::string(kSchemaId) + "')");
  c.schema = top.text("schema", "");
  if (c.schema != kSchemaId) schema("schema", "unsupported schema '" + c.schema + "'");
  c.command = choose<Command>(top.text("command", "simulate"), "command",
                              {{"simulate", Command::simulate},
                               {"sweep", Command::sweep},
                               {"predict", Command::predict},
                               {"pumpprobe", Command::pumpprobe}});
  c.name = top.text("name", c.name);
  const double seed = top.number("seed", 1.0);
  if (seed < 0 || seed != std::floor(seed) || seed > 9007199254740992.0) {
    schema("seed", "expected a non-negative integer");
  }
  c.seed = static_cast<std::uint64_t>(seed);
  c.out_dir = top.text("out_dir", c.out_dir);
  c.fit = parse_fit(doc["fit"]);

  const bool needs_scenarios = c.command != Command::pumpprobe;
  const bool need_grid = c.command == Command::simulate || c.command == Command::sweep;
  if (needs_scenarios) {
    Layers base{doc, YAML::Node(), ""};
    const auto list = doc["scenarios"];
    if (list && !list.IsNull()) {
      if (!list.IsSequence() || list.size() == 0) schema("scenarios", "expected a non-empty list");
      for (size_t i = 0; i < list.size(); ++i) {
        const std::string p = "scenarios[" + std::to_string(i) + "]";
        check_keys(list[i], p, {"name", "field", "spin", "sequence", "noise", "run"});
        Layers l{doc, list[i], p};
        Scenario sc;
        sc.name = list[i]["name"] ? list[i]["name"].as<std::string>() : "s" + std::to_string(i);
        sc.run = parse_run_spec(l, c.seed, need_grid);
        c.scenarios.push_back(std::move(sc));
      }
    } else {
      c.scenarios.push_back({"main", parse_run_spec(base, c.seed, need_grid)});
    }
    std::set<std::string> names;
    for (const auto& sc : c.scenarios) {
      if (!names.insert(sc.name).second) schema("scenarios", "duplicate name '" + sc.name + "'");
    }
  }
  if (doc["sweep"]) c.sweep = parse_sweep(doc["sweep"]);
  if (doc["predict"]) c.predict = parse_predict(doc["predict"]);
  if (doc["pumpprobe"]) c.pumpprobe = parse_pumpprobe(doc["pumpprobe"], c.seed);
  if (c.command == Command::sweep && !c.sweep) schema("sweep", "missing for command 'sweep'");
  if (c.command == Command::predict && !c.predict) c.predict = PredictConfig{};
  if (c.command == Command::pumpprobe && !c.pumpprobe) schema("pumpprobe", "missing for command 'pumpprobe'");
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string emit_config(const ScenarioConfig& c) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  e << YAML::Key << "schema" << YAML::Value << c.schema;
  e << YAML::Key << "command" << YAML::Value << to_string(c.command);
  e << YAML::Key << "name" << YAML::Value << c.name;
  e << YAML::Key << "seed" << YAML::Value << c.seed;
  e << YAML::Key << "out_dir" << YAML::Value << c.out_dir;

  e << YAML::Key << "fit" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "weighted" << YAML::Value << c.fit.weighted;
  if (c.fit.fix_m) e << YAML::Key << "fix_m" << YAML::Value << format_double(*c.fit.fix_m);
  e << YAML::Key << "max_iterations" << YAML::Value << c.fit.max_iterations;
  e << YAML::EndMap;

  if (!c.scenarios.empty()) {
    e << YAML::Key << "scenarios" << YAML::Value << YAML::BeginSeq;
    for (const auto& sc : c.scenarios) {
      e << YAML::BeginMap;
      e << YAML::Key << "name" << YAML::Value << sc.name;
      emit_run_spec(e, sc.run);
      e << YAML::EndMap;
    }
    e << YAML::EndSeq;
  }

  if (c.sweep) {
    const auto& s = *c.sweep;
    const auto& o = s.options;
    e << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "dimensions" << YAML::Value << YAML::BeginSeq;
    for (const auto& d : s.dims) {
      e << YAML::BeginMap << YAML::Key << "axis" << YAML::Value << to_string(d.axis);
      e << YAML::Key << "values" << YAML::Value;
      switch (d.axis) {
        case SweepAxis::repump_power: emit_list(e, d.values, Dimension::power, false); break;
        case SweepAxis::b_field: emit_list(e, d.values, Dimension::magnetic_field, false); break;
        case SweepAxis::tau: emit_list(e, d.values, Dimension::time, false); break;
        case SweepAxis::delta_omega: emit_list(e, d.values, Dimension::angular_frequency, false); break;
        case SweepAxis::alpha: emit_list(e, d.values, Dimension::angle, false); break;
        case SweepAxis::p_mw:
        case SweepAxis::p_init: emit_list(e, d.values, Dimension::angle, true); break;
      }
      e << YAML::EndMap;
    }
    e << YAML::EndSeq;
    e << YAML::Key << "auto_grid" << YAML::Value << o.auto_grid;
    e << YAML::Key << "pilot_trials" << YAML::Value << o.pilot_trials;
    e << YAML::Key << "max_attempts" << YAML::Value << o.max_attempts;
    e << YAML::Key << "grid_points" << YAML::Value << o.grid_points;
    e << YAML::Key << "grid_span" << YAML::Value << format_double(o.grid_span);
    e << YAML::Key << "tau_min" << YAML::Value << q(o.tau_min, Dimension::time);
    e << YAML::Key << "p_sat" << YAML::Value << q(o.p_sat, Dimension::power);
    e << YAML::Key << "power_mapping" << YAML::Value
      << (o.power_mapping == PowerMapping::rate ? "rate" : "saturating_decay");
    e << YAML::Key << "fit_saturation" << YAML::Value << s.fit_saturation;
    e << YAML::EndMap;
  }

  if (c.predict) {
    const auto& p = *c.predict;
    e << YAML::Key << "predict" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "model" << YAML::Value << (p.model == PredictModel::blok ? "blok" : "revival");
    e << YAML::Key << "p1" << YAML::Value << format_double(p.p1);
    if (!p.delays.empty()) {
      e << YAML::Key << "delays" << YAML::Value;
      emit_list(e, p.delays, Dimension::time, false);
    }
    e << YAML::Key << "n" << YAML::Value << p.n;
    e << YAML::Key << "p_init" << YAML::Value << format_double(p.p_init);
    e << YAML::Key << "amplitude" << YAML::Value << format_double(p.amplitude);
    e << YAML::EndMap;
  }

  if (c.pumpprobe) {
    const auto& p = *c.pumpprobe;
    const auto& m = p.model;
    e << YAML::Key << "pumpprobe" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "optical" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "t_ex" << YAML::Value << q(m.t_ex, Dimension::time);
    e << YAML::Key << "t_eprime" << YAML::Value << q(m.t_eprime, Dimension::time);
    if (m.isc_es > 0.0) {
      e << YAML::Key << "isc_es" << YAML::Value << q(m.isc_es, Dimension::angular_frequency);
    }
    e << YAML::Key << "isc_xs" << YAML::Value << q(m.isc_xs, Dimension::angular_frequency);
    e << YAML::Key << "t_singlet" << YAML::Value << q(m.t_singlet, Dimension::time);
    e << YAML::Key << "branching" << YAML::Value << YAML::Flow << YAML::BeginSeq
      << format_double(m.branching.b0) << format_double(m.branching.b_plus)
      << format_double(m.branching.b_minus) << YAML::EndSeq;
    e << YAML::Key << "symmetric" << YAML::Value << m.symmetric;
    e << YAML::Key << "strain_shift" << YAML::Value << q(m.strain_shift_hz, Dimension::frequency);
    e << YAML::EndMap;
    e << YAML::Key << "pulse_fwhm" << YAML::Value << q(p.pulse_fwhm, Dimension::time);
    e << YAML::Key << "delays" << YAML::Value;
    emit_list(e, p.delays, Dimension::time, false);
    e << YAML::Key << "fit_from" << YAML::Value << q(p.fit_from, Dimension::time);
    e << YAML::Key << "window" << YAML::Value << q(p.options.probe_window, Dimension::time);
    const auto r = p.options.readout;
    e << YAML::Key << "readout" << YAML::Value
      << (r == ProbeReadout::window_start  ? "window_start"
          : r == ProbeReadout::window_mean ? "window_mean"
                                           : "window_end");
    e << YAML::Key << "trials" << YAML::Value << p.options.trials;
    e << YAML::Key << "max_rate_dt" << YAML::Value << format_double(p.options.jump.max_rate_dt);
    e << YAML::EndMap;
  }
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

std::string config_digest(const ScenarioConfig& c) {
  // Where the artifacts go does not change what is computed.
  ScenarioConfig content = c;
  content.out_dir.clear();
  const std::string s = emit_config(content);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace nvmem

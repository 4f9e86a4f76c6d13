#include "nvmem/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <thread>

#include "nvmem/error.hpp"
#include "nvmem/rng.hpp"
#include "nvmem/units.hpp"

namespace nvmem {

void RunSpec::validate() const {
  seq.validate();
  noise.validate();
  require(n_trials >= 1, "n_trials must be >= 1");
  require(!n_attempts_grid.empty(), "attempt grid must not be empty");
  for (size_t i = 0; i < n_attempts_grid.size(); ++i) {
    require(n_attempts_grid[i] >= 0, "attempt counts must be >= 0");
    if (i > 0) {
      require(n_attempts_grid[i] > n_attempts_grid[i - 1], "attempt grid must be strictly increasing");
    }
  }
  require(echo_count >= 0 && echo_count <= 2, "echo_count must be 0, 1 or 2");
  require(budget > 0.0, "budget must be positive");
}

std::string RunSpec::canonical() const {
  nlohmann::json j;
  j["spin"]["label"] = spin.label();
  if (const auto& hf = spin.hyperfine()) {
    j["spin"]["a_par"] = hf->a_par;
    j["spin"]["a_perp"] = hf->a_perp;
  } else {
    j["spin"]["delta_omega"] = *spin.direct_delta_omega();
    j["spin"]["approximate"] = spin.delta_omega_approximation();
  }
  j["spin"]["t2_star"] = spin.t2_star();
  j["spin"]["t2_hahn"] = spin.t2_hahn();
  j["field"]["larmor"] = field.larmor;
  j["seq"] = {{"alpha", seq.alpha},
              {"middle_pi", seq.has_middle_pi},
              {"t", seq.inter_pulse_delay},
              {"T", seq.post_repump_delay},
              {"t_r", seq.repump_duration},
              {"attempt_duration", seq.attempt_duration},
              {"compensate", seq.compensate_repump_mean},
              {"generic_alpha", seq.generic_alpha},
              {"delay_rule", static_cast<int>(seq.delay_rule)},
              {"delay_multiple", seq.delay_multiple}};
  j["noise"] = {{"p_mw", noise.p_mw},
                {"p_init", noise.p_init},
                {"tau", noise.tau},
                {"sigma_tau_qs", noise.sigma_tau_qs},
                {"sigma_detuning_qs", noise.sigma_detuning_qs},
                {"p_depol", noise.p_depol_per_attempt},
                {"half_pi_can_fail", noise.half_pi_can_fail}};
  j["grid"] = n_attempts_grid;
  j["trials"] = n_trials;
  j["echo_count"] = echo_count;
  j["seed"] = master_seed;
  j["initial"] = initial == NuclearInit::superposition ? "superposition" : "eigenstate";
  j["envelope"] = intrinsic_envelope;
  return j.dump();
}

namespace {

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::string RunSpec::digest() const { return fnv1a_hex(canonical()); }

std::vector<long> echo_positions(long n, int echo_count) {
  switch (echo_count) {
    case 0: return {};
    case 1: return {(n + 1) / 2};
    case 2: return {(n + 3) / 4, (3 * n + 3) / 4};
    default: fail(ErrorCode::invalid_argument, "echo_count must be 0, 1 or 2");
  }
}

namespace {

// Signed phase of the first n attempts given prefix sums, flipping sign after
// each echo position.
double echoed_phase(const std::vector<double>& cum, long n, int echo_count) {
  const auto marks = echo_positions(n, echo_count);
  double phase = 0.0;
  double sign = 1.0;
  long from = 0;
  for (long m : marks) {
    phase += sign * (cum[static_cast<size_t>(m)] - cum[static_cast<size_t>(from)]);
    sign = -sign;
    from = m;
  }
  phase += sign * (cum[static_cast<size_t>(n)] - cum[static_cast<size_t>(from)]);
  return phase;
}

template <class F>
void for_each_trial(long n_trials, int threads, F&& body) {
  const int workers = static_cast<int>(std::min<long>(std::max(1, threads), n_trials));
  if (workers <= 1) {
    for (long i = 0; i < n_trials; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (long i = next++; i < n_trials; i = next++) body(i);
    });
  }
}

}  // namespace

CoherenceCurve simulate_curve(const RunSpec& spec, const EngineOptions& engine) {
  spec.validate();
  const AttemptSequence seq = spec.seq.resolved(spec.spin, spec.field);
  seq.validate();
  const auto offsets = frame_offsets(spec.spin, spec.field);
  const auto& grid = spec.n_attempts_grid;
  const long n_max = grid.back();
  const size_t G = grid.size();
  const auto T = static_cast<size_t>(spec.n_trials);
  if (static_cast<double>(spec.n_trials) * static_cast<double>(n_max) > spec.budget) {
    fail(ErrorCode::budget_exceeded,
         "n_trials * max(N) = " + std::to_string(static_cast<double>(spec.n_trials) * n_max) +
             " exceeds the attempt budget " + std::to_string(spec.budget));
  }
  const bool eigen = spec.initial == NuclearInit::eigenstate;
  const double p_depol = spec.noise.p_depol_per_attempt;

  std::vector<double> xs(T * G), ys(T * G);
  for_each_trial(spec.n_trials, engine.threads, [&](long trial) {
    Rng rng = stream_for(spec.master_seed, static_cast<std::uint64_t>(trial));
    const size_t row = static_cast<size_t>(trial) * G;
    if (eigen) {
      // Eigenstates only see the depolarising channel: first depolarising
      // attempt is geometric.
      double first = std::numeric_limits<double>::infinity();
      if (p_depol >= 1.0) {
        first = 1.0;
      } else if (p_depol > 0.0) {
        first = std::ceil(std::log1p(-uniform01(rng)) / std::log1p(-p_depol));
        first = std::max(first, 1.0);
      }
      for (size_t g = 0; g < G; ++g) {
        xs[row + g] = static_cast<double>(grid[g]) < first ? 1.0 : 0.0;
        ys[row + g] = 0.0;
      }
      return;
    }
    const RunContext ctx = draw_run_context(spec.noise, rng);
    std::vector<double> cum(static_cast<size_t>(n_max) + 1, 0.0);
    AttemptOutcome out;
    out.trajectory.segments.reserve(8);
    ElectronState entry = ElectronState::ms0;
    const double drift = ctx.detuning * seq.attempt_duration;
    for (long a = 1; a <= n_max; ++a) {
      realize_attempt(seq, spec.noise, entry, rng, ctx, out);
      double ph = drift;
      for (const auto& s : out.trajectory.segments) ph += offsets[static_cast<size_t>(s.state)] * s.duration;
      cum[static_cast<size_t>(a)] = cum[static_cast<size_t>(a - 1)] + ph;
      entry = out.exit_state;
    }
    for (size_t g = 0; g < G; ++g) {
      const double phi = echoed_phase(cum, grid[g], spec.echo_count);
      xs[row + g] = std::cos(phi);
      ys[row + g] = std::sin(phi);
    }
  });

  CoherenceCurve curve;
  curve.digest = spec.digest();
  curve.seed = spec.master_seed;
  const double n = static_cast<double>(spec.n_trials);
  const double t2 = spec.echo_count > 0 ? spec.spin.t2_hahn() : spec.spin.t2_star();
  for (size_t g = 0; g < G; ++g) {
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (size_t t = 0; t < T; ++t) {
      const double x = xs[t * G + g];
      const double y = ys[t * G + g];
      sx += x;
      sy += y;
      sxx += x * x;
      syy += y * y;
      sxy += x * y;
    }
    const double X = sx / n, Y = sy / n;
    // Variances of the means (sample covariance / n).
    const double denom = n > 1 ? n * (n - 1) : 1.0;
    const double vx = std::max(0.0, sxx - n * X * X) / denom;
    const double vy = std::max(0.0, syy - n * Y * Y) / denom;
    const double cxy = (sxy - n * X * Y) / denom;
    double c, se;
    if (eigen) {
      c = X;
      se = std::sqrt(vx);
    } else {
      c = std::hypot(X, Y);
      se = c > 0.0 ? std::sqrt(std::max(0.0, X * X * vx + Y * Y * vy + 2 * X * Y * cxy)) / c
                   : std::sqrt(0.5 * (vx + vy));
    }
    const double N = static_cast<double>(grid[g]);
    double factor = 1.0;
    if (!eigen) {
      if (spec.intrinsic_envelope) {
        const double r = N * seq.attempt_duration / t2;
        factor *= std::exp(-r * r);
      }
      if (p_depol > 0.0) factor *= std::pow(1.0 - p_depol, N);
    }
    curve.points.push_back({grid[g], c * factor, se * factor});
  }
  return curve;
}

double power_to_tau(double power, double tau_min, double p_sat, PowerMapping mapping) {
  require(power > 0.0, "repump power must be positive");
  require(tau_min >= 0.0 && p_sat >= 0.0, "tau_min and P_sat must be >= 0");
  const double ratio = (power + p_sat) / power;
  return mapping == PowerMapping::rate ? tau_min * ratio : tau_min * std::sqrt(ratio);
}

const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::repump_power: return "repump_power";
    case SweepAxis::p_mw: return "p_mw";
    case SweepAxis::p_init: return "p_init";
    case SweepAxis::b_field: return "b_field";
    case SweepAxis::tau: return "tau";
    case SweepAxis::delta_omega: return "delta_omega";
    case SweepAxis::alpha: return "alpha";
  }
  return "?";
}

SweepAxis sweep_axis_from_string(const std::string& s) {
  for (auto a : {SweepAxis::repump_power, SweepAxis::p_mw, SweepAxis::p_init, SweepAxis::b_field,
                 SweepAxis::tau, SweepAxis::delta_omega, SweepAxis::alpha}) {
    if (s == to_string(a)) return a;
  }
  fail(ErrorCode::schema_violation, "unknown sweep axis '" + s + "'");
}

RunSpec apply_axis(const RunSpec& tmpl, SweepAxis axis, double value, const SweepOptions& opt) {
  RunSpec s = tmpl;
  switch (axis) {
    case SweepAxis::repump_power:
      s.noise.tau = power_to_tau(value, opt.tau_min, opt.p_sat, opt.power_mapping);
      break;
    case SweepAxis::p_mw: s.noise.p_mw = value; break;
    case SweepAxis::p_init: s.noise.p_init = value; break;
    case SweepAxis::b_field: s.field = FieldParams::from_field(value); break;
    case SweepAxis::tau: s.noise.tau = value; break;
    case SweepAxis::delta_omega:
      s.spin = NuclearSpinParams::from_delta_omega(tmpl.spin.label(), value, tmpl.spin.t2_star(),
                                                   tmpl.spin.t2_hahn());
      break;
    case SweepAxis::alpha: s.seq.alpha = value; break;
  }
  return s;
}

std::vector<long> grid_from_pilot(const CoherenceCurve& pilot, long max_attempts, int points,
                                  double span) {
  require(points >= 2 && span > 0.0 && max_attempts >= 1, "invalid grid request");
  double n_est = static_cast<double>(max_attempts) / span;
  if (!pilot.points.empty()) {
    const double level = pilot.points.front().coherence / std::exp(1.0);
    for (size_t i = 1; i < pilot.points.size(); ++i) {
      const auto& a = pilot.points[i - 1];
      const auto& b = pilot.points[i];
      if (a.coherence >= level && b.coherence < level) {
        const double f = (a.coherence - level) / (a.coherence - b.coherence);
        n_est = static_cast<double>(a.n) + f * static_cast<double>(b.n - a.n);
        break;
      }
    }
  }
  std::vector<long> grid;
  for (int k = 1; k <= points; ++k) {
    long n = std::lround(k * span * n_est / points);
    n = std::clamp(n, 1L, max_attempts);
    if (grid.empty() || n > grid.back()) grid.push_back(n);
  }
  return grid;
}

namespace {

std::vector<long> pilot_grid(long max_attempts) {
  std::vector<long> g;
  const int points = 32;
  for (int k = 0; k < points; ++k) {
    const double f = static_cast<double>(k) / (points - 1);
    const long n = std::lround(std::pow(static_cast<double>(max_attempts), f));
    if (g.empty() || n > g.back()) g.push_back(n);
  }
  return g;
}

}  // namespace

std::vector<SweepPoint> sweep(const RunSpec& tmpl, const std::vector<SweepDimension>& dims,
                              const SweepOptions& opt) {
  require(!dims.empty(), "sweep needs at least one dimension");
  size_t total = 1;
  for (const auto& d : dims) {
    require(!d.values.empty(), std::string("sweep axis ") + to_string(d.axis) + " has no values");
    total *= d.values.size();
  }
  std::vector<SweepPoint> out;
  out.reserve(total);
  for (size_t idx = 0; idx < total; ++idx) {
    SweepPoint pt;
    RunSpec spec = tmpl;
    size_t rem = idx;
    pt.values.resize(dims.size());
    for (size_t k = dims.size(); k-- > 0;) {
      const auto& d = dims[k];
      const double v = d.values[rem % d.values.size()];
      rem /= d.values.size();
      pt.values[k] = v;
    }
    for (size_t k = 0; k < dims.size(); ++k) spec = apply_axis(spec, dims[k].axis, pt.values[k], opt);
    if (opt.auto_grid) {
      RunSpec pilot = spec;
      pilot.n_trials = std::min(opt.pilot_trials, spec.n_trials);
      pilot.n_attempts_grid = pilot_grid(opt.max_attempts);
      pilot.master_seed = mix64(spec.master_seed ^ 0x70696c6f74ULL);
      const auto pc = simulate_curve(pilot, opt.engine);
      spec.n_attempts_grid = grid_from_pilot(pc, opt.max_attempts, opt.grid_points, opt.grid_span);
    }
    pt.curve = simulate_curve(spec, opt.engine);
    try {
      pt.fit = fit_stretched_exp(pt.curve, opt.fit);
    } catch (const Error&) {
      // Reported per point; the sweep continues.
      constexpr double nan = std::numeric_limits<double>::quiet_NaN();
      constexpr double inf = std::numeric_limits<double>::infinity();
      pt.fit = FitResult{};
      pt.fit.model = "stretched_exp";
      pt.fit.params = {{"A", nan, inf}, {"N_1e", nan, inf}, {"m", nan, inf}};
    }
    out.push_back(std::move(pt));
  }
  return out;
}

}  // namespace nvmem

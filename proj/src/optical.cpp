#include "nvmem/optical.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "nvmem/error.hpp"

namespace nvmem {

namespace {

constexpr double kFwhmToSigma = 0.42466090014400953;  // 1 / (2 sqrt(2 ln 2))
constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kSqrt2Pi = 2.5066282746310002;
constexpr double kGaussianCut = 6.0;  // pulse support in Rabi sigmas
constexpr std::uint64_t kOpticalStream = 0x6f70746963616cULL;

double rabi_sigma(const PulseEnvelope& p) { return kSqrt2 * kFwhmToSigma * p.width; }

template <class F>
void parallel_for(long n, int threads, F&& body) {
  const int workers = static_cast<int>(std::min<long>(std::max(1, threads), n));
  if (workers <= 1) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::jthread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (long i = next++; i < n; i = next++) body(i);
    });
  }
}

}  // namespace

Branching Branching::from_ratio(double zero, double plus, double minus) {
  require(zero >= 0.0 && plus >= 0.0 && minus >= 0.0 && zero + plus + minus > 0.0,
          "branching ratio entries must be >= 0 and not all zero");
  const double s = zero + plus + minus;
  return {zero / s, plus / s, minus / s};
}

void Branching::validate(bool symmetric) const {
  require(b0 >= 0.0 && b_plus >= 0.0 && b_minus >= 0.0, "branching entries must be >= 0");
  require(std::abs(b0 + b_plus + b_minus - 1.0) < 1e-9, "branching entries must sum to 1");
  if (symmetric) require(std::abs(b_plus - b_minus) < 1e-12, "symmetric branching needs b+ = b-");
}

OpticalLevelModel OpticalLevelModel::reference() {
  OpticalLevelModel m;
  m.isc_es = isc_rate_from_lifetimes(m.t_ex, m.t_eprime);
  m.branching = Branching::from_ratio(8, 1, 1);
  return m;
}

double OpticalLevelModel::isc_rate() const {
  return isc_es > 0.0 ? isc_es : isc_rate_from_lifetimes(t_ex, t_eprime);
}

void OpticalLevelModel::validate() const {
  require(t_ex > 0.0 && t_eprime > 0.0 && t_singlet > 0.0, "optical lifetimes must be positive",
          ErrorCode::nonphysical_inputs);
  require(isc_es >= 0.0 && isc_xs >= 0.0, "ISC rates must be >= 0", ErrorCode::nonphysical_inputs);
  require(isc_rate() <= 1.0 / t_eprime, "ISC rate exceeds the total |E'> decay rate",
          ErrorCode::nonphysical_inputs);
  branching.validate(symmetric);
}

double PulseEnvelope::rabi(double t) const {
  if (shape == PulseShape::square) return (t >= time && t < time + width) ? peak_rabi : 0.0;
  const double s = rabi_sigma(*this);
  const double x = (t - time) / s;
  return peak_rabi * std::exp(-0.5 * x * x);
}

double PulseEnvelope::begin() const {
  return shape == PulseShape::square ? time : time - kGaussianCut * rabi_sigma(*this);
}

double PulseEnvelope::end() const {
  return shape == PulseShape::square ? time + width : time + kGaussianCut * rabi_sigma(*this);
}

double PulseEnvelope::area() const {
  return shape == PulseShape::square ? peak_rabi * width : peak_rabi * rabi_sigma(*this) * kSqrt2Pi;
}

void PulseEnvelope::validate() const {
  require(width > 0.0 && std::isfinite(width), "pulse width must be positive");
  require(peak_rabi >= 0.0 && std::isfinite(peak_rabi), "pulse strength must be >= 0");
}

PulseEnvelope calibrated_pi_pulse(double fwhm, double centre) {
  PulseEnvelope p;
  p.shape = PulseShape::gaussian;
  p.width = fwhm;
  p.time = centre;
  p.peak_rabi = kPi / (rabi_sigma(p) * kSqrt2Pi);
  return p;
}

ElectronState OpticalPath::state_at(double t) const {
  ElectronState s = changes.empty() ? ElectronState::ms0 : changes.front().state;
  for (const auto& c : changes) {
    if (c.time > t) break;
    s = c.state;
  }
  return s;
}

double OpticalPath::time_in(ElectronState s, double t0, double t1) const {
  double total = 0.0;
  for (size_t i = 0; i < changes.size(); ++i) {
    if (changes[i].state != s) continue;
    const double a = std::max(changes[i].time, t0);
    const double b = std::min(i + 1 < changes.size() ? changes[i + 1].time : t1, t1);
    if (b > a) total += b - a;
  }
  return total;
}

namespace {

struct DriveResult {
  bool jumped = false;
  double time = 0.0;
  double excited_probability = 0.0;  // at pulse end, when no jump
};

// Non-Hermitian evolution of a ground state coupled to |E'> by the pulse;
// the jump happens when the squared norm falls below a uniform draw.
// Amplitudes: c_g = a, c_e = -i b with a, b real.
DriveResult drive(const PulseEnvelope& p, double t_start, double gamma, double dt, Rng& rng) {
  const double r = uniform01(rng);
  double a = 1.0, b = 0.0;
  double t = t_start;
  double norm_prev = 1.0;
  const double t_end = p.end();
  auto deriv = [&](double tt, double aa, double bb, double& da, double& db) {
    const double half = 0.5 * p.rabi(tt);
    da = -half * bb;
    db = half * aa - 0.5 * gamma * bb;
  };
  while (t < t_end) {
    const double h = std::min(dt, t_end - t);
    double k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b;
    deriv(t, a, b, k1a, k1b);
    deriv(t + 0.5 * h, a + 0.5 * h * k1a, b + 0.5 * h * k1b, k2a, k2b);
    deriv(t + 0.5 * h, a + 0.5 * h * k2a, b + 0.5 * h * k2b, k3a, k3b);
    deriv(t + h, a + h * k3a, b + h * k3b, k4a, k4b);
    a += h / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a);
    b += h / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b);
    const double norm = a * a + b * b;
    if (norm <= r) {
      const double f = (norm_prev - r) / (norm_prev - norm);
      return {true, t + f * h, 0.0};
    }
    norm_prev = norm;
    t += h;
  }
  return {false, t_end, (b * b) / (a * a + b * b)};
}

ElectronState decay_from_singlet(const Branching& br, Rng& rng) {
  const double u = uniform01(rng);
  if (u < br.b0) return ElectronState::ms0;
  if (u < br.b0 + br.b_plus) return ElectronState::msPlus1;
  return ElectronState::msMinus1;
}

}  // namespace

OpticalPath jump_trajectory(const OpticalLevelModel& model, const std::vector<PulseEnvelope>& pulses_in,
                            ElectronState initial, double horizon, Rng& rng, const JumpOptions& opt) {
  model.validate();
  require(initial == ElectronState::msMinus1 || initial == ElectronState::ms0 ||
              initial == ElectronState::msPlus1,
          "optical trajectories start in a ground-triplet state", ErrorCode::invalid_state);
  std::vector<PulseEnvelope> pulses = pulses_in;
  std::sort(pulses.begin(), pulses.end(),
            [](const PulseEnvelope& x, const PulseEnvelope& y) { return x.begin() < y.begin(); });
  double peak = 0.0;
  for (size_t i = 0; i < pulses.size(); ++i) {
    pulses[i].validate();
    peak = std::max(peak, pulses[i].peak_rabi);
    if (i > 0) require(pulses[i].begin() >= pulses[i - 1].end(), "pulses must not overlap");
  }
  require(pulses.empty() || horizon >= pulses.back().end(), "horizon must cover all pulses");

  const double gamma = 1.0 / model.t_eprime;
  const double p_isc = model.isc_rate() / gamma;
  const double fastest = std::max(peak, gamma);
  const double dt = opt.dt > 0.0 ? opt.dt : opt.max_rate_dt / fastest;
  if (fastest * dt > 0.1) {
    fail(ErrorCode::step_size, "integration step too coarse: rate * dt = " + std::to_string(fastest * dt));
  }

  OpticalPath path;
  double t = std::min(0.0, pulses.empty() ? 0.0 : pulses.front().begin());
  ElectronState s = initial;
  ElectronState origin = initial;
  path.changes.push_back({t, s});
  auto move_to = [&](double when, ElectronState next) {
    s = next;
    t = when;
    path.changes.push_back({when, next});
  };
  size_t next_pulse = 0;
  while (t < horizon) {
    if (s == ElectronState::ms0) break;  // not addressed by the pump, no decay channel
    if (s == ElectronState::msMinus1 || s == ElectronState::msPlus1) {
      while (next_pulse < pulses.size() && pulses[next_pulse].end() <= t) ++next_pulse;
      if (next_pulse >= pulses.size()) break;
      const auto& p = pulses[next_pulse];
      const auto res = drive(p, std::max(t, p.begin()), gamma, dt, rng);
      origin = s;
      if (res.jumped) {
        ++path.excitations;
        if (uniform01(rng) < p_isc) {
          path.reached_singlet = true;
          move_to(res.time, ElectronState::singlet);
        } else {
          t = res.time;  // radiative return; may be re-excited by the same pulse
        }
      } else {
        t = res.time;
        if (res.excited_probability > 0.0 && uniform01(rng) < res.excited_probability) {
          move_to(t, ElectronState::excitedEPrime);
        } else {
          ++next_pulse;
        }
      }
      continue;
    }
    if (s == ElectronState::excitedEPrime) {
      const double when = t + std::exponential_distribution<double>(gamma)(rng);
      if (when > horizon) break;
      ++path.excitations;
      if (uniform01(rng) < p_isc) {
        path.reached_singlet = true;
        move_to(when, ElectronState::singlet);
      } else {
        move_to(when, origin);
      }
      continue;
    }
    if (s == ElectronState::singlet) {
      const double when = t + std::exponential_distribution<double>(1.0 / model.t_singlet)(rng);
      if (when > horizon) break;
      move_to(when, decay_from_singlet(model.branching, rng));
      continue;
    }
    break;
  }
  return path;
}

PulseStatistics pulse_statistics(const OpticalLevelModel& model, const PulseEnvelope& pulse,
                                 long trials, std::uint64_t seed, int threads, const JumpOptions& opt) {
  require(trials >= 1, "need at least one trajectory");
  // Long enough for |E'> to empty; the singlet flag is set on entry.
  const double horizon = pulse.end() + 40.0 * model.t_eprime;
  std::vector<unsigned char> singlet(static_cast<size_t>(trials)), exc(static_cast<size_t>(trials));
  parallel_for(trials, threads, [&](long i) {
    Rng rng = stream_for(seed, static_cast<std::uint64_t>(i), kOpticalStream);
    const auto path = jump_trajectory(model, {pulse}, ElectronState::msMinus1, horizon, rng, opt);
    singlet[static_cast<size_t>(i)] = path.reached_singlet;
    exc[static_cast<size_t>(i)] = static_cast<unsigned char>(std::min(path.excitations, 255));
  });
  long n_s = 0, n_1 = 0, n_2 = 0;
  for (long i = 0; i < trials; ++i) {
    n_s += singlet[static_cast<size_t>(i)];
    n_1 += exc[static_cast<size_t>(i)] >= 1;
    n_2 += exc[static_cast<size_t>(i)] >= 2;
  }
  const double n = static_cast<double>(trials);
  return {n_s / n, n_1 / n, n_2 / n, trials};
}

PumpProbeResult pump_probe_curve(const OpticalLevelModel& model, const PulseEnvelope& pi_pulse,
                                 const std::vector<double>& delays, const PumpProbeOptions& opt) {
  require(!delays.empty(), "pump-probe needs at least one delay");
  require(opt.trials >= 1 && opt.probe_window > 0.0, "invalid pump-probe options");
  for (double d : delays) require(d >= 0.0, "pump-probe delays must be >= 0");
  const double max_delay = *std::max_element(delays.begin(), delays.end());
  const double horizon = std::max(pi_pulse.end(), pi_pulse.time + max_delay + opt.probe_window);
  const size_t D = delays.size();
  const auto T = static_cast<size_t>(opt.trials);
  std::vector<double> val(T * D);
  std::vector<unsigned char> singlet(T), exc(T);
  parallel_for(opt.trials, opt.threads, [&](long i) {
    Rng rng = stream_for(opt.seed, static_cast<std::uint64_t>(i), kOpticalStream);
    const auto path = jump_trajectory(model, {pi_pulse}, ElectronState::msMinus1, horizon, rng, opt.jump);
    const size_t row = static_cast<size_t>(i) * D;
    for (size_t k = 0; k < D; ++k) {
      const double open = pi_pulse.time + delays[k];
      const double close = open + opt.probe_window;
      double v = 0.0;
      switch (opt.readout) {
        case ProbeReadout::window_start: v = path.state_at(open) == ElectronState::ms0; break;
        case ProbeReadout::window_end: v = path.state_at(close) == ElectronState::ms0; break;
        case ProbeReadout::window_mean:
          v = path.time_in(ElectronState::ms0, open, close) / opt.probe_window;
          break;
      }
      val[row + k] = v;
    }
    singlet[static_cast<size_t>(i)] = path.reached_singlet;
    exc[static_cast<size_t>(i)] = static_cast<unsigned char>(std::min(path.excitations, 255));
  });
  PumpProbeResult res;
  const double n = static_cast<double>(opt.trials);
  for (size_t k = 0; k < D; ++k) {
    double s = 0.0, ss = 0.0;
    for (size_t i = 0; i < T; ++i) {
      const double v = val[i * D + k];
      s += v;
      ss += v * v;
    }
    const double mean = s / n;
    const double var = n > 1 ? std::max(0.0, ss - n * mean * mean) / (n - 1) : 0.0;
    res.points.push_back({delays[k], mean, std::sqrt(var / n)});
  }
  long n_s = 0, n_1 = 0, n_2 = 0;
  for (size_t i = 0; i < T; ++i) {
    n_s += singlet[i];
    n_1 += exc[i] >= 1;
    n_2 += exc[i] >= 2;
  }
  res.pulse = {n_s / n, n_1 / n, n_2 / n, opt.trials};
  return res;
}

double isc_rate_from_lifetimes(double t_ex, double t_eprime) {
  require(t_ex > 0.0 && t_eprime > 0.0, "lifetimes must be positive", ErrorCode::nonphysical_inputs);
  if (t_eprime >= t_ex) {
    fail(ErrorCode::nonphysical_inputs, "t_E' must be shorter than t_Ex for a positive ISC rate");
  }
  return 1.0 / t_eprime - 1.0 / t_ex;
}

Branching branching_from_measurement(double p_s, double f0_asymptote, bool symmetric) {
  require(symmetric, "asymmetric +1/-1 branching is not identifiable from F(|0>) alone",
          ErrorCode::unsupported_sequence);
  require(p_s > 0.0 && p_s <= 1.0, "p_s must lie in (0, 1]", ErrorCode::inconsistent_inputs);
  if (!(f0_asymptote > 0.0) || f0_asymptote > p_s) {
    fail(ErrorCode::inconsistent_inputs, "F(|0>) asymptote must lie in (0, p_s]");
  }
  const double b0 = f0_asymptote / p_s;
  return {b0, 0.5 * (1.0 - b0), 0.5 * (1.0 - b0)};
}

Branching branching_from_jump_simulation(const OpticalLevelModel& model, const PulseEnvelope& pulse,
                                         double f0_asymptote, long trials, std::uint64_t seed,
                                         int threads) {
  const auto stats = pulse_statistics(model, pulse, trials, seed, threads);
  return branching_from_measurement(stats.p_singlet, f0_asymptote, true);
}

std::vector<DataPoint> eprime_population(const OpticalLevelModel& model, const PulseEnvelope& pulse,
                                         const std::vector<double>& times, long trials,
                                         std::uint64_t seed, int threads) {
  require(!times.empty() && trials >= 1, "need times and trajectories");
  const double horizon = std::max(pulse.end(), *std::max_element(times.begin(), times.end()));
  const size_t D = times.size();
  std::vector<unsigned char> in(static_cast<size_t>(trials) * D);
  parallel_for(trials, threads, [&](long i) {
    Rng rng = stream_for(seed, static_cast<std::uint64_t>(i), kOpticalStream);
    const auto path = jump_trajectory(model, {pulse}, ElectronState::msMinus1, horizon, rng);
    for (size_t k = 0; k < D; ++k) {
      in[static_cast<size_t>(i) * D + k] = path.state_at(times[k]) == ElectronState::excitedEPrime;
    }
  });
  std::vector<DataPoint> out;
  const double n = static_cast<double>(trials);
  for (size_t k = 0; k < D; ++k) {
    long c = 0;
    for (long i = 0; i < trials; ++i) c += in[static_cast<size_t>(i) * D + k];
    const double f = c / n;
    out.push_back({times[k], f, std::sqrt(std::max(f * (1 - f), 1.0 / n) / n)});
  }
  return out;
}

}  // namespace nvmem

#include "nvmem/fitting.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "nvmem/error.hpp"

namespace nvmem {

std::vector<DataPoint> CoherenceCurve::data() const {
  std::vector<DataPoint> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back({static_cast<double>(p.n), p.coherence, p.std_err});
  return out;
}

const FitParameter& FitResult::param(std::string_view name) const {
  for (const auto& p : params) {
    if (p.name == name) return p;
  }
  fail(ErrorCode::invalid_argument, "fit result has no parameter '" + std::string(name) + "'");
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// f(x, q) with gradient with respect to the internal parameters q.
using ModelFn = std::function<double(double, const VectorXd&, double*)>;

struct Prepared {
  std::vector<DataPoint> pts;
  std::vector<double> w;
  bool weighted = false;
};

Prepared prepare(std::span<const DataPoint> in, const FitOptions& opt, size_t min_points) {
  if (in.size() < min_points) {
    fail(ErrorCode::invalid_argument,
         "fit needs at least " + std::to_string(min_points) + " points");
  }
  Prepared p;
  p.pts.assign(in.begin(), in.end());
  for (const auto& d : p.pts) {
    require(std::isfinite(d.x) && std::isfinite(d.y), "fit data must be finite");
  }
  // Sorting makes the result independent of input order.
  std::sort(p.pts.begin(), p.pts.end(), [](const DataPoint& a, const DataPoint& b) {
    if (a.x != b.x) return a.x < b.x;
    if (a.y != b.y) return a.y < b.y;
    return a.sigma < b.sigma;
  });
  p.weighted = opt.weighted &&
               std::all_of(p.pts.begin(), p.pts.end(),
                           [](const DataPoint& d) { return d.sigma > 0.0 && std::isfinite(d.sigma); });
  p.w.resize(p.pts.size());
  for (size_t i = 0; i < p.pts.size(); ++i) {
    p.w[i] = p.weighted ? 1.0 / (p.pts[i].sigma * p.pts[i].sigma) : 1.0;
  }
  return p;
}

struct LmOutcome {
  VectorXd q;
  MatrixXd curvature;  // J^T W J at q
  double chi2 = kInf;
  double rss = kInf;
  int iterations = 0;
  bool converged = false;
};

double evaluate(const Prepared& d, const ModelFn& f, const VectorXd& q, MatrixXd* jac,
                VectorXd* res, double* rss) {
  const auto n = static_cast<Eigen::Index>(d.pts.size());
  const auto np = q.size();
  std::vector<double> grad(static_cast<size_t>(np));
  double chi2 = 0.0;
  double raw = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& pt = d.pts[static_cast<size_t>(i)];
    const double fx = f(pt.x, q, jac ? grad.data() : nullptr);
    const double r = pt.y - fx;
    if (!std::isfinite(r)) return kInf;
    chi2 += d.w[static_cast<size_t>(i)] * r * r;
    raw += r * r;
    if (res) (*res)(i) = r;
    if (jac) {
      for (Eigen::Index k = 0; k < np; ++k) (*jac)(i, k) = grad[static_cast<size_t>(k)];
    }
  }
  if (rss) *rss = raw;
  return chi2;
}

LmOutcome levenberg_marquardt(const Prepared& d, const ModelFn& f, VectorXd q, int max_iter) {
  const auto n = static_cast<Eigen::Index>(d.pts.size());
  const auto np = q.size();
  VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w(i) = d.w[static_cast<size_t>(i)];

  MatrixXd J(n, np);
  VectorXd r(n);
  LmOutcome out;
  double rss = 0.0;
  double chi2 = evaluate(d, f, q, &J, &r, &rss);
  if (!std::isfinite(chi2)) return out;

  double lambda = 1e-3;
  int it = 0;
  bool converged = false;
  while (it < max_iter) {
    ++it;
    const MatrixXd H = J.transpose() * w.asDiagonal() * J;
    const VectorXd g = J.transpose() * (w.array() * r.array()).matrix();
    if (chi2 == 0.0 || g.lpNorm<Eigen::Infinity>() == 0.0) {
      converged = true;
      break;
    }
    bool accepted = false;
    while (lambda < 1e20) {
      MatrixXd A = H;
      for (Eigen::Index k = 0; k < np; ++k) A(k, k) += lambda * std::max(H(k, k), 1e-300);
      const VectorXd step = A.ldlt().solve(g);
      if (!step.allFinite()) {
        lambda *= 10;
        continue;
      }
      const VectorXd q_new = q + step;
      MatrixXd J_new(n, np);
      VectorXd r_new(n);
      double rss_new = 0.0;
      const double chi2_new = evaluate(d, f, q_new, &J_new, &r_new, &rss_new);
      if (std::isfinite(chi2_new) && chi2_new <= chi2) {
        const double drop = chi2 - chi2_new;
        const bool tiny_step =
            step.lpNorm<Eigen::Infinity>() <= 1e-13 * (q.lpNorm<Eigen::Infinity>() + 1e-13);
        q = q_new;
        J = std::move(J_new);
        r = std::move(r_new);
        rss = rss_new;
        chi2 = chi2_new;
        lambda = std::max(lambda / 10, 1e-12);
        accepted = true;
        if (drop <= 1e-15 * chi2 || tiny_step) converged = true;
        break;
      }
      lambda *= 10;
    }
    // No downhill step left at any damping: numerical minimum.
    if (!accepted) converged = true;
    if (converged) break;
  }
  out.q = q;
  out.curvature = J.transpose() * w.asDiagonal() * J;
  out.chi2 = chi2;
  out.rss = rss;
  out.iterations = it;
  out.converged = converged;
  return out;
}

struct Covariance {
  MatrixXd cov;
  bool identifiable = true;
};

Covariance invert_curvature(const MatrixXd& H) {
  Covariance c;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(H);
  const auto& ev = es.eigenvalues();
  const double max_ev = ev.cwiseAbs().maxCoeff();
  if (!(max_ev > 0.0) || ev.minCoeff() <= 1e-13 * max_ev) {
    c.identifiable = false;
    c.cov = MatrixXd::Constant(H.rows(), H.cols(), kInf);
    return c;
  }
  c.cov = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  return c;
}

// Runs LM from each start and keeps the lowest chi^2.
LmOutcome best_of(const Prepared& d, const ModelFn& f, const std::vector<VectorXd>& starts,
                  int max_iter) {
  LmOutcome best;
  for (const auto& s : starts) {
    if (!s.allFinite()) continue;
    auto o = levenberg_marquardt(d, f, s, max_iter);
    if (o.q.size() == 0) continue;
    if (best.q.size() == 0 || o.chi2 < best.chi2) best = std::move(o);
  }
  if (best.q.size() == 0) fail(ErrorCode::fit_failure, "no fit start produced finite residuals");
  return best;
}

// Fills params from internal coordinates. `log_param[k]` marks parameters
// fitted as log(value).
FitResult finish(std::string model, const Prepared& d, const LmOutcome& o,
                 const std::vector<std::string>& names, const std::vector<bool>& log_param) {
  FitResult r;
  r.model = std::move(model);
  r.iterations = o.iterations;
  r.converged = o.converged;
  r.chi2 = o.chi2;
  r.residual_norm = std::sqrt(o.rss);
  r.dof = static_cast<int>(d.pts.size()) - static_cast<int>(names.size());
  auto cov = invert_curvature(o.curvature);
  r.identifiable = cov.identifiable;
  double scale = 1.0;
  if (!d.weighted && r.dof > 0) scale = o.chi2 / r.dof;
  for (size_t k = 0; k < names.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const double q = o.q(kk);
    const double value = log_param[k] ? std::exp(q) : q;
    double err = std::sqrt(std::max(0.0, cov.cov(kk, kk) * scale));
    if (log_param[k]) err *= value;
    if (!cov.identifiable) err = kInf;
    r.params.push_back({names[k], value, err});
  }
  return r;
}

bool is_flat(const Prepared& d) {
  double lo = kInf, hi = -kInf, scale = 0.0;
  for (const auto& p : d.pts) {
    lo = std::min(lo, p.y);
    hi = std::max(hi, p.y);
    scale = std::max(scale, std::abs(p.y));
  }
  return hi - lo <= 1e-12 * std::max(scale, 1e-300);
}

double mean_y(const Prepared& d) {
  double s = 0.0;
  for (const auto& p : d.pts) s += p.y;
  return s / static_cast<double>(d.pts.size());
}

// First x where y crosses `level` going in the direction of `falling`,
// linearly interpolated; nullopt when never crossed.
std::optional<double> crossing(const Prepared& d, double level, bool falling) {
  for (size_t i = 1; i < d.pts.size(); ++i) {
    const auto& a = d.pts[i - 1];
    const auto& b = d.pts[i];
    const bool crossed = falling ? (a.y >= level && b.y < level) : (a.y <= level && b.y > level);
    if (crossed) {
      const double f = (level - a.y) / (b.y - a.y);
      return a.x + f * (b.x - a.x);
    }
  }
  return std::nullopt;
}

}  // namespace

FitResult fit_stretched_exp(std::span<const DataPoint> points, const FitOptions& opt) {
  const auto d = prepare(points, opt, opt.fix_m ? 2 : 3);
  const bool free_m = !opt.fix_m.has_value();
  if (opt.fix_m) require(*opt.fix_m > 0.0, "fixed exponent must be positive");
  const std::vector<std::string> names = free_m ? std::vector<std::string>{"A", "N_1e", "m"}
                                                : std::vector<std::string>{"A", "N_1e"};
  const double x_max = d.pts.back().x;

  auto unbounded_result = [&](double amplitude) {
    FitResult r;
    r.model = "stretched_exp";
    r.converged = true;
    r.unbounded = true;
    r.dof = static_cast<int>(d.pts.size()) - static_cast<int>(names.size());
    r.params.push_back({"A", amplitude, 0.0});
    r.params.push_back({"N_1e", kInf, kInf});
    if (free_m) r.params.push_back({"m", kNaN, kInf});
    double rss = 0.0;
    for (const auto& p : d.pts) rss += (p.y - amplitude) * (p.y - amplitude);
    r.residual_norm = std::sqrt(rss);
    return r;
  };
  if (is_flat(d)) return unbounded_result(mean_y(d));

  const double fixed_m = opt.fix_m.value_or(1.0);
  ModelFn f = [free_m, fixed_m](double x, const VectorXd& q, double* g) {
    const double A = q(0);
    const double L = std::exp(q(1));
    const double m = free_m ? std::exp(q(2)) : fixed_m;
    const double ratio = x / L;
    const double u = ratio > 0.0 ? std::pow(ratio, m) : 0.0;
    const double e = std::exp(-u);
    if (g) {
      g[0] = e;
      g[1] = A * e * u * m;
      if (free_m) g[2] = ratio > 0.0 ? -A * e * u * std::log(ratio) * m : 0.0;
    }
    return A * e;
  };

  const double a0 = d.pts.front().y;
  double l0;
  if (auto c = crossing(d, a0 / std::exp(1.0), true)) {
    l0 = *c;
  } else {
    const auto& last = d.pts.back();
    l0 = (last.y > 0.0 && last.y < a0) ? last.x / std::log(a0 / last.y) : 100.0 * x_max;
  }
  l0 = std::max(l0, 1e-12 * std::max(1.0, x_max));
  std::vector<VectorXd> starts;
  for (double m0 : free_m ? std::vector<double>{1.0, 2.0, 0.5} : std::vector<double>{fixed_m}) {
    VectorXd s(free_m ? 3 : 2);
    s(0) = a0;
    s(1) = std::log(l0);
    if (free_m) s(2) = std::log(m0);
    starts.push_back(s);
  }
  const auto o = best_of(d, f, starts, opt.max_iterations);
  auto r = finish("stretched_exp", d, o, names, free_m ? std::vector<bool>{false, true, true}
                                                       : std::vector<bool>{false, true});
  if (r.value("N_1e") > 100.0 * x_max) return unbounded_result(r.value("A"));
  return r;
}

FitResult fit_stretched_exp(const CoherenceCurve& curve, const FitOptions& opt) {
  const auto pts = curve.data();
  return fit_stretched_exp(std::span<const DataPoint>(pts), opt);
}

FitResult fit_saturation(std::span<const DataPoint> points, const FitOptions& opt) {
  const auto d = prepare(points, opt, 3);
  for (const auto& p : d.pts) require(p.x > 0.0, "saturation fit needs positive powers");
  ModelFn f = [](double x, const VectorXd& q, double* g) {
    const double ns = q(0);
    const double ps = std::exp(q(1));
    const double s = x / (x + ps);
    if (g) {
      g[0] = s;
      g[1] = -ns * x * ps / ((x + ps) * (x + ps));
    }
    return ns * s;
  };
  double y_max = -kInf;
  for (const auto& p : d.pts) y_max = std::max(y_max, p.y);
  const double ps0 = crossing(d, 0.5 * y_max, false).value_or(d.pts[d.pts.size() / 2].x);
  std::vector<VectorXd> starts;
  for (double k : {1.0, 0.3, 3.0}) {
    VectorXd s(2);
    s(0) = 1.1 * y_max;
    s(1) = std::log(std::max(ps0 * k, 1e-300));
    starts.push_back(s);
  }
  const auto o = best_of(d, f, starts, opt.max_iterations);
  return finish("saturation", d, o, {"N_sat", "P_sat"}, {false, true});
}

FitResult fit_exponential(std::span<const DataPoint> points, ExpDirection dir,
                          const FitOptions& opt) {
  const auto d = prepare(points, opt, 3);
  const char* model = dir == ExpDirection::rise ? "exp_rise" : "exp_decay";
  if (is_flat(d)) {
    FitResult r;
    r.model = model;
    r.converged = true;
    r.identifiable = false;
    r.dof = static_cast<int>(d.pts.size()) - 3;
    r.params = {{"A", 0.0, 0.0}, {"T", kNaN, kInf}, {"c", mean_y(d), 0.0}};
    return r;
  }
  const bool rise = dir == ExpDirection::rise;
  ModelFn f = [rise](double x, const VectorXd& q, double* g) {
    const double A = q(0);
    const double T = std::exp(q(1));
    const double e = std::exp(-x / T);
    if (g) {
      g[0] = rise ? 1.0 - e : e;
      g[1] = (rise ? -A : A) * e * x / T;
      g[2] = 1.0;
    }
    return (rise ? A * (1.0 - e) : A * e) + q(2);
  };
  const auto& first = d.pts.front();
  const auto& last = d.pts.back();
  const double span = last.x - first.x;
  double c0, a0, t0;
  if (rise) {
    c0 = first.y;
    a0 = last.y - first.y;
    t0 = crossing(d, c0 + 0.632 * a0, a0 < 0).value_or(first.x + span / 3) - first.x;
  } else {
    c0 = last.y;
    a0 = first.y - last.y;
    t0 = crossing(d, c0 + 0.368 * a0, a0 > 0).value_or(first.x + span / 3) - first.x;
  }
  t0 = std::max(t0, 1e-3 * std::max(span, 1e-300));
  std::vector<VectorXd> starts;
  for (double k : {1.0, 0.3, 3.0}) {
    VectorXd s(3);
    const double T = t0 * k;
    // Shift amplitude so the model matches the first sample at x = first.x.
    s(0) = rise ? a0 : a0 * std::exp(first.x / T);
    s(1) = std::log(T);
    s(2) = c0;
    starts.push_back(s);
  }
  const auto o = best_of(d, f, starts, opt.max_iterations);
  return finish(model, d, o, {"A", "T", "c"}, {false, true, false});
}

}  // namespace nvmem

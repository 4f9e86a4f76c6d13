#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nvmem/curve.hpp"

namespace nvmem {

struct FitParameter {
  std::string name;
  double value = 0.0;
  double error = 0.0;  // 1 sigma
};

struct FitResult {
  std::string model;
  std::vector<FitParameter> params;
  double residual_norm = 0.0;  // sqrt(sum of squared raw residuals)
  double chi2 = 0.0;           // weighted sum of squares
  int dof = 0;
  int iterations = 0;
  bool converged = false;
  // No decay resolved inside the sampled range; the time constant is +inf.
  bool unbounded = false;
  // Curvature matrix singular at the optimum (e.g. constant data).
  bool identifiable = true;

  const FitParameter& param(std::string_view name) const;
  double value(std::string_view name) const { return param(name).value; }
  double error(std::string_view name) const { return param(name).error; }
  bool reliable() const { return converged && identifiable && !unbounded; }
};

struct FitOptions {
  // Weight residuals by 1/sigma^2; falls back to unweighted when any sigma is <= 0.
  bool weighted = true;
  std::optional<double> fix_m;  // stretched exponential only
  int max_iterations = 500;
};

// A * exp[-(N / N_1e)^m]; parameters "A", "N_1e", "m".
FitResult fit_stretched_exp(std::span<const DataPoint> points, const FitOptions& opt = {});
FitResult fit_stretched_exp(const CoherenceCurve& curve, const FitOptions& opt = {});

// N_sat * P / (P + P_sat); parameters "N_sat", "P_sat".
FitResult fit_saturation(std::span<const DataPoint> points, const FitOptions& opt = {});

enum class ExpDirection { rise, decay };

// rise: A (1 - e^{-t/T}) + c, decay: A e^{-t/T} + c; parameters "A", "T", "c".
FitResult fit_exponential(std::span<const DataPoint> points, ExpDirection dir,
                          const FitOptions& opt = {});

}  // namespace nvmem

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nvmem/config.hpp"
#include "nvmem/error.hpp"

namespace nvmem {

// Command-line overrides applied on top of a configuration.
struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<long> trials;
  std::optional<std::string> out_dir;
  std::optional<double> budget;  // NVSIM_BUDGET
  bool strict = false;
  int threads = 1;
};

struct RunReport {
  std::vector<std::string> artifacts;  // written files
  std::vector<std::string> lines;      // one summary line per scenario
  bool fit_failed = false;
};

// Executes the configured command and writes its CSV/JSON artifacts.
// Throws Error(fit_failure) when a fit fails and `strict` is set.
RunReport run_config(ScenarioConfig cfg, const RunOptions& opt);

enum class FitForm { stretched, saturation, rise, decay };

FitForm fit_form_from_string(const std::string& s);

struct FitRequest {
  std::string input;
  std::string output;  // JSON path; empty = next to the input
  FitForm form = FitForm::stretched;
  std::string x, y, sigma;  // column names (default: first three)
  FitOptions options;
  bool strict = false;
};

RunReport run_fit(const FitRequest& req);

// Bundled figure configurations.
const std::vector<std::string>& figure_ids();
std::string figure_config_path(const std::string& id);

// Process exit status for an error: 2 schema, 3 budget, 4 fit failure, 1 otherwise.
int exit_status(const Error& e);

// Parses NVSIM_BUDGET when set.
std::optional<double> budget_from_env();

}  // namespace nvmem

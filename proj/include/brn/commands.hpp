#pragma once

/**
 * @file commands.hpp
 * @brief Computations behind the command-line subcommands and their CSV writers.
 *
 * Each run_* function is pure given its scenario; each cmd_* function runs
 * it, writes the CSV files into the scenario's output directory and returns
 * a process exit code.
 */

#include "brn/scenario.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace brn {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct CommandContext {
   bool quiet = false;
   std::ostream* log = nullptr; ///< progress and reports; nothing when null or quiet
};

// --- outage sweep -----------------------------------------------------------

struct SweepPoint {
   double gamma_db = 0.0;
   double beta = 0.0; ///< linear
   double epsilon_cbr = 0.0;
   int iterations_used = 1;
   std::optional<SimEstimate> mc;
};

std::vector<SweepPoint> run_outage_sweep(const Scenario& scenario);
void write_outage_sweep(std::ostream& out, const std::vector<SweepPoint>& points);
int cmd_outage_sweep(const Scenario& scenario, const CommandContext& ctx = {});

// --- fixed-point iteration traces ---------------------------------------------

struct IterateResult {
   double gamma_db = 0.0;
   double alpha = 0.0;
   double beta = 0.0; ///< linear
   double epsilon_no_cci = 0.0;
   FixedPointReport report;
};

std::vector<IterateResult> run_iterate(const Scenario& scenario);
void write_iterate(std::ostream& out, const std::vector<IterateResult>& results);
int cmd_iterate(const Scenario& scenario, const CommandContext& ctx = {});

// --- optimization -------------------------------------------------------------

struct OptimizeResult {
   OptimizeRow row;
   OptResult result;
};

OptimizerOptions row_options(const Scenario& scenario, const OptimizeRow& row);
std::vector<OptimizeResult> run_optimize(const Scenario& scenario, const CommandContext& ctx = {});
void write_optimize(std::ostream& out, const std::vector<OptimizeResult>& results);
void write_optimize_trace(std::ostream& out, const std::vector<OptimizeResult>& results);
void write_optimize_report(std::ostream& out, const std::vector<OptimizeResult>& results);
int cmd_optimize(const Scenario& scenario, const CommandContext& ctx = {});

// --- property suite -----------------------------------------------------------

struct CheckResult {
   std::string name;
   bool passed = false;
   std::string detail;
};

std::vector<CheckResult> run_validation(const Scenario& scenario, const CommandContext& ctx = {});
void write_validation(std::ostream& out, const std::vector<CheckResult>& checks);
int cmd_validate(const Scenario& scenario, const CommandContext& ctx = {});

} // namespace brn

#pragma once

/**
 * @file scenario.hpp
 * @brief JSON scenario files driving the command-line front end.
 *
 * Every section is optional and falls back to the defaults below. Unknown
 * keys anywhere in the document are rejected. Γ and β are given in dB and
 * converted to linear values on load; `rate` (bits per channel use) is
 * accepted instead of `beta_db`, and `beta_linear` allows β = 0.
 */

#include "brn/montecarlo.hpp"
#include "brn/optimizer.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace brn {

struct TopologySpec {
   int relays = 2;
   double length = 3.0;
   std::optional<std::vector<double>> positions; ///< equally spaced when absent
   double min_distance = kFarField;

   LineTopology build() const;
};

struct ChannelSpec {
   double gamma_db = 10.0;
   double alpha = 3.5;
   double beta = 3.9810717055349722; ///< linear, 6 dB

   ChannelParamsd params() const;
};

struct CciSpec {
   bool enabled = false;
   int zones = 1;
   std::vector<double> offsets; ///< explicit translations; empty means +-2d ... +-2 zones d
   bool halt_on_success = false;
};

struct FixedPointSpec {
   double xi = kDefaultXi;
   int max_iters = kDefaultMaxIterations;
};

struct SimulationSpec {
   bool enabled = true;
   std::uint64_t trials = 1'000'000;
   std::uint64_t seed = 1;
   SimMode mode = SimMode::sinr_level;
   int ring_copies = 0;
};

struct SweepSpec {
   std::vector<double> gamma_db; ///< empty means 0, 2, ..., 20
   std::vector<double> beta; ///< linear; empty means 0, 3 and 6 dB
};

struct IterateCase {
   double gamma_db = 0.0;
   double alpha = 3.5;
};

struct IterateSpec {
   std::vector<IterateCase> cases; ///< empty means Γ in {0, 10} dB x α in {3, 3.5, 4}
   double beta = 3.9810717055349722; ///< linear, 6 dB
};

struct OptimizeRow {
   double gamma_db = 0.0;
   bool cci = true;
};

struct OptimizeSpec {
   std::vector<OptimizeRow> rows; ///< empty means Γ in {0, 5, 10} dB, each without and with CCI
   OptimizerOptions options; ///< gamma and cci are overwritten per row
   bool write_trace = true;
};

struct ValidateSpec {
   std::uint64_t trials = 200'000;
   std::uint64_t seed = 7;
   int link_sets = 20;
   int mutation_draws = 10'000;
   int grid_points = 16;
};

struct OutputSpec {
   std::filesystem::path directory = ".";
};

struct Scenario {
   TopologySpec topology;
   ChannelSpec channel;
   CciSpec cci;
   FixedPointSpec fixed_point;
   SimulationSpec simulation;
   SweepSpec sweep;
   IterateSpec iterate;
   OptimizeSpec optimize;
   ValidateSpec validate;
   OutputSpec output;

   /// Cascade for the configured topology and channel (standalone when CCI is off).
   CascadeScenario cascade() const;
   CascadeScenario cascade(const ChannelParamsd& params) const;

   static Scenario parse(const std::string& json_text);
   static Scenario load(const std::filesystem::path& path);
};

} // namespace brn

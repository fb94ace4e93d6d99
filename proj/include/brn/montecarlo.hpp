#pragma once

/**
 * @file montecarlo.hpp
 * @brief Stochastic oracle for the analytic pipeline.
 *
 * Every trial draws from its own SplitMix64 substream keyed by
 * (seed, trial index), so estimates are reproducible bit for bit and do not
 * depend on the number of worker threads.
 */

#include "brn/interference.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>

namespace brn {

enum class SimMode {
   sinr_level, ///< draw fades and interferer activity, evaluate the SINR directly
   transition_level, ///< draw each decode outcome from the analytic link outage
};

std::string to_string(SimMode mode);
SimMode parse_sim_mode(const std::string& text);

struct SimConfig {
   std::uint64_t trials = 1'000'000;
   std::uint64_t seed = 1;
   SimMode mode = SimMode::sinr_level;
   /// Copies simulated on a ring in sinr_level cascades; 0 picks 2K + 1 for K zones.
   int ring_copies = 0;
};

struct SimEstimate {
   double epsilon_hat = 0.0;
   double standard_error = 0.0;
   std::uint64_t trials = 0;
   std::uint64_t failures = 0;
   /// Fraction of frames in which node i transmitted in slot t, indexed (i, t - 1).
   Eigen::MatrixXd transmit_frequency;

   static SimEstimate from_counts(std::uint64_t failures, std::uint64_t trials);
};

/// Monte Carlo estimate of P[SINR <= beta] for one receiver.
SimEstimate simulate_outage(const LinkSetd& links, const ChannelParamsd& params,
   std::uint64_t trials, std::uint64_t seed);

/**
 * Monte Carlo estimate of the CBR outage probability of the typical CBR.
 *
 * sinr_level: all copies of the cascade are flooded jointly on a ring, with
 * interference coming from the copies' actual transmissions.
 * transition_level: the typical CBR walks its state chain with decode
 * outcomes drawn from the analytic link outage, interference computed from
 * @p copies_schedule (pass the converged fixed-point schedule, or leave it
 * empty for silent copies).
 */
SimEstimate simulate_cbr(const CascadeScenario& scenario, const SimConfig& config,
   const TransmitSchedule& copies_schedule = {});

} // namespace brn

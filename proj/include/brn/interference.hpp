#pragma once

/**
 * @file interference.hpp
 * @brief Co-channel interference between the active zones of an infinite
 * cascade of identical CBRs, resolved by fixed-point iteration.
 */

#include "brn/markov.hpp"

#include <vector>

namespace brn {

/// A typical CBR and the translations of its interfering copies.
struct CascadeScenario {
   LineTopology cbr;
   ChannelParamsd params;
   /// Absolute translations of the interfering copies (multiples of 2d).
   std::vector<double> offsets;
   double min_distance = kFarField;
   bool halt_on_success = false;

   double zone_length() const { return cbr.length(); }

   /// Copies at +-2d, ..., +-2kd (zones = k); zones = 0 means no interference.
   static CascadeScenario cascade(LineTopology cbr, ChannelParamsd params, int zones = 1);
   static CascadeScenario standalone(LineTopology cbr, ChannelParamsd params);

   void validate() const;
};

/// Interferers seen at every receiver in every slot when all copies follow @p schedule.
InterferenceField interference_view(const CascadeScenario& scenario, const TransmitSchedule& schedule);

struct FixedPointReport {
   /// Number of chains evaluated, including the interference-free seed.
   int iterations_used = 0;
   std::vector<double> trace; ///< epsilon_cbr per iteration
   std::vector<double> distances; ///< slot Frobenius distance per recursion step
   TransmitSchedule schedule;
   TransitionMatrix matrix;
   bool converged = false;

   double epsilon_cbr() const { return trace.back(); }
};

inline constexpr double kDefaultXi = 1e-6;
inline constexpr int kDefaultMaxIterations = 50;

/**
 * Alternates between building the typical CBR's transition matrix from the
 * copies' transmit probabilities and re-extracting those probabilities,
 * starting from silent copies. Stops when the largest per-slot Frobenius
 * change drops below @p xi or after @p max_iters recursion steps.
 */
FixedPointReport fixed_point(const CascadeScenario& scenario, const StateSpace& space,
   double xi = kDefaultXi, int max_iters = kDefaultMaxIterations);

FixedPointReport fixed_point(const CascadeScenario& scenario, double xi = kDefaultXi,
   int max_iters = kDefaultMaxIterations);

} // namespace brn

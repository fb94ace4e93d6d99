#pragma once

/**
 * @file optimizer.hpp
 * @brief Transport-capacity maximization over (relay positions, R, N, d).
 *
 * (R, N, d) are searched by coordinate trisection on endpoint / midpoint
 * triples; relay positions by a stochastic mutation search keyed on (N, d)
 * reference placements. R and d are bracketed separately for every relay
 * count on the N lattice, and the N triple only moves once those brackets
 * have settled.
 */

#include "brn/interference.hpp"
#include "brn/rng.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace brn {

struct CandidateConfig {
   std::vector<double> relay_positions; ///< sorted, strictly inside (0, length)
   double rate = 1.0; ///< bits per channel use
   int relays = 0;
   double length = 1.0; ///< CBR length in units of d0

   LineTopology topology() const { return LineTopology(relay_positions, length); }
   void validate() const;
};

/// Ordering used to break ties between equal-capacity candidates.
bool precedes(const CandidateConfig& a, const CandidateConfig& b);

/// Upsilon = d (1 - eps) log2(1 + beta) / (2 (N + 1)).
double transport_capacity(double epsilon_cbr, int relays, double length, double beta);

inline double rate_to_beta(double rate) { return std::exp2(rate) - 1.0; }
inline double beta_to_rate(double beta) { return std::log2(1.0 + beta); }

struct EvaluationOptions {
   double gamma = 1.0; ///< linear
   double alpha = 3.5;
   bool cci = true;
   int zones = 1; ///< interfering active zones on each side
   double xi = kDefaultXi;
   int max_iters = kDefaultMaxIterations;
   /// Far-field floor for every node-pair distance and for the CBR length.
   double d_min = 0.1;
   bool halt_on_success = false;
};

struct Evaluation {
   double upsilon = -std::numeric_limits<double>::infinity();
   double epsilon_cbr = 1.0;
   bool feasible = false;
   bool converged = false;
};

/// State space for N relays, enumerated once per process.
const StateSpace& cached_state_space(int relays);

Evaluation evaluate(const CandidateConfig& config, const EvaluationOptions& options);

struct MutationOptions {
   double move_probability = 0.5;
   double right_probability = 0.5;
   double margin = 0.05; ///< positions clamped into [margin d, (1 - margin) d]
   double min_gap = 0.1; ///< spacing restored between neighbours after a move
};

/**
 * Applies explicit moves (-1 left, 0 stay, +1 right) of size d / (n_delta N)
 * to a reference placement, then clamps and resolves overlaps while
 * preserving order.
 */
std::vector<double> apply_moves(std::span<const double> reference, double length,
   int n_delta, std::span<const int> moves, const MutationOptions& options = {});

std::vector<double> mutate_placement(std::span<const double> reference, double length,
   int n_delta, SplitMix64& rng, const MutationOptions& options = {});

/// N relays uniformly placed in (0, d) with gaps of at least d / (3N).
std::vector<double> initial_placement(int relays, double length, SplitMix64& rng);

enum class Coordinate { rate, length, relays };
std::string to_string(Coordinate c);

struct Bracket {
   double lo = 0.0;
   double mid = 0.0;
   double hi = 0.0;
};

/// R and d brackets of one relay count; each N level is searched on its own.
struct LevelState {
   Bracket rate;
   Bracket length;
   bool rate_settled = false;
   bool length_settled = false;
   int rate_direction = 0; ///< sign of the last slide, 0 after a contraction
   int length_direction = 0;
   double best = -std::numeric_limits<double>::infinity(); ///< best capacity seen at this N
   int stale_passes = 0; ///< passes since best last improved

   bool settled(int stale_limit) const
   {
      return (rate_settled && length_settled) || stale_passes >= stale_limit;
   }
};

struct SearchState {
   std::array<int, 3> relays{}; ///< lo, mid, hi
   std::map<int, LevelState> levels;
   std::map<std::pair<int, double>, std::vector<double>> references;
   int n_delta = 2;
   std::uint64_t seed = 0;
};

struct OptimizerOptions {
   Bracket rate_bounds{0.5, 0.0, 8.0}; ///< mid ignored
   std::array<int, 2> relay_bounds{0, 8};
   Bracket length_bounds{0.1, 0.0, 6.0};
   double rate_tolerance = 1e-2;
   double length_tolerance = 1e-2;
   int n_delta_start = 2;
   int n_delta_cap = 8;
   std::array<Coordinate, 3> order{Coordinate::rate, Coordinate::length, Coordinate::relays};
   MutationOptions mutation;
   EvaluationOptions evaluation;
   std::uint64_t seed = 1;
   int restarts = 3;
   int max_passes = 200;
   /// A relay count whose best capacity has not improved for this many passes counts as settled.
   int stale_limit = 6;
};

struct TraceRow {
   int restart = 0;
   int pass = 0;
   Coordinate coordinate = Coordinate::rate;
   std::array<int, 3> relays{};
   int level = 0; ///< relay count whose brackets are reported
   Bracket rate;
   Bracket length;
   int n_delta = 2;
   double pass_best = 0.0;
   double best_so_far = 0.0;
};

struct OptResult {
   CandidateConfig best;
   double upsilon = -std::numeric_limits<double>::infinity();
   double epsilon_cbr = 1.0;
   std::uint64_t evaluations = 0;
   std::vector<TraceRow> trace;
   /// Parameters whose optimum sits on a search bound ("rate", "relays", "length").
   std::vector<std::string> boundary_hits;
   bool terminated = false; ///< stopping rule met before max_passes
};

/// One search per restart (seed substream per restart); the best result wins.
OptResult optimize(const OptimizerOptions& options);

} // namespace brn

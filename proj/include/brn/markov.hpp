#pragma once

/**
 * @file markov.hpp
 * @brief Absorbing Markov chain of a controlled barrage region (CBR).
 *
 * Node states: 0 = not yet decoded, 1 = decoded in the previous slot and
 * transmits in the next one, 2 = already transmitted. A CBR state is the
 * vector [S, R_1, ..., R_N, D] of node states.
 *
 * Transient Markov states are (CBR state, slot) pairs ordered by slot and
 * then lexicographically; the two absorbing aggregates (outage, success)
 * come last. For N >= 3 the same CBR state can be reached at different
 * slots, and since interference is slot dependent each occurrence is its
 * own Markov state.
 */

#include "brn/channel.hpp"
#include "brn/topology.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace brn {

inline constexpr int kDefaultMaxRelays = 8;
/// Hard ceiling set by the dense outage cache (2^(N+2) transmitter masks).
inline constexpr int kRelayCeiling = 12;

struct CbrState {
   std::vector<std::uint8_t> nodes;

   std::string to_string() const;
   friend bool operator==(const CbrState&, const CbrState&) = default;
   friend auto operator<=>(const CbrState&, const CbrState&) = default;
};

/// Bit-packed CBR state; bit i refers to node i (S = 0, D = N + 1).
struct PackedState {
   std::uint32_t ones = 0;
   std::uint32_t twos = 0;

   friend bool operator==(const PackedState&, const PackedState&) = default;
};

struct TransientState {
   PackedState packed;
   int slot = 1;
   std::uint32_t receivers = 0; ///< state-0 nodes listening in this slot
   /// Markov index reached for each decode pattern over the receivers
   /// (bit b of the pattern refers to the b-th receiver in node order).
   std::vector<int> targets;
   std::vector<int> columns; ///< distinct targets, ascending
   std::vector<int> entry; ///< pattern -> position in columns
};

/// State of the uncollapsed chain, which keeps flooding after the destination decodes.
struct FloodState {
   static constexpr int kOutage = -1;
   static constexpr int kSuccess = -2;

   PackedState packed;
   int slot = 1;
   std::uint32_t transmitters = 0; ///< state-1 nodes other than the destination
   std::uint32_t receivers = 0;
   bool destination_decoded = false;
   std::vector<int> targets; ///< per decode pattern: flood-state index, kOutage or kSuccess
};

class StateSpace {
public:
   /// All states reachable from [1, 0, ..., 0]; throws for N outside [0, max_relays].
   static StateSpace enumerate(int relays, int max_relays = kDefaultMaxRelays);

   int relays() const { return relays_; }
   int node_count() const { return relays_ + 2; }
   int frame_length() const { return relays_ + 1; }
   int destination() const { return relays_ + 1; }

   int transient_count() const { return static_cast<int>(transient_.size()); }
   int size() const { return transient_count() + 2; }
   int outage_index() const { return transient_count(); }
   int success_index() const { return transient_count() + 1; }

   const TransientState& transient(int index) const { return transient_[index]; }
   CbrState cbr_state(int index) const;
   int slot_of(int index) const { return transient_[index].slot; }

   /// Index range [slot_begin(t), slot_begin(t + 1)) holds the slot-t states.
   int slot_begin(int slot) const { return slot_begin_[slot - 1]; }

   std::optional<int> find(const CbrState& state, int slot) const;
   std::optional<int> find(PackedState state, int slot) const;

   /// Distinct CBR states collapsed into the outage / success aggregates.
   const std::vector<CbrState>& outage_members() const { return outage_members_; }
   const std::vector<CbrState>& success_members() const { return success_members_; }

   CbrState unpack(PackedState packed) const;
   PackedState pack(const CbrState& state) const;

   /// Uncollapsed chain in slot order, starting with [1, 0, ..., 0].
   const std::vector<FloodState>& flood_states() const { return flood_; }

private:
   void enumerate_flood();

   int relays_ = 0;
   std::vector<TransientState> transient_;
   std::vector<FloodState> flood_;
   std::vector<int> slot_begin_;
   std::vector<CbrState> outage_members_;
   std::vector<CbrState> success_members_;
};

/// External (co-channel) interferers seen by each node of the CBR in each slot.
class InterferenceField {
public:
   InterferenceField() = default;
   InterferenceField(int frame_length, int node_count);

   static InterferenceField none(int frame_length, int node_count)
   {
      return InterferenceField(frame_length, node_count);
   }

   int frame_length() const { return frame_length_; }
   int node_count() const { return node_count_; }

   std::span<const Interferer_d> at(int slot, int node) const;
   std::vector<Interferer_d>& at(int slot, int node);

private:
   int frame_length_ = 0;
   int node_count_ = 0;
   std::vector<std::vector<Interferer_d>> lists_;
};

/**
 * Link outage probabilities eps_j(t | transmitting set) for one CBR, cached
 * on first use. Not safe for concurrent use of one instance.
 */
class LinkOutageTable {
public:
   LinkOutageTable(const LineTopology& topology, const ChannelParamsd& params,
      InterferenceField field, double min_distance = kFarField);

   double operator()(int slot, std::uint32_t transmitters, int receiver) const;

   int node_count() const { return nodes_; }
   int frame_length() const { return field_.frame_length(); }
   const ChannelParamsd& params() const { return params_; }
   const InterferenceField& field() const { return field_; }

private:
   int nodes_;
   ChannelParamsd params_;
   InterferenceField field_;
   Eigen::MatrixXd gains_; ///< gains_(i, j): transmitter i to receiver j
   mutable std::vector<double> cache_;
};

/**
 * Canonical transition matrix [[Q, R_abs], [0, I]] in sparse row-major form.
 * Row block t (the per-slot matrix P^(t)) is built from the slot-t
 * interference field.
 */
struct TransitionMatrix {
   Eigen::SparseMatrix<double, Eigen::RowMajor> P;
   std::vector<int> slot_begin; ///< size frame_length + 1

   int frame_length() const { return static_cast<int>(slot_begin.size()) - 1; }
   int transient_count() const { return static_cast<int>(P.rows()) - 2; }

   Eigen::MatrixXd dense() const { return Eigen::MatrixXd(P); }
   Eigen::MatrixXd transient_block() const;
   Eigen::MatrixXd absorbing_block() const;

   /// Largest |row sum - 1| over all rows.
   double max_row_deviation() const;
};

/// max over slots of the Frobenius norm of the difference of the slot blocks.
double slot_frobenius_distance(const TransitionMatrix& a, const TransitionMatrix& b);

TransitionMatrix build_transition_matrix(const StateSpace& space, const LinkOutageTable& outage);

TransitionMatrix build_transition_matrix(const LineTopology& topology,
   const ChannelParamsd& params, const InterferenceField& field, const StateSpace& space,
   double min_distance = kFarField);

struct AbsorptionResult {
   Eigen::MatrixX2d B; ///< columns: outage, success
   double epsilon_cbr = 0.0;
   double success = 0.0;
};

/// B = (I - Q)^{-1} R_abs through an LU solve.
AbsorptionResult absorption(const TransitionMatrix& matrix);

struct ForwardResult {
   double epsilon_cbr = 0.0;
   double success = 0.0;
   /// Mass left in transient states after the frame (zero for valid chains).
   double residual = 0.0;
};

/// Occupancy propagated from the start state through the frame's slots.
ForwardResult propagate(const TransitionMatrix& matrix);

struct TransmitSchedule {
   Eigen::MatrixXd p; ///< p(node, slot - 1)

   static TransmitSchedule zero(int node_count, int frame_length)
   {
      return {Eigen::MatrixXd::Zero(node_count, frame_length)};
   }

   int node_count() const { return static_cast<int>(p.rows()); }
   int frame_length() const { return static_cast<int>(p.cols()); }
   double at(int node, int slot) const { return p(node, slot - 1); }
};

struct FloodOptions {
   /// Relays stop transmitting once the destination has decoded.
   bool halt_on_success = false;
};

struct FloodResult {
   TransmitSchedule schedule;
   double outage = 0.0;
   double success = 0.0;
};

/**
 * Forward propagation over the uncollapsed CBR-state chain. Relays that
 * decoded keep rebroadcasting after the destination succeeded unless
 * halt_on_success is set. The destination never transmits.
 */
FloodResult flood(const StateSpace& space, const LinkOutageTable& outage,
   const FloodOptions& options = {});

TransmitSchedule transmit_probabilities(const StateSpace& space,
   const LinkOutageTable& outage, const FloodOptions& options = {});

} // namespace brn

#include "brn/markov.hpp"

#include <Eigen/LU>
#include <Eigen/SparseLU>

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <tuple>

namespace brn {

namespace {

constexpr std::uint32_t bit(int node) { return std::uint32_t(1) << node; }

std::uint64_t key_of(PackedState s)
{
   return (std::uint64_t(s.ones) << 32) | s.twos;
}

PackedState state_of(std::uint64_t key)
{
   return {static_cast<std::uint32_t>(key >> 32), static_cast<std::uint32_t>(key)};
}

/// Probability of each decode pattern; bit b of the pattern is receiver b.
void pattern_probabilities(std::span<const double> outage, std::vector<double>& probs)
{
   probs.assign(std::size_t(1) << outage.size(), 0.0);
   probs[0] = 1.0;
   for (std::size_t b = 0; b < outage.size(); ++b) {
      const std::size_t half = std::size_t(1) << b;
      for (std::size_t s = 0; s < half; ++s) {
         probs[s | half] = probs[s] * (1.0 - outage[b]);
         probs[s] *= outage[b];
      }
   }
}

std::vector<int> nodes_in(std::uint32_t mask)
{
   std::vector<int> out;
   while (mask) {
      out.push_back(std::countr_zero(mask));
      mask &= mask - 1;
   }
   return out;
}

std::uint32_t scatter(std::uint32_t pattern, std::span<const int> receivers)
{
   std::uint32_t decoded = 0;
   for (std::size_t b = 0; b < receivers.size(); ++b)
      if (pattern & bit(static_cast<int>(b)))
         decoded |= bit(receivers[b]);
   return decoded;
}

} // namespace

std::string CbrState::to_string() const
{
   std::string s = "[";
   for (auto v : nodes)
      s += static_cast<char>('0' + v);
   return s + "]";
}

CbrState StateSpace::unpack(PackedState packed) const
{
   CbrState s;
   s.nodes.resize(static_cast<std::size_t>(node_count()));
   for (int i = 0; i < node_count(); ++i)
      s.nodes[i] = (packed.ones & bit(i)) ? 1 : (packed.twos & bit(i)) ? 2 : 0;
   return s;
}

PackedState StateSpace::pack(const CbrState& state) const
{
   if (static_cast<int>(state.nodes.size()) != node_count())
      throw InvalidArgument("markov: CBR state length does not match the relay count");
   PackedState p;
   for (int i = 0; i < node_count(); ++i) {
      if (state.nodes[i] == 1)
         p.ones |= bit(i);
      else if (state.nodes[i] == 2)
         p.twos |= bit(i);
      else if (state.nodes[i] != 0)
         throw InvalidArgument("markov: node states must be 0, 1 or 2");
   }
   return p;
}

CbrState StateSpace::cbr_state(int index) const
{
   return unpack(transient_[index].packed);
}

StateSpace StateSpace::enumerate(int relays, int max_relays)
{
   if (relays < 0 || relays > max_relays || relays > kRelayCeiling)
      throw InvalidArgument("markov: relay count " + std::to_string(relays)
         + " outside [0, " + std::to_string(std::min(max_relays, kRelayCeiling)) + "]");

   StateSpace space;
   space.relays_ = relays;
   const int nodes = relays + 2;
   const std::uint32_t all = (std::uint32_t(1) << nodes) - 1;
   const std::uint32_t dest = bit(relays + 1);

   std::vector<PackedState> layer{PackedState{bit(0), 0}};
   std::map<CbrState, int> outage_seen;
   std::map<CbrState, int> success_seen;
   for (int slot = 1; !layer.empty(); ++slot) {
      std::vector<std::pair<CbrState, PackedState>> sorted;
      for (auto s : layer)
         sorted.emplace_back(space.unpack(s), s);
      std::sort(sorted.begin(), sorted.end(),
         [](const auto& a, const auto& b) { return a.first < b.first; });

      space.slot_begin_.push_back(space.transient_count());
      std::map<std::uint64_t, bool> next;
      for (const auto& [cbr, packed] : sorted) {
         TransientState t;
         t.packed = packed;
         t.slot = slot;
         t.receivers = all & ~(packed.ones | packed.twos);
         space.transient_.push_back(std::move(t));

         const auto receivers = nodes_in(all & ~(packed.ones | packed.twos));
         for (std::uint32_t pattern = 0; pattern < (std::uint32_t(1) << receivers.size()); ++pattern) {
            const PackedState succ{scatter(pattern, receivers), packed.twos | packed.ones};
            if (succ.ones & dest)
               success_seen.emplace(space.unpack(succ), 0);
            else if (succ.ones == 0)
               outage_seen.emplace(space.unpack(succ), 0);
            else
               next.emplace(key_of(succ), true);
         }
      }
      layer.clear();
      for (const auto& [key, unused] : next)
         layer.push_back(state_of(key));
   }
   space.slot_begin_.push_back(space.transient_count());
   // Slots beyond the last populated one are empty ranges.
   while (static_cast<int>(space.slot_begin_.size()) < space.frame_length() + 1)
      space.slot_begin_.push_back(space.transient_count());

   for (auto& [s, unused] : outage_seen)
      space.outage_members_.push_back(s);
   for (auto& [s, unused] : success_seen)
      space.success_members_.push_back(s);

   for (auto& t : space.transient_) {
      const auto receivers = nodes_in(t.receivers);
      t.targets.resize(std::size_t(1) << receivers.size());
      for (std::uint32_t pattern = 0; pattern < t.targets.size(); ++pattern) {
         const PackedState succ{scatter(pattern, receivers), t.packed.twos | t.packed.ones};
         if (succ.ones & dest)
            t.targets[pattern] = space.success_index();
         else if (succ.ones == 0)
            t.targets[pattern] = space.outage_index();
         else
            t.targets[pattern] = *space.find(succ, t.slot + 1);
      }
      t.columns = t.targets;
      std::sort(t.columns.begin(), t.columns.end());
      t.columns.erase(std::unique(t.columns.begin(), t.columns.end()), t.columns.end());
      t.entry.resize(t.targets.size());
      for (std::size_t p = 0; p < t.targets.size(); ++p)
         t.entry[p] = static_cast<int>(
            std::lower_bound(t.columns.begin(), t.columns.end(), t.targets[p]) - t.columns.begin());
   }
   space.enumerate_flood();
   return space;
}

void StateSpace::enumerate_flood()
{
   const int nodes = node_count();
   const std::uint32_t all = (std::uint32_t(1) << nodes) - 1;
   const std::uint32_t dest = bit(destination());

   std::vector<PackedState> layer{PackedState{bit(0), 0}};
   for (int slot = 1; !layer.empty(); ++slot) {
      std::sort(layer.begin(), layer.end(),
         [this](PackedState a, PackedState b) { return unpack(a) < unpack(b); });
      const std::size_t first = flood_.size();
      for (auto s : layer) {
         FloodState f;
         f.packed = s;
         f.slot = slot;
         f.transmitters = s.ones & ~dest;
         f.receivers = all & ~(s.ones | s.twos);
         f.destination_decoded = ((s.ones | s.twos) & dest) != 0;
         flood_.push_back(std::move(f));
      }
      std::map<std::uint64_t, int> next;
      for (std::size_t i = first; i < flood_.size(); ++i) {
         const auto receivers = nodes_in(flood_[i].receivers);
         const PackedState s = flood_[i].packed;
         for (std::uint32_t pattern = 0; pattern < (std::uint32_t(1) << receivers.size()); ++pattern) {
            const PackedState succ{scatter(pattern, receivers), s.twos | s.ones};
            if ((succ.ones & ~dest) == 0)
               continue;
            next.emplace(key_of(succ), 0);
         }
      }
      // Successor indices follow the lexicographic order of the next layer.
      std::vector<PackedState> upcoming;
      for (const auto& [key, unused] : next)
         upcoming.push_back(state_of(key));
      std::sort(upcoming.begin(), upcoming.end(),
         [this](PackedState a, PackedState b) { return unpack(a) < unpack(b); });
      const int base = static_cast<int>(flood_.size());
      for (std::size_t k = 0; k < upcoming.size(); ++k)
         next[key_of(upcoming[k])] = base + static_cast<int>(k);

      for (std::size_t i = first; i < static_cast<std::size_t>(base); ++i) {
         const auto receivers = nodes_in(flood_[i].receivers);
         const PackedState s = flood_[i].packed;
         auto& targets = flood_[i].targets;
         targets.resize(std::size_t(1) << receivers.size());
         for (std::uint32_t pattern = 0; pattern < targets.size(); ++pattern) {
            const PackedState succ{scatter(pattern, receivers), s.twos | s.ones};
            if ((succ.ones & ~dest) == 0)
               targets[pattern] = ((succ.ones | succ.twos) & dest) ? FloodState::kSuccess : FloodState::kOutage;
            else
               targets[pattern] = next.at(key_of(succ));
         }
      }
      layer = std::move(upcoming);
   }
}

std::optional<int> StateSpace::find(PackedState state, int slot) const
{
   if (slot < 1 || slot > frame_length())
      return std::nullopt;
   const auto key = unpack(state);
   auto first = transient_.begin() + slot_begin_[slot - 1];
   auto last = transient_.begin() + slot_begin_[slot];
   auto it = std::lower_bound(first, last, key,
      [this](const TransientState& t, const CbrState& k) { return unpack(t.packed) < k; });
   if (it == last || !(it->packed == state))
      return std::nullopt;
   return static_cast<int>(it - transient_.begin());
}

std::optional<int> StateSpace::find(const CbrState& state, int slot) const
{
   return find(pack(state), slot);
}

InterferenceField::InterferenceField(int frame_length, int node_count)
   : frame_length_(frame_length), node_count_(node_count),
     lists_(static_cast<std::size_t>(frame_length) * static_cast<std::size_t>(node_count))
{
   if (frame_length < 1 || node_count < 2)
      throw InvalidArgument("interference field: need at least one slot and two nodes");
}

std::span<const Interferer_d> InterferenceField::at(int slot, int node) const
{
   return lists_[static_cast<std::size_t>((slot - 1) * node_count_ + node)];
}

std::vector<Interferer_d>& InterferenceField::at(int slot, int node)
{
   return lists_[static_cast<std::size_t>((slot - 1) * node_count_ + node)];
}

LinkOutageTable::LinkOutageTable(const LineTopology& topology, const ChannelParamsd& params,
   InterferenceField field, double min_distance)
   : nodes_(topology.node_count()), params_(params), field_(std::move(field))
{
   params_.validate();
   if (nodes_ > kRelayCeiling + 2)
      throw InvalidArgument("markov: too many nodes");
   if (field_.node_count() != nodes_ || field_.frame_length() != nodes_ - 1)
      throw InvalidArgument("markov: interference schedule does not match the topology");
   gains_.setZero(nodes_, nodes_);
   for (int i = 0; i < nodes_; ++i)
      for (int j = 0; j < nodes_; ++j)
         if (i != j) {
            const double dist = std::abs(topology.position(i) - topology.position(j));
            if (dist == 0.0)
               throw FarFieldError("markov: co-located nodes");
            gains_(i, j) = path_loss(dist, params_.alpha, min_distance);
         }
   const std::size_t entries = static_cast<std::size_t>(field_.frame_length())
      * (std::size_t(1) << nodes_) * static_cast<std::size_t>(nodes_);
   cache_.assign(entries, std::nan(""));
}

double LinkOutageTable::operator()(int slot, std::uint32_t transmitters, int receiver) const
{
   const std::size_t idx = (static_cast<std::size_t>(slot - 1) * (std::size_t(1) << nodes_) + transmitters)
         * static_cast<std::size_t>(nodes_)
      + static_cast<std::size_t>(receiver);
   double& slot_value = cache_[idx];
   if (!std::isnan(slot_value))
      return slot_value;

   double buf[kRelayCeiling + 2];
   std::size_t n = 0;
   for (std::uint32_t m = transmitters; m; m &= m - 1)
      buf[n++] = gains_(std::countr_zero(m), receiver);
   slot_value = outage_probability<double>(std::span<const double>(buf, n),
      field_.at(slot, receiver), params_);
   return slot_value;
}

Eigen::MatrixXd TransitionMatrix::transient_block() const
{
   const int t = transient_count();
   return Eigen::MatrixXd(P).topLeftCorner(t, t);
}

Eigen::MatrixXd TransitionMatrix::absorbing_block() const
{
   const int t = transient_count();
   return Eigen::MatrixXd(P).topRightCorner(t, 2);
}

double TransitionMatrix::max_row_deviation() const
{
   double worst = 0.0;
   for (int r = 0; r < P.outerSize(); ++r) {
      double sum = 0.0;
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(P, r); it; ++it)
         sum += it.value();
      worst = std::max(worst, std::abs(sum - 1.0));
   }
   return worst;
}

double slot_frobenius_distance(const TransitionMatrix& a, const TransitionMatrix& b)
{
   if (a.P.rows() != b.P.rows() || a.slot_begin != b.slot_begin)
      throw InvalidArgument("markov: comparing matrices of different chains");
   const bool same_pattern = a.P.isCompressed() && b.P.isCompressed()
      && a.P.nonZeros() == b.P.nonZeros()
      && std::equal(a.P.outerIndexPtr(), a.P.outerIndexPtr() + a.P.outerSize() + 1, b.P.outerIndexPtr())
      && std::equal(a.P.innerIndexPtr(), a.P.innerIndexPtr() + a.P.nonZeros(), b.P.innerIndexPtr());
   double worst = 0.0;
   for (int t = 0; t + 1 < static_cast<int>(a.slot_begin.size()); ++t) {
      const int first = a.slot_begin[t];
      const int rows = a.slot_begin[t + 1] - first;
      if (rows == 0)
         continue;
      double norm = 0.0;
      if (same_pattern) {
         const auto lo = a.P.outerIndexPtr()[first];
         const auto hi = a.P.outerIndexPtr()[first + rows];
         double sum = 0.0;
         for (auto k = lo; k < hi; ++k) {
            const double diff = a.P.valuePtr()[k] - b.P.valuePtr()[k];
            sum += diff * diff;
         }
         norm = std::sqrt(sum);
      } else {
         const Eigen::SparseMatrix<double, Eigen::RowMajor> diff
            = a.P.middleRows(first, rows) - b.P.middleRows(first, rows);
         norm = diff.norm();
      }
      worst = std::max(worst, norm);
   }
   return worst;
}

TransitionMatrix build_transition_matrix(const StateSpace& space, const LinkOutageTable& outage)
{
   if (outage.node_count() != space.node_count())
      throw InvalidArgument("markov: outage table does not match the state space");

   const int tau = space.transient_count();
   std::size_t nonzeros = 2;
   for (int i = 0; i < tau; ++i)
      nonzeros += space.transient(i).columns.size();

   TransitionMatrix m;
   m.P.resize(space.size(), space.size());
   m.P.reserve(static_cast<Eigen::Index>(nonzeros));
   std::vector<double> eps;
   std::vector<double> probs;
   std::vector<double> row;
   for (int i = 0; i < tau; ++i) {
      const auto& t = space.transient(i);
      eps.clear();
      for (std::uint32_t mask = t.receivers; mask; mask &= mask - 1)
         eps.push_back(outage(t.slot, t.packed.ones, std::countr_zero(mask)));
      pattern_probabilities(eps, probs);
      row.assign(t.columns.size(), 0.0);
      for (std::size_t s = 0; s < probs.size(); ++s)
         row[static_cast<std::size_t>(t.entry[s])] += probs[s];
      m.P.startVec(i);
      for (std::size_t c = 0; c < row.size(); ++c)
         m.P.insertBack(i, t.columns[c]) = row[c];
   }
   m.P.startVec(space.outage_index());
   m.P.insertBack(space.outage_index(), space.outage_index()) = 1.0;
   m.P.startVec(space.success_index());
   m.P.insertBack(space.success_index(), space.success_index()) = 1.0;
   m.P.finalize();

   for (int slot = 1; slot <= space.frame_length() + 1; ++slot)
      m.slot_begin.push_back(slot <= space.frame_length() ? space.slot_begin(slot) : tau);
   return m;
}

TransitionMatrix build_transition_matrix(const LineTopology& topology,
   const ChannelParamsd& params, const InterferenceField& field, const StateSpace& space,
   double min_distance)
{
   if (topology.relay_count() != space.relays())
      throw InvalidArgument("markov: topology relay count does not match the state space");
   return build_transition_matrix(space, LinkOutageTable(topology, params, field, min_distance));
}

namespace {
constexpr int kDenseLimit = 1500;
}

AbsorptionResult absorption(const TransitionMatrix& matrix)
{
   const int tau = matrix.transient_count();
   Eigen::MatrixX2d B(tau, 2);
   if (tau <= kDenseLimit) {
      const Eigen::MatrixXd P = matrix.dense();
      const Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(tau, tau) - P.topLeftCorner(tau, tau);
      B = lhs.partialPivLu().solve(P.topRightCorner(tau, 2));
   } else {
      using Sparse = Eigen::SparseMatrix<double>;
      Sparse identity(tau, tau);
      identity.setIdentity();
      const Sparse P = matrix.P;
      const Sparse lhs = identity - Sparse(P.topLeftCorner(tau, tau));
      Eigen::SparseLU<Sparse> lu(lhs);
      if (lu.info() != Eigen::Success)
         throw Error("absorption: singular I - Q");
      const Eigen::MatrixXd rhs = Eigen::MatrixXd(P.topRightCorner(tau, 2));
      B = lu.solve(rhs);
   }
   if (!B.allFinite() || ((B.rowwise().sum().array() - 1.0).abs() > 1e-6).any())
      throw Error("absorption: singular I - Q");

   AbsorptionResult r;
   r.B = std::move(B);
   if (tau > 0) {
      r.epsilon_cbr = r.B(0, 0);
      r.success = r.B(0, 1);
   }
   return r;
}

ForwardResult propagate(const TransitionMatrix& matrix)
{
   const int tau = matrix.transient_count();
   Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(matrix.P.rows());
   v(0) = 1.0;
   for (int slot = 0; slot < matrix.frame_length(); ++slot)
      v = v * matrix.P;
   ForwardResult r;
   r.epsilon_cbr = v(tau);
   r.success = v(tau + 1);
   r.residual = v.head(tau).sum();
   return r;
}

FloodResult flood(const StateSpace& space, const LinkOutageTable& outage, const FloodOptions& options)
{
   if (outage.node_count() != space.node_count())
      throw InvalidArgument("markov: outage table does not match the state space");

   const auto& states = space.flood_states();
   FloodResult r;
   r.schedule = TransmitSchedule::zero(space.node_count(), space.frame_length());
   std::vector<double> mass(states.size(), 0.0);
   mass[0] = 1.0;
   std::vector<double> eps;
   std::vector<double> probs;
   for (std::size_t i = 0; i < states.size(); ++i) {
      const double m = mass[i];
      if (m == 0.0)
         continue;
      const auto& s = states[i];
      if (options.halt_on_success && s.destination_decoded) {
         r.success += m;
         continue;
      }
      for (std::uint32_t tx = s.transmitters; tx; tx &= tx - 1)
         r.schedule.p(std::countr_zero(tx), s.slot - 1) += m;
      eps.clear();
      for (std::uint32_t rx = s.receivers; rx; rx &= rx - 1)
         eps.push_back(outage(s.slot, s.transmitters, std::countr_zero(rx)));
      pattern_probabilities(eps, probs);
      for (std::size_t p = 0; p < probs.size(); ++p) {
         const int target = s.targets[p];
         const double w = m * probs[p];
         if (target == FloodState::kOutage)
            r.outage += w;
         else if (target == FloodState::kSuccess)
            r.success += w;
         else
            mass[static_cast<std::size_t>(target)] += w;
      }
   }
   return r;
}

TransmitSchedule transmit_probabilities(const StateSpace& space, const LinkOutageTable& outage,
   const FloodOptions& options)
{
   return flood(space, outage, options).schedule;
}

} // namespace brn

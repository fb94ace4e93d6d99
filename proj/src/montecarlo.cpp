#include "brn/montecarlo.hpp"

#include "brn/parallel.hpp"
#include "brn/rng.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <vector>

namespace brn {

namespace {

constexpr std::uint64_t kShardTrials = 1 << 15;

struct Tally {
   std::uint64_t failures = 0;
   Eigen::MatrixXd transmissions;
};

template <typename TrialFn>
SimEstimate run_sharded(std::uint64_t trials, int nodes, int frame, TrialFn&& trial)
{
   if (trials < 1)
      throw InvalidArgument("montecarlo: need at least one trial");
   const auto shards = static_cast<std::int64_t>((trials + kShardTrials - 1) / kShardTrials);
   std::vector<Tally> tallies(static_cast<std::size_t>(shards));
   parallel_shards(shards, [&](std::int64_t shard) {
      Tally& tally = tallies[static_cast<std::size_t>(shard)];
      tally.transmissions = Eigen::MatrixXd::Zero(nodes, frame);
      const std::uint64_t first = static_cast<std::uint64_t>(shard) * kShardTrials;
      const std::uint64_t last = std::min(trials, first + kShardTrials);
      for (std::uint64_t t = first; t < last; ++t)
         trial(t, tally);
   });
   std::uint64_t failures = 0;
   Eigen::MatrixXd transmissions = Eigen::MatrixXd::Zero(nodes, frame);
   for (const auto& t : tallies) {
      failures += t.failures;
      transmissions += t.transmissions;
   }
   SimEstimate est = SimEstimate::from_counts(failures, trials);
   est.transmit_frequency = transmissions / static_cast<double>(trials);
   return est;
}

} // namespace

std::string to_string(SimMode mode)
{
   return mode == SimMode::sinr_level ? "sinr_level" : "transition_level";
}

SimMode parse_sim_mode(const std::string& text)
{
   if (text == "sinr_level")
      return SimMode::sinr_level;
   if (text == "transition_level")
      return SimMode::transition_level;
   throw InvalidArgument("unknown simulation mode '" + text + "'");
}

SimEstimate SimEstimate::from_counts(std::uint64_t failures, std::uint64_t trials)
{
   SimEstimate e;
   e.trials = trials;
   e.failures = failures;
   e.epsilon_hat = static_cast<double>(failures) / static_cast<double>(trials);
   e.standard_error = std::sqrt(e.epsilon_hat * (1.0 - e.epsilon_hat) / static_cast<double>(trials));
   return e;
}

SimEstimate simulate_outage(const LinkSetd& links, const ChannelParamsd& params,
   std::uint64_t trials, std::uint64_t seed)
{
   detail::check_inputs<double>(links.barraging_gains, links.interferers);
   params.validate();
   const double noise = 1.0 / params.gamma;
   return run_sharded(trials, 1, 1, [&](std::uint64_t trial, Tally& tally) {
      SplitMix64 rng(seed, trial);
      double signal = 0.0;
      for (double g : links.barraging_gains)
         signal += rng.exponential() * g;
      double interference = 0.0;
      for (const auto& i : links.interferers) {
         const bool active = rng.bernoulli(i.probability);
         const double fade = rng.exponential();
         if (active)
            interference += fade * i.gain;
      }
      if (signal <= params.beta * (noise + interference))
         ++tally.failures;
   });
}

namespace {

constexpr int kMaxNodes = kRelayCeiling + 2;

SimEstimate simulate_sinr_level(const CascadeScenario& scenario, const SimConfig& config)
{
   const int nodes = scenario.cbr.node_count();
   const int frame = nodes - 1;
   const int dest = nodes - 1;
   const auto& x = scenario.cbr.positions();
   const double d = scenario.zone_length();
   const double alpha = scenario.params.alpha;
   const double beta = scenario.params.beta;
   const double noise = 1.0 / scenario.params.gamma;

   int max_zone = 0;
   std::vector<int> zone_steps;
   for (double o : scenario.offsets) {
      const int k = static_cast<int>(std::lround(o / (2.0 * d)));
      zone_steps.push_back(k);
      max_zone = std::max(max_zone, std::abs(k));
   }
   const int copies = scenario.offsets.empty() ? 1
      : config.ring_copies > 0                 ? config.ring_copies
                                               : 2 * max_zone + 1;
   if (copies < 2 * max_zone + 1)
      throw InvalidArgument("montecarlo: ring too small for the interfering zones");

   Eigen::MatrixXd own(nodes, nodes);
   for (int i = 0; i < nodes; ++i)
      for (int j = 0; j < nodes; ++j)
         own(i, j) = i == j ? 0.0 : path_loss(std::abs(x(i) - x(j)), alpha, scenario.min_distance);
   // cross[o](i, j): node i of the copy at offset o to receiver j.
   std::vector<Eigen::MatrixXd> cross;
   for (double o : scenario.offsets) {
      Eigen::MatrixXd g(nodes, nodes);
      for (int i = 0; i < nodes; ++i)
         for (int j = 0; j < nodes; ++j)
            g(i, j) = path_loss(std::abs(x(j) - (x(i) + o)), alpha, scenario.min_distance);
      cross.push_back(std::move(g));
   }

   return run_sharded(config.trials, nodes, frame, [&](std::uint64_t trial, Tally& tally) {
      SplitMix64 rng(config.seed, trial);
      std::vector<std::array<std::uint8_t, kMaxNodes>> state(static_cast<std::size_t>(copies));
      std::vector<std::uint32_t> tx(static_cast<std::size_t>(copies));
      for (auto& s : state) {
         s.fill(0);
         s[0] = 1;
      }
      for (int slot = 1; slot <= frame; ++slot) {
         bool any = false;
         for (int c = 0; c < copies; ++c) {
            std::uint32_t mask = 0;
            const bool halted = scenario.halt_on_success && state[c][dest] != 0;
            if (!halted)
               for (int i = 0; i < dest; ++i)
                  if (state[c][i] == 1)
                     mask |= std::uint32_t(1) << i;
            tx[c] = mask;
            any = any || mask != 0;
         }
         if (!any)
            break;
         for (std::uint32_t m = tx[0]; m; m &= m - 1)
            tally.transmissions(std::countr_zero(m), slot - 1) += 1.0;

         for (int c = 0; c < copies; ++c) {
            auto next = state[c];
            for (auto& s : next)
               if (s == 1)
                  s = 2;
            if (tx[c] != 0) {
               for (int j = 0; j < nodes; ++j) {
                  if (state[c][j] != 0)
                     continue;
                  double signal = 0.0;
                  for (std::uint32_t m = tx[c]; m; m &= m - 1)
                     signal += rng.exponential() * own(std::countr_zero(m), j);
                  double interference = 0.0;
                  for (std::size_t o = 0; o < cross.size(); ++o) {
                     const int other = ((c + zone_steps[o]) % copies + copies) % copies;
                     for (std::uint32_t m = tx[other]; m; m &= m - 1)
                        interference += rng.exponential() * cross[o](std::countr_zero(m), j);
                  }
                  if (signal > beta * (noise + interference))
                     next[j] = 1;
               }
            }
            state[c] = next;
         }
      }
      if (state[0][dest] == 0)
         ++tally.failures;
   });
}

SimEstimate simulate_transition_level(const CascadeScenario& scenario, const SimConfig& config,
   const TransmitSchedule& copies_schedule)
{
   const int nodes = scenario.cbr.node_count();
   const int frame = nodes - 1;
   const int dest = nodes - 1;
   const TransmitSchedule schedule = copies_schedule.p.size() == 0
      ? TransmitSchedule::zero(nodes, frame)
      : copies_schedule;
   const LinkOutageTable table(scenario.cbr, scenario.params,
      interference_view(scenario, schedule), scenario.min_distance);
   // Warm every entry so shards only read the table.
   for (int slot = 1; slot <= frame; ++slot)
      for (std::uint32_t mask = 1; mask < (std::uint32_t(1) << dest); ++mask)
         for (int j = 1; j < nodes; ++j)
            if (!(mask & (std::uint32_t(1) << j)))
               table(slot, mask, j);

   return run_sharded(config.trials, nodes, frame, [&](std::uint64_t trial, Tally& tally) {
      SplitMix64 rng(config.seed, trial);
      std::array<std::uint8_t, kMaxNodes> state{};
      state[0] = 1;
      for (int slot = 1; slot <= frame; ++slot) {
         std::uint32_t mask = 0;
         if (!(scenario.halt_on_success && state[dest] != 0))
            for (int i = 0; i < dest; ++i)
               if (state[i] == 1)
                  mask |= std::uint32_t(1) << i;
         if (mask == 0)
            break;
         for (std::uint32_t m = mask; m; m &= m - 1)
            tally.transmissions(std::countr_zero(m), slot - 1) += 1.0;
         auto next = state;
         for (auto& s : next)
            if (s == 1)
               s = 2;
         for (int j = 0; j < nodes; ++j)
            if (state[j] == 0 && rng.uniform() >= table(slot, mask, j))
               next[j] = 1;
         state = next;
      }
      if (state[dest] == 0)
         ++tally.failures;
   });
}

} // namespace

SimEstimate simulate_cbr(const CascadeScenario& scenario, const SimConfig& config,
   const TransmitSchedule& copies_schedule)
{
   scenario.validate();
   if (scenario.cbr.node_count() > kMaxNodes)
      throw InvalidArgument("montecarlo: too many relays");
   return config.mode == SimMode::sinr_level
      ? simulate_sinr_level(scenario, config)
      : simulate_transition_level(scenario, config, copies_schedule);
}

} // namespace brn

#include "brn/interference.hpp"

#include <cmath>

namespace brn {

CascadeScenario CascadeScenario::cascade(LineTopology cbr, ChannelParamsd params, int zones)
{
   if (zones < 0)
      throw InvalidArgument("cascade: negative zone count");
   CascadeScenario s{std::move(cbr), params, {}};
   const double d = s.zone_length();
   for (int k = 1; k <= zones; ++k) {
      s.offsets.push_back(-2.0 * k * d);
      s.offsets.push_back(2.0 * k * d);
   }
   return s;
}

CascadeScenario CascadeScenario::standalone(LineTopology cbr, ChannelParamsd params)
{
   return {std::move(cbr), params, {}};
}

void CascadeScenario::validate() const
{
   params.validate();
   const double d = zone_length();
   if (!(d > 0.0))
      throw InvalidArgument("cascade: zone length must be positive");
   for (double o : offsets) {
      const double k = o / (2.0 * d);
      if (o == 0.0 || std::abs(k - std::round(k)) > 1e-9)
         throw InvalidArgument("cascade: offsets must be non-zero multiples of 2d");
   }
}

InterferenceField interference_view(const CascadeScenario& scenario, const TransmitSchedule& schedule)
{
   scenario.validate();
   const auto& x = scenario.cbr.positions();
   const int nodes = scenario.cbr.node_count();
   const int frame = nodes - 1;
   if (schedule.node_count() != nodes || schedule.frame_length() != frame)
      throw InvalidArgument("interference_view: schedule does not match the CBR");

   InterferenceField field(frame, nodes);
   for (int j = 0; j < nodes; ++j) {
      for (double offset : scenario.offsets) {
         for (int i = 0; i < nodes; ++i) {
            const double gain = path_loss(std::abs(x(j) - (x(i) + offset)),
               scenario.params.alpha, scenario.min_distance);
            for (int t = 1; t <= frame; ++t)
               field.at(t, j).push_back({gain, schedule.at(i, t)});
         }
      }
   }
   return field;
}

FixedPointReport fixed_point(const CascadeScenario& scenario, const StateSpace& space,
   double xi, int max_iters)
{
   if (!(xi > 0.0))
      throw InvalidArgument("fixed_point: tolerance must be positive");
   if (max_iters < 1)
      throw InvalidArgument("fixed_point: need at least one iteration");
   if (space.relays() != scenario.cbr.relay_count())
      throw InvalidArgument("fixed_point: state space does not match the CBR");
   scenario.validate();

   const int nodes = scenario.cbr.node_count();
   const FloodOptions flood_options{scenario.halt_on_success};

   FixedPointReport report;
   auto schedule = TransmitSchedule::zero(nodes, space.frame_length());
   TransitionMatrix previous;
   for (int iter = 0; iter <= max_iters; ++iter) {
      const LinkOutageTable outage(scenario.cbr, scenario.params,
         interference_view(scenario, schedule), scenario.min_distance);
      TransitionMatrix matrix = build_transition_matrix(space, outage);
      const ForwardResult forward = propagate(matrix);
      report.trace.push_back(forward.epsilon_cbr);
      schedule = transmit_probabilities(space, outage, flood_options);

      bool done = false;
      if (iter > 0) {
         const double dist = slot_frobenius_distance(matrix, previous);
         report.distances.push_back(dist);
         done = dist < xi;
      }
      // Without copies the seed already is the fixed point.
      if (scenario.offsets.empty())
         done = true;
      previous = std::move(matrix);
      if (done) {
         report.converged = true;
         break;
      }
   }
   report.iterations_used = static_cast<int>(report.trace.size());
   report.schedule = std::move(schedule);
   report.matrix = std::move(previous);
   return report;
}

FixedPointReport fixed_point(const CascadeScenario& scenario, double xi, int max_iters)
{
   return fixed_point(scenario, StateSpace::enumerate(scenario.cbr.relay_count(),
                                   std::max(kDefaultMaxRelays, scenario.cbr.relay_count())),
      xi, max_iters);
}

} // namespace brn

#include "brn/markov.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

using namespace brn;

namespace {

using testing::Nodes;
using testing::link_outage;
using testing::path_sum;

// Reachable (state, slot) pairs that are neither outage nor success, by brute force.
std::set<std::pair<Nodes, int>> reachable(int relays)
{
   const int n = relays + 2;
   std::set<std::pair<Nodes, int>> seen;
   std::vector<std::pair<Nodes, int>> frontier;
   Nodes start(n, 0);
   start[0] = 1;
   frontier.push_back({start, 1});
   while (!frontier.empty()) {
      auto [s, slot] = frontier.back();
      frontier.pop_back();
      if (!seen.insert({s, slot}).second)
         continue;
      Nodes idle;
      for (int i = 0; i < n; ++i)
         if (s[i] == 0)
            idle.push_back(i);
      for (int pattern = 0; pattern < (1 << idle.size()); ++pattern) {
         Nodes next = s;
         for (int& v : next)
            if (v == 1)
               v = 2;
         bool any = false;
         for (std::size_t b = 0; b < idle.size(); ++b)
            if (pattern & (1 << b)) {
               next[idle[b]] = 1;
               any = true;
            }
         if (next[n - 1] == 1 || !any)
            continue;
         frontier.push_back({next, slot + 1});
      }
   }
   return seen;
}

InterferenceField some_interference(int relays, double scale)
{
   InterferenceField field(relays + 1, relays + 2);
   for (int t = 1; t <= relays + 1; ++t)
      for (int j = 0; j < relays + 2; ++j) {
         field.at(t, j).push_back({scale * (1 + j) / (3.0 + t), 0.3 + 0.1 * t});
         field.at(t, j).push_back({scale * 0.5, 0.8});
      }
   return field;
}

const ChannelParamsd kChannel{10.0, 3.5, 3.9810717055349722, 1.0};

} // namespace

TEST_SUITE("markov") {

TEST_CASE("state counts match brute-force reachability")
{
   const int expected[] = {1, 2, 6, 23, 92, 357, 1330, 4783, 16728};
   for (int n = 0; n <= 8; ++n) {
      const auto space = StateSpace::enumerate(n);
      CHECK(space.transient_count() == expected[n]);
      const auto oracle = reachable(n);
      REQUIRE(static_cast<int>(oracle.size()) == space.transient_count());
      for (const auto& [s, slot] : oracle) {
         CbrState cbr;
         cbr.nodes.assign(s.begin(), s.end());
         CHECK(space.find(cbr, slot).has_value());
      }
   }
}

TEST_CASE("two relays: six transient states, four outage and nine success members")
{
   const auto space = StateSpace::enumerate(2);
   CHECK(space.transient_count() == 6);
   CHECK(space.size() == 8);
   CHECK(space.outage_members().size() == 4);
   CHECK(space.success_members().size() == 9);
   CHECK(space.cbr_state(0).to_string() == "[1000]");
}

TEST_CASE("small state spaces")
{
   const auto zero = StateSpace::enumerate(0);
   CHECK(zero.transient_count() == 1);
   const auto one = StateSpace::enumerate(1);
   REQUIRE(one.transient_count() == 2);
   CHECK(one.cbr_state(0).nodes == std::vector<std::uint8_t>{1, 0, 0});
   CHECK(one.cbr_state(1).nodes == std::vector<std::uint8_t>{2, 1, 0});
   CHECK_THROWS_AS(StateSpace::enumerate(-1), InvalidArgument);
   CHECK_THROWS_AS(StateSpace::enumerate(9), InvalidArgument);
}

TEST_CASE("single link chain")
{
   const auto space = StateSpace::enumerate(0);
   const LineTopology topo = LineTopology::equally_spaced(0, 1.7);
   const auto m = build_transition_matrix(topo, kChannel, InterferenceField::none(1, 2), space);
   const double eps = 1.0 - std::exp(-kChannel.beta / (path_loss(1.7, 3.5) * kChannel.gamma));
   const auto p = m.dense();
   CHECK(p(0, 0) == 0.0);
   CHECK(p(0, 1) == doctest::Approx(eps).epsilon(1e-12));
   CHECK(p(0, 2) == doctest::Approx(1.0 - eps).epsilon(1e-12));
   CHECK(absorption(m).epsilon_cbr == doctest::Approx(eps).epsilon(1e-12));
}

TEST_CASE("one relay matches the hand formula")
{
   const auto space = StateSpace::enumerate(1);
   for (double length : {2.0, 2.6, 4.0}) {
      const LineTopology topo = LineTopology::equally_spaced(1, length);
      const auto m = build_transition_matrix(topo, kChannel, InterferenceField::none(2, 3), space);
      auto eps = [&](double dist) { return 1.0 - std::exp(-kChannel.beta / (path_loss(dist, 3.5) * kChannel.gamma)); };
      const double sd = eps(length);
      const double sr = eps(length / 2);
      const double rd = eps(length / 2);
      CHECK(std::abs(absorption(m).epsilon_cbr - (sd * sr + sd * (1.0 - sr) * rd)) <= 1e-12);
   }
}

TEST_CASE("two-relay transition probabilities are products of link outcomes")
{
   // [2100] -> [2210]: R2 decodes R1's broadcast while D does not.
   const auto space = StateSpace::enumerate(2);
   const LineTopology topo = LineTopology::equally_spaced(2, 3.0);
   const InterferenceField none = InterferenceField::none(3, 4);
   const auto m = build_transition_matrix(topo, kChannel, none, space);
   const auto from = space.find(CbrState{{2, 1, 0, 0}}, 2);
   const auto to = space.find(CbrState{{2, 2, 1, 0}}, 3);
   REQUIRE(from.has_value());
   REQUIRE(to.has_value());
   const Nodes s{2, 1, 0, 0};
   const double r2 = link_outage(topo, kChannel, none, s, 2, 2);
   const double d = link_outage(topo, kChannel, none, s, 2, 3);
   CHECK(m.dense()(*from, *to) == doctest::Approx((1.0 - r2) * d).epsilon(1e-12));
   CHECK(m.dense()(*from, space.outage_index()) == doctest::Approx(r2 * d).epsilon(1e-12));

   // joint broadcast of S and R1 combines both powers
   const LinkOutageTable table(topo, kChannel, none);
   const Nodes joint{1, 1, 0, 0};
   CHECK(table(2, 0b0011, 2) == doctest::Approx(link_outage(topo, kChannel, none, joint, 2, 2)).epsilon(1e-12));
   CHECK(table(2, 0b0011, 3) == doctest::Approx(link_outage(topo, kChannel, none, joint, 2, 3)).epsilon(1e-12));
   CHECK(table(2, 0b0011, 3) < table(2, 0b0010, 3));
}

TEST_CASE("fundamental matrix, forward propagation and path sum agree")
{
   for (int n = 0; n <= 3; ++n)
      for (double scale : {0.0, 0.2}) {
         const auto space = StateSpace::enumerate(n);
         const LineTopology topo = LineTopology::equally_spaced(n, 1.0 + n);
         const auto field = some_interference(n, scale);
         const auto m = build_transition_matrix(topo, kChannel, field, space);
         Nodes start(n + 2, 0);
         start[0] = 1;
         double outage = 0.0;
         double success = 0.0;
         path_sum(topo, kChannel, field, start, 1, 1.0, outage, success);
         const auto a = absorption(m);
         const auto f = propagate(m);
         CHECK(std::abs(a.epsilon_cbr - outage) <= 1e-10);
         CHECK(std::abs(f.epsilon_cbr - outage) <= 1e-10);
         CHECK(std::abs(a.success - success) <= 1e-10);
         CHECK(std::abs(f.residual) <= 1e-12);
      }
}

TEST_CASE("dense and sparse solves agree with propagation on larger chains")
{
   for (int n : {5, 6}) {
      const auto space = StateSpace::enumerate(n);
      const LineTopology topo = LineTopology::equally_spaced(n, 1.0 + n);
      const auto m = build_transition_matrix(topo, kChannel, some_interference(n, 0.1), space);
      CHECK(m.max_row_deviation() <= 1e-12);
      CHECK(std::abs(absorption(m).epsilon_cbr - propagate(m).epsilon_cbr) <= 1e-10);
      const auto b = absorption(m).B;
      CHECK((b.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-10);
   }
}

TEST_CASE("perfect links always succeed")
{
   ChannelParamsd c = kChannel;
   c.beta = 0.0;
   const auto space = StateSpace::enumerate(2);
   const auto m = build_transition_matrix(LineTopology::equally_spaced(2, 3.0), c, InterferenceField::none(3, 4), space);
   CHECK(m.dense()(0, space.success_index()) == 1.0);
   CHECK(absorption(m).epsilon_cbr == 0.0);
}

TEST_CASE("transmit schedule")
{
   const auto space = StateSpace::enumerate(2);
   const LineTopology topo = LineTopology::equally_spaced(2, 3.0);
   const LinkOutageTable table(topo, kChannel, InterferenceField::none(3, 4));
   const auto s = transmit_probabilities(space, table);
   CHECK(s.at(0, 1) == 1.0);
   CHECK(s.at(0, 2) == 0.0);
   CHECK(s.at(0, 3) == 0.0);
   CHECK((s.p.row(3).array() == 0.0).all()); // destination never relays
   CHECK((s.p.array() >= 0.0).all());
   CHECK((s.p.array() <= 1.0).all());

   // relay 1 transmits in slot 2 iff it decoded the source in slot 1
   const Nodes start{1, 0, 0, 0};
   CHECK(s.at(1, 2) == doctest::Approx(1.0 - link_outage(topo, kChannel, InterferenceField::none(3, 4), start, 1, 1)));

   // perfect links: the relay rebroadcasts although the destination already decoded
   ChannelParamsd perfect = kChannel;
   perfect.beta = 0.0;
   const auto one = StateSpace::enumerate(1);
   const LinkOutageTable sure(LineTopology::equally_spaced(1, 2.0), perfect, InterferenceField::none(2, 3));
   CHECK(transmit_probabilities(one, sure).at(1, 2) == 1.0);
   CHECK(transmit_probabilities(one, sure, FloodOptions{true}).at(1, 2) == 0.0);
}

}

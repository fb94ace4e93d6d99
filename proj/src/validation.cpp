#include "brn/commands.hpp"

#include "brn/csv.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

namespace brn {

namespace {

std::string fmt(double v)
{
   return format_number(v);
}

LinkSetd random_links(SplitMix64& rng, int max_barraging, int max_interferers)
{
   LinkSetd links;
   const int k = 1 + static_cast<int>(rng.uniform() * max_barraging);
   const int m = static_cast<int>(rng.uniform() * (max_interferers + 1));
   for (int i = 0; i < k; ++i)
      links.barraging_gains.push_back(path_loss(0.5 + 2.5 * rng.uniform(), 3.5, 0.1));
   for (int i = 0; i < m; ++i)
      links.interferers.push_back({path_loss(1.0 + 4.0 * rng.uniform(), 3.5, 0.1), rng.uniform()});
   return links;
}

/// Relays drawn uniformly inside (0, d), at least d / (3N) apart.
LineTopology random_topology(int relays, double length, SplitMix64& rng)
{
   return LineTopology(initial_placement(relays, length, rng), length);
}

/// Sums the probability of every decode history of the collapsed flood.
void path_sum(const LinkOutageTable& table, std::vector<int>& state, int slot, double prob, double& outage,
   double& success)
{
   const int nodes = static_cast<int>(state.size());
   const int dest = nodes - 1;
   if (state[dest] != 0) {
      success += prob;
      return;
   }
   std::uint32_t mask = 0;
   std::vector<int> receivers;
   for (int i = 0; i < nodes; ++i) {
      if (state[i] == 1)
         mask |= std::uint32_t(1) << i;
      if (state[i] == 0)
         receivers.push_back(i);
   }
   if (mask == 0) {
      outage += prob;
      return;
   }
   const auto saved = state;
   for (std::uint32_t pattern = 0; pattern < (std::uint32_t(1) << receivers.size()); ++pattern) {
      double p = prob;
      for (int i = 0; i < nodes; ++i)
         if (state[i] == 1)
            state[i] = 2;
      for (std::size_t b = 0; b < receivers.size(); ++b) {
         const double eps = table(slot, mask, receivers[b]);
         if (pattern & (std::uint32_t(1) << b)) {
            p *= 1.0 - eps;
            state[receivers[b]] = 1;
         } else {
            p *= eps;
         }
      }
      path_sum(table, state, slot + 1, p, outage, success);
      state = saved;
   }
}

struct Suite {
   std::vector<CheckResult> checks;
   std::ostream* log = nullptr;

   void run(const std::string& name, const std::function<std::pair<bool, std::string>()>& body)
   {
      CheckResult r{name, false, {}};
      try {
         std::tie(r.passed, r.detail) = body();
      } catch (const std::exception& e) {
         r.passed = false;
         r.detail = std::string("exception: ") + e.what();
      }
      if (log)
         *log << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
      checks.push_back(std::move(r));
   }
};

/// Cascades used by the chain-level checks: random placements for N = 0..4 with CCI.
std::vector<CascadeScenario> sample_cascades(const Scenario& scenario, SplitMix64& rng)
{
   std::vector<CascadeScenario> out;
   const ChannelParamsd params = scenario.channel.params();
   for (int n = 0; n <= 4; ++n) {
      auto c = CascadeScenario::cascade(random_topology(n, 1.5 + (n + 1) * rng.uniform(), rng), params, 1);
      c.min_distance = 0.1;
      out.push_back(std::move(c));
   }
   out.push_back(scenario.cascade());
   return out;
}

} // namespace

std::vector<CheckResult> run_validation(const Scenario& scenario, const CommandContext& ctx)
{
   Suite suite;
   suite.log = ctx.quiet ? nullptr : ctx.log;
   const auto& v = scenario.validate;
   const ChannelParamsd params = scenario.channel.params();

   suite.run("row_stochasticity", [&] {
      SplitMix64 rng(v.seed, 1);
      double worst = 0.0;
      for (const auto& c : sample_cascades(scenario, rng)) {
         const auto report = fixed_point(c, cached_state_space(c.cbr.relay_count()));
         worst = std::max(worst, report.matrix.max_row_deviation());
         if ((report.matrix.P.coeffs().array() < 0.0).any())
            return std::pair{false, std::string("negative transition probability")};
      }
      return std::pair{worst <= 1e-12, "max |row sum - 1| = " + fmt(worst)};
   });

   suite.run("absorption_normalization", [&] {
      SplitMix64 rng(v.seed, 2);
      double worst = 0.0;
      for (const auto& c : sample_cascades(scenario, rng)) {
         const auto report = fixed_point(c, cached_state_space(c.cbr.relay_count()));
         const auto a = absorption(report.matrix);
         if (a.B.size() > 0)
            worst = std::max(worst, (a.B.rowwise().sum().array() - 1.0).abs().maxCoeff());
      }
      return std::pair{worst <= 1e-10, "max |B row sum - 1| = " + fmt(worst)};
   });

   suite.run("markov_oracle_agreement", [&] {
      SplitMix64 rng(v.seed, 3);
      double worst = 0.0;
      for (int n = 0; n <= 2; ++n) {
         auto c = CascadeScenario::cascade(random_topology(n, 1.5 + 2.0 * rng.uniform(), rng), params, 1);
         c.min_distance = 0.1;
         const auto& space = cached_state_space(n);
         const auto report = fixed_point(c, space);
         const LinkOutageTable table(c.cbr, c.params, interference_view(c, report.schedule), c.min_distance);
         const auto m = build_transition_matrix(space, table);
         const double fundamental = absorption(m).epsilon_cbr;
         const double forward = propagate(m).epsilon_cbr;
         std::vector<int> state(static_cast<std::size_t>(n + 2), 0);
         state[0] = 1;
         double outage = 0.0;
         double success = 0.0;
         path_sum(table, state, 1, 1.0, outage, success);
         worst = std::max({worst, std::abs(fundamental - forward), std::abs(fundamental - outage),
            std::abs(outage + success - 1.0)});
      }
      return std::pair{worst <= 1e-10, "max disagreement = " + fmt(worst)};
   });

   suite.run("interferer_vanishing", [&] {
      SplitMix64 rng(v.seed, 4);
      double worst = 0.0;
      for (int k = 0; k < v.link_sets; ++k) {
         const auto links = random_links(rng, 4, 6);
         const double base = outage_probability(links, params);
         auto silent = links;
         silent.interferers.push_back({path_loss(0.5 + rng.uniform(), 3.5, 0.1), 0.0});
         auto faint = links;
         faint.interferers.push_back({1e-15, 1.0});
         worst = std::max({worst, std::abs(outage_probability(silent, params) - base),
            std::abs(outage_probability(faint, params) - base)});
      }
      return std::pair{worst <= 1e-10, "max change = " + fmt(worst)};
   });

   suite.run("beta_zero_outage", [&] {
      SplitMix64 rng(v.seed, 5);
      ChannelParamsd zero = params;
      zero.beta = 0.0;
      double worst = 0.0;
      for (int k = 0; k < v.link_sets; ++k)
         worst = std::max(worst, outage_probability(random_links(rng, 4, 6), zero));
      worst = std::max(worst, fixed_point(scenario.cascade(zero)).epsilon_cbr());
      return std::pair{worst == 0.0, "max outage = " + fmt(worst)};
   });

   suite.run("single_transmitter_reduction", [&] {
      SplitMix64 rng(v.seed, 6);
      double worst = 0.0;
      for (int k = 0; k < v.link_sets; ++k) {
         const double d = 0.2 + 3.0 * rng.uniform();
         const double omega = path_loss(d, params.alpha, 0.1);
         const double lone = outage_probability(LinkSetd{{omega}, {}}, params);
         worst = std::max(worst, std::abs(lone - (1.0 - std::exp(-params.beta / (omega * params.gamma)))));
         // N = 0 chain is one link.
         auto single = CascadeScenario::standalone(LineTopology::equally_spaced(0, d), params);
         single.min_distance = 0.1;
         const auto chain = fixed_point(single, cached_state_space(0));
         worst = std::max(worst, std::abs(chain.epsilon_cbr() - lone));
      }
      return std::pair{worst <= 1e-12, "max deviation = " + fmt(worst)};
   });

   suite.run("mutation_keep_frequency", [&] {
      SplitMix64 rng(v.seed, 7);
      const std::vector<double> reference{2.0, 4.0, 6.0, 8.0};
      const auto& mo = scenario.optimize.options.mutation;
      std::vector<int> moved(reference.size(), 0);
      std::vector<int> right(reference.size(), 0);
      for (int k = 0; k < v.mutation_draws; ++k) {
         const auto x = mutate_placement(reference, 10.0, 8, rng, mo);
         for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i] != reference[i]) {
               ++moved[i];
               if (x[i] > reference[i])
                  ++right[i];
            }
      }
      double worst_z = 0.0;
      const double n = v.mutation_draws;
      for (std::size_t i = 0; i < reference.size(); ++i) {
         const double pm = mo.move_probability;
         worst_z = std::max(worst_z, std::abs(moved[i] - n * pm) / std::sqrt(n * pm * (1.0 - pm)));
         if (moved[i] > 0) {
            const double pr = mo.right_probability;
            worst_z = std::max(worst_z,
               std::abs(right[i] - moved[i] * pr) / std::sqrt(moved[i] * pr * (1.0 - pr)));
         }
      }
      return std::pair{worst_z <= 3.0, "max |z| = " + fmt(worst_z)};
   });

   suite.run("grid_oracle_dominance", [&] {
      OptimizerOptions o = row_options(scenario, {scenario.channel.gamma_db, scenario.cci.enabled});
      o.relay_bounds = {0, 2};
      const int g = v.grid_points;
      double grid_best = -std::numeric_limits<double>::infinity();
      std::string where;
      for (int n = 0; n <= 2; ++n)
         for (int i = 0; i < g; ++i)
            for (int j = 0; j < g; ++j) {
               const double d = o.length_bounds.lo + (o.length_bounds.hi - o.length_bounds.lo) * i / (g - 1);
               const double r = o.rate_bounds.lo + (o.rate_bounds.hi - o.rate_bounds.lo) * j / (g - 1);
               const auto x = LineTopology::equally_spaced(n, d).relay_positions();
               const double u = evaluate(CandidateConfig{x, r, n, d}, o.evaluation).upsilon;
               if (u > grid_best) {
                  grid_best = u;
                  where = "N " + std::to_string(n) + ", d " + fmt(d) + ", R " + fmt(r);
               }
            }
      const auto result = optimize(o);
      const bool ok = result.upsilon >= grid_best - 0.01 * std::abs(grid_best);
      return std::pair{ok, "optimizer " + fmt(result.upsilon) + " vs grid " + fmt(grid_best) + " (" + where + ")"};
   });

   suite.run("link_outage_vs_monte_carlo", [&] {
      SplitMix64 rng(v.seed, 8);
      int agree = 0;
      double worst_z = 0.0;
      for (int k = 0; k < v.link_sets; ++k) {
         const auto links = random_links(rng, 4, 6);
         const double eps = outage_probability(links, params);
         const auto mc = simulate_outage(links, params, v.trials, SplitMix64(v.seed, 100 + k)());
         const double sigma = std::sqrt(eps * (1.0 - eps) / static_cast<double>(v.trials));
         const double z = sigma > 0.0 ? std::abs(mc.epsilon_hat - eps) / sigma : (mc.epsilon_hat == eps ? 0.0 : INFINITY);
         worst_z = std::max(worst_z, z);
         agree += z <= 3.0;
      }
      const int allowed = std::max(1, v.link_sets / 25);
      return std::pair{agree >= v.link_sets - allowed,
         std::to_string(agree) + "/" + std::to_string(v.link_sets) + " within 3 sigma, max |z| = " + fmt(worst_z)};
   });

   suite.run("cbr_outage_vs_monte_carlo", [&] {
      Scenario plain = scenario;
      plain.cci.enabled = false;
      const auto c = plain.cascade();
      const double eps = fixed_point(c).epsilon_cbr();
      SimConfig config;
      config.trials = v.trials;
      config.seed = v.seed;
      const auto mc = simulate_cbr(c, config);
      const double sigma = std::sqrt(eps * (1.0 - eps) / static_cast<double>(v.trials));
      const double z = sigma > 0.0 ? std::abs(mc.epsilon_hat - eps) / sigma : (mc.epsilon_hat == eps ? 0.0 : INFINITY);
      return std::pair{z <= 3.0, "analytic " + fmt(eps) + ", simulated " + fmt(mc.epsilon_hat) + ", |z| = " + fmt(z)};
   });

   suite.run("fixed_point_seed_and_convergence", [&] {
      Scenario with_cci = scenario;
      with_cci.cci.enabled = true;
      Scenario without = scenario;
      without.cci.enabled = false;
      const auto report = fixed_point(with_cci.cascade(), scenario.fixed_point.xi, scenario.fixed_point.max_iters);
      const double plain = fixed_point(without.cascade()).epsilon_cbr();
      const bool ok = report.converged && report.trace.front() == plain;
      return std::pair{ok, std::to_string(report.iterations_used) + " iterations, iteration 0 " +
         fmt(report.trace.front()) + " vs no-CCI " + fmt(plain) + ", final " + fmt(report.epsilon_cbr())};
   });

   return suite.checks;
}

void write_validation(std::ostream& out, const std::vector<CheckResult>& checks)
{
   CsvWriter csv(out, {"check", "passed", "detail"});
   for (const auto& c : checks)
      csv.row() << c.name << c.passed << c.detail;
}

int cmd_validate(const Scenario& scenario, const CommandContext& ctx)
{
   const auto checks = run_validation(scenario, ctx);
   const auto dir = scenario.output.directory;
   std::error_code ec;
   std::filesystem::create_directories(dir, ec);
   if (ec)
      throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
   std::ofstream out(dir / "validate.csv", std::ios::binary);
   if (!out)
      throw Error("cannot write '" + (dir / "validate.csv").string() + "'");
   write_validation(out, checks);
   bool ok = true;
   for (const auto& c : checks)
      ok = ok && c.passed;
   return ok ? kExitOk : kExitFailure;
}

} // namespace brn

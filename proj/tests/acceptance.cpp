// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance [criterion ...]   (default: all)

#include "brn/commands.hpp"
#include "brn/csv.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace brn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
   bool passed = false;
   std::string detail;
};

std::string num(double v)
{
   return format_number(v);
}

double binomial_sigma(double p, std::uint64_t trials)
{
   return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

// |estimate - truth| in units of the analytic sigma; exact agreement required when sigma is 0.
double z_score(double estimate, double truth, std::uint64_t trials)
{
   const double sigma = binomial_sigma(truth, trials);
   if (sigma == 0.0)
      return estimate == truth ? 0.0 : INFINITY;
   return std::abs(estimate - truth) / sigma;
}

bool within_relative(double value, double target, double tol)
{
   return std::abs(value - target) <= tol * std::abs(target);
}

fs::path fresh_dir(const std::string& name)
{
   const auto dir = fs::temp_directory_path() / ("brn_acceptance_" + name);
   fs::remove_all(dir);
   fs::create_directories(dir);
   return dir;
}

std::string slurp(const fs::path& path)
{
   std::ifstream in(path, std::ios::binary);
   std::ostringstream s;
   s << in.rdbuf();
   return s.str();
}

// --- 1: closed-form link outage against simulation ---------------------------

Outcome link_outage_oracle()
{
   SplitMix64 rng(2024, 1);
   const std::uint64_t trials = 1'000'000;
   int agree = 0;
   double worst = 0.0;
   for (int k = 0; k < 50; ++k) {
      const double alpha = 2.5 + 1.5 * rng.uniform();
      const ChannelParamsd c{db_to_linear(-5.0 + 25.0 * rng.uniform()), alpha, db_to_linear(10.0 * rng.uniform()), 1.0};
      LinkSetd links;
      const int barraging = 1 + static_cast<int>(rng.uniform() * 4);
      const int interferers = static_cast<int>(rng.uniform() * 7);
      for (int i = 0; i < barraging; ++i)
         links.barraging_gains.push_back(path_loss(1.0 + 2.0 * rng.uniform(), alpha));
      for (int i = 0; i < interferers; ++i)
         links.interferers.push_back({path_loss(1.0 + 4.0 * rng.uniform(), alpha), rng.uniform()});
      const double eps = outage_probability(links, c);
      const auto mc = simulate_outage(links, c, trials, SplitMix64(2024, 1000 + k)());
      const double z = z_score(mc.epsilon_hat, eps, trials);
      worst = std::max(worst, z);
      agree += z <= 3.0;
   }
   return {agree >= 48, std::to_string(agree) + "/50 within 3 sigma, max |z| " + num(worst)};
}

// --- 2: four-node outage sweep ------------------------------------------------

Outcome outage_sweep()
{
   Scenario s = Scenario::parse(R"({"simulation": {"enabled": true, "trials": 1000000, "mode": "sinr_level"}})");
   const auto points = run_outage_sweep(s);
   const int gammas = 11;
   if (points.size() != 3 * gammas)
      return {false, "expected 33 points, got " + std::to_string(points.size())};

   int agree = 0;
   double worst = 0.0;
   bool decreasing = true;
   bool increasing = true;
   for (std::size_t i = 0; i < points.size(); ++i) {
      const auto& p = points[i];
      const double z = z_score(p.mc->epsilon_hat, p.epsilon_cbr, p.mc->trials);
      worst = std::max(worst, z);
      agree += z <= 3.0;
      if (i % gammas != 0)
         decreasing = decreasing && p.epsilon_cbr < points[i - 1].epsilon_cbr;
      if (i >= gammas)
         increasing = increasing && p.epsilon_cbr > points[i - gammas].epsilon_cbr;
   }
   std::string detail = std::to_string(agree) + "/33 within 3 sigma (max |z| " + num(worst) + ")";
   detail += decreasing ? ", strictly decreasing in SNR" : ", NOT strictly decreasing in SNR";
   detail += increasing ? ", increasing in threshold" : ", NOT increasing in threshold";
   return {agree == 33 && decreasing && increasing, detail};
}

// --- 3: chain structure and oracles ----------------------------------------

Outcome chain_structure()
{
   std::string detail;
   bool ok = true;
   const auto two = StateSpace::enumerate(2);
   const bool counts = two.transient_count() == 6 && two.size() == 8;
   ok = ok && counts;
   detail += "N=2: " + std::to_string(two.transient_count()) + " transient + " +
      std::to_string(two.size() - two.transient_count()) + " absorbing";

   const ChannelParamsd c{db_to_linear(5.0), 3.5, db_to_linear(6.0), 1.0};
   double worst = 0.0;
   SplitMix64 rng(2024, 3);
   for (int trial = 0; trial < 10; ++trial)
      for (int n = 0; n <= 2; ++n) {
         const double length = (n + 1) * (1.0 + rng.uniform());
         std::vector<double> relays;
         for (int i = 1; i <= n; ++i)
            relays.push_back(length * i / (n + 1));
         const LineTopology topo(relays, length);
         const auto cascade = CascadeScenario::cascade(topo, c, 1);
         const auto& space = cached_state_space(n);
         const auto report = fixed_point(cascade, space);
         const auto field = interference_view(cascade, report.schedule);
         const auto m = build_transition_matrix(topo, c, field, space);
         testing::Nodes start(n + 2, 0);
         start[0] = 1;
         double outage = 0.0;
         double success = 0.0;
         testing::path_sum(topo, c, field, start, 1, 1.0, outage, success);
         const double fundamental = absorption(m).epsilon_cbr;
         const double forward = propagate(m).epsilon_cbr;
         worst = std::max({worst, std::abs(fundamental - forward), std::abs(fundamental - outage),
            std::abs(forward - outage)});
      }
   ok = ok && worst <= 1e-10;
   detail += "; fundamental / forward / path-sum max gap " + num(worst);

   double hand = 0.0;
   const auto one = StateSpace::enumerate(1);
   for (double length : {2.0, 2.5, 3.3}) {
      const LineTopology topo = LineTopology::equally_spaced(1, length);
      const auto none = InterferenceField::none(2, 3);
      const auto m = build_transition_matrix(topo, c, none, one);
      const double sd = testing::link_outage(topo, c, none, {1, 0, 0}, 1, 2);
      const double sr = testing::link_outage(topo, c, none, {1, 0, 0}, 1, 1);
      const double rd = testing::link_outage(topo, c, none, {2, 1, 0}, 2, 2);
      hand = std::max(hand, std::abs(absorption(m).epsilon_cbr - (sd * sr + sd * (1.0 - sr) * rd)));
   }
   ok = ok && hand <= 1e-12;
   detail += "; N=1 hand formula gap " + num(hand);
   return {ok, detail};
}

// --- 4: fixed-point traces ----------------------------------------------------

Outcome fixed_point_traces()
{
   const auto results = run_iterate(Scenario::parse("{}"));
   bool ok = results.size() == 6;
   std::string detail;
   for (const auto& r : results) {
      const auto& t = r.report.trace;
      bool monotone = true;
      for (std::size_t i = 1; i < t.size(); ++i)
         monotone = monotone && t[i] >= t[i - 1];
      const int steps = static_cast<int>(t.size()) - 1;
      const bool seed = t.front() == r.epsilon_no_cci;
      const bool conv = r.report.converged && steps <= 10;
      ok = ok && monotone && seed && conv;
      detail += (detail.empty() ? "" : "; ") + std::string("G") + num(r.gamma_db) + " a" + num(r.alpha) + ": " +
         (conv ? "converged in " + std::to_string(steps) : std::string("NOT converged")) +
         (seed ? "" : ", iteration 0 differs from no-CCI") +
         (monotone ? ", non-decreasing" : ", NOT non-decreasing (" + num(t[1]) + " then " + num(t[2]) + ")");
   }
   return {ok, detail};
}

// --- 5 and 6: optimization table -------------------------------------------

struct TableRow {
   double gamma_db;
   bool cci;
   double rate;
   int relays;
   double length;
   double upsilon;
};

const TableRow kTable[] = {
   {0.0, false, 4.452, 0, 0.3, 0.490},
   {0.0, true, 4.421, 5, 1.2, 0.402},
   {5.0, false, 4.611, 0, 0.4, 0.683},
   {5.0, true, 4.452, 5, 1.7, 0.559},
   {10.0, false, 5.028, 0, 0.5, 0.951},
   {10.0, true, 4.547, 5, 2.3, 0.777},
};

const std::vector<OptimizeResult>& table_results()
{
   static const std::vector<OptimizeResult> results = [] {
      Scenario s = Scenario::parse("{}");
      s.optimize.rows.clear();
      for (const auto& row : kTable)
         s.optimize.rows.push_back({row.gamma_db, row.cci});
      return run_optimize(s);
   }();
   return results;
}

Outcome optimization_table()
{
   const auto& results = table_results();
   bool ok = true;
   std::string detail;
   for (std::size_t i = 0; i < std::size(kTable); ++i) {
      const auto& want = kTable[i];
      const auto& got = results[i].result;
      const bool n = got.best.relays == want.relays;
      const bool d = within_relative(got.best.length, want.length, 0.10);
      const bool r = within_relative(got.best.rate, want.rate, 0.10);
      const bool u = within_relative(got.upsilon, want.upsilon, 0.10);
      ok = ok && n && d && r && u;
      detail += (detail.empty() ? "" : "; ") + std::string("G") + num(want.gamma_db) + (want.cci ? " CCI" : " free") +
         ": N " + std::to_string(got.best.relays) + (n ? "" : "!=" + std::to_string(want.relays)) + ", d " +
         num(got.best.length) + (d ? "" : " (off " + num(got.best.length / want.length - 1.0) + ")") + ", R " +
         num(got.best.rate) + (r ? "" : " (off)") + ", U " + num(got.upsilon) +
         (u ? "" : " (off " + num(got.upsilon / want.upsilon - 1.0) + ")");
   }
   bool order = true;
   for (std::size_t i = 0; i + 1 < std::size(kTable); i += 2)
      order = order && results[i].result.upsilon >= results[i + 1].result.upsilon;
   for (std::size_t i = 0; i + 2 < std::size(kTable); ++i)
      order = order && results[i + 2].result.upsilon > results[i].result.upsilon;
   ok = ok && order;
   detail += order ? "; orderings hold" : "; orderings VIOLATED";
   return {ok, detail};
}

Outcome capacity_consistency()
{
   bool ok = true;
   double own = 0.0;
   std::string detail;
   for (const auto& r : table_results()) {
      const auto& b = r.result.best;
      const double again = transport_capacity(r.result.epsilon_cbr, b.relays, b.length, rate_to_beta(b.rate));
      own = std::max(own, std::abs(again - r.result.upsilon) / std::abs(r.result.upsilon));
   }
   ok = own <= 0.10;
   detail = "optimizer rows recomputed: max rel gap " + num(own) + "; table configs through the pipeline:";
   for (const auto& row : kTable) {
      EvaluationOptions o;
      o.gamma = db_to_linear(row.gamma_db);
      o.cci = row.cci;
      const auto relays = LineTopology::equally_spaced(row.relays, row.length).relay_positions();
      const auto e = evaluate(CandidateConfig{relays, row.rate, row.relays, row.length}, o);
      const double again = transport_capacity(e.epsilon_cbr, row.relays, row.length, rate_to_beta(row.rate));
      const bool good = within_relative(again, row.upsilon, 0.10);
      ok = ok && good;
      detail += " " + num(again) + "/" + num(row.upsilon) + (good ? "" : "!");
   }
   return {ok, detail};
}

// --- 7: determinism -----------------------------------------------------------

Outcome determinism()
{
   Scenario s = Scenario::parse(R"({
      "sweep": {"gamma_db": [0, 6, 12]},
      "simulation": {"trials": 20000},
      "optimize": {"rows": [{"gamma_db": 5, "cci": true}, {"gamma_db": 5, "cci": false}],
                   "relay_bounds": [0, 3], "restarts": 1, "max_passes": 30},
      "validate": {"trials": 20000, "link_sets": 10, "mutation_draws": 2000, "grid_points": 6}
   })");
   using Command = int (*)(const Scenario&, const CommandContext&);
   const std::pair<Command, std::vector<std::string>> commands[] = {
      {cmd_outage_sweep, {"outage_sweep.csv"}},
      {cmd_iterate, {"iterate.csv"}},
      {cmd_optimize, {"optimize.csv", "optimize_trace.csv", "optimize_report.txt"}},
      {cmd_validate, {"validate.csv"}},
   };
   bool ok = true;
   int files = 0;
   std::string detail;
   for (const auto& [cmd, names] : commands) {
      std::string first[3];
      for (int run = 0; run < 2; ++run) {
         s.output.directory = fresh_dir("determinism_" + std::to_string(run));
         cmd(s, CommandContext{true, nullptr});
         for (std::size_t k = 0; k < names.size(); ++k) {
            const auto bytes = slurp(s.output.directory / names[k]);
            if (run == 0) {
               first[k] = bytes;
               continue;
            }
            ++files;
            if (bytes.empty() || bytes != first[k]) {
               ok = false;
               detail += " " + names[k] + " differs;";
            }
         }
      }
   }
   return {ok, std::to_string(files) + " output files compared byte for byte" + (ok ? "" : ":" + detail)};
}

// --- 8: property suite --------------------------------------------------------

Outcome property_suite()
{
   Scenario s = Scenario::parse("{}");
   s.output.directory = fresh_dir("validate");
   const auto checks = run_validation(s);
   bool ok = true;
   std::string failed;
   for (const auto& c : checks)
      if (!c.passed) {
         ok = false;
         failed += " " + c.name + " (" + c.detail + ")";
      }
   const int code = cmd_validate(s);
   ok = ok && code == kExitOk;
   return {ok, std::to_string(checks.size()) + " checks" + (ok ? ", all green" : ", failing:" + failed)};
}

struct Criterion {
   int id;
   const char* name;
   double budget_seconds; ///< 0 when the criterion states no runtime limit
   std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv)
{
   const Criterion criteria[] = {
      {1, "closed-form link outage matches simulation", 120.0, link_outage_oracle},
      {2, "four-node outage sweep matches simulation and is monotone", 600.0, outage_sweep},
      {3, "chain structure and absorption oracles", 0.0, chain_structure},
      {4, "fixed-point traces for the six cascade cases", 60.0, fixed_point_traces},
      {5, "optimization table", 1800.0, optimization_table},
      {6, "transport capacity recomputation", 0.0, capacity_consistency},
      {7, "byte-identical reruns", 0.0, determinism},
      {8, "property suite", 0.0, property_suite},
   };

   std::set<int> selected;
   for (int i = 1; i < argc; ++i)
      selected.insert(std::atoi(argv[i]));

   int failures = 0;
   for (const auto& c : criteria) {
      if (!selected.empty() && !selected.count(c.id))
         continue;
      const auto start = std::chrono::steady_clock::now();
      Outcome o;
      try {
         o = c.run();
      } catch (const std::exception& e) {
         o = {false, std::string("exception: ") + e.what()};
      }
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (c.budget_seconds > 0.0 && seconds > c.budget_seconds) {
         o.passed = false;
         o.detail += "; over the " + num(c.budget_seconds) + " s budget";
      }
      failures += !o.passed;
      std::printf("%s criterion %d: %s [%.1f s] %s\n", o.passed ? "PASS" : "FAIL", c.id, c.name, seconds,
         o.detail.c_str());
      std::fflush(stdout);
   }
   return failures == 0 ? 0 : 1;
}

#include "brn/commands.hpp"

#include "brn/csv.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace brn {

namespace {

std::ostream* logger(const CommandContext& ctx)
{
   return ctx.quiet ? nullptr : ctx.log;
}

template <typename Fn>
void write_file(const Scenario& scenario, const std::string& name, Fn&& body, const CommandContext& ctx)
{
   const auto dir = scenario.output.directory;
   std::error_code ec;
   std::filesystem::create_directories(dir, ec);
   if (ec)
      throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
   const auto path = dir / name;
   std::ofstream out(path, std::ios::binary);
   if (!out)
      throw Error("cannot write '" + path.string() + "'");
   body(out);
   out.close();
   if (!out)
      throw Error("error while writing '" + path.string() + "'");
   if (auto* log = logger(ctx))
      *log << "wrote " << path.string() << "\n";
}

std::vector<double> default_gammas()
{
   std::vector<double> g;
   for (int i = 0; i <= 10; ++i)
      g.push_back(2.0 * i);
   return g;
}

std::string cell(double v, bool present)
{
   return present ? format_number(v) : std::string();
}

std::string positions_cell(const std::vector<double>& x)
{
   std::string s;
   for (std::size_t i = 0; i < x.size(); ++i)
      s += (i ? " " : "") + format_number(x[i]);
   return s;
}

} // namespace

// --- outage sweep -----------------------------------------------------------

std::vector<SweepPoint> run_outage_sweep(const Scenario& scenario)
{
   const auto gammas = scenario.sweep.gamma_db.empty() ? default_gammas() : scenario.sweep.gamma_db;
   const auto betas = scenario.sweep.beta.empty()
      ? std::vector<double>{db_to_linear(0.0), db_to_linear(3.0), db_to_linear(6.0)}
      : scenario.sweep.beta;
   const auto& space = cached_state_space(scenario.topology.relays);

   std::vector<SweepPoint> points;
   std::uint64_t index = 0;
   for (double beta : betas) {
      for (double g : gammas) {
         ChannelParamsd params = scenario.channel.params();
         params.gamma = db_to_linear(g);
         params.beta = beta;
         const CascadeScenario cascade = scenario.cascade(params);
         const auto report = fixed_point(cascade, space, scenario.fixed_point.xi, scenario.fixed_point.max_iters);

         SweepPoint p;
         p.gamma_db = g;
         p.beta = beta;
         p.epsilon_cbr = report.epsilon_cbr();
         p.iterations_used = report.iterations_used;
         if (scenario.simulation.enabled) {
            SimConfig config;
            config.trials = scenario.simulation.trials;
            config.seed = SplitMix64(scenario.simulation.seed, index)();
            config.mode = scenario.simulation.mode;
            config.ring_copies = scenario.simulation.ring_copies;
            p.mc = simulate_cbr(cascade, config, report.schedule);
         }
         points.push_back(std::move(p));
         ++index;
      }
   }
   return points;
}

void write_outage_sweep(std::ostream& out, const std::vector<SweepPoint>& points)
{
   CsvWriter csv(out, {"gamma_db", "beta_db", "beta", "epsilon_cbr", "iterations", "epsilon_mc",
                         "mc_stderr", "mc_trials", "mc_z"});
   for (const auto& p : points) {
      const bool mc = p.mc.has_value();
      double z = 0.0;
      if (mc) {
         const double sigma = std::sqrt(p.epsilon_cbr * (1.0 - p.epsilon_cbr) / static_cast<double>(p.mc->trials));
         const double diff = p.mc->epsilon_hat - p.epsilon_cbr;
         z = sigma > 0.0 ? diff / sigma : (diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff));
      }
      csv.row() << p.gamma_db << linear_to_db(p.beta) << p.beta << p.epsilon_cbr << p.iterations_used
                << cell(mc ? p.mc->epsilon_hat : 0.0, mc) << cell(mc ? p.mc->standard_error : 0.0, mc)
                << (mc ? std::to_string(p.mc->trials) : std::string()) << cell(z, mc);
   }
}

int cmd_outage_sweep(const Scenario& scenario, const CommandContext& ctx)
{
   const auto points = run_outage_sweep(scenario);
   write_file(scenario, "outage_sweep.csv", [&](std::ostream& out) { write_outage_sweep(out, points); }, ctx);
   return kExitOk;
}

// --- fixed-point iteration traces ---------------------------------------------

std::vector<IterateResult> run_iterate(const Scenario& scenario)
{
   auto cases = scenario.iterate.cases;
   if (cases.empty())
      for (double g : {0.0, 10.0})
         for (double a : {3.0, 3.5, 4.0})
            cases.push_back({g, a});

   Scenario with_cci = scenario;
   with_cci.cci.enabled = true;
   const auto& space = cached_state_space(scenario.topology.relays);
   std::vector<IterateResult> results;
   for (const auto& c : cases) {
      const ChannelParamsd params{db_to_linear(c.gamma_db), c.alpha, scenario.iterate.beta, 1.0};
      IterateResult r;
      r.gamma_db = c.gamma_db;
      r.alpha = c.alpha;
      r.beta = scenario.iterate.beta;
      Scenario without = scenario;
      without.cci.enabled = false;
      r.epsilon_no_cci = fixed_point(without.cascade(params), space).epsilon_cbr();
      r.report = fixed_point(with_cci.cascade(params), space, scenario.fixed_point.xi, scenario.fixed_point.max_iters);
      results.push_back(std::move(r));
   }
   return results;
}

void write_iterate(std::ostream& out, const std::vector<IterateResult>& results)
{
   CsvWriter csv(out, {"gamma_db", "alpha", "beta_db", "iteration", "epsilon_cbr", "distance", "converged",
                         "iterations_used"});
   for (const auto& r : results) {
      const auto& rep = r.report;
      for (std::size_t i = 0; i < rep.trace.size(); ++i) {
         const bool has_distance = i > 0 && i - 1 < rep.distances.size();
         csv.row() << r.gamma_db << r.alpha << linear_to_db(r.beta) << static_cast<int>(i) << rep.trace[i]
                   << cell(has_distance ? rep.distances[i - 1] : 0.0, has_distance) << rep.converged
                   << rep.iterations_used;
      }
   }
}

int cmd_iterate(const Scenario& scenario, const CommandContext& ctx)
{
   const auto results = run_iterate(scenario);
   write_file(scenario, "iterate.csv", [&](std::ostream& out) { write_iterate(out, results); }, ctx);
   bool ok = true;
   for (const auto& r : results)
      ok = ok && r.report.converged;
   if (auto* log = logger(ctx))
      for (const auto& r : results)
         *log << "gamma " << r.gamma_db << " dB, alpha " << r.alpha << ": " << r.report.iterations_used
              << " iterations, epsilon_cbr " << format_number(r.report.epsilon_cbr())
              << (r.report.converged ? "" : " (not converged)") << "\n";
   return ok ? kExitOk : kExitFailure;
}

// --- optimization -------------------------------------------------------------

OptimizerOptions row_options(const Scenario& scenario, const OptimizeRow& row)
{
   OptimizerOptions o = scenario.optimize.options;
   o.evaluation.gamma = db_to_linear(row.gamma_db);
   o.evaluation.alpha = scenario.channel.alpha;
   o.evaluation.cci = row.cci;
   o.evaluation.zones = scenario.cci.zones;
   o.evaluation.xi = scenario.fixed_point.xi;
   o.evaluation.max_iters = scenario.fixed_point.max_iters;
   o.evaluation.halt_on_success = scenario.cci.halt_on_success;
   return o;
}

std::vector<OptimizeResult> run_optimize(const Scenario& scenario, const CommandContext& ctx)
{
   auto rows = scenario.optimize.rows;
   if (rows.empty())
      for (double g : {0.0, 5.0, 10.0})
         for (bool cci : {false, true})
            rows.push_back({g, cci});

   std::vector<OptimizeResult> results;
   for (const auto& row : rows) {
      OptimizeResult r{row, optimize(row_options(scenario, row))};
      if (auto* log = logger(ctx))
         *log << "gamma " << row.gamma_db << " dB, cci " << (row.cci ? "on" : "off") << ": N "
              << r.result.best.relays << ", d " << format_number(r.result.best.length) << ", R "
              << format_number(r.result.best.rate) << ", upsilon " << format_number(r.result.upsilon) << "\n";
      results.push_back(std::move(r));
   }
   return results;
}

void write_optimize(std::ostream& out, const std::vector<OptimizeResult>& results)
{
   CsvWriter csv(out, {"gamma_db", "cci", "rate", "relays", "length", "positions", "upsilon", "epsilon_cbr",
                         "evaluations", "terminated", "boundary"});
   for (const auto& r : results) {
      std::string boundary;
      for (const auto& b : r.result.boundary_hits)
         boundary += (boundary.empty() ? "" : " ") + b;
      const auto& best = r.result.best;
      csv.row() << r.row.gamma_db << r.row.cci << best.rate << best.relays << best.length
                << positions_cell(best.relay_positions) << r.result.upsilon << r.result.epsilon_cbr
                << static_cast<unsigned long long>(r.result.evaluations) << r.result.terminated << boundary;
   }
}

void write_optimize_trace(std::ostream& out, const std::vector<OptimizeResult>& results)
{
   CsvWriter csv(out, {"gamma_db", "cci", "restart", "pass", "coordinate", "level", "relays_lo", "relays_mid",
                         "relays_hi", "rate_lo", "rate_mid", "rate_hi", "length_lo", "length_mid", "length_hi",
                         "n_delta", "pass_best", "best_so_far"});
   for (const auto& r : results)
      for (const auto& t : r.result.trace)
         csv.row() << r.row.gamma_db << r.row.cci << t.restart << t.pass << to_string(t.coordinate) << t.level
                   << t.relays[0] << t.relays[1] << t.relays[2] << t.rate.lo << t.rate.mid << t.rate.hi
                   << t.length.lo << t.length.mid << t.length.hi << t.n_delta << t.pass_best << t.best_so_far;
}

void write_optimize_report(std::ostream& out, const std::vector<OptimizeResult>& results)
{
   out << std::left << std::setw(10) << "Gamma(dB)" << std::setw(6) << "CCI" << std::setw(9) << "R"
       << std::setw(4) << "N" << std::setw(9) << "d" << std::setw(9) << "Upsilon" << "relay positions\n";
   for (const auto& r : results) {
      const auto& best = r.result.best;
      std::ostringstream line;
      line << std::left << std::setw(10) << format_number(r.row.gamma_db) << std::setw(6)
           << (r.row.cci ? "yes" : "no") << std::setw(9) << format_number(best.rate) << std::setw(4)
           << best.relays << std::setw(9) << format_number(best.length) << std::setw(9)
           << format_number(r.result.upsilon) << positions_cell(best.relay_positions);
      if (!r.result.boundary_hits.empty())
         line << "  [at bound]";
      out << line.str() << "\n";
   }
}

int cmd_optimize(const Scenario& scenario, const CommandContext& ctx)
{
   const auto results = run_optimize(scenario, ctx);
   write_file(scenario, "optimize.csv", [&](std::ostream& out) { write_optimize(out, results); }, ctx);
   if (scenario.optimize.write_trace)
      write_file(scenario, "optimize_trace.csv", [&](std::ostream& out) { write_optimize_trace(out, results); }, ctx);
   write_file(scenario, "optimize_report.txt", [&](std::ostream& out) { write_optimize_report(out, results); }, ctx);
   if (auto* log = logger(ctx))
      write_optimize_report(*log, results);
   return kExitOk;
}

} // namespace brn

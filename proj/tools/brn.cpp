// Command-line front end: outage-sweep, iterate, optimize, validate.

#include "brn/commands.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

struct Flags {
   std::string scenario;
   std::string out;
   std::uint64_t seed = 0;
   std::uint64_t trials = 0;
   bool quiet = false;
};

void add_flags(CLI::App* cmd, Flags& f)
{
   cmd->add_option("--scenario", f.scenario, "Scenario JSON file (defaults apply when omitted)");
   cmd->add_option("--out", f.out, "Output directory (overrides output.directory)");
   cmd->add_option("--seed", f.seed, "Seed for simulation, optimization and validation");
   cmd->add_option("--trials", f.trials, "Monte Carlo trials per point");
   cmd->add_flag("--quiet", f.quiet, "Suppress progress output");
}

brn::Scenario load(const Flags& f, CLI::App* cmd)
{
   brn::Scenario s = f.scenario.empty() ? brn::Scenario::parse("{}") : brn::Scenario::load(f.scenario);
   if (!f.out.empty())
      s.output.directory = f.out;
   if (cmd->count("--seed")) {
      s.simulation.seed = f.seed;
      s.optimize.options.seed = f.seed;
      s.validate.seed = f.seed;
   }
   if (cmd->count("--trials")) {
      if (f.trials < 1)
         throw brn::InvalidArgument("--trials must be at least 1");
      s.simulation.trials = f.trials;
      s.validate.trials = f.trials;
   }
   return s;
}

} // namespace

int main(int argc, char** argv)
{
   CLI::App app{"Barrage relay network outage analysis and transport-capacity optimization"};
   app.require_subcommand(1);
   app.set_version_flag("--version", "brn 1.0");

   Flags flags;
   struct Command {
      const char* name;
      const char* help;
      int (*run)(const brn::Scenario&, const brn::CommandContext&);
   };
   const Command commands[] = {
      {"outage-sweep", "Analytic and simulated CBR outage over a grid of SNR and thresholds", brn::cmd_outage_sweep},
      {"iterate", "Fixed-point outage traces for the interference-coupled cascade", brn::cmd_iterate},
      {"optimize", "Maximize transport capacity over relay count, placement, length and rate", brn::cmd_optimize},
      {"validate", "Run the invariant and oracle property suite", brn::cmd_validate},
   };
   std::vector<CLI::App*> subs;
   for (const auto& c : commands) {
      auto* sub = app.add_subcommand(c.name, c.help);
      add_flags(sub, flags);
      subs.push_back(sub);
   }

   try {
      app.parse(argc, argv);
   } catch (const CLI::ParseError& e) {
      const int code = app.exit(e);
      return code == 0 ? brn::kExitOk : brn::kExitUsage;
   }

   for (std::size_t i = 0; i < subs.size(); ++i) {
      if (!subs[i]->parsed())
         continue;
      try {
         const brn::Scenario scenario = load(flags, subs[i]);
         const brn::CommandContext ctx{flags.quiet, &std::cerr};
         return commands[i].run(scenario, ctx);
      } catch (const brn::InvalidArgument& e) {
         std::cerr << "brn: " << e.what() << "\n";
         return brn::kExitUsage;
      } catch (const std::exception& e) {
         std::cerr << "brn: " << e.what() << "\n";
         return brn::kExitFailure;
      }
   }
   return brn::kExitUsage;
}

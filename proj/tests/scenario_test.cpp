#include "brn/commands.hpp"
#include "brn/csv.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace brn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
   const auto dir = fs::temp_directory_path() / ("brn_test_" + name);
   fs::remove_all(dir);
   fs::create_directories(dir);
   return dir;
}

int run_cli(const std::string& args)
{
   const std::string cmd = std::string(BRN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
   const int status = std::system(cmd.c_str());
   return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path)
{
   std::ifstream in(path);
   std::vector<std::vector<std::string>> rows;
   std::string line;
   while (std::getline(in, line)) {
      std::vector<std::string> cells;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ','))
         cells.push_back(cell);
      if (!line.empty() && line.back() == ',')
         cells.emplace_back();
      rows.push_back(cells);
   }
   return rows;
}

} // namespace

TEST_SUITE("scenario") {

TEST_CASE("defaults")
{
   const auto s = Scenario::parse("{}");
   CHECK(s.topology.relays == 2);
   CHECK(s.topology.length == 3.0);
   CHECK(s.channel.params().gamma == doctest::Approx(10.0));
   CHECK(s.channel.params().beta == doctest::Approx(db_to_linear(6.0)));
   CHECK_FALSE(s.cci.enabled);
   CHECK(s.cascade().offsets.empty());
   CHECK(s.cascade().cbr.position(1) == doctest::Approx(1.0));
}

TEST_CASE("sections and conversions")
{
   const auto s = Scenario::parse(R"({
      "topology": {"relays": 3, "length": 4.0, "positions": [0.5, 2.0, 3.0]},
      "channel": {"gamma_db": 0, "alpha": 3, "rate": 2},
      "cci": {"enabled": true, "zones": 2},
      "sweep": {"gamma_db": {"start": 0, "stop": 4, "step": 2}, "beta_db": [0, 3]},
      "optimize": {"rows": [{"gamma_db": 5, "cci": false}], "restarts": 1}
   })");
   CHECK(s.topology.build().position(1) == 0.5);
   CHECK(s.channel.params().beta == doctest::Approx(3.0));
   CHECK(s.cascade().offsets.size() == 4);
   CHECK(s.sweep.gamma_db == std::vector<double>{0.0, 2.0, 4.0});
   REQUIRE(s.sweep.beta.size() == 2);
   CHECK(s.sweep.beta[0] == 1.0);
   CHECK(s.optimize.options.restarts == 1);
   CHECK(s.optimize.rows.at(0).gamma_db == 5.0);
}

TEST_CASE("rejections")
{
   CHECK_THROWS_AS(Scenario::parse(R"({"topolgy": {}})"), InvalidArgument);
   CHECK_THROWS_AS(Scenario::parse(R"({"channel": {"gama_db": 3}})"), InvalidArgument);
   CHECK_THROWS_AS(Scenario::parse(R"({"channel": {"beta_db": 3, "rate": 1}})"), InvalidArgument);
   CHECK_THROWS_AS(Scenario::parse(R"({"topology": {"relays": "two"}})"), InvalidArgument);
   CHECK_THROWS_AS(Scenario::parse(R"({"topology": {"relays": 2, "positions": [1.0]}})"), InvalidArgument);
   CHECK_THROWS_AS(Scenario::parse(R"({"fixed_point": {"max_iters": 0}})"), InvalidArgument);
   CHECK_THROWS_AS(Scenario::parse("{"), InvalidArgument);
   CHECK_THROWS_AS(Scenario::load("/nonexistent/scenario.json"), Error);
}

TEST_CASE("csv cells")
{
   CHECK(format_number(0.5) == "0.5");
   CHECK(format_number(-0.0) == "0");
   CHECK(format_number(1.0 / 3.0) == "0.333333");
   CHECK(format_number(INFINITY) == "inf");
   std::ostringstream out;
   {
      CsvWriter csv(out, {"a", "b"});
      csv.row() << std::string("x,y") << true;
   }
   CHECK(out.str() == "a,b\n\"x,y\",1\n");
}

TEST_CASE("outage sweep file")
{
   auto s = Scenario::parse(R"({"sweep": {"gamma_db": [0, 10, 20], "beta_linear": [0, 2]},
                                "simulation": {"trials": 2000}})");
   s.output.directory = scratch("sweep");
   REQUIRE(cmd_outage_sweep(s) == kExitOk);
   const auto rows = read_csv(s.output.directory / "outage_sweep.csv");
   REQUIRE(rows.size() == 7);
   CHECK(rows[0].size() == 9);
   for (int i = 1; i <= 3; ++i) {
      CHECK(rows[i][3] == "0");
      CHECK(rows[i][5] == "0");
   }
   CHECK(std::stod(rows[4][3]) > std::stod(rows[5][3]));
   CHECK(std::stod(rows[5][3]) > std::stod(rows[6][3]));
}

TEST_CASE("command line exit codes")
{
   const auto dir = scratch("cli");
   CHECK(run_cli("") == kExitUsage);
   CHECK(run_cli("bogus") == kExitUsage);
   CHECK(run_cli("iterate --no-such-flag") == kExitUsage);
   CHECK(run_cli("iterate --scenario /nonexistent/s.json") == kExitFailure);
   CHECK(run_cli("outage-sweep --trials 0 --out " + dir.string()) == kExitUsage);

   std::ofstream(dir / "bad.json") << R"({"channel": {"alpha": 3.5, "colour": 1}})";
   CHECK(run_cli("iterate --scenario " + (dir / "bad.json").string()) == kExitUsage);

   CHECK(run_cli("iterate --quiet --out " + dir.string()) == kExitOk);
   CHECK(fs::exists(dir / "iterate.csv"));
   CHECK(read_csv(dir / "iterate.csv")[0][0] == "gamma_db");
   CHECK(run_cli("--version") == kExitOk);
}

}

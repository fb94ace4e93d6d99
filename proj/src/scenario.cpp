#include "brn/scenario.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace brn {

namespace {

using json = nlohmann::json;

/// Object reader that remembers which keys were consumed and rejects the rest.
class Reader {
public:
   Reader(const json& j, std::string path) : j_(j), path_(std::move(path))
   {
      if (!j_.is_object())
         throw InvalidArgument("scenario: '" + where() + "' must be an object");
   }

   bool has(const std::string& key) const { return j_.contains(key); }

   template <typename T>
   void get(const std::string& key, T& out)
   {
      if (!j_.contains(key))
         return;
      used_.insert(key);
      try {
         out = j_.at(key).get<T>();
      } catch (const json::exception&) {
         throw InvalidArgument("scenario: '" + where(key) + "' has the wrong type");
      }
   }

   const json& raw(const std::string& key)
   {
      used_.insert(key);
      return j_.at(key);
   }

   std::optional<Reader> child(const std::string& key)
   {
      if (!j_.contains(key))
         return std::nullopt;
      used_.insert(key);
      return Reader(j_.at(key), where(key));
   }

   std::string where(const std::string& key = {}) const
   {
      if (key.empty())
         return path_.empty() ? "<root>" : path_;
      return path_.empty() ? key : path_ + "." + key;
   }

   void finish() const
   {
      for (const auto& [key, unused] : j_.items())
         if (!used_.contains(key))
            throw InvalidArgument("scenario: unknown key '" + where(key) + "'");
   }

private:
   const json& j_;
   std::string path_;
   std::set<std::string> used_;
};

/// Reads at most one of beta_db / rate / beta_linear into a linear threshold.
void read_beta(Reader& r, double& beta)
{
   int given = 0;
   if (r.has("beta_db")) {
      double db = 0.0;
      r.get("beta_db", db);
      beta = db_to_linear(db);
      ++given;
   }
   if (r.has("rate")) {
      double rate = 0.0;
      r.get("rate", rate);
      if (!(rate >= 0.0))
         throw InvalidArgument("scenario: '" + r.where("rate") + "' must be non-negative");
      beta = rate_to_beta(rate);
      ++given;
   }
   if (r.has("beta_linear")) {
      r.get("beta_linear", beta);
      ++given;
   }
   if (given > 1)
      throw InvalidArgument("scenario: give only one of beta_db, rate, beta_linear in '" + r.where() + "'");
}

Bracket read_bounds(Reader& r, const std::string& key, Bracket current)
{
   if (!r.has(key))
      return current;
   std::vector<double> v;
   r.get(key, v);
   if (v.size() != 2 || !(v[0] < v[1]))
      throw InvalidArgument("scenario: '" + r.where(key) + "' must be [lo, hi] with lo < hi");
   return {v[0], (v[0] + v[1]) / 2.0, v[1]};
}

void read_topology(Reader r, TopologySpec& t)
{
   r.get("relays", t.relays);
   r.get("length", t.length);
   r.get("min_distance", t.min_distance);
   if (r.has("positions")) {
      const json& p = r.raw("positions");
      if (p.is_string()) {
         if (p.get<std::string>() != "equally_spaced")
            throw InvalidArgument("scenario: 'topology.positions' must be \"equally_spaced\" or a list");
         t.positions.reset();
      } else if (p.is_array()) {
         try {
            t.positions = p.get<std::vector<double>>();
         } catch (const json::exception&) {
            throw InvalidArgument("scenario: 'topology.positions' must hold numbers");
         }
      } else {
         throw InvalidArgument("scenario: 'topology.positions' must be \"equally_spaced\" or a list");
      }
   }
   r.finish();
}

void read_channel(Reader r, ChannelSpec& c)
{
   r.get("gamma_db", c.gamma_db);
   r.get("alpha", c.alpha);
   read_beta(r, c.beta);
   r.finish();
}

void read_cci(Reader r, CciSpec& c)
{
   r.get("enabled", c.enabled);
   r.get("zones", c.zones);
   r.get("offsets", c.offsets);
   r.get("halt_on_success", c.halt_on_success);
   r.finish();
}

void read_fixed_point(Reader r, FixedPointSpec& f)
{
   r.get("xi", f.xi);
   r.get("max_iters", f.max_iters);
   r.finish();
}

void read_simulation(Reader r, SimulationSpec& s)
{
   r.get("enabled", s.enabled);
   r.get("trials", s.trials);
   r.get("seed", s.seed);
   if (r.has("mode")) {
      std::string mode;
      r.get("mode", mode);
      s.mode = parse_sim_mode(mode);
   }
   r.get("ring_copies", s.ring_copies);
   r.finish();
}

void read_sweep(Reader r, SweepSpec& s)
{
   if (r.has("gamma_db")) {
      const json& g = r.raw("gamma_db");
      if (g.is_array()) {
         try {
            s.gamma_db = g.get<std::vector<double>>();
         } catch (const json::exception&) {
            throw InvalidArgument("scenario: 'sweep.gamma_db' must hold numbers");
         }
      } else {
         Reader range(g, "sweep.gamma_db");
         double start = 0.0;
         double stop = 20.0;
         double step = 2.0;
         range.get("start", start);
         range.get("stop", stop);
         range.get("step", step);
         range.finish();
         if (!(step > 0.0) || stop < start)
            throw InvalidArgument("scenario: 'sweep.gamma_db' needs step > 0 and stop >= start");
         const auto count = static_cast<int>(std::floor((stop - start) / step + 1e-9)) + 1;
         s.gamma_db.clear();
         for (int i = 0; i < count; ++i)
            s.gamma_db.push_back(start + i * step);
      }
   }
   std::vector<double> beta_db;
   std::vector<double> beta_linear;
   r.get("beta_db", beta_db);
   r.get("beta_linear", beta_linear);
   if (r.has("beta_db") || r.has("beta_linear")) {
      s.beta.clear();
      for (double b : beta_db)
         s.beta.push_back(db_to_linear(b));
      s.beta.insert(s.beta.end(), beta_linear.begin(), beta_linear.end());
   }
   r.finish();
}

void read_iterate(Reader r, IterateSpec& it)
{
   if (r.has("cases")) {
      const json& cases = r.raw("cases");
      if (!cases.is_array())
         throw InvalidArgument("scenario: 'iterate.cases' must be a list");
      it.cases.clear();
      for (std::size_t i = 0; i < cases.size(); ++i) {
         Reader c(cases[i], "iterate.cases[" + std::to_string(i) + "]");
         IterateCase ic;
         c.get("gamma_db", ic.gamma_db);
         c.get("alpha", ic.alpha);
         c.finish();
         it.cases.push_back(ic);
      }
   }
   read_beta(r, it.beta);
   r.finish();
}

void read_optimize(Reader r, OptimizeSpec& o)
{
   auto& opt = o.options;
   if (r.has("rows")) {
      const json& rows = r.raw("rows");
      if (!rows.is_array())
         throw InvalidArgument("scenario: 'optimize.rows' must be a list");
      o.rows.clear();
      for (std::size_t i = 0; i < rows.size(); ++i) {
         Reader c(rows[i], "optimize.rows[" + std::to_string(i) + "]");
         OptimizeRow row;
         c.get("gamma_db", row.gamma_db);
         c.get("cci", row.cci);
         c.finish();
         o.rows.push_back(row);
      }
   }
   opt.rate_bounds = read_bounds(r, "rate_bounds", opt.rate_bounds);
   opt.length_bounds = read_bounds(r, "length_bounds", opt.length_bounds);
   if (r.has("relay_bounds")) {
      std::vector<int> v;
      r.get("relay_bounds", v);
      if (v.size() != 2 || v[0] > v[1])
         throw InvalidArgument("scenario: 'optimize.relay_bounds' must be [lo, hi] with lo <= hi");
      opt.relay_bounds = {v[0], v[1]};
   }
   r.get("rate_tolerance", opt.rate_tolerance);
   r.get("length_tolerance", opt.length_tolerance);
   r.get("n_delta_start", opt.n_delta_start);
   r.get("n_delta_cap", opt.n_delta_cap);
   r.get("seed", opt.seed);
   r.get("restarts", opt.restarts);
   r.get("max_passes", opt.max_passes);
   r.get("stale_limit", opt.stale_limit);
   r.get("d_min", opt.evaluation.d_min);
   r.get("write_trace", o.write_trace);
   if (auto m = r.child("mutation")) {
      m->get("move_probability", opt.mutation.move_probability);
      m->get("right_probability", opt.mutation.right_probability);
      m->get("margin", opt.mutation.margin);
      m->get("min_gap", opt.mutation.min_gap);
      m->finish();
   }
   r.finish();
}

void read_validate(Reader r, ValidateSpec& v)
{
   r.get("trials", v.trials);
   r.get("seed", v.seed);
   r.get("link_sets", v.link_sets);
   r.get("mutation_draws", v.mutation_draws);
   r.get("grid_points", v.grid_points);
   r.finish();
}

void read_output(Reader r, OutputSpec& o)
{
   std::string dir = o.directory.string();
   r.get("directory", dir);
   o.directory = dir;
   r.finish();
}

void check_probability(double p, const std::string& what)
{
   if (!(p >= 0.0 && p <= 1.0))
      throw InvalidArgument("scenario: " + what + " must lie in [0, 1]");
}

void check_scenario(const Scenario& s)
{
   if (s.topology.relays < 0 || s.topology.relays > kRelayCeiling)
      throw InvalidArgument("scenario: topology.relays must lie in [0, " + std::to_string(kRelayCeiling) + "]");
   if (s.topology.positions && static_cast<int>(s.topology.positions->size()) != s.topology.relays)
      throw InvalidArgument("scenario: topology.positions must list exactly topology.relays values");
   if (!(s.topology.min_distance > 0.0))
      throw InvalidArgument("scenario: topology.min_distance must be positive");
   s.topology.build();
   s.channel.params().validate();
   if (!std::isfinite(s.channel.gamma_db))
      throw InvalidArgument("scenario: channel.gamma_db must be finite");
   if (s.cci.zones < 0)
      throw InvalidArgument("scenario: cci.zones must be non-negative");
   s.cascade().validate();
   if (!(s.fixed_point.xi > 0.0) || s.fixed_point.max_iters < 1)
      throw InvalidArgument("scenario: fixed_point needs xi > 0 and max_iters >= 1");
   if (s.simulation.trials < 1)
      throw InvalidArgument("scenario: simulation.trials must be at least 1");
   if (s.simulation.ring_copies < 0)
      throw InvalidArgument("scenario: simulation.ring_copies must be non-negative");
   for (double g : s.sweep.gamma_db)
      if (!std::isfinite(g))
         throw InvalidArgument("scenario: sweep.gamma_db values must be finite");
   for (double b : s.sweep.beta)
      if (!(b >= 0.0) || !std::isfinite(b))
         throw InvalidArgument("scenario: sweep thresholds must be non-negative");
   for (const auto& c : s.iterate.cases)
      if (!std::isfinite(c.gamma_db) || !(c.alpha > 0.0))
         throw InvalidArgument("scenario: iterate cases need finite gamma_db and alpha > 0");
   if (!(s.iterate.beta >= 0.0))
      throw InvalidArgument("scenario: iterate threshold must be non-negative");
   const auto& o = s.optimize.options;
   if (!(o.rate_bounds.lo > 0.0) || !(o.length_bounds.lo > 0.0))
      throw InvalidArgument("scenario: optimize bounds must be positive");
   if (o.relay_bounds[0] < 0 || o.relay_bounds[1] > kRelayCeiling)
      throw InvalidArgument("scenario: optimize.relay_bounds must lie in [0, " + std::to_string(kRelayCeiling) + "]");
   if (!(o.rate_tolerance > 0.0) || !(o.length_tolerance > 0.0))
      throw InvalidArgument("scenario: optimize tolerances must be positive");
   if (o.n_delta_start < 1 || o.n_delta_cap < o.n_delta_start || o.restarts < 1 || o.max_passes < 1
      || o.stale_limit < 1)
      throw InvalidArgument("scenario: invalid optimize search settings");
   if (!(o.evaluation.d_min > 0.0))
      throw InvalidArgument("scenario: optimize.d_min must be positive");
   check_probability(o.mutation.move_probability, "optimize.mutation.move_probability");
   check_probability(o.mutation.right_probability, "optimize.mutation.right_probability");
   if (!(o.mutation.margin > 0.0 && o.mutation.margin < 0.5) || !(o.mutation.min_gap >= 0.0))
      throw InvalidArgument("scenario: optimize.mutation needs 0 < margin < 0.5 and min_gap >= 0");
   for (const auto& r : s.optimize.rows)
      if (!std::isfinite(r.gamma_db))
         throw InvalidArgument("scenario: optimize row gamma_db must be finite");
   if (s.validate.trials < 1 || s.validate.link_sets < 1 || s.validate.mutation_draws < 1
      || s.validate.grid_points < 3)
      throw InvalidArgument("scenario: invalid validate settings");
}

} // namespace

LineTopology TopologySpec::build() const
{
   if (positions)
      return LineTopology(*positions, length);
   return LineTopology::equally_spaced(relays, length);
}

ChannelParamsd ChannelSpec::params() const
{
   return {db_to_linear(gamma_db), alpha, beta, 1.0};
}

CascadeScenario Scenario::cascade() const
{
   return cascade(channel.params());
}

CascadeScenario Scenario::cascade(const ChannelParamsd& params) const
{
   CascadeScenario c = CascadeScenario::standalone(topology.build(), params);
   if (cci.enabled) {
      if (cci.offsets.empty())
         c = CascadeScenario::cascade(topology.build(), params, cci.zones);
      else
         c.offsets = cci.offsets;
   }
   c.min_distance = topology.min_distance;
   c.halt_on_success = cci.halt_on_success;
   return c;
}

Scenario Scenario::parse(const std::string& json_text)
{
   json doc;
   try {
      doc = json::parse(json_text);
   } catch (const json::parse_error& e) {
      throw InvalidArgument(std::string("scenario: malformed JSON: ") + e.what());
   }
   Scenario s;
   Reader root(doc, "");
   if (auto r = root.child("topology"))
      read_topology(*r, s.topology);
   if (auto r = root.child("channel"))
      read_channel(*r, s.channel);
   if (auto r = root.child("cci"))
      read_cci(*r, s.cci);
   if (auto r = root.child("fixed_point"))
      read_fixed_point(*r, s.fixed_point);
   if (auto r = root.child("simulation"))
      read_simulation(*r, s.simulation);
   if (auto r = root.child("sweep"))
      read_sweep(*r, s.sweep);
   if (auto r = root.child("iterate"))
      read_iterate(*r, s.iterate);
   if (auto r = root.child("optimize"))
      read_optimize(*r, s.optimize);
   if (auto r = root.child("validate"))
      read_validate(*r, s.validate);
   if (auto r = root.child("output"))
      read_output(*r, s.output);
   root.finish();
   check_scenario(s);
   return s;
}

Scenario Scenario::load(const std::filesystem::path& path)
{
   std::ifstream in(path);
   if (!in)
      throw Error("cannot read scenario file '" + path.string() + "'");
   std::ostringstream text;
   text << in.rdbuf();
   return parse(text.str());
}

} // namespace brn

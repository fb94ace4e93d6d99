#include "brn/optimizer.hpp"

#include <algorithm>
#include <memory>
#include <mutex>

namespace brn {

void CandidateConfig::validate() const
{
   if (relays < 0 || static_cast<int>(relay_positions.size()) != relays)
      throw InvalidArgument("candidate: relay count does not match the positions");
   if (!(rate > 0.0))
      throw InvalidArgument("candidate: rate must be positive");
   if (!(length > 0.0))
      throw InvalidArgument("candidate: length must be positive");
}

bool precedes(const CandidateConfig& a, const CandidateConfig& b)
{
   if (a.relays != b.relays)
      return a.relays < b.relays;
   if (a.length != b.length)
      return a.length < b.length;
   if (a.relay_positions != b.relay_positions)
      return a.relay_positions < b.relay_positions;
   return a.rate < b.rate;
}

double transport_capacity(double epsilon_cbr, int relays, double length, double beta)
{
   return length * (1.0 - epsilon_cbr) / (2.0 * (relays + 1)) * std::log2(1.0 + beta);
}

const StateSpace& cached_state_space(int relays)
{
   static std::mutex mutex;
   static std::map<int, std::unique_ptr<StateSpace>> cache;
   std::lock_guard lock(mutex);
   auto& slot = cache[relays];
   if (!slot)
      slot = std::make_unique<StateSpace>(StateSpace::enumerate(relays, kRelayCeiling));
   return *slot;
}

Evaluation evaluate(const CandidateConfig& config, const EvaluationOptions& options)
{
   config.validate();
   Evaluation e;
   if (config.length < options.d_min)
      return e;
   const double beta = rate_to_beta(config.rate);
   const ChannelParamsd params{options.gamma, options.alpha, beta, 1.0};
   try {
      CascadeScenario scenario = options.cci
         ? CascadeScenario::cascade(config.topology(), params, options.zones)
         : CascadeScenario::standalone(config.topology(), params);
      scenario.min_distance = options.d_min;
      scenario.halt_on_success = options.halt_on_success;
      const auto report = fixed_point(scenario, cached_state_space(config.relays),
         options.xi, options.max_iters);
      e.epsilon_cbr = report.epsilon_cbr();
      e.upsilon = transport_capacity(e.epsilon_cbr, config.relays, config.length, beta);
      e.feasible = true;
      e.converged = report.converged;
   } catch (const FarFieldError&) {
      return Evaluation{};
   }
   return e;
}

namespace {

/// Clamps into [margin d, (1 - margin) d] and restores the minimum gap, keeping order.
void repair(std::vector<double>& x, double length, const MutationOptions& options)
{
   const int n = static_cast<int>(x.size());
   if (n == 0)
      return;
   const double lo = options.margin * length;
   const double hi = (1.0 - options.margin) * length;
   for (auto& v : x)
      v = std::clamp(v, lo, hi);
   std::sort(x.begin(), x.end());

   double gap = options.min_gap;
   if (n > 1)
      gap = std::min(gap, (hi - lo) / (n - 1));
   for (int i = 1; i < n; ++i)
      x[i] = std::max(x[i], x[i - 1] + gap);
   x[n - 1] = std::min(x[n - 1], hi);
   for (int i = n - 2; i >= 0; --i)
      x[i] = std::min(x[i], x[i + 1] - gap);
}

} // namespace

std::vector<double> apply_moves(std::span<const double> reference, double length,
   int n_delta, std::span<const int> moves, const MutationOptions& options)
{
   const int n = static_cast<int>(reference.size());
   if (static_cast<int>(moves.size()) != n)
      throw InvalidArgument("mutation: one move per relay required");
   if (n_delta < 1)
      throw InvalidArgument("mutation: n_delta must be positive");
   std::vector<double> x(reference.begin(), reference.end());
   if (std::all_of(moves.begin(), moves.end(), [](int m) { return m == 0; }))
      return x;

   const double step = length / (n_delta * n);
   for (int i = 0; i < n; ++i)
      x[i] += moves[i] * step;
   repair(x, length, options);
   return x;
}

std::vector<double> mutate_placement(std::span<const double> reference, double length,
   int n_delta, SplitMix64& rng, const MutationOptions& options)
{
   std::vector<int> moves(reference.size(), 0);
   for (auto& m : moves) {
      const bool move = rng.bernoulli(options.move_probability);
      const bool right = rng.bernoulli(options.right_probability);
      if (move)
         m = right ? 1 : -1;
   }
   return apply_moves(reference, length, n_delta, moves, options);
}

std::vector<double> initial_placement(int relays, double length, SplitMix64& rng)
{
   if (relays == 0)
      return {};
   const double separation = length / (3.0 * relays);
   const double slack = length - (relays + 1) * separation;
   std::vector<double> u(static_cast<std::size_t>(relays));
   for (auto& v : u)
      v = rng.uniform() * slack;
   std::sort(u.begin(), u.end());
   for (int i = 0; i < relays; ++i)
      u[i] += (i + 1) * separation;
   return u;
}

std::string to_string(Coordinate c)
{
   switch (c) {
   case Coordinate::rate:
      return "rate";
   case Coordinate::length:
      return "length";
   case Coordinate::relays:
      return "relays";
   }
   return "?";
}

namespace {

enum Level { kLo = 0, kMid = 1, kHi = 2 };

constexpr double kNone = -std::numeric_limits<double>::infinity();

Bracket full(const Bracket& bounds)
{
   return {bounds.lo, (bounds.lo + bounds.hi) / 2.0, bounds.hi};
}

constexpr double kImprovement = 1e-6;

Bracket centred(double centre, double half, const Bracket& bounds)
{
   half = std::min(half, (bounds.hi - bounds.lo) / 2.0);
   centre = std::clamp(centre, bounds.lo + half, bounds.hi - half);
   return {centre - half, centre, centre + half};
}

bool improves(double value, double reference)
{
   if (reference == kNone)
      return value > reference;
   return value > reference + kImprovement * std::abs(reference);
}

/**
 * Trisection update of a continuous bracket; returns true once settled.
 * A midpoint winner halves the bracket around itself. An endpoint winner
 * becomes the new midpoint at the same width, doubled when it repeats the
 * previous slide direction. Settled means a midpoint win at tolerance, or a
 * win against a search bound at tolerance.
 */
bool update_bracket(Bracket& b, int& direction, Level best, double tolerance, const Bracket& bounds)
{
   const double half = (b.hi - b.lo) / 2.0;
   if (best == kMid) {
      direction = 0;
      if (half <= tolerance)
         return true;
      b = {(b.lo + b.mid) / 2.0, b.mid, (b.mid + b.hi) / 2.0};
      return false;
   }
   const int step = best == kLo ? -1 : 1;
   const double grown = step == direction ? std::min(2.0 * half, (bounds.hi - bounds.lo) / 4.0) : half;
   const Bracket moved = centred(step < 0 ? b.lo : b.hi, std::max(grown, half), bounds);
   if (moved.mid == b.mid) {
      // Pinned against a bound: contract toward it.
      direction = 0;
      if (half <= tolerance)
         return true;
      b = step < 0 ? Bracket{b.lo, (b.lo + b.mid) / 2.0, b.mid} : Bracket{b.mid, (b.mid + b.hi) / 2.0, b.hi};
      return false;
   }
   direction = step;
   b = moved;
   return false;
}

/// Integer bracket: halves while wider than the 3-point lattice, then slides.
bool update_relays(std::array<int, 3>& r, Level best, std::array<int, 2> bounds)
{
   auto& [lo, mid, hi] = r;
   const int chosen = r[best];
   if (hi - lo <= 2) {
      mid = chosen;
      lo = std::max(bounds[0], chosen - 1);
      hi = std::min(bounds[1], chosen + 1);
      return best == kMid || chosen == bounds[0] || chosen == bounds[1];
   }
   switch (best) {
   case kMid:
      lo = mid - std::max(1, (mid - lo) / 2);
      hi = mid + std::max(1, (hi - mid) / 2);
      break;
   case kLo:
      hi = mid;
      mid = (lo + hi) / 2;
      break;
   case kHi:
      lo = mid;
      mid = (lo + hi + 1) / 2;
      break;
   }
   return false;
}

template <typename T>
Level winner(const std::array<double, 3>& profile, const std::array<T, 3>& values)
{
   Level best = kMid;
   for (Level l : {kLo, kHi})
      if (profile[l] > profile[best] && values[l] != values[best])
         best = l;
   return best;
}

std::vector<int> distinct(const std::array<int, 3>& v)
{
   std::vector<int> out;
   for (int x : v)
      if (std::find(out.begin(), out.end(), x) == out.end())
         out.push_back(x);
   return out;
}

class Search {
public:
   Search(const OptimizerOptions& options, int restart)
      : opt_(options), restart_(restart)
   {
      state_.seed = SplitMix64(options.seed, static_cast<std::uint64_t>(restart))();
      state_.n_delta = options.n_delta_start;
      const auto [nlo, nhi] = options.relay_bounds;
      state_.relays = {nlo, (nlo + nhi) / 2, nhi};
      mutation_ = options.mutation;
      mutation_.min_gap = std::max(mutation_.min_gap, options.evaluation.d_min);
      for (int n : state_.relays)
         state_.levels[n] = LevelState{full(options.rate_bounds), full(options.length_bounds)};
   }

   OptResult run()
   {
      bool relays_settled = false;
      for (int pass = 0; pass < opt_.max_passes; ++pass) {
         const Coordinate coord = pass % 2 == 0 ? Coordinate::rate : Coordinate::length;
         const double before = best_upsilon_;
         double pass_best = kNone;
         const auto counts = distinct(state_.relays);
         for (int n : counts) {
            LevelState& level = level_state(n);
            const auto [rate_profile, length_profile, best] = sweep(pass, n, level);
            pass_best = std::max(pass_best, best);
            if (coord == Coordinate::rate) {
               const std::array<double, 3> values{level.rate.lo, level.rate.mid, level.rate.hi};
               level.rate_settled = update_bracket(level.rate, level.rate_direction, winner(rate_profile, values),
                  opt_.rate_tolerance, opt_.rate_bounds);
            } else {
               const std::array<double, 3> values{level.length.lo, level.length.mid, level.length.hi};
               level.length_settled = update_bracket(level.length, level.length_direction, winner(length_profile, values),
                  opt_.length_tolerance, opt_.length_bounds);
            }
            record(pass, coord, n, level, pass_best);
         }

         const bool levels_settled = std::all_of(counts.begin(), counts.end(),
            [this](int n) { return state_.levels.at(n).settled(opt_.stale_limit); });
         if (levels_settled) {
            std::array<double, 3> profile{};
            for (int l = 0; l < 3; ++l)
               profile[l] = state_.levels.at(state_.relays[l]).best;
            relays_settled = update_relays(state_.relays, winner(profile, state_.relays), opt_.relay_bounds);
            record(pass, Coordinate::relays, state_.relays[kMid], level_state(state_.relays[kMid]), pass_best);
         }

         const bool improved = improves(best_upsilon_, before);
         if (!improved)
            state_.n_delta = std::min(state_.n_delta + 1, opt_.n_delta_cap);
         const bool lattice_settled = std::all_of(state_.relays.begin(), state_.relays.end(),
            [this](int n) { return state_.levels.contains(n) && state_.levels.at(n).settled(opt_.stale_limit); });
         if (levels_settled && relays_settled && lattice_settled && !improved
            && state_.n_delta >= opt_.n_delta_cap) {
            result_.terminated = true;
            break;
         }
      }
      result_.best = best_;
      result_.upsilon = best_upsilon_;
      result_.epsilon_cbr = best_epsilon_;
      result_.evaluations = evaluations_;
      return result_;
   }

private:
   /// Brackets of a new relay count start from the nearest explored count at half the full width.
   LevelState& level_state(int n)
   {
      if (auto it = state_.levels.find(n); it != state_.levels.end())
         return it->second;
      const LevelState* nearest = nullptr;
      int nearest_n = 0;
      for (const auto& [m, level] : state_.levels)
         if (!nearest || std::abs(m - n) < std::abs(nearest_n - n)
            || (std::abs(m - n) == std::abs(nearest_n - n) && level.best > nearest->best)) {
            nearest = &level;
            nearest_n = m;
         }
      LevelState fresh;
      const auto& rb = opt_.rate_bounds;
      const auto& db = opt_.length_bounds;
      if (nearest) {
         fresh.rate = centred(nearest->rate.mid, (rb.hi - rb.lo) / 4.0, rb);
         fresh.length = centred(nearest->length.mid, (db.hi - db.lo) / 4.0, db);
      } else {
         fresh.rate = full(rb);
         fresh.length = full(db);
      }
      return state_.levels.emplace(n, fresh).first->second;
   }

   void record(int pass, Coordinate coord, int n, const LevelState& level, double pass_best)
   {
      TraceRow row;
      row.restart = restart_;
      row.pass = pass;
      row.coordinate = coord;
      row.relays = state_.relays;
      row.level = n;
      row.rate = level.rate;
      row.length = level.length;
      row.n_delta = state_.n_delta;
      row.pass_best = pass_best;
      row.best_so_far = best_upsilon_;
      result_.trace.push_back(row);
   }

   Evaluation score(const CandidateConfig& c)
   {
      std::vector<double> key{c.rate, static_cast<double>(c.relays), c.length};
      key.insert(key.end(), c.relay_positions.begin(), c.relay_positions.end());
      auto it = memo_.find(key);
      if (it != memo_.end())
         return it->second;
      ++evaluations_;
      const Evaluation e = evaluate(c, opt_.evaluation);
      memo_.emplace(std::move(key), e);
      if (e.feasible
         && (e.upsilon > best_upsilon_ || (e.upsilon == best_upsilon_ && precedes(c, best_)))) {
         best_ = c;
         best_upsilon_ = e.upsilon;
         best_epsilon_ = e.epsilon_cbr;
      }
      return e;
   }

   SplitMix64 stream(int pass, int relays, int d_level, int draw) const
   {
      const std::uint64_t id = ((static_cast<std::uint64_t>(pass) * 64 + static_cast<std::uint64_t>(relays)) * 4
                                  + static_cast<std::uint64_t>(d_level))
            * 4
         + static_cast<std::uint64_t>(draw);
      return SplitMix64(state_.seed, id);
   }

   /// Reference for (N, d): stored, else the nearest-d reference rescaled, else a fresh draw.
   std::vector<double>& reference(int pass, int n, int d_level, double d)
   {
      auto [it, fresh] = state_.references.try_emplace({n, d});
      if (!fresh)
         return it->second;
      const std::vector<double>* nearest = nullptr;
      double nearest_d = 0.0;
      for (const auto& [key, x] : state_.references)
         if (key.first == n && key.second != d
            && (!nearest || std::abs(key.second - d) < std::abs(nearest_d - d))) {
            nearest = &x;
            nearest_d = key.second;
         }
      if (nearest) {
         it->second = *nearest;
         for (auto& v : it->second)
            v *= d / nearest_d;
      } else {
         auto rng = stream(pass, n, d_level, 3);
         it->second = initial_placement(n, d, rng);
      }
      repair(it->second, d, mutation_);
      return it->second;
   }

   struct Sweep {
      std::array<double, 3> rate_profile;
      std::array<double, 3> length_profile;
      double best;
   };

   /// Evaluates the (R, d) lattice of one relay count with three placements per (N, d).
   Sweep sweep(int pass, int n, LevelState& level)
   {
      Sweep out{{kNone, kNone, kNone}, {kNone, kNone, kNone}, kNone};
      const std::array<double, 3> rates{level.rate.lo, level.rate.mid, level.rate.hi};
      const std::array<double, 3> lengths{level.length.lo, level.length.mid, level.length.hi};
      // The outer lengths start from the midpoint's shape so the lattice compares lengths, not placements.
      const std::vector<double> shape = n == 0 ? std::vector<double>{} : reference(pass, n, kMid, lengths[kMid]);
      for (int dl = 0; dl < 3; ++dl) {
         const double d = lengths[dl];
         std::vector<std::vector<double>> placements;
         if (n == 0) {
            placements.emplace_back();
         } else if (dl == kMid) {
            placements.push_back(shape);
         } else {
            std::vector<double> x = shape;
            for (auto& v : x)
               v *= d / lengths[kMid];
            repair(x, d, mutation_);
            placements.push_back(std::move(x));
         }
         if (n > 0) {
            for (int m = 0; m < 2; ++m) {
               auto rng = stream(pass, n, dl, m);
               placements.push_back(mutate_placement(placements[0], d, state_.n_delta, rng, mutation_));
            }
         }

         std::size_t best_placement = 0;
         double best_placement_score = kNone;
         for (std::size_t p = 0; p < placements.size(); ++p) {
            for (int rl = 0; rl < 3; ++rl) {
               const double u = score(CandidateConfig{placements[p], rates[rl], n, d}).upsilon;
               out.rate_profile[rl] = std::max(out.rate_profile[rl], u);
               out.length_profile[dl] = std::max(out.length_profile[dl], u);
               out.best = std::max(out.best, u);
               if (u > best_placement_score) {
                  best_placement_score = u;
                  best_placement = p;
               }
            }
         }
         if (n > 0)
            state_.references[{n, d}] = placements[best_placement];
      }
      if (improves(out.best, level.best)) {
         level.best = out.best;
         level.stale_passes = 0;
      } else {
         level.best = std::max(level.best, out.best);
         ++level.stale_passes;
      }
      return out;
   }

   const OptimizerOptions& opt_;
   int restart_;
   SearchState state_;
   MutationOptions mutation_;
   std::map<std::vector<double>, Evaluation> memo_;
   std::uint64_t evaluations_ = 0;
   CandidateConfig best_;
   double best_upsilon_ = kNone;
   double best_epsilon_ = 1.0;
   OptResult result_;
};

} // namespace

OptResult optimize(const OptimizerOptions& options)
{
   const auto& rb = options.rate_bounds;
   const auto& db = options.length_bounds;
   if (!(rb.lo > 0.0 && rb.hi > rb.lo))
      throw InvalidArgument("optimize: invalid rate bounds");
   if (!(db.lo > 0.0 && db.hi > db.lo))
      throw InvalidArgument("optimize: invalid length bounds");
   if (options.relay_bounds[0] < 0 || options.relay_bounds[1] < options.relay_bounds[0]
      || options.relay_bounds[1] > kRelayCeiling)
      throw InvalidArgument("optimize: invalid relay bounds");
   if (options.restarts < 1 || options.n_delta_start < 1 || options.n_delta_cap < options.n_delta_start)
      throw InvalidArgument("optimize: invalid search settings");

   OptResult best;
   std::uint64_t evaluations = 0;
   std::vector<TraceRow> trace;
   for (int r = 0; r < options.restarts; ++r) {
      OptResult run = Search(options, r).run();
      evaluations += run.evaluations;
      trace.insert(trace.end(), run.trace.begin(), run.trace.end());
      if (r == 0 || run.upsilon > best.upsilon
         || (run.upsilon == best.upsilon && precedes(run.best, best.best)))
         best = std::move(run);
   }
   best.evaluations = evaluations;
   best.trace = std::move(trace);

   best.boundary_hits.clear();
   if (best.best.rate <= rb.lo || best.best.rate >= rb.hi)
      best.boundary_hits.push_back("rate");
   if (best.best.relays <= options.relay_bounds[0] && options.relay_bounds[0] > 0)
      best.boundary_hits.push_back("relays");
   if (best.best.relays >= options.relay_bounds[1])
      best.boundary_hits.push_back("relays");
   if (best.best.length <= db.lo || best.best.length >= db.hi)
      best.boundary_hits.push_back("length");
   return best;
}

} // namespace brn

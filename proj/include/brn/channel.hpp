#pragma once

/**
 * @file channel.hpp
 * @brief Path loss, relative path gains and the closed-form conditional
 * outage probability of a barraged link under Rayleigh fading.
 *
 * All distances are expressed in multiples of the reference distance d0,
 * so the path-loss law reduces to dist^(-alpha).
 */

#include "brn/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <span>
#include <string>
#include <vector>

namespace brn {

template <typename Scalar>
struct ChannelParams {
   Scalar gamma = Scalar(1); ///< linear SNR of an unfaded unit-distance link
   Scalar alpha = Scalar(3.5); ///< path-loss exponent
   Scalar beta = Scalar(1); ///< linear SINR threshold
   Scalar d0 = Scalar(1); ///< reference distance

   void validate() const
   {
      if (!(alpha > Scalar(2)))
         throw InvalidArgument("channel: alpha must exceed 2");
      if (!(gamma > Scalar(0)))
         throw InvalidArgument("channel: gamma must be positive");
      if (!(beta >= Scalar(0)))
         throw InvalidArgument("channel: beta must be non-negative");
      if (!(d0 > Scalar(0)))
         throw InvalidArgument("channel: d0 must be positive");
   }
};

using ChannelParamsd = ChannelParams<double>;

/// A potentially interfering transmitter seen by one receiver.
template <typename Scalar>
struct Interferer {
   Scalar gain = Scalar(0); ///< relative path gain
   Scalar probability = Scalar(0); ///< transmit probability in the slot
};

using Interferer_d = Interferer<double>;

template <typename Scalar>
struct LinkSet {
   std::vector<Scalar> barraging_gains;
   std::vector<Interferer<Scalar>> interferers;
};

using LinkSetd = LinkSet<double>;

template <typename Scalar>
Scalar db_to_linear(Scalar db)
{
   return std::pow(Scalar(10), db / Scalar(10));
}

template <typename Scalar>
Scalar linear_to_db(Scalar linear)
{
   return Scalar(10) * std::log10(linear);
}

/// Default far-field floor: distances are normalized to d0 = 1.
inline constexpr double kFarField = 1.0;

/**
 * Attenuation power law f(dist) = dist^(-alpha).
 *
 * Rejects distances below @p min_distance (the far-field floor, d0 = 1 by
 * default; relaxed studies may lower it).
 */
template <typename Scalar>
Scalar path_loss(Scalar dist, Scalar alpha, Scalar min_distance = Scalar(kFarField))
{
   if (!(dist >= min_distance))
      throw FarFieldError("path_loss: distance " + std::to_string(double(dist))
         + " below far-field floor " + std::to_string(double(min_distance)));
   return std::pow(dist, -alpha);
}

/// Relative path gains from each transmitter to the receiver, order preserving.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> relative_gains(Scalar receiver,
   std::span<const Scalar> transmitters, Scalar alpha,
   Scalar min_distance = Scalar(kFarField))
{
   Eigen::Matrix<Scalar, Eigen::Dynamic, 1> gains(static_cast<Eigen::Index>(transmitters.size()));
   for (std::size_t m = 0; m < transmitters.size(); ++m) {
      const Scalar dist = std::abs(transmitters[m] - receiver);
      if (dist == Scalar(0))
         throw FarFieldError("relative_gains: transmitter co-located with receiver");
      gains(static_cast<Eigen::Index>(m)) = path_loss(dist, alpha, min_distance);
   }
   return gains;
}

namespace detail {

/// Relative size of a gap below which two barraging gains count as tied.
inline constexpr double kTieTolerance = 1e-9;
/// Relative nudge applied to the later gain of a tied pair.
inline constexpr double kTieNudge = 1e-6;
/// Deviation outside [0,1] that is reported when clamping.
inline constexpr double kClampReport = 1e-9;
inline constexpr int kClampReportLimit = 10;

/// Logs the first few clamped values to stderr, then goes quiet.
inline void report_clamp(double value)
{
   static std::atomic<int> reported{0};
   const int n = reported.fetch_add(1, std::memory_order_relaxed);
   if (n < kClampReportLimit)
      std::cerr << "brn: outage probability " << value << " clamped to [0,1]\n";
   else if (n == kClampReportLimit)
      std::cerr << "brn: further clamp reports suppressed\n";
}

template <typename Scalar>
void separate_ties(std::span<Scalar> gains)
{
   for (std::size_t s = 1; s < gains.size(); ++s) {
      bool moved = true;
      while (moved) {
         moved = false;
         for (std::size_t k = 0; k < s; ++k) {
            const Scalar scale = std::max(gains[k], gains[s]);
            if (std::abs(gains[k] - gains[s]) < Scalar(kTieTolerance) * scale) {
               gains[s] *= Scalar(1) + Scalar(kTieNudge);
               moved = true;
            }
         }
      }
   }
}

template <typename Scalar>
void check_inputs(std::span<const Scalar> barraging,
   std::span<const Interferer<Scalar>> interferers)
{
   if (barraging.empty())
      throw InvalidArgument("outage_probability: empty barraging set");
   for (Scalar g : barraging)
      if (!(g > Scalar(0)) || !std::isfinite(double(g)))
         throw InvalidArgument("outage_probability: barraging gains must be positive and finite");
   for (const auto& i : interferers) {
      if (!(i.gain >= Scalar(0)) || !std::isfinite(double(i.gain)))
         throw InvalidArgument("outage_probability: interferer gains must be non-negative");
      if (!(i.probability >= Scalar(0) && i.probability <= Scalar(1)))
         throw InvalidArgument("outage_probability: interferer probability outside [0,1]");
   }
}

} // namespace detail

/**
 * Probability that the SINR at a receiver falls at or below beta, given
 * the barraging transmitters' relative gains and independent Bernoulli
 * interferers. Fading on every link is Rayleigh with unit mean power and
 * the interference term is shared by all diversity branches.
 *
 * Tied barraging gains are separated by a deterministic relative
 * perturbation of 1e-6 on the later-indexed gain.
 */
template <typename Scalar>
Scalar outage_probability(std::span<const Scalar> barraging,
   std::span<const Interferer<Scalar>> interferers, const ChannelParams<Scalar>& params)
{
   detail::check_inputs(barraging, interferers);
   if (!(params.gamma > Scalar(0)) || !(params.beta >= Scalar(0)))
      throw InvalidArgument("outage_probability: invalid channel parameters");

   // P[SINR <= 0] vanishes for positive numerators.
   if (params.beta == Scalar(0))
      return Scalar(0);

   constexpr std::size_t kInline = 16;
   Scalar inline_buf[kInline];
   std::vector<Scalar> heap_buf;
   std::span<Scalar> gains;
   if (barraging.size() <= kInline) {
      gains = std::span<Scalar>(inline_buf, barraging.size());
   } else {
      heap_buf.resize(barraging.size());
      gains = heap_buf;
   }
   std::copy(barraging.begin(), barraging.end(), gains.begin());
   detail::separate_ties(gains);

   const Scalar beta = params.beta;
   Scalar success = Scalar(0);
   for (std::size_t k = 0; k < gains.size(); ++k) {
      const Scalar gk = gains[k];
      Scalar term = std::exp(-beta / (gk * params.gamma));
      for (std::size_t s = 0; s < gains.size(); ++s)
         if (s != k)
            term *= gk / (gk - gains[s]);
      for (const auto& i : interferers)
         term *= (gk + beta * (Scalar(1) - i.probability) * i.gain) / (gk + beta * i.gain);
      success += term;
   }

   Scalar eps = Scalar(1) - success;
   if (eps < Scalar(0) || eps > Scalar(1)) {
      const Scalar excess = eps < Scalar(0) ? -eps : eps - Scalar(1);
      if (excess > Scalar(detail::kClampReport))
         detail::report_clamp(double(eps));
      eps = std::clamp(eps, Scalar(0), Scalar(1));
   }
   return eps;
}

template <typename Scalar>
Scalar outage_probability(const LinkSet<Scalar>& links, const ChannelParams<Scalar>& params)
{
   return outage_probability<Scalar>(std::span<const Scalar>(links.barraging_gains),
      std::span<const Interferer<Scalar>>(links.interferers), params);
}

} // namespace brn

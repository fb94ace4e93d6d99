#pragma once

#include "brn/error.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace brn {

/**
 * Ordered 1-D positions [S, R_1, ..., R_N, D] of one CBR.
 * The source sits at 0 and the destination at the CBR length.
 */
class LineTopology {
public:
   LineTopology() = default;

   /// Source at 0, destination at @p length, relays at the given positions.
   LineTopology(std::span<const double> relays, double length);

   static LineTopology equally_spaced(int relays, double length);

   int relay_count() const { return static_cast<int>(positions_.size()) - 2; }
   int node_count() const { return static_cast<int>(positions_.size()); }
   double length() const { return positions_(positions_.size() - 1); }

   const Eigen::VectorXd& positions() const { return positions_; }
   double position(int node) const { return positions_(node); }

   std::vector<double> relay_positions() const;

private:
   Eigen::VectorXd positions_ = Eigen::VectorXd::LinSpaced(2, 0.0, 1.0);
};

inline LineTopology::LineTopology(std::span<const double> relays, double length)
{
   if (!(length > 0.0))
      throw InvalidArgument("topology: length must be positive");
   positions_.resize(static_cast<Eigen::Index>(relays.size()) + 2);
   positions_(0) = 0.0;
   for (std::size_t i = 0; i < relays.size(); ++i) {
      const double x = relays[i];
      if (!(x > 0.0 && x < length))
         throw InvalidArgument("topology: relay positions must lie strictly inside (0, d)");
      if (i > 0 && !(x >= relays[i - 1]))
         throw InvalidArgument("topology: relay positions must be sorted");
      positions_(static_cast<Eigen::Index>(i) + 1) = x;
   }
   positions_(positions_.size() - 1) = length;
}

inline LineTopology LineTopology::equally_spaced(int relays, double length)
{
   if (relays < 0)
      throw InvalidArgument("topology: negative relay count");
   LineTopology t;
   if (!(length > 0.0))
      throw InvalidArgument("topology: length must be positive");
   t.positions_ = Eigen::VectorXd::LinSpaced(relays + 2, 0.0, length);
   return t;
}

inline std::vector<double> LineTopology::relay_positions() const
{
   return {positions_.data() + 1, positions_.data() + positions_.size() - 1};
}

} // namespace brn

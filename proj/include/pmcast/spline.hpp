#pragma once

#include <span>
#include <vector>

namespace pmcast {

/// Natural cubic spline through strictly increasing knots, evaluated at the
/// integer sample positions 0..count-1. One knot gives a constant, two knots
/// a straight line.
std::vector<double> cubic_spline_on_grid(std::span<const double> knots_x, std::span<const double> knots_y,
                                         std::size_t count);

}  // namespace pmcast

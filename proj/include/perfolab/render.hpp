#pragma once

#include <string>

#include "perfolab/covering.hpp"
#include "perfolab/marked_process.hpp"

namespace perfolab {

/// Static SVG of the slice {x_k = offset for k >= 2} in physical coordinates.
/// Without a covering every hole is drawn in the plain hole style. Balls that
/// miss the slice, and every ball when the offset lies outside the domain, are
/// omitted, leaving the frame.
std::string render_slice(const MarkedRealization& r, const CoveringResult* cov, double offset,
                         double width_px = 800.0);

}  // namespace perfolab

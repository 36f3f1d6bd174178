#pragma once

#include <vector>

#include "gigareg/field.hpp"
#include "gigareg/image.hpp"

namespace gigareg::detail {

// Warped image plus the spatial derivatives of the interpolant at each
// sample position (zero where the sample falls outside the source).
void warp_with_gradient(const ImagePlane& p, const DisplacementField& u, ImagePlane& out,
                        std::vector<double>& gx, std::vector<double>& gy);

}  // namespace gigareg::detail

#pragma once

#include <string>
#include <vector>

namespace fairfis {

// Two aligned bar panels (fis on top, fairfis below) emitted as plain SVG
// markup. Negative fairfis bars hang below the axis in a distinct fill.
std::string importance_chart_svg(const std::vector<std::string>& feature_names,
                                 const std::vector<double>& fis,
                                 const std::vector<double>& fairfis);

}  // namespace fairfis

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dnpg/grid.hpp"
#include "dnpg/schedule.hpp"

namespace dnpg {

struct DensityCurve {
    std::string label;
    DensityTable table;
};

struct Bar {
    std::string label;
    double value = 0.0;
};

// Self-contained SVG documents. Output is a pure function of the inputs (no
// timestamps), so identical inputs render byte-identical files. Element
// classes: "histogram" (one <g> per histogram series), "density-curve" (one
// <path> per curve), "sample" (scatter points), "contour", "bar".

/// Histogram of 1-D samples over `bins` (density-scaled) overlaid with curves.
std::string render_density_1d(const std::vector<Vec>& samples, const Grid& bins,
                              const std::vector<DensityCurve>& curves, const std::string& title);

/// Scatter of 2-D samples over optional density contours.
std::string render_scatter_2d(const std::vector<Vec>& samples, const std::optional<DensityTable>& underlay,
                              const std::string& title);

std::string render_bar_chart(const std::vector<Bar>& bars, const std::string& title);

} // namespace dnpg

#include "dnpg/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dnpg {

namespace {

void check_axis(const Axis& a) {
    if (a.points < 2 || !(a.hi > a.lo) || !std::isfinite(a.lo) || !std::isfinite(a.hi))
        throw std::invalid_argument("grid axis needs lo < hi and at least 2 points");
}

std::optional<int> axis_cell(const Axis& a, double x) {
    if (!(x >= a.lo && x <= a.hi)) return std::nullopt;
    const auto i = static_cast<int>(std::lround((x - a.lo) / a.spacing()));
    return std::clamp(i, 0, a.points - 1);
}

} // namespace

Grid::Grid(Axis x) : dim_(1), axes_{x, Axis{}} { check_axis(x); }

Grid::Grid(Axis x, Axis y) : dim_(2), axes_{x, y} {
    check_axis(x);
    check_axis(y);
}

std::size_t Grid::size() const {
    if (dim_ == 1) return static_cast<std::size_t>(axes_[0].points);
    return static_cast<std::size_t>(axes_[0].points) * static_cast<std::size_t>(axes_[1].points);
}

Eigen::VectorXd Grid::point(std::size_t index) const {
    Eigen::VectorXd z(dim_);
    if (dim_ == 1) {
        z[0] = axes_[0].node(static_cast<int>(index));
    } else {
        const auto ny = static_cast<std::size_t>(axes_[1].points);
        z[0] = axes_[0].node(static_cast<int>(index / ny));
        z[1] = axes_[1].node(static_cast<int>(index % ny));
    }
    return z;
}

double Grid::weight(std::size_t index) const {
    if (dim_ == 1) return axes_[0].weight(static_cast<int>(index));
    const auto ny = static_cast<std::size_t>(axes_[1].points);
    return axes_[0].weight(static_cast<int>(index / ny)) * axes_[1].weight(static_cast<int>(index % ny));
}

std::optional<std::size_t> Grid::cell_of(const Eigen::VectorXd& z) const {
    if (z.size() != dim_) throw std::invalid_argument("grid: dimension mismatch");
    const auto ix = axis_cell(axes_[0], z[0]);
    if (!ix) return std::nullopt;
    if (dim_ == 1) return static_cast<std::size_t>(*ix);
    const auto iy = axis_cell(axes_[1], z[1]);
    if (!iy) return std::nullopt;
    return static_cast<std::size_t>(*ix) * static_cast<std::size_t>(axes_[1].points) + static_cast<std::size_t>(*iy);
}

double Grid::extent() const {
    double e = 0.0;
    for (int k = 0; k < dim_; ++k) e = std::max({e, std::abs(axes_[k].lo), std::abs(axes_[k].hi)});
    return e;
}

bool Grid::operator==(const Grid& o) const {
    if (dim_ != o.dim_) return false;
    for (int k = 0; k < dim_; ++k) {
        const auto& a = axes_[static_cast<std::size_t>(k)];
        const auto& b = o.axes_[static_cast<std::size_t>(k)];
        if (a.lo != b.lo || a.hi != b.hi || a.points != b.points) return false;
    }
    return true;
}

double DensityTable::integral() const {
    double sum = 0.0;
    for (std::size_t i = 0; i < density.size(); ++i) sum += density[i] * grid.weight(i);
    return sum;
}

std::vector<double> DensityTable::masses() const {
    std::vector<double> m(density.size());
    for (std::size_t i = 0; i < density.size(); ++i) m[i] = density[i] * grid.weight(i);
    return m;
}

} // namespace dnpg

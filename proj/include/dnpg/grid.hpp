#pragma once

#include <array>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace dnpg {

/// Uniform nodes lo = x_0 < ... < x_{n-1} = hi.
struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    int points = 2;

    double spacing() const { return (hi - lo) / (points - 1); }
    double node(int i) const { return lo + spacing() * i; }
    /// Trapezoid weight of node i.
    double weight(int i) const { return (i == 0 || i == points - 1) ? 0.5 * spacing() : spacing(); }
};

/// Rectangular grid in one or two dimensions. Quadrature uses the product
/// trapezoid rule; histograms bin each sample into the cell
/// [x_i - h/2, x_i + h/2] (clipped to [lo, hi]) around its nearest node, so a
/// node's trapezoid mass and its histogram cell cover the same interval.
class Grid {
public:
    Grid() = default;
    explicit Grid(Axis x);
    Grid(Axis x, Axis y);

    int dim() const { return dim_; }
    const Axis& axis(int k) const { return axes_[static_cast<std::size_t>(k)]; }
    std::size_t size() const;

    /// Flat index ordering is row-major with the first axis outermost.
    Eigen::VectorXd point(std::size_t index) const;
    double weight(std::size_t index) const;
    std::optional<std::size_t> cell_of(const Eigen::VectorXd& z) const;

    /// Largest half-width of the box measured from the origin; used as a
    /// divergence scale by the Langevin sampler.
    double extent() const;

    bool operator==(const Grid& other) const;

private:
    int dim_ = 0;
    std::array<Axis, 2> axes_{};
};

/// Density values at the grid nodes. masses()[i] = density[i] * weight(i).
struct DensityTable {
    Grid grid;
    std::vector<double> density;

    double integral() const;
    std::vector<double> masses() const;
};

} // namespace dnpg

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "difftherm/numerics/types.hpp"

namespace difftherm {

/// Uniform cell-centered rectangular grid on a box in R^n (n <= 4).
///
/// Cell centers along axis k sit at lo_k + (i + 1/2) * h_k, i = 0..counts_k-1.
/// The quadrature weight of every cell is the cell volume prod_k h_k, so
/// integrals are midpoint sums and discrete conservation statements are exact.
class Grid {
public:
    Grid() = default;

    Grid(std::vector<double> lo, std::vector<double> hi, std::vector<int> counts)
        : lo_(std::move(lo)), hi_(std::move(hi)), counts_(std::move(counts))
    {
        if (lo_.size() != hi_.size() || lo_.size() != counts_.size())
            throw std::invalid_argument("Grid: bounds/counts dimension mismatch");
        if (lo_.empty() || lo_.size() > 4)
            throw std::invalid_argument("Grid: dimension must be 1..4");
        spacing_.resize(dim());
        std::size_t n = 1;
        for (int k = 0; k < dim(); ++k) {
            if (!(lo_[k] < hi_[k]))
                throw std::invalid_argument("Grid: requires lo < hi per axis");
            if (counts_[k] < 3)
                throw std::invalid_argument("Grid: requires >= 3 cells per axis");
            spacing_[k] = (hi_[k] - lo_[k]) / counts_[k];
            n *= static_cast<std::size_t>(counts_[k]);
        }
        size_ = static_cast<Eigen::Index>(n);
        strides_.assign(dim(), 1);
        for (int k = dim() - 2; k >= 0; --k)
            strides_[k] = strides_[k + 1] * counts_[k + 1];
    }

    static Grid uniform(double lo, double hi, int count, int dim = 1)
    {
        return Grid(std::vector<double>(dim, lo), std::vector<double>(dim, hi),
                    std::vector<int>(dim, count));
    }

    int dim() const { return static_cast<int>(lo_.size()); }
    Eigen::Index size() const { return size_; }
    double lo(int k) const { return lo_[k]; }
    double hi(int k) const { return hi_[k]; }
    int count(int k) const { return counts_[k]; }
    double spacing(int k) const { return spacing_[k]; }
    Eigen::Index stride(int k) const { return strides_[k]; }

    /// Volume of one cell = quadrature weight (uniform over the grid).
    double cell_volume() const
    {
        double v = 1;
        for (int k = 0; k < dim(); ++k) v *= spacing_[k];
        return v;
    }

    double box_volume() const
    {
        double v = 1;
        for (int k = 0; k < dim(); ++k) v *= hi_[k] - lo_[k];
        return v;
    }

    /// Multi-index of a flat cell index.
    std::array<int, 4> unravel(Eigen::Index idx) const
    {
        std::array<int, 4> mi{0, 0, 0, 0};
        for (int k = 0; k < dim(); ++k) {
            mi[k] = static_cast<int>(idx / strides_[k]);
            idx %= strides_[k];
        }
        return mi;
    }

    Eigen::Index ravel(const std::array<int, 4>& mi) const
    {
        Eigen::Index idx = 0;
        for (int k = 0; k < dim(); ++k) idx += mi[k] * strides_[k];
        return idx;
    }

    double center(int k, int i) const { return lo_[k] + (i + 0.5) * spacing_[k]; }

    Vector cell_center(Eigen::Index idx) const
    {
        auto mi = unravel(idx);
        Vector x(dim());
        for (int k = 0; k < dim(); ++k) x[k] = center(k, mi[k]);
        return x;
    }

    bool contains(const Vector& x) const
    {
        for (int k = 0; k < dim(); ++k)
            if (x[k] < lo_[k] || x[k] > hi_[k]) return false;
        return true;
    }

    /// Flat index of the cell containing x (clamped to the box).
    Eigen::Index locate(const Vector& x) const
    {
        std::array<int, 4> mi{0, 0, 0, 0};
        for (int k = 0; k < dim(); ++k) {
            int i = static_cast<int>(std::floor((x[k] - lo_[k]) / spacing_[k]));
            mi[k] = std::min(std::max(i, 0), counts_[k] - 1);
        }
        return ravel(mi);
    }

    bool operator==(const Grid& o) const
    {
        return lo_ == o.lo_ && hi_ == o.hi_ && counts_ == o.counts_;
    }

private:
    std::vector<double> lo_, hi_, spacing_;
    std::vector<int> counts_;
    std::vector<Eigen::Index> strides_;
    Eigen::Index size_ = 0;
};

/// Scalar field sampled at cell centers.
struct GridField {
    Grid grid;
    Vector values;

    GridField() = default;
    GridField(Grid g, Vector v) : grid(std::move(g)), values(std::move(v))
    {
        if (values.size() != grid.size())
            throw std::invalid_argument("GridField: value count does not match grid");
    }

    template <typename F>
    static GridField sample(const Grid& g, F&& f)
    {
        Vector v(g.size());
        for (Eigen::Index i = 0; i < g.size(); ++i) v[i] = f(g.cell_center(i));
        return GridField(g, std::move(v));
    }
};

/// Vector field sampled at cell centers, one row per cell.
struct CurrentField {
    Grid grid;
    Matrix vectors;  // size() x dim()

    CurrentField() = default;
    CurrentField(Grid g, Matrix v) : grid(std::move(g)), vectors(std::move(v))
    {
        if (vectors.rows() != grid.size() || vectors.cols() != grid.dim())
            throw std::invalid_argument("CurrentField: shape does not match grid");
    }

    template <typename F>
    static CurrentField sample(const Grid& g, F&& f)
    {
        Matrix v(g.size(), g.dim());
        for (Eigen::Index i = 0; i < g.size(); ++i) v.row(i) = f(g.cell_center(i)).transpose();
        return CurrentField(g, std::move(v));
    }
};

/// Midpoint-rule integral of a field; deterministic summation order.
inline double grid_integrate(const GridField& field, const Grid& grid)
{
    if (!(field.grid == grid))
        throw std::invalid_argument("grid_integrate: field not sampled on this grid");
    double acc = 0;
    for (Eigen::Index i = 0; i < field.values.size(); ++i) acc += field.values[i];
    return acc * grid.cell_volume();
}

inline double grid_integrate(const GridField& field) { return grid_integrate(field, field.grid); }

namespace detail {

/// ln f with empty cells clamped to the smallest populated value, so that
/// finite differences near the support edge stay finite.
inline Vector safe_log(const Vector& f)
{
    double lo = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < f.size(); ++i)
        if (f[i] > 0) lo = std::min(lo, std::log(f[i]));
    if (!std::isfinite(lo)) lo = -746.0;  // below double underflow; field is empty
    Vector out(f.size());
    for (Eigen::Index i = 0; i < f.size(); ++i) out[i] = f[i] > 0 ? std::log(f[i]) : lo;
    return out;
}

/// Derivative of `values` along axis k at every cell: second-order central in
/// the interior, second-order one-sided at the two boundary layers.  Exact for
/// quadratic fields everywhere.
inline void axis_derivative(const Grid& g, const Vector& values, int k, Vector& out)
{
    const double h = g.spacing(k);
    const Eigen::Index s = g.stride(k);
    const int m = g.count(k);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        const int a = static_cast<int>((i / s) % m);
        if (a == 0)
            out[i] = (-3 * values[i] + 4 * values[i + s] - values[i + 2 * s]) / (2 * h);
        else if (a == m - 1)
            out[i] = (3 * values[i] - 4 * values[i - s] + values[i - 2 * s]) / (2 * h);
        else
            out[i] = (values[i + s] - values[i - s]) / (2 * h);
    }
}

}  // namespace detail

/// Gradient of a scalar field (per-axis finite differences).
inline CurrentField grid_gradient(const GridField& field, const Grid& grid)
{
    if (!(field.grid == grid))
        throw std::invalid_argument("grid_gradient: field not sampled on this grid");
    Matrix grad(grid.size(), grid.dim());
    Vector tmp(grid.size());
    for (int k = 0; k < grid.dim(); ++k) {
        detail::axis_derivative(grid, field.values, k, tmp);
        grad.col(k) = tmp;
    }
    return CurrentField(grid, std::move(grad));
}

inline CurrentField grid_gradient(const GridField& field) { return grid_gradient(field, field.grid); }

/// Divergence of a vector field, composed from the same per-axis stencils.
inline GridField grid_divergence(const CurrentField& field)
{
    const Grid& g = field.grid;
    Vector div = Vector::Zero(g.size());
    Vector tmp(g.size());
    for (int k = 0; k < g.dim(); ++k) {
        Vector comp = field.vectors.col(k);
        detail::axis_derivative(g, comp, k, tmp);
        div += tmp;
    }
    return GridField(g, std::move(div));
}

/// Multilinear interpolation of a cell-centered scalar field; clamps to the
/// outermost cell centers.
inline double interpolate(const GridField& field, const Vector& x)
{
    const Grid& g = field.grid;
    const int n = g.dim();
    std::array<int, 4> base{0, 0, 0, 0};
    std::array<double, 4> frac{0, 0, 0, 0};
    for (int k = 0; k < n; ++k) {
        double t = (x[k] - g.lo(k)) / g.spacing(k) - 0.5;
        t = std::min(std::max(t, 0.0), static_cast<double>(g.count(k) - 1));
        int i = std::min(static_cast<int>(std::floor(t)), g.count(k) - 2);
        base[k] = i;
        frac[k] = t - i;
    }
    double acc = 0;
    for (int corner = 0; corner < (1 << n); ++corner) {
        double w = 1;
        std::array<int, 4> mi = base;
        for (int k = 0; k < n; ++k) {
            if (corner & (1 << k)) {
                mi[k] += 1;
                w *= frac[k];
            } else {
                w *= 1 - frac[k];
            }
        }
        acc += w * field.values[g.ravel(mi)];
    }
    return acc;
}

/// Multilinear interpolation of a vector field.
inline Vector interpolate(const CurrentField& field, const Vector& x)
{
    Vector out(field.grid.dim());
    for (int k = 0; k < field.grid.dim(); ++k) {
        GridField comp(field.grid, field.vectors.col(k));
        out[k] = interpolate(comp, x);
    }
    return out;
}

/// Scales a nonnegative field into a probability density (integral one).
inline GridField normalize_density(GridField f)
{
    double mass = grid_integrate(f, f.grid);
    if (!(mass > 0)) throw std::runtime_error("normalize_density: nonpositive mass");
    f.values /= mass;
    return f;
}

}  // namespace difftherm

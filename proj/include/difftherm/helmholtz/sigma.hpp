#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "difftherm/numerics/grid.hpp"
#include "difftherm/numerics/rng.hpp"

namespace difftherm {

/// Axis-aligned sampling box for volume estimation.
struct SampleBox {
    Vector lo, hi;

    double volume() const
    {
        double v = 1;
        for (Eigen::Index k = 0; k < lo.size(); ++k) v *= hi[k] - lo[k];
        return v;
    }

    Vector sample(RngStream& rng) const
    {
        Vector x(lo.size());
        for (Eigen::Index k = 0; k < lo.size(); ++k) x[k] = rng.uniform(lo[k], hi[k]);
        return x;
    }

    /// True when x sits within `margin` (relative) of some face.
    bool near_boundary(const Vector& x, double margin = 0.005) const
    {
        for (Eigen::Index k = 0; k < lo.size(); ++k) {
            const double w = hi[k] - lo[k];
            if (x[k] - lo[k] < margin * w || hi[k] - x[k] < margin * w) return true;
        }
        return false;
    }
};

enum class SigmaMethod { MonteCarloVolume, GridQuadrature, GaussianAnalytic };

inline const char* to_string(SigmaMethod m)
{
    switch (m) {
        case SigmaMethod::MonteCarloVolume: return "monte_carlo";
        case SigmaMethod::GridQuadrature: return "grid_quadrature";
        case SigmaMethod::GaussianAnalytic: return "gaussian_analytic";
    }
    return "?";
}

/// Configurational entropy table sigma(h, alpha) = ln Vol{ phi(., alpha) <= h }
/// with derived temperature theta = (d sigma/d h)^-1 and generalized force
/// F_alpha = theta (d sigma/d alpha).  Undefined entries (empty sub-level
/// sets) are NaN.
struct SigmaTable {
    std::vector<double> h_grid;
    std::vector<double> alpha_grid;
    Matrix sigma;          // h index x alpha index
    Matrix sigma_se;       // Monte Carlo standard error of sigma (0 for exact methods)
    Matrix dsigma_dh;
    Matrix dsigma_dalpha;
    Matrix theta;
    Matrix force_alpha;
    SigmaMethod method = SigmaMethod::MonteCarloVolume;
    bool partials_filled = false;
};

/// One sigma column at fixed alpha by uniform-box Monte Carlo.
///
/// sigma(h) = ln(box volume * fraction of samples with phi <= h); the standard
/// error follows from the binomial law of the counts.  Samples of the
/// sub-level set that fall near the box boundary indicate poor coverage: more
/// than 0.1% of them is an error.
struct SigmaColumn {
    std::vector<double> sigma;
    std::vector<double> se;
    double boundary_fraction = 0;
};

inline SigmaColumn boltzmann_entropy(const std::function<double(const Vector&, double)>& phi,
                                     double alpha, const std::vector<double>& h_grid,
                                     const SampleBox& box, long n_samples, std::uint64_t seed)
{
    if (n_samples < 10000)
        throw std::invalid_argument("boltzmann_entropy: need at least 1e4 samples");
    for (std::size_t i = 1; i < h_grid.size(); ++i)
        if (!(h_grid[i] > h_grid[i - 1]))
            throw std::invalid_argument("boltzmann_entropy: h grid must be increasing");

    RngStream rng(seed, 0);
    const double h_max = h_grid.back();
    std::vector<long> below(h_grid.size(), 0);
    long in_set = 0, boundary_hits = 0;
    for (long s = 0; s < n_samples; ++s) {
        Vector x = box.sample(rng);
        const double v = phi(x, alpha);
        if (v > h_max) continue;
        ++in_set;
        if (box.near_boundary(x)) ++boundary_hits;
        // count into the first level that contains the sample
        auto it = std::lower_bound(h_grid.begin(), h_grid.end(), v);
        for (std::size_t i = static_cast<std::size_t>(it - h_grid.begin()); i < h_grid.size(); ++i)
            ++below[i];
    }

    SigmaColumn col;
    col.boundary_fraction = in_set > 0 ? static_cast<double>(boundary_hits) / in_set : 0.0;
    if (col.boundary_fraction > 1e-3)
        throw std::runtime_error("boltzmann_entropy: sub-level set touches the sampling box "
                                 "(boundary mass " + std::to_string(col.boundary_fraction) + ")");

    const double vol = box.volume();
    for (std::size_t i = 0; i < h_grid.size(); ++i) {
        if (below[i] == 0) {
            col.sigma.push_back(std::numeric_limits<double>::quiet_NaN());
            col.se.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        const double p = static_cast<double>(below[i]) / n_samples;
        col.sigma.push_back(std::log(vol * p));
        col.se.push_back(std::sqrt((1 - p) / (p * n_samples)));
    }
    return col;
}

/// Deterministic sigma column by midpoint counting on a fine grid.
inline SigmaColumn sigma_by_grid_quadrature(const std::function<double(const Vector&, double)>& phi,
                                            double alpha, const std::vector<double>& h_grid,
                                            const Grid& fine)
{
    std::vector<double> vols(h_grid.size(), 0);
    const double cv = fine.cell_volume();
    for (Eigen::Index i = 0; i < fine.size(); ++i) {
        const double v = phi(fine.cell_center(i), alpha);
        auto it = std::lower_bound(h_grid.begin(), h_grid.end(), v);
        for (std::size_t k = static_cast<std::size_t>(it - h_grid.begin()); k < h_grid.size(); ++k)
            vols[k] += cv;
    }
    SigmaColumn col;
    for (double v : vols) {
        col.sigma.push_back(v > 0 ? std::log(v) : std::numeric_limits<double>::quiet_NaN());
        col.se.push_back(0.0);
    }
    return col;
}

/// Closed-form sigma of the quadratic potential x^T Xi^{-1} x / 2: the
/// sub-level set {phi <= h} is the ellipsoid with semi-axes sqrt(2 h lam_k),
/// so sigma = (n/2) ln h + (1/2) ln det Xi + (n/2) ln 2 + ln V_n with V_n the
/// unit-ball volume.
inline double gaussian_sigma_analytic(const Matrix& xi, double h)
{
    if (!(h > 0)) throw std::domain_error("gaussian_sigma_analytic: h must be positive");
    Eigen::SelfAdjointEigenSolver<Matrix> es(xi);
    if (es.eigenvalues().minCoeff() <= 0)
        throw std::invalid_argument("gaussian_sigma_analytic: Xi must be positive definite");
    const double n = static_cast<double>(xi.rows());
    const double log_det = es.eigenvalues().array().log().sum();
    const double log_vn = (n / 2) * std::log(std::numbers::pi) - std::lgamma(n / 2 + 1);
    return (n / 2) * std::log(h) + 0.5 * log_det + (n / 2) * std::log(2.0) + log_vn;
}

/// Full Monte-Carlo table over (h, alpha); one independent stream per column.
inline SigmaTable build_sigma_table(const std::function<double(const Vector&, double)>& phi,
                                    const std::vector<double>& h_grid,
                                    const std::vector<double>& alpha_grid, const SampleBox& box,
                                    long n_samples, std::uint64_t seed)
{
    SigmaTable t;
    t.h_grid = h_grid;
    t.alpha_grid = alpha_grid;
    t.method = SigmaMethod::MonteCarloVolume;
    const auto nh = static_cast<Eigen::Index>(h_grid.size());
    const auto na = static_cast<Eigen::Index>(alpha_grid.size());
    t.sigma.resize(nh, na);
    t.sigma_se.resize(nh, na);
    for (Eigen::Index a = 0; a < na; ++a) {
        SigmaColumn col = boltzmann_entropy(phi, alpha_grid[a], h_grid, box, n_samples, seed + a);
        for (Eigen::Index i = 0; i < nh; ++i) {
            t.sigma(i, a) = col.sigma[i];
            t.sigma_se(i, a) = col.se[i];
        }
    }
    return t;
}

/// Analytic table for a Gaussian family Xi(alpha).
inline SigmaTable build_gaussian_sigma_table(const std::function<Matrix(double)>& xi_of_alpha,
                                             const std::vector<double>& h_grid,
                                             const std::vector<double>& alpha_grid)
{
    SigmaTable t;
    t.h_grid = h_grid;
    t.alpha_grid = alpha_grid;
    t.method = SigmaMethod::GaussianAnalytic;
    const auto nh = static_cast<Eigen::Index>(h_grid.size());
    const auto na = static_cast<Eigen::Index>(alpha_grid.size());
    t.sigma.resize(nh, na);
    t.sigma_se = Matrix::Zero(nh, na);
    for (Eigen::Index a = 0; a < na; ++a) {
        Matrix xi = xi_of_alpha(alpha_grid[a]);
        for (Eigen::Index i = 0; i < nh; ++i) t.sigma(i, a) = gaussian_sigma_analytic(xi, t.h_grid[i]);
    }
    return t;
}

namespace detail {

/// Nonuniform second-order first derivative down the rows of y (one column at
/// a time) along the strictly increasing abscissa x.
inline Matrix derivative_down_rows(const std::vector<double>& x, const Matrix& y)
{
    const auto n = static_cast<Eigen::Index>(x.size());
    Matrix dy(y.rows(), y.cols());
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (i == 0) {
                dy(i, j) = (y(1, j) - y(0, j)) / (x[1] - x[0]);
            } else if (i == n - 1) {
                dy(i, j) = (y(n - 1, j) - y(n - 2, j)) / (x[n - 1] - x[n - 2]);
            } else {
                const double hm = x[i] - x[i - 1], hp = x[i + 1] - x[i];
                dy(i, j) = (hm * hm * y(i + 1, j) - hp * hp * y(i - 1, j) +
                            (hp * hp - hm * hm) * y(i, j)) /
                           (hm * hp * (hm + hp));
            }
        }
    }
    return dy;
}

}  // namespace detail

/// Fills the derived columns: d sigma/d h and d sigma/d alpha by second-order
/// finite differences on the table grids, theta as the reciprocal h-slope and
/// the force through F_alpha = theta (d sigma/d alpha), which avoids tracing
/// iso-sigma contours.  Requires sigma increasing in h beyond the noise.
inline void theta_and_force(SigmaTable& t)
{
    if (t.h_grid.size() < 3 || t.alpha_grid.size() < 3)
        throw std::invalid_argument("theta_and_force: need at least a 3x3 table");
    const auto nh = static_cast<Eigen::Index>(t.h_grid.size());
    const auto na = static_cast<Eigen::Index>(t.alpha_grid.size());

    for (Eigen::Index a = 0; a < na; ++a)
        for (Eigen::Index i = 1; i < nh; ++i) {
            const double step = t.sigma(i, a) - t.sigma(i - 1, a);
            const double noise = 2 * (t.sigma_se(i, a) + t.sigma_se(i - 1, a));
            if (std::isfinite(step) && step < -noise)
                throw std::runtime_error("theta_and_force: sigma not increasing in h");
        }

    t.dsigma_dh = detail::derivative_down_rows(t.h_grid, t.sigma);
    t.dsigma_dalpha =
        detail::derivative_down_rows(t.alpha_grid, t.sigma.transpose().eval()).transpose();

    t.theta = t.dsigma_dh.cwiseInverse();
    t.force_alpha = t.theta.cwiseProduct(t.dsigma_dalpha);
    t.partials_filled = true;
}

/// Maxwell-relation audit F_alpha / theta = (d sigma/d alpha)_h on interior
/// table points; returns the worst absolute residual.
struct MaxwellReport {
    Matrix residual;
    double max_abs = 0;
};

inline MaxwellReport maxwell_check(const SigmaTable& t)
{
    if (!t.partials_filled) throw std::invalid_argument("maxwell_check: fill theta/force first");
    MaxwellReport rep;
    const auto nh = static_cast<Eigen::Index>(t.h_grid.size());
    const auto na = static_cast<Eigen::Index>(t.alpha_grid.size());
    rep.residual = Matrix::Zero(nh, na);
    for (Eigen::Index i = 1; i + 1 < nh; ++i)
        for (Eigen::Index a = 1; a + 1 < na; ++a) {
            const double r = t.force_alpha(i, a) / t.theta(i, a) - t.dsigma_dalpha(i, a);
            rep.residual(i, a) = r;
            if (std::isfinite(r)) rep.max_abs = std::max(rep.max_abs, std::abs(r));
        }
    return rep;
}

/// Microcanonical temperature estimates from a thin shell {h < phi <= h+dh}:
/// the shell average of x_k dphi/dx_k for every coordinate (all of which must
/// agree), and the volumetric estimate dh / d sigma from the sub-level
/// volumes of the same sample set.
struct VirialReport {
    Vector theta_per_coordinate;
    Vector se_per_coordinate;
    double theta_volume = 0;
    long shell_samples = 0;
};

inline VirialReport virial_check(const std::function<double(const Vector&, double)>& phi,
                                 const std::function<Vector(const Vector&, double)>& grad_phi,
                                 double alpha, double h, double shell_width, const SampleBox& box,
                                 long n_samples, std::uint64_t seed)
{
    RngStream rng(seed, 0);
    const int n = static_cast<int>(box.lo.size());
    Vector sum = Vector::Zero(n), sum2 = Vector::Zero(n);
    long in_shell = 0, below_lo = 0, below_hi = 0;
    for (long s = 0; s < n_samples; ++s) {
        Vector x = box.sample(rng);
        const double v = phi(x, alpha);
        if (v <= h) ++below_lo;
        if (v <= h + shell_width) ++below_hi;
        if (v > h && v <= h + shell_width) {
            ++in_shell;
            Vector g = grad_phi(x, alpha);
            for (int k = 0; k < n; ++k) {
                const double w = x[k] * g[k];
                sum[k] += w;
                sum2[k] += w * w;
            }
        }
    }
    if (in_shell < 100) throw std::runtime_error("virial_check: shell is (nearly) empty");

    VirialReport rep;
    rep.shell_samples = in_shell;
    rep.theta_per_coordinate = sum / in_shell;
    rep.se_per_coordinate.resize(n);
    for (int k = 0; k < n; ++k) {
        const double var = sum2[k] / in_shell - rep.theta_per_coordinate[k] * rep.theta_per_coordinate[k];
        rep.se_per_coordinate[k] = std::sqrt(std::max(var, 0.0) / in_shell);
    }
    if (below_lo > 0 && below_hi > below_lo)
        rep.theta_volume =
            shell_width / (std::log(static_cast<double>(below_hi)) - std::log(static_cast<double>(below_lo)));
    return rep;
}

}  // namespace difftherm

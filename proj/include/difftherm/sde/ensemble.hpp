#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "difftherm/model/diffusion_model.hpp"
#include "difftherm/numerics/grid.hpp"
#include "difftherm/numerics/rng.hpp"

namespace difftherm {

/// Initial law of the ensemble: a point mass or a Gaussian.
struct InitialDistribution {
    Vector mean;
    std::optional<Matrix> covariance;  // absent: point mass at mean

    static InitialDistribution point(Vector x0) { return {std::move(x0), std::nullopt}; }
    static InitialDistribution gaussian(Vector mean, Matrix cov)
    {
        return {std::move(mean), std::move(cov)};
    }
};

struct EnsembleSpec {
    long n_paths = 1;
    double dt = 1e-3;
    std::vector<double> output_times;  // strictly increasing, > 0
    InitialDistribution initial;
    std::uint64_t seed = 0;
    std::optional<Grid> histogram_grid;       // also enables the current estimate
    std::optional<std::pair<double, double>> pair_times;  // accumulate E[x(t0) x(t1)^T]
};

struct EnsembleStats {
    std::vector<double> times;
    std::vector<Vector> mean;
    std::vector<Matrix> covariance;         // unbiased sample covariance
    std::vector<GridField> histogram;       // per output time, when a grid was given
    std::vector<CurrentField> current;      // exported orientation, NaN on empty cells
    std::vector<double> outside_fraction;   // sample mass outside the histogram box
    Matrix cross_moment;                    // E[x(t0) x(t1)^T] when pair_times set
    long n_paths = 0;
};

/// Empirical current on a histogram grid, exported in the same orientation as
/// the grid solver (J = D grad(f)/beta - b f): the advective part uses the
/// sampled cell-mean drift, the diffusive part differences D f-hat on the
/// histogram.  Cells without samples are marked NaN, not zero.
inline CurrentField current_from_histogram(const DiffusionModel& model, const GridField& density,
                                           const Vector& counts, const Matrix& drift_sums)
{
    const Grid& g = density.grid;
    const int n = g.dim();
    Matrix j(g.size(), n);

    // diffusive part: sum_l d(D_kl f)/dx_l
    Matrix diff = Matrix::Zero(g.size(), n);
    Vector tmp(g.size());
    for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
            Vector dkl_f(g.size());
            bool nonzero = false;
            for (Eigen::Index i = 0; i < g.size(); ++i) {
                const double dv = model.diffusion_at(g.cell_center(i))(k, l);
                dkl_f[i] = dv * density.values[i];
                nonzero = nonzero || dv != 0;
            }
            if (!nonzero) continue;
            detail::axis_derivative(g, dkl_f, l, tmp);
            diff.col(k) += tmp;
        }
    }

    for (Eigen::Index i = 0; i < g.size(); ++i) {
        if (counts[i] <= 0) {
            j.row(i).setConstant(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        Vector mean_b = drift_sums.row(i).transpose() / counts[i];
        // transport current b f - D grad f / beta, then exported orientation
        j.row(i) = -(mean_b * density.values[i] - diff.row(i).transpose() / model.beta);
    }
    return CurrentField(g, std::move(j));
}

/// Current estimate from a stand-alone set of samples at one time.
inline CurrentField estimate_current(const DiffusionModel& model,
                                     const std::vector<Vector>& samples, const Grid& grid)
{
    Vector counts = Vector::Zero(grid.size());
    Matrix drift_sums = Matrix::Zero(grid.size(), grid.dim());
    double inside = 0;
    for (const Vector& x : samples) {
        if (!grid.contains(x)) continue;
        Eigen::Index c = grid.locate(x);
        counts[c] += 1;
        drift_sums.row(c) += model.drift(x).transpose();
        inside += 1;
    }
    if (inside <= 0) throw std::invalid_argument("estimate_current: no samples inside the grid");
    GridField f(grid, counts / (static_cast<double>(samples.size()) * grid.cell_volume()));
    return current_from_histogram(model, f, counts, drift_sums);
}

/// Euler-Maruyama ensemble: X <- X + b(X) dt + sqrt(2 dt / beta) sigma(X) xi
/// with sigma sigma^T = D.  Path p draws from the stream (seed, p), so results
/// are reproducible and independent of any execution interleaving; statistics
/// are accumulated in path order.
inline EnsembleStats simulate(const DiffusionModel& model, const EnsembleSpec& spec)
{
    if (spec.n_paths < 1) throw std::invalid_argument("simulate: need at least one path");
    if (!(spec.dt > 0)) throw std::invalid_argument("simulate: dt must be positive");
    if (spec.output_times.empty()) throw std::invalid_argument("simulate: no output times");
    for (std::size_t k = 0; k < spec.output_times.size(); ++k) {
        if (!(spec.output_times[k] > 0) ||
            (k > 0 && !(spec.output_times[k] > spec.output_times[k - 1])))
            throw std::invalid_argument("simulate: output times must be positive and increasing");
    }

    const int n = model.dim;
    const std::size_t n_out = spec.output_times.size();
    std::vector<long> out_steps(n_out);
    for (std::size_t k = 0; k < n_out; ++k)
        out_steps[k] = std::llround(spec.output_times[k] / spec.dt);
    long pair_step0 = -1, pair_step1 = -1;
    if (spec.pair_times) {
        pair_step0 = std::llround(spec.pair_times->first / spec.dt);
        pair_step1 = std::llround(spec.pair_times->second / spec.dt);
    }
    const long total_steps = std::max(out_steps.back(), std::max(pair_step0, pair_step1));

    std::optional<Matrix> init_sqrt;
    if (spec.initial.covariance) init_sqrt = DiffusionModel::psd_sqrt(*spec.initial.covariance);

    const double noise_scale = std::sqrt(2.0 * spec.dt / model.beta);
    const bool const_diffusion = model.constant_diffusion.has_value();
    Matrix const_sqrt;
    if (const_diffusion) const_sqrt = model.diffusion_sqrt_at(Vector::Zero(n));

    std::vector<Vector> sum_x(n_out, Vector::Zero(n));
    std::vector<Matrix> sum_xx(n_out, Matrix::Zero(n, n));
    Matrix cross = Matrix::Zero(n, n);

    const Grid* hist = spec.histogram_grid ? &*spec.histogram_grid : nullptr;
    std::vector<Vector> counts;
    std::vector<Matrix> drift_sums;
    std::vector<double> outside(n_out, 0);
    if (hist) {
        counts.assign(n_out, Vector::Zero(hist->size()));
        drift_sums.assign(n_out, Matrix::Zero(hist->size(), n));
    }

    Vector x(n), xi(n), pair_x0 = Vector::Zero(n);
    for (long p = 0; p < spec.n_paths; ++p) {
        RngStream rng(spec.seed, static_cast<std::uint64_t>(p));
        x = spec.initial.mean;
        if (init_sqrt) {
            for (int k = 0; k < n; ++k) xi[k] = rng.normal();
            x += *init_sqrt * xi;
        }
        std::size_t next_out = 0;
        for (long s = 0; s <= total_steps; ++s) {
            if (s == pair_step0) pair_x0 = x;
            if (s == pair_step1) cross += pair_x0 * x.transpose();
            while (next_out < n_out && out_steps[next_out] == s) {
                sum_x[next_out] += x;
                sum_xx[next_out] += x * x.transpose();
                if (hist) {
                    if (hist->contains(x)) {
                        Eigen::Index c = hist->locate(x);
                        counts[next_out][c] += 1;
                        drift_sums[next_out].row(c) += model.drift(x).transpose();
                    } else {
                        outside[next_out] += 1;
                    }
                }
                ++next_out;
            }
            if (s == total_steps) break;

            Vector b = model.drift(x);
            for (int k = 0; k < n; ++k) xi[k] = rng.normal();
            if (const_diffusion)
                x += b * spec.dt + noise_scale * (const_sqrt * xi);
            else
                x += b * spec.dt + noise_scale * (model.diffusion_sqrt_at(x) * xi);
            if (!x.allFinite())
                throw std::runtime_error("simulate: path " + std::to_string(p) +
                                         " diverged at step " + std::to_string(s + 1));
        }
    }

    EnsembleStats stats;
    stats.n_paths = spec.n_paths;
    stats.times = spec.output_times;
    const double np = static_cast<double>(spec.n_paths);
    for (std::size_t k = 0; k < n_out; ++k) {
        Vector m = sum_x[k] / np;
        Matrix c = (sum_xx[k] - np * (m * m.transpose())) / std::max(np - 1, 1.0);
        stats.mean.push_back(m);
        stats.covariance.push_back(((c + c.transpose()) / 2).eval());
    }
    if (spec.pair_times) stats.cross_moment = cross / np;

    if (hist) {
        const double vol = hist->cell_volume();
        for (std::size_t k = 0; k < n_out; ++k) {
            stats.outside_fraction.push_back(outside[k] / np);
            GridField f(*hist, counts[k] / (np * vol));
            stats.current.push_back(current_from_histogram(model, f, counts[k], drift_sums[k]));
            stats.histogram.push_back(std::move(f));
        }
    }
    return stats;
}

}  // namespace difftherm

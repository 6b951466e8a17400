#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "difftherm/helmholtz/sigma.hpp"
#include "difftherm/numerics/grid.hpp"

namespace difftherm {

/// Canonical partition function evaluated two ways: directly as the
/// configuration integral of exp(-beta phi) over the box, and through the
/// entropy table as integral of exp(-beta h + sigma(h)) dsigma/dh dh.  The
/// report also carries the ensemble-average identity
/// beta = <dsigma/dh> under the weight exp(-beta h + sigma) dh, whose
/// numerator is the sigma-route integral itself.
struct PartitionReport {
    double z_direct = 0;
    double log_z = 0;
    double z_sigma_route = 0;
    double route_rel_diff = 0;      // |Z - Z'|/Z
    double beta_estimate = 0;       // sigma-route integral / plain h-integral
    double beta_identity_residual = 0;  // relative error of beta_estimate vs beta
};

namespace detail {

/// Tensor midpoint quadrature of exp(-beta phi) for n <= 2, Monte Carlo above.
inline double direct_partition(const std::function<double(const Vector&, double)>& phi,
                               double alpha, double beta, const SampleBox& box,
                               long budget, std::uint64_t seed)
{
    const int n = static_cast<int>(box.lo.size());
    if (n <= 2) {
        const int per_axis = n == 1 ? static_cast<int>(std::min<long>(budget, 200000))
                                    : static_cast<int>(std::sqrt(static_cast<double>(budget)));
        std::vector<double> lo(box.lo.data(), box.lo.data() + n);
        std::vector<double> hi(box.hi.data(), box.hi.data() + n);
        Grid g(lo, hi, std::vector<int>(n, std::max(per_axis, 3)));
        double acc = 0;
        for (Eigen::Index i = 0; i < g.size(); ++i)
            acc += std::exp(-beta * phi(g.cell_center(i), alpha));
        return acc * g.cell_volume();
    }
    RngStream rng(seed, 17);
    double acc = 0;
    for (long s = 0; s < budget; ++s) acc += std::exp(-beta * phi(box.sample(rng), alpha));
    return box.volume() * acc / static_cast<double>(budget);
}

}  // namespace detail

/// Evaluates the partition identities on a prepared sigma table column
/// (single alpha).  The h-quadrature is trapezoidal on the table's h grid and
/// skips undefined (NaN) leading entries.
inline PartitionReport canonical_partition(const std::function<double(const Vector&, double)>& phi,
                                           double alpha, double beta, const SampleBox& box,
                                           const std::vector<double>& h_grid,
                                           const SigmaColumn& sigma_col, long direct_budget = 4000000,
                                           std::uint64_t seed = 0)
{
    if (!(beta > 0)) throw std::invalid_argument("canonical_partition: beta must be positive");
    if (h_grid.size() != sigma_col.sigma.size())
        throw std::invalid_argument("canonical_partition: h grid and sigma column differ in size");

    PartitionReport rep;
    rep.z_direct = detail::direct_partition(phi, alpha, beta, box, direct_budget, seed);
    rep.log_z = std::log(rep.z_direct);

    // dsigma/dh on the (possibly log-spaced) h grid, defined entries only
    const auto nh = static_cast<Eigen::Index>(h_grid.size());
    Matrix sig(nh, 1);
    for (Eigen::Index i = 0; i < nh; ++i) sig(i, 0) = sigma_col.sigma[i];
    Eigen::Index first = 0;
    while (first < nh && !std::isfinite(sig(first, 0))) ++first;
    if (nh - first < 3)
        throw std::runtime_error("canonical_partition: too few defined sigma entries");
    std::vector<double> hs(h_grid.begin() + first, h_grid.end());
    Matrix sub = sig.block(first, 0, nh - first, 1);
    Matrix dsub = detail::derivative_down_rows(hs, sub);

    double z_sigma = 0, z_plain = 0;
    for (Eigen::Index i = 0; i + 1 < static_cast<Eigen::Index>(hs.size()); ++i) {
        const double dh = hs[i + 1] - hs[i];
        const double g0 = std::exp(-beta * hs[i] + sub(i, 0));
        const double g1 = std::exp(-beta * hs[i + 1] + sub(i + 1, 0));
        z_sigma += 0.5 * dh * (g0 * dsub(i, 0) + g1 * dsub(i + 1, 0));
        z_plain += 0.5 * dh * (g0 + g1);
    }
    rep.z_sigma_route = z_sigma;
    rep.route_rel_diff = std::abs(rep.z_direct - z_sigma) / rep.z_direct;
    rep.beta_estimate = z_sigma / z_plain;
    rep.beta_identity_residual = std::abs(beta - rep.beta_estimate) / beta;
    return rep;
}

/// Logarithmically spaced grid, endpoints included.
inline std::vector<double> log_spaced(double lo, double hi, int count)
{
    if (!(lo > 0) || !(hi > lo) || count < 2) throw std::invalid_argument("log_spaced: bad range");
    std::vector<double> out(count);
    const double step = (std::log(hi) - std::log(lo)) / (count - 1);
    for (int i = 0; i < count; ++i) out[i] = std::exp(std::log(lo) + i * step);
    out.front() = lo;
    out.back() = hi;
    return out;
}

/// Closed-form canonical summary of the quadratic potential
/// phi = x^T Xi^{-1} x / 2 at noise scale beta:
/// free energy -ln Z / beta, mean energy n/(2 beta), canonical entropy, the
/// configurational entropy at the mean energy, and their gap (which shrinks
/// relative to the entropy as the dimension grows).
struct GaussianCanonicalSummary {
    double free_energy = 0;
    double mean_h = 0;
    double canonical_entropy = 0;
    double sigma_at_mean_h = 0;
    double stirling_gap = 0;
};

inline GaussianCanonicalSummary gaussian_canonical_summary(const Matrix& xi, double beta)
{
    if (!(beta > 0)) throw std::invalid_argument("gaussian_canonical_summary: beta must be positive");
    const double n = static_cast<double>(xi.rows());
    Eigen::SelfAdjointEigenSolver<Matrix> es(xi);
    if (es.eigenvalues().minCoeff() <= 0)
        throw std::invalid_argument("gaussian_canonical_summary: Xi must be positive definite");
    const double log_det = es.eigenvalues().array().log().sum();

    GaussianCanonicalSummary s;
    s.free_energy = -((n / 2) * std::log(2 * std::numbers::pi / beta) + 0.5 * log_det) / beta;
    s.mean_h = n / (2 * beta);
    s.canonical_entropy = (n / 2) * std::log(s.mean_h) + 0.5 * log_det + n / 2 +
                          (n / 2) * std::log(4 * std::numbers::pi / n);
    s.sigma_at_mean_h = gaussian_sigma_analytic(xi, s.mean_h);
    s.stirling_gap = s.canonical_entropy - s.sigma_at_mean_h;
    return s;
}

}  // namespace difftherm

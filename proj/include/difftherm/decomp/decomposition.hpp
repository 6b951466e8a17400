#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "difftherm/fpe/stationary.hpp"
#include "difftherm/model/diffusion_model.hpp"
#include "difftherm/numerics/grid.hpp"

namespace difftherm {

enum class StationaryClass { DetailedBalance, MBEquilibrium, DrivenNESS };

inline const char* to_string(StationaryClass c)
{
    switch (c) {
        case StationaryClass::DetailedBalance: return "DetailedBalance";
        case StationaryClass::MBEquilibrium: return "MBEquilibrium";
        case StationaryClass::DrivenNESS: return "DrivenNESS";
    }
    return "?";
}

struct DecompositionThresholds {
    double rel_j = 1e-6;   // circulation below this fraction of the drift: detailed balance
    double div = 1e-6;     // normalized divergence bound for the circulation field
    double orth = 1e-4;    // relative level-set alignment bound
    double mass_floor = 1e-8;      // support of the weighted norms, relative to max(fss)
    double pointwise_floor = 1e-5; // support of the max-norm diagnostics; in the rim
                                   // below this the reconstructed j carries no accuracy
};

/// Split of the drift b = j - D grad(phi) extracted from a stationary pair:
/// phi = -log(fss)/beta shifted to min zero, j the circulation velocity.
/// The classification follows the residuals: vanishing j means detailed
/// balance; divergence-free j aligned with the phi level sets is a
/// conservative circulation; anything else is a driven steady state.
struct DriftDecomposition {
    GridField phi;
    CurrentField circulation;   // j = b + D grad(phi)
    double rel_j = 0;           // fss-weighted |j| relative to |b|
    double div_j_norm = 0;      // max |div j| / max |j| over massive interior cells
    double orth_norm = 0;       // fss-weighted L2 of j.grad(phi), relative
    double orth_max = 0;        // pointwise alignment bound over massive cells
    double recon_residual = 0;  // fss-weighted relative error of b vs j - D grad(phi)
    StationaryClass classification = StationaryClass::DrivenNESS;
    DecompositionThresholds thresholds;
};

namespace detail {

inline DriftDecomposition classify_fields(const DiffusionModel& model, const GridField& fss,
                                          const CurrentField& circulation,
                                          const DecompositionThresholds& tol)
{
    const Grid& g = fss.grid;
    const double vol = g.cell_volume();
    const int n = g.dim();

    DriftDecomposition out;
    out.thresholds = tol;
    Vector phi_vals = -safe_log(fss.values) / model.beta;
    phi_vals.array() -= phi_vals.minCoeff();  // gauge: only differences of phi matter
    out.phi = GridField(g, std::move(phi_vals));
    out.circulation = circulation;

    CurrentField grad_phi = grid_gradient(out.phi, g);
    GridField div_j = grid_divergence(circulation);

    const double fmax = fss.values.maxCoeff();
    const double floor = tol.mass_floor * fmax;

    // the max-norm diagnostics need the whole difference stencil to carry
    // mass and to stay clear of the boundary reconstruction layer: in the
    // extreme rim, j = J/fss is dominated by truncation noise of the
    // vanishing density
    const double pw_floor = tol.pointwise_floor * fmax;
    auto stencil_massive = [&](Eigen::Index i) {
        if (fss.values[i] < pw_floor) return false;
        auto mi = g.unravel(i);
        for (int k = 0; k < n; ++k) {
            if (mi[k] < 2 || mi[k] > g.count(k) - 3) return false;
            if (fss.values[i - g.stride(k)] < pw_floor || fss.values[i + g.stride(k)] < pw_floor)
                return false;
        }
        return true;
    };

    double wj2 = 0, wb2 = 0, worth2 = 0, wscale2 = 0, wrecon2 = 0;
    double div_max = 0, jmax = 0, gmax = 0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        const double w = fss.values[i] * vol;
        if (fss.values[i] < floor) continue;
        Vector x = g.cell_center(i);
        Vector b = model.drift(x);
        Vector j = circulation.vectors.row(i).transpose();
        Vector gp = grad_phi.vectors.row(i).transpose();
        const double jn = j.norm(), gn = gp.norm();
        wj2 += w * j.squaredNorm();
        wb2 += w * b.squaredNorm();
        const double dot = j.dot(gp);
        worth2 += w * dot * dot;
        wscale2 += w * jn * jn * gn * gn;
        Vector recon = j - model.diffusion_at(x) * gp;
        wrecon2 += w * (b - recon).squaredNorm();

        if (!stencil_massive(i)) continue;
        jmax = std::max(jmax, jn);
        gmax = std::max(gmax, gn);
        div_max = std::max(div_max, std::abs(div_j.values[i]));
    }

    // alignment maximum, skipping cells where either vector is negligible
    // (the ratio of two round-off vectors carries no information)
    double orth_max = 0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        if (!stencil_massive(i)) continue;
        Vector j = circulation.vectors.row(i).transpose();
        Vector gp = grad_phi.vectors.row(i).transpose();
        const double jn = j.norm(), gn = gp.norm();
        if (jn < 1e-2 * jmax || gn < 1e-2 * gmax) continue;
        orth_max = std::max(orth_max, std::abs(j.dot(gp)) / (jn * gn));
    }

    out.rel_j = wb2 > 0 ? std::sqrt(wj2 / wb2) : 0;
    out.orth_norm = wscale2 > 0 ? std::sqrt(worth2 / wscale2) : 0;
    out.orth_max = orth_max;
    out.div_j_norm = jmax > 0 ? div_max / jmax : 0;
    out.recon_residual = wb2 > 0 ? std::sqrt(wrecon2 / wb2) : 0;

    if (out.rel_j <= tol.rel_j)
        out.classification = StationaryClass::DetailedBalance;
    else if (out.div_j_norm <= tol.div && out.orth_norm <= tol.orth)
        out.classification = StationaryClass::MBEquilibrium;
    else
        out.classification = StationaryClass::DrivenNESS;
    return out;
}

}  // namespace detail

/// Decomposition from a solved stationary pair.  `current` is expected in the
/// exported orientation of stationary_density (J = D grad(f)/beta - b f), so
/// the circulation velocity is j = -J/fss.
inline DriftDecomposition decompose(const DiffusionModel& model, const GridField& fss,
                                    const CurrentField& current,
                                    const DecompositionThresholds& tol = {})
{
    if (!(fss.grid == current.grid)) throw std::invalid_argument("decompose: grids differ");
    const double fmax = fss.values.maxCoeff();
    if (!(fmax > 0)) throw std::domain_error("decompose: stationary density vanishes");
    // zeros are acceptable in the far tails (where the norms mask them), but a
    // zero next to carried mass is a hole in the support
    const Grid& g = fss.grid;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        if (fss.values[i] > 0) continue;
        for (int k = 0; k < g.dim(); ++k) {
            auto mi = g.unravel(i);
            const Eigen::Index s = g.stride(k);
            if ((mi[k] > 0 && fss.values[i - s] >= tol.mass_floor * fmax) ||
                (mi[k] + 1 < g.count(k) && fss.values[i + s] >= tol.mass_floor * fmax))
                throw std::domain_error("decompose: stationary density has zeros inside its support");
        }
    }
    Matrix j = -current.vectors;
    for (Eigen::Index i = 0; i < fss.values.size(); ++i)
        j.row(i) /= (fss.values[i] > 0 ? fss.values[i] : 1.0);
    return detail::classify_fields(model, fss, CurrentField(fss.grid, std::move(j)), tol);
}

/// Decomposition from the model's closed-form stationary fields, sampled on
/// the grid.
inline DriftDecomposition decompose_analytic(const DiffusionModel& model, const Grid& grid,
                                             const DecompositionThresholds& tol = {})
{
    if (!model.ref_density || !model.ref_circulation)
        throw std::invalid_argument("decompose_analytic: model has no closed-form stationary fields");
    GridField fss = normalize_density(GridField::sample(grid, model.ref_density));
    CurrentField j = CurrentField::sample(grid, model.ref_circulation);
    return detail::classify_fields(model, fss, j, tol);
}

/// Stationary-family consistency report across noise scales.
struct BetaFamilyReport {
    std::vector<double> betas;
    std::vector<double> density_l1;   // L1 distance of solved density vs normalized (f_1)^beta
    std::vector<double> j_deviation;  // weighted relative distance of j(beta) vs j(1)
    double max_density_l1 = 0;
    double max_j_deviation = 0;
};

/// Verifies the power-family structure of a conservative stationary state:
/// the density at noise scale beta must match the normalized beta-th power of
/// the unit-noise density and the circulation velocity must not depend on
/// beta.  Refuses models whose unit-noise state is a driven steady state.
inline BetaFamilyReport beta_family_check(const DiffusionModel& model, const Grid& grid,
                                          const std::vector<double>& betas,
                                          const DecompositionThresholds& tol = {})
{
    DiffusionModel base = model.with_beta(1.0);
    DiscreteOperator op1 = assemble_operator(base, grid);
    StationaryResult st1 = stationary_density(op1);
    DriftDecomposition dec1 = decompose(base, st1.density, st1.current, tol);
    if (dec1.classification == StationaryClass::DrivenNESS)
        throw std::invalid_argument("beta_family_check: unit-noise state is not a conservative equilibrium");

    const double vol = grid.cell_volume();
    BetaFamilyReport rep;
    rep.betas = betas;
    for (double beta : betas) {
        DiffusionModel mb = model.with_beta(beta);
        StationaryResult st = stationary_density(assemble_operator(mb, grid));

        Vector powered = st1.density.values.array().pow(beta);
        GridField predicted = normalize_density(GridField(grid, std::move(powered)));
        rep.density_l1.push_back((st.density.values - predicted.values).cwiseAbs().sum() * vol);

        DriftDecomposition dec = decompose(mb, st.density, st.current, tol);
        double num = 0, den = 0;
        const double floor = tol.mass_floor * st1.density.values.maxCoeff();
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            if (st1.density.values[i] < floor) continue;
            const double w = st1.density.values[i] * vol;
            num += w * (dec.circulation.vectors.row(i) - dec1.circulation.vectors.row(i)).squaredNorm();
            den += w * dec1.circulation.vectors.row(i).squaredNorm();
        }
        rep.j_deviation.push_back(den > 0 ? std::sqrt(num / den) : 0);
    }
    for (double v : rep.density_l1) rep.max_density_l1 = std::max(rep.max_density_l1, v);
    for (double v : rep.j_deviation) rep.max_j_deviation = std::max(rep.max_j_deviation, v);
    return rep;
}

}  // namespace difftherm

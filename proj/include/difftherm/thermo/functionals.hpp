#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "difftherm/model/diffusion_model.hpp"
#include "difftherm/numerics/grid.hpp"

namespace difftherm {

/// Free energy of f relative to the stationary density:
/// beta^{-1} integral of f ln(f/fss), with 0 ln 0 := 0.  Nonnegative up to
/// quadrature error; throws when f has mass where fss vanishes.
inline double free_energy(const GridField& f, const GridField& fss, double beta)
{
    if (!(f.grid == fss.grid)) throw std::invalid_argument("free_energy: grids differ");
    const double vol = f.grid.cell_volume();
    double acc = 0;
    for (Eigen::Index i = 0; i < f.values.size(); ++i) {
        const double fi = f.values[i];
        if (fi <= 0) continue;
        if (fss.values[i] <= 0)
            throw std::domain_error("free_energy: f has support where the stationary density vanishes");
        acc += fi * std::log(fi / fss.values[i]);
    }
    return acc * vol / beta;
}

/// Gibbs-Shannon entropy -integral of f ln f, with 0 ln 0 := 0.
inline double entropy(const GridField& f)
{
    const double vol = f.grid.cell_volume();
    double acc = 0;
    for (Eigen::Index i = 0; i < f.values.size(); ++i) {
        const double fi = f.values[i];
        if (fi > 0) acc += fi * std::log(fi);
    }
    return -acc * vol;
}

/// Generalized chemical potential mu = phi + beta^{-1} ln f; cells without
/// mass are marked NaN (undefined).
inline GridField chemical_potential(const GridField& f, const GridField& phi, double beta)
{
    if (!(f.grid == phi.grid)) throw std::invalid_argument("chemical_potential: grids differ");
    Vector mu(f.values.size());
    for (Eigen::Index i = 0; i < f.values.size(); ++i)
        mu[i] = f.values[i] > 0 ? phi.values[i] + std::log(f.values[i]) / beta
                                : std::numeric_limits<double>::quiet_NaN();
    return GridField(f.grid, std::move(mu));
}

/// Mean of a sampled observable under the density f.
inline double field_mean(const GridField& f, const GridField& obs)
{
    if (!(f.grid == obs.grid)) throw std::invalid_argument("field_mean: grids differ");
    return f.grid.cell_volume() * f.values.dot(obs.values);
}

namespace detail {

inline void require_contiguous_support(const GridField& f)
{
    const Grid& g = f.grid;
    for (int k = 0; k < g.dim(); ++k) {
        const Eigen::Index s = g.stride(k);
        const int m = g.count(k);
        for (Eigen::Index i = 0; i < g.size(); ++i) {
            const int a = static_cast<int>((i / s) % m);
            if (a == 0 || a == m - 1) continue;
            if (f.values[i] <= 0 && f.values[i - s] > 0 && f.values[i + s] > 0)
                throw std::domain_error("density has an interior zero; relative entropy is undefined");
        }
    }
}

/// The thermodynamic force u = D^{-1} b - grad(ln f)/beta belonging to a
/// density, so that its current is J = f D u.
///
/// For gradient flows (b = -D grad phi) the force is the negative gradient of
/// the chemical potential, evaluated by differencing the sampled
/// phi + ln(f)/beta; all terms then pass through identical stencils and the
/// force vanishes identically at the balanced density.  Otherwise D must be
/// invertible and D^{-1} b is formed pointwise.
inline CurrentField thermodynamic_force(const GridField& f, const DiffusionModel& model)
{
    const Grid& g = f.grid;
    if (model.gradient_flow && model.potential) {
        Vector mu = safe_log(f.values) / model.beta;
        for (Eigen::Index i = 0; i < g.size(); ++i) mu[i] += model.potential(g.cell_center(i));
        CurrentField force = grid_gradient(GridField(g, std::move(mu)), g);
        force.vectors = -force.vectors;
        return force;
    }
    CurrentField grad_logf = grid_gradient(GridField(g, safe_log(f.values)), g);
    Matrix u(g.size(), g.dim());
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        Vector x = g.cell_center(i);
        Matrix d = model.diffusion_at(x);
        Eigen::FullPivLU<Matrix> lu(d);
        if (!lu.isInvertible())
            throw std::domain_error(
                "thermodynamic_force: singular diffusion without gradient structure");
        u.row(i) = (lu.solve(model.drift(x)) - grad_logf.vectors.row(i).transpose() / model.beta)
                       .transpose();
    }
    return CurrentField(g, std::move(u));
}

}  // namespace detail

/// Probability current of the density under the model, by grid differencing:
/// J_k = b_k f - beta^{-1} sum_l d(D_kl f)/dx_l.  This is the transport
/// orientation (drift minus diffusion); exported currents elsewhere are its
/// negative, see the fpe module.
inline CurrentField transport_current(const GridField& f, const DiffusionModel& model)
{
    const Grid& g = f.grid;
    Matrix j(g.size(), g.dim());
    for (Eigen::Index i = 0; i < g.size(); ++i)
        j.row(i) = (model.drift(g.cell_center(i)) * f.values[i]).transpose();

    Vector tmp(g.size());
    for (int k = 0; k < g.dim(); ++k) {
        for (int l = 0; l < g.dim(); ++l) {
            Vector dkl_f(g.size());
            bool nonzero = false;
            for (Eigen::Index i = 0; i < g.size(); ++i) {
                const double dv = model.diffusion_at(g.cell_center(i))(k, l);
                dkl_f[i] = dv * f.values[i];
                nonzero = nonzero || dv != 0;
            }
            if (!nonzero) continue;
            detail::axis_derivative(g, dkl_f, l, tmp);
            j.col(k) -= tmp / model.beta;
        }
    }
    return CurrentField(g, std::move(j));
}

/// Entropy production rate, flux-times-force route: with u the thermodynamic
/// force of f, the current is J = f D u and the rate is
/// integral of J . u = integral of f u.D u, a pointwise nonnegative form.
inline double entropy_production_rate(const GridField& f, const DiffusionModel& model,
                                      const Grid& grid)
{
    if (!(f.grid == grid)) throw std::invalid_argument("entropy_production_rate: grids differ");
    detail::require_contiguous_support(f);
    const double vol = grid.cell_volume();
    const double mass_floor = 1e-14 * f.values.maxCoeff();

    CurrentField u = detail::thermodynamic_force(f, model);
    double acc = 0;
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const double fi = f.values[i];
        if (fi <= mass_floor) continue;
        Vector ui = u.vectors.row(i).transpose();
        acc += fi * ui.dot(model.diffusion_at(grid.cell_center(i)) * ui);
    }
    return acc * vol;
}

/// Non-adiabatic entropy production: the free-energy decay rate
/// integral of grad(mu) . D grad(mu) f, with mu = phi + beta^{-1} ln f and
/// phi = -beta^{-1} ln fss.  Valid for degenerate diffusion as well.
inline double free_energy_decay_rate(const GridField& f, const GridField& fss,
                                     const DiffusionModel& model)
{
    const Grid& g = f.grid;
    if (!(fss.grid == g)) throw std::invalid_argument("free_energy_decay_rate: grids differ");
    const double vol = g.cell_volume();
    const double mass_floor = 1e-14 * f.values.maxCoeff();

    Vector mu = (detail::safe_log(f.values) - detail::safe_log(fss.values)) / model.beta;
    CurrentField grad_mu = grid_gradient(GridField(g, std::move(mu)), g);

    double acc = 0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        const double fi = f.values[i];
        if (fi <= mass_floor) continue;
        Vector gm = grad_mu.vectors.row(i).transpose();
        acc += fi * gm.dot(model.diffusion_at(g.cell_center(i)) * gm);
    }
    return acc * vol;
}

/// Housekeeping input rate: integral of J . u_ss with u_ss the thermodynamic
/// force of the stationary density.  Identically zero for gradient flows.
inline double housekeeping_input_rate(const GridField& f, const GridField& fss,
                                      const DiffusionModel& model)
{
    const Grid& g = f.grid;
    if (!(fss.grid == g)) throw std::invalid_argument("housekeeping_input_rate: grids differ");
    detail::require_contiguous_support(f);
    const double vol = g.cell_volume();
    const double mass_floor = 1e-14 * f.values.maxCoeff();

    CurrentField u = detail::thermodynamic_force(f, model);
    CurrentField u_ss = detail::thermodynamic_force(fss, model);
    double acc = 0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        const double fi = f.values[i];
        if (fi <= mass_floor) continue;
        Vector ui = u.vectors.row(i).transpose();
        Vector si = u_ss.vectors.row(i).transpose();
        acc += fi * si.dot(model.diffusion_at(g.cell_center(i)) * ui);
    }
    return acc * vol;
}

}  // namespace difftherm

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "difftherm/thermo/functionals.hpp"

namespace difftherm {

/// Free-energy/entropy-production bookkeeping along a density trajectory.
///
/// Two entropy production columns are reported side by side:
///   ep_overdamped     flux-times-force rate, integral of J.(D^{-1}b - grad ln f / beta)
///   ep_nonadiabatic   free-energy decay rate, integral of grad(mu).D grad(mu) f
/// They coincide for detailed-balanced models and differ by the housekeeping
/// contribution otherwise.  balance_residual audits
/// dF/dt = E_in - ep_overdamped; eq9_residual audits the entropy balance in
/// the printed convention dS/dt = e_p + beta * d<phi>/dt, which closes at
/// beta = 1 and is reported as-is otherwise so the convention can be audited.
struct ThermoLedger {
    std::vector<double> times;
    std::vector<double> free_energy;
    std::vector<double> entropy;
    std::vector<double> ep_overdamped;
    std::vector<double> ep_nonadiabatic;
    std::vector<double> housekeeping;      // E_in; NaN when D is singular
    std::vector<double> dphi_dt;
    std::vector<double> dF_dt;             // centered differences of free_energy
    std::vector<double> balance_residual;  // dF_dt - (E_in - ep_overdamped)
    std::vector<double> eq9_residual;      // dS_dt - (ep_overdamped + beta*dphi_dt)
};

namespace detail {

/// Centered time derivative with one-sided second-order ends.
inline std::vector<double> time_derivative(const std::vector<double>& y, double dt)
{
    const std::size_t n = y.size();
    std::vector<double> d(n);
    d[0] = (-3 * y[0] + 4 * y[1] - y[2]) / (2 * dt);
    d[n - 1] = (3 * y[n - 1] - 4 * y[n - 2] + y[n - 3]) / (2 * dt);
    for (std::size_t k = 1; k + 1 < n; ++k) d[k] = (y[k + 1] - y[k - 1]) / (2 * dt);
    return d;
}

}  // namespace detail

/// Evaluates the full ledger on uniformly spaced snapshots.
inline ThermoLedger make_ledger(const std::vector<GridField>& snapshots,
                                const DiffusionModel& model, const GridField& fss,
                                double snapshot_dt)
{
    if (snapshots.size() < 3)
        throw std::invalid_argument("make_ledger: need at least three snapshots");
    if (!(snapshot_dt > 0)) throw std::invalid_argument("make_ledger: snapshot spacing must be positive");

    const Grid& g = fss.grid;
    Vector phi_vals = -detail::safe_log(fss.values) / model.beta;
    GridField phi(g, std::move(phi_vals));

    bool singular_d = false;
    {
        Eigen::FullPivLU<Matrix> lu(model.diffusion_at(g.cell_center(g.size() / 2)));
        singular_d = !lu.isInvertible();
    }

    ThermoLedger led;
    const std::size_t n = snapshots.size();
    led.times.resize(n);
    std::vector<double> phi_mean(n);
    for (std::size_t k = 0; k < n; ++k) {
        const GridField& f = snapshots[k];
        led.times[k] = static_cast<double>(k) * snapshot_dt;
        led.free_energy.push_back(free_energy(f, fss, model.beta));
        led.entropy.push_back(entropy(f));
        led.ep_nonadiabatic.push_back(free_energy_decay_rate(f, fss, model));
        if (singular_d) {
            led.ep_overdamped.push_back(led.ep_nonadiabatic.back());
            led.housekeeping.push_back(std::numeric_limits<double>::quiet_NaN());
        } else {
            led.ep_overdamped.push_back(entropy_production_rate(f, model, g));
            led.housekeeping.push_back(housekeeping_input_rate(f, fss, model));
        }
        phi_mean[k] = field_mean(f, phi);
    }

    led.dF_dt = detail::time_derivative(led.free_energy, snapshot_dt);
    led.dphi_dt = detail::time_derivative(phi_mean, snapshot_dt);
    std::vector<double> ds_dt = detail::time_derivative(led.entropy, snapshot_dt);
    for (std::size_t k = 0; k < n; ++k) {
        led.balance_residual.push_back(led.dF_dt[k] - (led.housekeeping[k] - led.ep_overdamped[k]));
        led.eq9_residual.push_back(ds_dt[k] - (led.ep_overdamped[k] + model.beta * led.dphi_dt[k]));
    }
    return led;
}

}  // namespace difftherm

#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <stdexcept>
#include <vector>

#include "difftherm/fpe/operator.hpp"

namespace difftherm {

struct EvolveDiagnostics {
    double max_mass_error = 0;     // |integral - 1| before renormalization, worst step
    double total_clipped_mass = 0; // mass removed by clipping negative cells
    int clipped_steps = 0;
};

/// Implicit-Euler evolution (I - dt L) f_{k+1} = f_k.  Unconditionally stable;
/// every iterate is kept a density: mass is conserved by construction and
/// negative round-off values below -1e-12 trigger a clip-and-renormalize with
/// the removed mass recorded in the diagnostics.
///
/// Returns the trajectory sampled every `stride` steps, starting with f0.
inline std::vector<GridField> evolve(const DiscreteOperator& op, const GridField& f0, double dt,
                                     int steps, int stride = 1, EvolveDiagnostics* diag = nullptr)
{
    if (!(dt > 0)) throw std::invalid_argument("evolve: dt must be positive");
    if (stride < 1) throw std::invalid_argument("evolve: stride must be >= 1");
    if (!(f0.grid == op.grid)) throw std::invalid_argument("evolve: initial field on wrong grid");

    const Grid& g = op.grid;
    const double vol = g.cell_volume();

    SparseMatrix system(g.size(), g.size());
    system.setIdentity();
    system -= dt * op.matrix;
    Eigen::SparseLU<SparseMatrix> lu;
    lu.compute(system);
    if (lu.info() != Eigen::Success)
        throw std::runtime_error("evolve: factorization of the implicit system failed");

    EvolveDiagnostics local;
    std::vector<GridField> out;
    out.reserve(static_cast<std::size_t>(steps / stride) + 1);
    out.push_back(f0);

    Vector f = f0.values;
    for (int k = 1; k <= steps; ++k) {
        f = lu.solve(f);
        if (!f.allFinite()) throw std::runtime_error("evolve: linear solve produced non-finite values");
        double mass = f.sum() * vol;
        local.max_mass_error = std::max(local.max_mass_error, std::abs(mass - 1.0));
        if (f.minCoeff() < -1e-12) {
            double clipped = 0;
            for (Eigen::Index i = 0; i < f.size(); ++i)
                if (f[i] < 0) {
                    clipped -= f[i] * vol;
                    f[i] = 0;
                }
            local.total_clipped_mass += clipped;
            local.clipped_steps += 1;
            f /= f.sum() * vol;
        }
        if (k % stride == 0) out.emplace_back(g, f);
    }
    if (diag) *diag = local;
    return out;
}

}  // namespace difftherm

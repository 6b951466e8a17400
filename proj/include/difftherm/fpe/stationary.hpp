#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <stdexcept>
#include <utility>

#include "difftherm/fpe/operator.hpp"

namespace difftherm {

struct StationaryResult {
    GridField density;
    CurrentField current;     // orientation: J = D grad(f)/beta - b f
    double divergence_max = 0;  // max-norm of the discrete divergence of J
    int iterations = 0;
};

/// Stationary density as the null vector of the discrete generator, computed
/// by shifted inverse power iteration (the shift keeps the factorization
/// nonsingular; the null direction dominates by a factor ~ gap/shift per
/// sweep).  Starts from the model's reference density when available.
///
/// Throws when two independent starts disagree, which signals a reducible
/// operator with more than one invariant density.
inline StationaryResult stationary_density(const DiscreteOperator& op)
{
    const Grid& g = op.grid;
    const Eigen::Index n = g.size();
    const double vol = g.cell_volume();

    double scale = 0;
    for (Eigen::Index i = 0; i < n; ++i) scale = std::max(scale, std::abs(op.matrix.coeff(i, i)));
    const double shift = 1e-9 * (scale > 0 ? scale : 1.0);

    SparseMatrix shifted = op.matrix;
    for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) -= shift;
    Eigen::SparseLU<SparseMatrix> lu;
    lu.compute(shifted);
    if (lu.info() != Eigen::Success)
        throw std::runtime_error("stationary_density: factorization of the shifted operator failed");

    auto iterate = [&](Vector v, int max_iter, int& used) {
        v /= v.sum() * vol;
        for (int it = 0; it < max_iter; ++it) {
            used = it + 1;
            v = lu.solve(v);
            // the null direction maps to -1/shift, so normalize by the signed
            // mass before clipping round-off negatives
            double mass = v.sum() * vol;
            if (!(std::abs(mass) > 0) || !v.allFinite())
                throw std::runtime_error("stationary_density: inverse iteration degenerated");
            v /= mass;
            v = v.cwiseMax(0.0);
            v /= v.sum() * vol;
            double resid = (op.matrix * v).cwiseAbs().maxCoeff();
            if (resid <= 1e-13 * std::max(1.0, scale)) break;
        }
        return v;
    };

    int used = 0;
    Vector start = op.init_guess ? *op.init_guess : Vector::Ones(n);
    Vector f = iterate(start, 12, used);

    // independent start: detects reducible grids with multiple null vectors
    int used2 = 0;
    Vector probe = Vector::Ones(n);
    for (Eigen::Index i = 0; i < n; ++i) probe[i] += 0.5 * std::sin(0.37 * static_cast<double>(i));
    Vector f2 = iterate(probe, 12, used2);
    if ((f - f2).cwiseAbs().sum() * vol > 1e-6)
        throw std::runtime_error("stationary_density: multiple stationary densities detected (reducible operator)");

    StationaryResult out;
    out.iterations = used;
    out.density = GridField(g, std::move(f));
    out.current = current_from_faces(op, out.density.values);
    out.divergence_max = (op.matrix * out.density.values).cwiseAbs().maxCoeff();
    return out;
}

}  // namespace difftherm

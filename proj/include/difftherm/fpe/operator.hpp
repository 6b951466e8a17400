#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "difftherm/model/diffusion_model.hpp"
#include "difftherm/numerics/grid.hpp"

namespace difftherm {

using SparseMatrix = Eigen::SparseMatrix<double>;

namespace detail {

/// Bernoulli function z / (e^z - 1), the building block of the
/// exponentially-fitted face weights; B(0) = 1.
inline double bernoulli(double z)
{
    if (std::abs(z) < 1e-10) return 1.0 - z / 2 + z * z / 12;
    return z / std::expm1(z);
}

}  // namespace detail

/// One interior face of the finite-volume mesh.  The flux through the face in
/// the drift direction (advective minus diffusive part of the transport) is
///
///   flux = coeff_left * f(left) - coeff_right * f(right).
struct Face {
    Eigen::Index left = 0;
    Eigen::Index right = 0;
    int axis = 0;
    double coeff_left = 0;
    double coeff_right = 0;

    double flux(const Vector& f) const { return coeff_left * f[left] - coeff_right * f[right]; }
};

/// Conservative finite-volume discretization of the drift-diffusion generator
/// acting on densities, df/dt = L f, with reflecting (zero-flux) boundaries.
/// Column sums of L vanish identically, so evolution conserves mass exactly.
struct DiscreteOperator {
    Grid grid;
    SparseMatrix matrix;
    std::vector<Face> faces;
    std::string boundary = "no-flux";
    double beta = 1.0;
    std::optional<Vector> init_guess;  // sampled reference density, when known
};

/// Assembles the finite-volume operator for the model on the grid.
///
/// Face weighting: where the face diffusion is positive, exponentially fitted
/// (Scharfetter-Gummel) weights are used; for gradient-gauge models the face
/// Peclet number is formed from potential differences so that
/// exp(-beta * potential) is the exact discrete steady state.  Faces with zero
/// diffusion carry the advective flux with centered (second-order) weights.
/// Only diagonal diffusion matrices are supported by the rectangular scheme.
inline DiscreteOperator assemble_operator(const DiffusionModel& model, const Grid& grid)
{
    if (model.dim != grid.dim())
        throw std::invalid_argument("assemble_operator: model/grid dimension mismatch");

    DiscreteOperator op;
    op.grid = grid;
    op.beta = model.beta;

    const int n = grid.dim();
    const double beta = model.beta;

    // the scheme stores two coefficients per face; mixed second derivatives
    // would need wider stencils, so reject non-diagonal diffusion up front
    {
        Matrix d0 = model.diffusion_at(grid.cell_center(grid.size() / 2));
        detail::check_psd(d0, "assemble_operator");
        if (!is_diagonal(d0, 1e-12))
            throw std::invalid_argument(
                "assemble_operator: only diagonal diffusion matrices are supported on grids");
    }

    op.faces.reserve(static_cast<std::size_t>(grid.size()) * n);
    for (int k = 0; k < n; ++k) {
        const double h = grid.spacing(k);
        const Eigen::Index s = grid.stride(k);
        const int m = grid.count(k);
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            const int a = static_cast<int>((i / s) % m);
            if (a == m - 1) continue;  // boundary face: zero flux
            const Eigen::Index r = i + s;

            Vector xf = grid.cell_center(i);
            xf[k] += h / 2;
            const double dkk = model.diffusion_at(xf)(k, k);

            Face face;
            face.left = i;
            face.right = r;
            face.axis = k;
            if (dkk > 1e-14) {
                double w;
                if (model.gradient_gauge && model.potential) {
                    w = -beta * (model.potential(grid.cell_center(r)) -
                                 model.potential(grid.cell_center(i)));
                } else {
                    w = beta * h * model.drift(xf)[k] / dkk;
                }
                const double c = dkk / (beta * h);
                face.coeff_left = c * detail::bernoulli(-w);
                face.coeff_right = c * detail::bernoulli(w);
            } else {
                const double v = model.drift(xf)[k];
                face.coeff_left = v / 2;
                face.coeff_right = -v / 2;
            }
            op.faces.push_back(face);
        }
    }

    // off-diagonal entries first; the diagonal is the negative column sum, so
    // 1^T L = 0 holds exactly in floating point as well
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(op.faces.size() * 4);
    Vector col_sum = Vector::Zero(grid.size());
    for (const Face& f : op.faces) {
        const double inv_h = 1.0 / grid.spacing(f.axis);
        trip.emplace_back(f.right, f.left, f.coeff_left * inv_h);
        trip.emplace_back(f.left, f.right, f.coeff_right * inv_h);
        col_sum[f.left] += f.coeff_left * inv_h;
        col_sum[f.right] += f.coeff_right * inv_h;
    }
    for (Eigen::Index i = 0; i < grid.size(); ++i) trip.emplace_back(i, i, -col_sum[i]);
    op.matrix.resize(grid.size(), grid.size());
    op.matrix.setFromTriplets(trip.begin(), trip.end());

    if (model.ref_density) {
        Vector guess(grid.size());
        for (Eigen::Index i = 0; i < grid.size(); ++i)
            guess[i] = model.ref_density(grid.cell_center(i));
        double mass = guess.sum() * grid.cell_volume();
        if (mass > 0 && guess.allFinite()) op.init_guess = guess / mass;
    }
    return op;
}

/// Cell-centered current from the face fluxes of the operator at a given
/// density.  The reported orientation is J = D grad(f)/beta - b f, the vector
/// field whose divergence is the right-hand side of the density evolution
/// (boundary faces contribute zero flux).
inline CurrentField current_from_faces(const DiscreteOperator& op, const Vector& f)
{
    const Grid& g = op.grid;
    Matrix sum = Matrix::Zero(g.size(), g.dim());
    for (const Face& face : op.faces) {
        const double phi = face.flux(f);
        sum(face.left, face.axis) += phi;
        sum(face.right, face.axis) += phi;
    }
    // each cell has two faces per axis (boundary faces count as zero flux)
    return CurrentField(g, (-sum / 2).eval());
}

}  // namespace difftherm

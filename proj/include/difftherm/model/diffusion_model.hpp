#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "difftherm/numerics/grid.hpp"

namespace difftherm {

/// Scalar potential with an optional analytic gradient.  When no gradient is
/// supplied a second-order central difference stands in.
struct PotentialSpec {
    std::function<double(const Vector&)> phi;
    std::function<Vector(const Vector&)> grad;  // optional

    Vector gradient(const Vector& x) const
    {
        if (grad) return grad(x);
        const double h = 1e-6;
        Vector g(x.size()), xp = x, xm = x;
        for (Eigen::Index k = 0; k < x.size(); ++k) {
            xp[k] = x[k] + h;
            xm[k] = x[k] - h;
            g[k] = (phi(xp) - phi(xm)) / (2 * h);
            xp[k] = x[k];
            xm[k] = x[k];
        }
        return g;
    }
};

/// Drift-diffusion process description: drift field b(x), diffusion matrix
/// field D(x) (symmetric positive semi-definite), and inverse noise scale
/// beta.  Optional members carry closed-form structure used by the grid
/// scheme, the samplers and the tests when it is known at construction time.
struct DiffusionModel {
    int dim = 0;
    std::function<Vector(const Vector&)> drift;
    std::function<Matrix(const Vector&)> diffusion;
    double beta = 1.0;
    Vector alpha;       // free model parameters, meaning set by the catalog entry
    std::string label;

    /// Reduced potential: stationary density is proportional to
    /// exp(-beta * potential) whenever this member is set.
    std::function<double(const Vector&)> potential;
    std::function<Vector(const Vector&)> grad_potential;

    /// True when drift == -D grad(potential) pointwise (a detailed-balanced
    /// gradient flow).  Thermodynamic forces can then be formed from potential
    /// differences, which makes housekeeping terms vanish identically.
    bool gradient_flow = false;

    /// True when additionally D is constant diagonal; the finite-volume faces
    /// then use potential differences and reproduce exp(-beta*potential) as
    /// the exact discrete steady state.
    bool gradient_gauge = false;

    /// Set when D does not depend on x.
    std::optional<Matrix> constant_diffusion;

    /// Matrix square root sigma(x) with sigma sigma^T = D(x).
    std::function<Matrix(const Vector&)> diffusion_sqrt;

    /// Closed-form stationary references (unnormalized density and the
    /// circulation velocity j = b + D grad(potential)), when available.
    std::function<double(const Vector&)> ref_density;
    std::function<Vector(const Vector&)> ref_circulation;

    Matrix diffusion_at(const Vector& x) const
    {
        return constant_diffusion ? *constant_diffusion : diffusion(x);
    }

    /// PSD square root by eigendecomposition with negative eigenvalues
    /// clipped at zero; used as the fallback for diffusion_sqrt.
    static Matrix psd_sqrt(const Matrix& d)
    {
        Eigen::SelfAdjointEigenSolver<Matrix> es(d);
        Vector lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
    }

    Matrix diffusion_sqrt_at(const Vector& x) const
    {
        if (diffusion_sqrt) return diffusion_sqrt(x);
        return psd_sqrt(diffusion_at(x));
    }

    DiffusionModel with_beta(double new_beta) const
    {
        DiffusionModel m = *this;
        if (!(new_beta > 0)) throw std::invalid_argument("DiffusionModel: beta must be positive");
        m.beta = new_beta;
        return m;
    }
};

inline bool is_diagonal(const Matrix& m, double tol = 1e-14)
{
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (i != j && std::abs(m(i, j)) > tol * (1.0 + m.norm())) return false;
    return true;
}

namespace detail {

inline void check_psd(const Matrix& d, const char* who)
{
    if ((d - d.transpose()).norm() > 1e-10 * (1.0 + d.norm()))
        throw std::invalid_argument(std::string(who) + ": diffusion matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(d);
    if (es.eigenvalues().minCoeff() < -1e-10 * (1.0 + d.norm()))
        throw std::invalid_argument(std::string(who) + ": diffusion matrix must be positive semi-definite");
}

}  // namespace detail

}  // namespace difftherm

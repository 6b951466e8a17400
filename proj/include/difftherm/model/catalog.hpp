#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>

#include "difftherm/model/diffusion_model.hpp"
#include "difftherm/numerics/lyapunov.hpp"

namespace difftherm {

/// Linear model with drift -Bx and constant diffusion D.  B must be Hurwitz.
///
/// The unit-noise stationary covariance solves B X + X B^T = 2 D; the
/// reference density at noise scale beta is the Gaussian with covariance X/beta
/// and the reference circulation velocity is (D X^{-1} - B) x, independent of
/// beta.  When B D = D B^T the model is detailed balanced and carries the
/// quadratic potential x^T X^{-1} x / 2.
inline DiffusionModel make_ou(const Matrix& b_matrix, const Matrix& d, double beta)
{
    const Eigen::Index n = b_matrix.rows();
    if (b_matrix.cols() != n || d.rows() != n || d.cols() != n)
        throw std::invalid_argument("make_ou: B and D must be square of equal size");
    if (!(beta > 0)) throw std::invalid_argument("make_ou: beta must be positive");
    detail::check_psd(d, "make_ou");
    if (!is_hurwitz(b_matrix))
        throw std::invalid_argument("make_ou: B must have eigenvalues with positive real part");

    Matrix xi1 = solve_lyapunov(b_matrix, d);  // unit-noise covariance
    Eigen::SelfAdjointEigenSolver<Matrix> es(xi1);
    if (es.eigenvalues().minCoeff() <= 0)
        throw std::runtime_error("make_ou: stationary covariance is not positive definite");
    Matrix precision1 = xi1.inverse();

    DiffusionModel m;
    m.dim = static_cast<int>(n);
    m.beta = beta;
    m.label = "ou";
    m.drift = [b_matrix](const Vector& x) { return (-b_matrix * x).eval(); };
    m.constant_diffusion = d;
    m.diffusion = [d](const Vector&) { return d; };
    Matrix sig = DiffusionModel::psd_sqrt(d);
    m.diffusion_sqrt = [sig](const Vector&) { return sig; };

    const bool detailed_balanced =
        (b_matrix * d - d * b_matrix.transpose()).norm() <= 1e-10 * (1.0 + (b_matrix * d).norm());
    // potential in the beta=1 gauge; stationary density is exp(-beta*phi)/Z
    m.potential = [precision1](const Vector& x) { return 0.5 * x.dot(precision1 * x); };
    m.grad_potential = [precision1](const Vector& x) { return (precision1 * x).eval(); };
    m.gradient_flow = detailed_balanced;
    m.gradient_gauge = detailed_balanced && is_diagonal(d);

    // covariance at this beta is xi1/beta, hence det scales by beta^-n
    double det = xi1.determinant();
    Matrix precision_beta = beta * precision1;
    double log_norm = -0.5 * (n * std::log(2 * std::numbers::pi) + std::log(det) - n * std::log(beta));
    m.ref_density = [precision_beta, log_norm](const Vector& x) {
        return std::exp(log_norm - 0.5 * x.dot(precision_beta * x));
    };
    Matrix circ = d * precision1 - b_matrix;
    m.ref_circulation = [circ](const Vector& x) { return (circ * x).eval(); };
    return m;
}

/// Gradient flow b = -D grad(phi) with constant SPD diffusion D; detailed
/// balanced with stationary density proportional to exp(-beta*phi).
inline DiffusionModel make_gradient_model(const PotentialSpec& phi, const Matrix& d, double beta)
{
    const Eigen::Index n = d.rows();
    if (d.cols() != n) throw std::invalid_argument("make_gradient_model: D must be square");
    if (!(beta > 0)) throw std::invalid_argument("make_gradient_model: beta must be positive");
    detail::check_psd(d, "make_gradient_model");
    Eigen::SelfAdjointEigenSolver<Matrix> es(d);
    if (es.eigenvalues().minCoeff() <= 0)
        throw std::invalid_argument("make_gradient_model: D must be positive definite");

    DiffusionModel m;
    m.dim = static_cast<int>(n);
    m.beta = beta;
    m.label = "gradient";
    m.potential = phi.phi;
    m.grad_potential = [phi](const Vector& x) { return phi.gradient(x); };
    m.drift = [phi, d](const Vector& x) { return (-d * phi.gradient(x)).eval(); };
    m.constant_diffusion = d;
    m.diffusion = [d](const Vector&) { return d; };
    Matrix sig = DiffusionModel::psd_sqrt(d);
    m.diffusion_sqrt = [sig](const Vector&) { return sig; };
    m.gradient_flow = true;
    m.gradient_gauge = is_diagonal(d);
    auto pot = phi.phi;
    m.ref_density = [pot, beta](const Vector& x) { return std::exp(-beta * pot(x)); };
    m.ref_circulation = [n](const Vector&) { return Vector::Zero(n).eval(); };
    return m;
}

/// Underdamped stochastic Newtonian dynamics in phase space (x, y) with
/// Hamiltonian H = y^2/(2m) + U(x), position-dependent friction eta(x) and
/// velocity noise kBT * eta(x):
///
///   b = (y/m, -U'(x) - eta(x) y/m),  D = kBT [[0,0],[0,eta(x)]].
///
/// The noise scale is folded into D (beta = 1); the reduced potential is
/// H/kBT, so the stationary density is exp(-H/kBT)/Z.  The diffusion matrix is
/// singular by construction.
inline DiffusionModel make_klein_kramers(double mass, const PotentialSpec& u,
                                         const std::function<double(double)>& eta, double kBT)
{
    if (!(mass > 0) || !(kBT > 0))
        throw std::invalid_argument("make_klein_kramers: mass and kBT must be positive");

    auto uprime = [u](double x) {
        Vector xv(1);
        xv[0] = x;
        return u.gradient(xv)[0];
    };

    DiffusionModel m;
    m.dim = 2;
    m.beta = 1.0;
    m.label = "klein_kramers";
    m.drift = [mass, uprime, eta](const Vector& z) {
        double e = eta(z[0]);
        if (!(e > 0)) throw std::invalid_argument("make_klein_kramers: eta(x) must be positive");
        Vector b(2);
        b[0] = z[1] / mass;
        b[1] = -uprime(z[0]) - e * z[1] / mass;
        return b;
    };
    m.diffusion = [kBT, eta](const Vector& z) {
        Matrix d = Matrix::Zero(2, 2);
        d(1, 1) = kBT * eta(z[0]);
        return d;
    };
    m.diffusion_sqrt = [kBT, eta](const Vector& z) {
        Matrix s = Matrix::Zero(2, 2);
        s(1, 1) = std::sqrt(kBT * eta(z[0]));
        return s;
    };
    auto upot = u.phi;
    m.potential = [mass, upot, kBT](const Vector& z) {
        Vector xv(1);
        xv[0] = z[0];
        return (z[1] * z[1] / (2 * mass) + upot(xv)) / kBT;
    };
    m.grad_potential = [mass, uprime, kBT](const Vector& z) {
        Vector g(2);
        g[0] = uprime(z[0]) / kBT;
        g[1] = z[1] / (mass * kBT);
        return g;
    };
    auto reduced = m.potential;
    m.ref_density = [reduced](const Vector& z) { return std::exp(-reduced(z)); };
    m.ref_circulation = [mass, uprime](const Vector& z) {
        Vector j(2);
        j[0] = z[1] / mass;
        j[1] = -uprime(z[0]);
        return j;
    };
    return m;
}

/// Total mechanical energy of the Klein-Kramers phase point.
inline double kk_hamiltonian(double mass, const PotentialSpec& u, const Vector& z)
{
    Vector xv(1);
    xv[0] = z[0];
    return z[1] * z[1] / (2 * mass) + u.phi(xv);
}

/// Skew-mobility gradient process: b = -G(x) grad(phi), D = (G + G^T)/2.
/// The stationary density is exp(-phi) with circulation velocity
/// -(G - G^T)/2 grad(phi); beta is fixed at 1.
inline DiffusionModel make_ao(int dim, const std::function<Matrix(const Vector&)>& g,
                              const PotentialSpec& phi)
{
    DiffusionModel m;
    m.dim = dim;
    m.beta = 1.0;
    m.label = "ao";
    m.potential = phi.phi;
    m.grad_potential = [phi](const Vector& x) { return phi.gradient(x); };
    m.drift = [g, phi](const Vector& x) { return (-g(x) * phi.gradient(x)).eval(); };
    m.diffusion = [g](const Vector& x) {
        Matrix gg = g(x);
        return ((gg + gg.transpose()) / 2).eval();
    };
    auto pot = phi.phi;
    m.ref_density = [pot](const Vector& x) { return std::exp(-pot(x)); };
    m.ref_circulation = [g, phi](const Vector& x) {
        Matrix gg = g(x);
        return (-(gg - gg.transpose()) / 2 * phi.gradient(x)).eval();
    };

    // probe around the origin: reject indefinite symmetric parts, and detect
    // a symmetric mobility (then the model is a plain gradient flow)
    bool symmetric_g = true;
    std::uint64_t s = 0x5DEECE66Dull;
    for (int p = 0; p < 64; ++p) {
        Vector x(dim);
        for (int k = 0; k < dim; ++k) {
            s = s * 6364136223846793005ull + 1442695040888963407ull;
            x[k] = -2.0 + 4.0 * static_cast<double>(s >> 11) * 0x1.0p-53;
        }
        detail::check_psd(m.diffusion(x), "make_ao");
        Matrix gg = g(x);
        if ((gg - gg.transpose()).norm() > 1e-12 * (1 + gg.norm())) symmetric_g = false;
    }
    m.gradient_flow = symmetric_g;
    return m;
}

inline DiffusionModel make_ao(int dim, const Matrix& g, const PotentialSpec& phi)
{
    return make_ao(dim, [g](const Vector&) { return g; }, phi);
}

/// Quadratic well phi = |x|^2 / 2 in the given dimension.
inline PotentialSpec quadratic_potential(int /*dim*/)
{
    PotentialSpec p;
    p.phi = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
    p.grad = [](const Vector& x) { return x.eval(); };
    return p;
}

/// One-dimensional double well phi = x^4/4 - x^2/2.
inline PotentialSpec double_well_potential()
{
    PotentialSpec p;
    p.phi = [](const Vector& x) {
        double v = x[0];
        return 0.25 * v * v * v * v - 0.5 * v * v;
    };
    p.grad = [](const Vector& x) {
        Vector g(1);
        g[0] = x[0] * x[0] * x[0] - x[0];
        return g;
    };
    return p;
}

}  // namespace difftherm

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "difftherm/numerics/lyapunov.hpp"
#include "difftherm/numerics/types.hpp"

namespace difftherm {

/// Closed-form stationary data of the linear model dX = -BX dt + sqrt(2D/beta) dW.
///
/// covariance      stationary covariance at this beta (unit-noise value / beta)
/// precision       inverse covariance
/// current_coeff   B - D X1^{-1}, the (beta-independent) matrix of the exported
///                 stationary current J(x) = current_coeff x f(x); the
///                 circulation velocity of the drift split is -current_coeff x
/// circulation     antisymmetric A = B X1 - D, so that -Bx = -(A+D) X1^{-1} x
/// friction        M = (A + D)^{-1} of the constrained form
///                 M dX = -grad(phi) dt + Gamma dW, with Gamma Gamma^T = M + M^T
struct OuStationary {
    Matrix drift_matrix;   // B
    Matrix diffusion;      // D
    Matrix covariance;
    Matrix precision;
    Matrix current_coeff;
    Matrix circulation;
    Matrix friction;
    Matrix noise_gram;
    bool m_form_available = false;
    double beta = 1.0;
};

/// Residual report certifying the stationary structure of a linear model:
/// orthogonality of current and density gradient (as the symmetric-part norm
/// of X1^{-1}(X1 B^T - D) X1^{-1}), antisymmetry of the circulation matrix,
/// and the fluctuation relation Gamma Gamma^T = 2 M D M^T = M + M^T.
struct OuCertificate {
    double orth_residual = 0;
    double antisym_residual = 0;
    double gram_residual = 0;
};

inline OuStationary ou_stationary(const Matrix& b, const Matrix& d, double beta)
{
    if (!(beta > 0)) throw std::invalid_argument("ou_stationary: beta must be positive");
    OuStationary st;
    st.beta = beta;
    st.drift_matrix = b;
    st.diffusion = d;
    Matrix xi1 = solve_lyapunov(b, d);  // beta = 1 convention
    Eigen::SelfAdjointEigenSolver<Matrix> es(xi1);
    if (es.eigenvalues().minCoeff() <= 0)
        throw std::runtime_error("ou_stationary: covariance not positive definite");
    Matrix precision1 = xi1.inverse();
    st.covariance = xi1 / beta;
    st.precision = beta * precision1;
    st.current_coeff = b - d * precision1;
    st.circulation = b * xi1 - d;
    Matrix ad = st.circulation + d;
    Eigen::FullPivLU<Matrix> lu(ad);
    st.m_form_available = lu.isInvertible();
    if (st.m_form_available) {
        st.friction = lu.inverse();
        st.noise_gram = st.friction + st.friction.transpose();
    } else {
        st.friction = Matrix::Zero(b.rows(), b.cols());
        st.noise_gram = st.friction;
    }
    return st;
}

/// Detailed balance test: the stationary current vanishes iff B D = D B^T.
inline bool ou_detailed_balance(const Matrix& b, const Matrix& d)
{
    if (b.rows() != b.cols() || d.rows() != b.rows() || d.cols() != b.cols())
        throw std::invalid_argument("ou_detailed_balance: shape mismatch");
    Matrix bd = b * d;
    return (bd - bd.transpose()).norm() <= 1e-10 * (1.0 + bd.norm());
}

inline OuCertificate ou_mb_certificate(const OuStationary& st)
{
    OuCertificate c;
    Matrix x1 = st.covariance * st.beta;  // unit-noise covariance
    Matrix prec1 = st.precision / st.beta;
    Matrix k = x1 * st.drift_matrix.transpose() - st.diffusion;
    Matrix sym_k = (k + k.transpose()) / 2;
    c.orth_residual = (prec1 * sym_k * prec1).norm();
    c.antisym_residual = (st.circulation + st.circulation.transpose()).norm();
    if (st.m_form_available)
        c.gram_residual =
            (2 * st.friction * st.diffusion * st.friction.transpose() - st.noise_gram).norm();
    return c;
}

}  // namespace difftherm

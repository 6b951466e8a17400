#include <doctest.h>

#include <cmath>

#include "difftherm/numerics/rng.hpp"
#include "difftherm/ou/stationary.hpp"

using namespace difftherm;

namespace {

Matrix mat2(double a, double b, double c, double d)
{
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

Matrix random_matrix(RngStream& rng, int n, double scale)
{
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = scale * rng.normal();
    return m;
}

Matrix random_hurwitz(RngStream& rng, int n)
{
    Matrix m = random_matrix(rng, n, 1.0);
    double lo = min_real_eigenvalue(m);
    return m + (std::max(0.0, -lo) + 0.3) * Matrix::Identity(n, n);
}

Matrix random_spd(RngStream& rng, int n)
{
    Matrix c = random_matrix(rng, n, 0.7);
    return (c * c.transpose() + 0.3 * Matrix::Identity(n, n)).eval();
}

}  // namespace

TEST_CASE("ou_stationary: rotating, detailed-balanced and scaled cases")
{
    Matrix eye = Matrix::Identity(2, 2);

    OuStationary rot = ou_stationary(mat2(1, 2, -2, 1), eye, 1.0);
    CHECK((rot.covariance - eye).norm() < 1e-13);
    CHECK((rot.current_coeff - mat2(0, 2, -2, 0)).norm() < 1e-13);
    CHECK((rot.circulation - mat2(0, 2, -2, 0)).norm() < 1e-13);

    OuStationary db = ou_stationary(mat2(2, 1, 1, 2), eye, 1.0);
    CHECK(db.current_coeff.norm() < 1e-12);
    CHECK(db.circulation.norm() < 1e-12);

    OuStationary scaled = ou_stationary(eye, eye, 2.0);
    CHECK((scaled.covariance - 0.5 * eye).norm() < 1e-13);
}

TEST_CASE("ou_detailed_balance")
{
    Matrix eye = Matrix::Identity(2, 2);
    CHECK(ou_detailed_balance(mat2(2, 1, 1, 2), eye));
    CHECK_FALSE(ou_detailed_balance(mat2(1, 2, -2, 1), eye));

    Matrix bd = Matrix::Zero(2, 2);
    bd(0, 0) = 1;
    bd(1, 1) = 2;
    Matrix dd = Matrix::Zero(2, 2);
    dd(0, 0) = 3;
    dd(1, 1) = 4;
    CHECK(ou_detailed_balance(bd, dd));
}

TEST_CASE("ou_mb_certificate: worked cases")
{
    Matrix eye = Matrix::Identity(2, 2);
    OuCertificate rot = ou_mb_certificate(ou_stationary(mat2(1, 2, -2, 1), eye, 1.0));
    CHECK(rot.orth_residual < 1e-12);
    CHECK(rot.antisym_residual < 1e-12);
    CHECK(rot.gram_residual < 1e-12);

    OuCertificate db = ou_mb_certificate(ou_stationary(mat2(2, 1, 1, 2), eye, 1.0));
    CHECK(db.orth_residual < 1e-13);
    CHECK(db.antisym_residual < 1e-13);
    CHECK(db.gram_residual < 1e-13);
}

TEST_CASE("ou_mb_certificate: property over random stable systems")
{
    RngStream rng(31337, 0);
    for (int trial = 0; trial < 100; ++trial) {
        Matrix b = random_hurwitz(rng, 4);
        OuStationary st = ou_stationary(b, Matrix::Identity(4, 4), 1.0);
        OuCertificate cert = ou_mb_certificate(st);
        CHECK(cert.orth_residual <= 1e-10);
        CHECK(cert.antisym_residual <= 1e-10);
        CHECK(cert.gram_residual <= 1e-10);
    }
}

TEST_CASE("ou_stationary: drift reconstruction through the circulation split")
{
    RngStream rng(101, 0);
    Matrix b = random_hurwitz(rng, 3);
    Matrix d = random_spd(rng, 3);
    OuStationary st = ou_stationary(b, d, 1.0);
    Matrix prec1 = st.precision / st.beta * st.beta;  // beta = 1 here
    for (int i = 0; i < 1000; ++i) {
        Vector x(3);
        for (int k = 0; k < 3; ++k) x[k] = 2 * rng.normal();
        Vector lhs = -b * x;
        Vector rhs = -(st.circulation + d) * (st.precision * x);
        CHECK((lhs - rhs).norm() <= 1e-10 * (1 + lhs.norm()));
    }
}

TEST_CASE("ou_stationary: noise-scale family of covariances")
{
    RngStream rng(102, 0);
    Matrix b = random_hurwitz(rng, 3);
    Matrix d = random_spd(rng, 3);
    Matrix xi1 = ou_stationary(b, d, 1.0).covariance;
    for (double beta : {0.5, 1.0, 2.0, 4.0}) {
        OuStationary st = ou_stationary(b, d, beta);
        CHECK((st.covariance - xi1 / beta).norm() < 1e-12 * xi1.norm());
        // the current coefficient is independent of the noise scale
        CHECK((st.current_coeff - ou_stationary(b, d, 1.0).current_coeff).norm() < 1e-12);
    }
}

TEST_CASE("ou_stationary: degenerate diffusion of the underdamped oscillator")
{
    // phase-space linearization: drift (y, -x - y), velocity-only noise
    Matrix b = mat2(0, -1, 1, 1);
    Matrix d = Matrix::Zero(2, 2);
    d(1, 1) = 1;
    OuStationary st = ou_stationary(b, d, 1.0);
    CHECK((st.covariance - Matrix::Identity(2, 2)).norm() < 1e-12);
    CHECK(st.m_form_available);
    OuCertificate cert = ou_mb_certificate(st);
    CHECK(cert.orth_residual < 1e-12);
    CHECK(cert.gram_residual < 1e-12);

    // noise on a non-mixing coordinate: no positive-definite covariance
    Matrix d_bad = Matrix::Zero(2, 2);
    d_bad(0, 0) = 1;
    Matrix b_diag = mat2(1, 0, 0, 1);
    CHECK_THROWS_AS(ou_stationary(b_diag, d_bad, 1.0), std::runtime_error);
}

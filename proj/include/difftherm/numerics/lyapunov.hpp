#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <stdexcept>
#include <utility>

namespace difftherm {

template <typename Derived>
using DenseOf = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Kronecker product of two dense expressions.
template <typename DerivedA, typename DerivedB>
DenseOf<DerivedA> kron(const Eigen::MatrixBase<DerivedA>& a_expr,
                       const Eigen::MatrixBase<DerivedB>& b_expr)
{
    DenseOf<DerivedA> a = a_expr, b = b_expr;
    DenseOf<DerivedA> out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// Smallest real part over the spectrum of a square matrix.
template <typename Derived>
typename Derived::Scalar min_real_eigenvalue(const Eigen::MatrixBase<Derived>& m)
{
    Eigen::EigenSolver<DenseOf<Derived>> es(m.derived(), false);
    return es.eigenvalues().real().minCoeff();
}

/// True when every eigenvalue of B has positive real part, so that the linear
/// drift -Bx is asymptotically stable.
template <typename Derived>
bool is_hurwitz(const Eigen::MatrixBase<Derived>& b, typename Derived::Scalar margin = 0)
{
    return min_real_eigenvalue(b) > margin;
}

/// Solves B X + X B^T = 2 D for symmetric X by Kronecker vectorization,
/// X = unvec((I (x) B + B (x) I)^{-1} vec(2D)).  Intended for n <= 32.
///
/// Requires B with eigenvalues in the open right half plane and symmetric D.
/// The returned matrix is explicitly symmetrized; the residual
/// ||B X + X B^T - 2 D||_F stays at solver round-off for well-scaled inputs.
template <typename DerivedB, typename DerivedD>
DenseOf<DerivedB> solve_lyapunov(const Eigen::MatrixBase<DerivedB>& b_expr,
                                 const Eigen::MatrixBase<DerivedD>& d_expr)
{
    using Scalar = typename DerivedB::Scalar;
    using Mat = DenseOf<DerivedB>;
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    Mat b = b_expr, d = d_expr;
    const Eigen::Index n = b.rows();
    if (b.cols() != n || d.rows() != n || d.cols() != n)
        throw std::invalid_argument("solve_lyapunov: B and D must be square of equal size");
    if ((d - d.transpose()).norm() > Scalar(1e-12) * (Scalar(1) + d.norm()))
        throw std::invalid_argument("solve_lyapunov: D must be symmetric");
    if (!is_hurwitz(b))
        throw std::invalid_argument("solve_lyapunov: B must have eigenvalues with positive real part");

    Mat eye = Mat::Identity(n, n);
    Mat system = kron(eye, b) + kron(b, eye);
    Mat rhs_mat = 2 * d;
    Vec rhs = Vec::Map(rhs_mat.data(), n * n);

    Eigen::FullPivLU<Mat> lu(system);
    if (!lu.isInvertible())
        throw std::runtime_error("solve_lyapunov: degenerate Kronecker system");
    Vec x = lu.solve(rhs);

    Mat xi = Mat::Map(x.data(), n, n);
    return ((xi + xi.transpose()) / Scalar(2)).eval();
}

/// Splits M into its symmetric and antisymmetric parts, M = S + A exactly.
template <typename Derived>
std::pair<DenseOf<Derived>, DenseOf<Derived>> sym_antisym_split(const Eigen::MatrixBase<Derived>& m_expr)
{
    DenseOf<Derived> m = m_expr;
    if (m.rows() != m.cols())
        throw std::invalid_argument("sym_antisym_split: matrix must be square");
    DenseOf<Derived> s = (m + m.transpose()) / typename Derived::Scalar(2);
    return {s, m - s};
}

}  // namespace difftherm

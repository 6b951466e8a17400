#pragma once

#include <Eigen/Sparse>

#include <stdexcept>

#include "difftherm/fpe/operator.hpp"

namespace difftherm {

/// Split of the discrete generator into parts that are symmetric and
/// antisymmetric in the inner product weighted by the inverse stationary
/// density, <u,v> = sum_i u_i v_i w_i / fss_i.  The generator is W-symmetric
/// exactly when the model is detailed balanced, so the size of the
/// antisymmetric part is a detailed-balance meter.
struct AdjointSplit {
    SparseMatrix symmetric_part;       // L_S
    SparseMatrix antisymmetric_part;   // L_A
    double sym_residual = 0;     // ||W L_S - (W L_S)^T||_F / ||W L||_F
    double antisym_residual = 0; // ||W L_A + (W L_A)^T||_F / ||W L||_F
    double split_residual = 0;   // ||L - (L_S + L_A)||_F / ||L||_F
    double antisym_ratio = 0;    // ||L_A||_F / ||L||_F
};

inline AdjointSplit weighted_adjoint_split(const DiscreteOperator& op, const GridField& fss)
{
    if (!(fss.grid == op.grid))
        throw std::invalid_argument("weighted_adjoint_split: density on wrong grid");
    if (fss.values.minCoeff() <= 0)
        throw std::invalid_argument("weighted_adjoint_split: stationary density must be strictly positive");

    const double vol = op.grid.cell_volume();
    Vector w = vol * fss.values.cwiseInverse();
    Vector w_inv = w.cwiseInverse();

    SparseMatrix wl = w.asDiagonal() * op.matrix;
    SparseMatrix wl_t = SparseMatrix(wl.transpose());
    SparseMatrix m_sym = 0.5 * (wl + wl_t);
    SparseMatrix m_skew = 0.5 * (wl - wl_t);

    AdjointSplit out;
    out.symmetric_part = w_inv.asDiagonal() * m_sym;
    out.antisymmetric_part = w_inv.asDiagonal() * m_skew;

    const double wl_norm = wl.norm();
    SparseMatrix ws = w.asDiagonal() * out.symmetric_part;
    SparseMatrix wa = w.asDiagonal() * out.antisymmetric_part;
    out.sym_residual = SparseMatrix(ws - SparseMatrix(ws.transpose())).norm() / (wl_norm > 0 ? wl_norm : 1.0);
    out.antisym_residual =
        SparseMatrix(wa + SparseMatrix(wa.transpose())).norm() / (wl_norm > 0 ? wl_norm : 1.0);

    const double l_norm = op.matrix.norm();
    out.split_residual =
        SparseMatrix(op.matrix - (out.symmetric_part + out.antisymmetric_part)).norm() /
        (l_norm > 0 ? l_norm : 1.0);
    out.antisym_ratio = out.antisymmetric_part.norm() / (l_norm > 0 ? l_norm : 1.0);
    return out;
}

}  // namespace difftherm

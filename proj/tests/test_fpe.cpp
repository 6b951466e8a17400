#include <doctest.h>

#include <cmath>
#include <numbers>

#include "difftherm/fpe/adjoint_split.hpp"
#include "difftherm/fpe/evolve.hpp"
#include "difftherm/fpe/stationary.hpp"
#include "difftherm/model/catalog.hpp"
#include "difftherm/thermo/functionals.hpp"

using namespace difftherm;

namespace {

Matrix mat2(double a, double b, double c, double d)
{
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

DiffusionModel ou_1d(double beta = 1.0)
{
    Matrix b(1, 1), d(1, 1);
    b << 1;
    d << 1;
    return make_ou(b, d, beta);
}

DiffusionModel rotating_ou()
{
    return make_ou(mat2(1, 2, -2, 1), Matrix::Identity(2, 2), 1.0);
}

DiffusionModel kk_harmonic()
{
    PotentialSpec uq;
    uq.phi = [](const Vector& x) { return 0.5 * x[0] * x[0]; };
    uq.grad = [](const Vector& x) { return x.eval(); };
    return make_klein_kramers(1.0, uq, [](double) { return 1.0; }, 1.0);
}

GridField gaussian_field(const Grid& g, double mean, double var)
{
    return GridField::sample(g, [&](const Vector& x) {
        return std::exp(-0.5 * (x[0] - mean) * (x[0] - mean) / var) /
               std::sqrt(2 * std::numbers::pi * var);
    });
}

double rel_l2_error(const GridField& a, const std::function<double(const Vector&)>& ref)
{
    double num = 0, den = 0;
    for (Eigen::Index i = 0; i < a.grid.size(); ++i) {
        double r = ref(a.grid.cell_center(i));
        num += (a.values[i] - r) * (a.values[i] - r);
        den += r * r;
    }
    return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("assemble_operator: mass conservation by construction")
{
    Grid g = Grid::uniform(-6.0, 6.0, 200);
    DiscreteOperator op = assemble_operator(ou_1d(), g);
    Vector ones = Vector::Ones(g.size());
    Vector col_sums = op.matrix.transpose() * ones;
    double scale = 0;
    for (Eigen::Index i = 0; i < g.size(); ++i) scale = std::max(scale, std::abs(op.matrix.coeff(i, i)));
    CHECK(col_sums.cwiseAbs().maxCoeff() <= 1e-13 * scale);
}

TEST_CASE("assemble_operator: rejects mismatched dimensions and non-diagonal diffusion")
{
    Grid g2(std::vector<double>{-1, -1}, std::vector<double>{1, 1}, std::vector<int>{11, 11});
    CHECK_THROWS_AS(assemble_operator(ou_1d(), g2), std::invalid_argument);

    Matrix d = mat2(1, 0.5, 0.5, 1);
    DiffusionModel skewed = make_ou(Matrix::Identity(2, 2), d, 1.0);
    CHECK_THROWS_AS(assemble_operator(skewed, g2), std::invalid_argument);
}

TEST_CASE("stationary_density: double-well scheme exactness")
{
    DiffusionModel dw = make_gradient_model(double_well_potential(), Matrix::Identity(1, 1), 4.0);
    Grid g = Grid::uniform(-3.0, 3.0, 301);
    StationaryResult st = stationary_density(assemble_operator(dw, g));

    Vector expect(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i)
        expect[i] = std::exp(-4.0 * dw.potential(g.cell_center(i)));
    expect /= expect.sum() * g.cell_volume();
    CHECK((st.density.values - expect).cwiseAbs().maxCoeff() <= 1e-10 * expect.maxCoeff());
    CHECK(st.divergence_max <= 1e-10);
    // detailed balance: the exported current vanishes
    CHECK(st.current.vectors.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("stationary_density: rotating linear model density and current")
{
    DiffusionModel ou = rotating_ou();
    Grid g(std::vector<double>{-5, -5}, std::vector<double>{5, 5}, std::vector<int>{81, 81});
    StationaryResult st = stationary_density(assemble_operator(ou, g));

    double err = rel_l2_error(st.density, ou.ref_density);
    CHECK(err < 0.05);
    CHECK(st.divergence_max <= 1e-10);

    // exported current pattern: (B - D Xi^{-1}) x f = [[0,2],[-2,0]] x f
    Matrix coeff = mat2(0, 2, -2, 0);
    double dot = 0, na = 0, nb = 0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        Vector x = g.cell_center(i);
        double fr = ou.ref_density(x);
        if (fr < 1e-6) continue;
        Vector jr = coeff * x * fr;
        Vector jg = st.current.vectors.row(i).transpose();
        dot += jr.dot(jg);
        na += jr.squaredNorm();
        nb += jg.squaredNorm();
    }
    CHECK(dot / std::sqrt(na * nb) > 0.95);
}

TEST_CASE("stationary_density: skew-mobility model current matches closed form")
{
    DiffusionModel ao = make_ao(2, mat2(1, 1, -1, 1), quadratic_potential(2));
    Grid g(std::vector<double>{-5, -5}, std::vector<double>{5, 5}, std::vector<int>{81, 81});
    StationaryResult st = stationary_density(assemble_operator(ao, g));

    // exported orientation: J = -j fss with j the circulation velocity
    double num = 0, den = 0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        Vector x = g.cell_center(i);
        double fr = st.density.values[i];
        Vector jr = -ao.ref_circulation(x) * fr;
        num += (st.current.vectors.row(i).transpose() - jr).squaredNorm() * fr;
        den += jr.squaredNorm() * fr;
    }
    CHECK(std::sqrt(num / den) < 0.02);
}

TEST_CASE("stationary_density: reducible grid is reported")
{
    DiffusionModel split;
    split.dim = 1;
    split.beta = 1.0;
    split.label = "split";
    split.drift = [](const Vector&) { return Vector::Zero(1).eval(); };
    split.diffusion = [](const Vector& x) {
        Matrix d(1, 1);
        d << (std::abs(x[0]) > 0.5 ? 1.0 : 0.0);
        return d;
    };
    Grid g = Grid::uniform(-2.0, 2.0, 41);
    CHECK_THROWS_WITH_AS(stationary_density(assemble_operator(split, g)),
                         doctest::Contains("multiple stationary densities"), std::runtime_error);
}

TEST_CASE("evolve: stationary start is a fixed point")
{
    DiffusionModel ou = ou_1d();
    Grid g = Grid::uniform(-8.0, 8.0, 200);
    DiscreteOperator op = assemble_operator(ou, g);
    StationaryResult st = stationary_density(op);
    auto seq = evolve(op, st.density, 0.01, 50, 10);
    for (const GridField& f : seq)
        CHECK((f.values - st.density.values).cwiseAbs().sum() * g.cell_volume() < 1e-11);
}

TEST_CASE("evolve: linear relaxation of mean and variance")
{
    DiffusionModel ou = ou_1d();
    Grid g = Grid::uniform(-8.0, 10.0, 450);
    DiscreteOperator op = assemble_operator(ou, g);
    GridField f0 = normalize_density(gaussian_field(g, 1.0, 2.0));

    const double dt = 1e-3;
    EvolveDiagnostics diag;
    auto seq = evolve(op, f0, dt, 1000, 1000, &diag);
    CHECK(diag.max_mass_error < 1e-12);

    const GridField& f1 = seq.back();
    double mean = 0, second = 0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        double x = g.cell_center(i)[0];
        mean += x * f1.values[i];
        second += x * x * f1.values[i];
    }
    mean *= g.cell_volume();
    second *= g.cell_volume();
    const double var = second - mean * mean;
    CHECK(std::abs(mean - std::exp(-1.0)) < 0.01 * std::exp(-1.0));
    const double var_expect = 1 + (2 - 1) * std::exp(-2.0);
    CHECK(std::abs(var - var_expect) < 0.01 * var_expect);
}

TEST_CASE("evolve: double-well mass leaks monotonically into the empty well")
{
    DiffusionModel dw = make_gradient_model(double_well_potential(), Matrix::Identity(1, 1), 4.0);
    Grid g = Grid::uniform(-3.0, 3.0, 201);
    DiscreteOperator op = assemble_operator(dw, g);
    GridField f0 = normalize_density(gaussian_field(g, -1.0, 0.1));

    auto seq = evolve(op, f0, 0.01, 400, 40);
    double prev = -1;
    for (const GridField& f : seq) {
        double right = 0;
        for (Eigen::Index i = 0; i < g.size(); ++i)
            if (g.cell_center(i)[0] > 0) right += f.values[i];
        right *= g.cell_volume();
        CHECK(right >= prev - 1e-12);
        prev = right;
    }
    CHECK(prev > 0.05);  // the right well actually fills
}

TEST_CASE("evolve: free energy decreases along gradient-model relaxation")
{
    DiffusionModel dw = make_gradient_model(double_well_potential(), Matrix::Identity(1, 1), 4.0);
    Grid g = Grid::uniform(-3.0, 3.0, 201);
    DiscreteOperator op = assemble_operator(dw, g);
    StationaryResult st = stationary_density(op);
    GridField f0 = normalize_density(gaussian_field(g, -1.0, 0.1));

    auto seq = evolve(op, f0, 0.005, 200, 10);
    double prev = std::numeric_limits<double>::infinity();
    for (const GridField& f : seq) {
        double fe = free_energy(f, st.density, dw.beta);
        CHECK(fe <= prev + 1e-10);
        prev = fe;
    }
}

TEST_CASE("operator residual on the underdamped equilibrium decays at second order")
{
    DiffusionModel kk = kk_harmonic();
    double prev_resid = 0;
    std::vector<int> sizes{41, 81};
    std::vector<double> resid;
    for (int m : sizes) {
        Grid g(std::vector<double>{-5, -5}, std::vector<double>{5, 5}, std::vector<int>{m, m});
        DiscreteOperator op = assemble_operator(kk, g);
        Vector f(g.size());
        for (Eigen::Index i = 0; i < g.size(); ++i) f[i] = kk.ref_density(g.cell_center(i));
        f /= f.sum() * g.cell_volume();
        resid.push_back((op.matrix * f).cwiseAbs().maxCoeff());
    }
    (void)prev_resid;
    double order = std::log2(resid[0] / resid[1]);
    CHECK(order > 1.6);
}

TEST_CASE("stationary_density: second-order convergence to the rotating Gaussian")
{
    DiffusionModel ou = rotating_ou();
    std::vector<int> sizes{41, 81, 161};
    std::vector<double> errs;
    for (int m : sizes) {
        Grid g(std::vector<double>{-6, -6}, std::vector<double>{6, 6}, std::vector<int>{m, m});
        StationaryResult st = stationary_density(assemble_operator(ou, g));
        errs.push_back(rel_l2_error(st.density, ou.ref_density));
    }
    CHECK(errs[0] / errs[1] > 2.8);
    CHECK(errs[1] / errs[2] > 2.8);
}

TEST_CASE("weighted_adjoint_split: detailed balance is W-symmetric")
{
    DiffusionModel dw = make_gradient_model(double_well_potential(), Matrix::Identity(1, 1), 4.0);
    Grid g = Grid::uniform(-3.0, 3.0, 201);
    DiscreteOperator op = assemble_operator(dw, g);
    StationaryResult st = stationary_density(op);

    AdjointSplit split = weighted_adjoint_split(op, st.density);
    CHECK(split.antisym_ratio <= 1e-8);
    CHECK(split.sym_residual <= 1e-9);
    CHECK(split.antisym_residual <= 1e-9);
    CHECK(split.split_residual <= 1e-12);
}

TEST_CASE("weighted_adjoint_split: rotation is far from self-adjoint")
{
    DiffusionModel ou = rotating_ou();
    Grid g(std::vector<double>{-5, -5}, std::vector<double>{5, 5}, std::vector<int>{81, 81});
    DiscreteOperator op = assemble_operator(ou, g);
    StationaryResult st = stationary_density(op);

    AdjointSplit split = weighted_adjoint_split(op, st.density);
    CHECK(split.antisym_ratio >= 0.1);
    CHECK(split.sym_residual <= 1e-9);
    CHECK(split.antisym_residual <= 1e-9);
    CHECK(split.split_residual <= 1e-12);

    GridField bad(g, Vector::Zero(g.size()));
    CHECK_THROWS_AS(weighted_adjoint_split(op, bad), std::invalid_argument);
}

TEST_CASE("weighted_adjoint_split: antisymmetric part is the circulation transport")
{
    // L_A u should act like -div(j u) for the underdamped oscillator
    DiffusionModel kk = kk_harmonic();
    std::vector<double> errs;
    for (int m : {41, 81}) {
        Grid g(std::vector<double>{-5, -5}, std::vector<double>{5, 5}, std::vector<int>{m, m});
        DiscreteOperator op = assemble_operator(kk, g);
        StationaryResult st = stationary_density(op);
        AdjointSplit split = weighted_adjoint_split(op, st.density);

        GridField u = GridField::sample(g, [](const Vector& x) {
            return std::exp(-0.5 * (x - Vector::Constant(2, 0.5)).squaredNorm());
        });
        Vector la_u = split.antisymmetric_part * u.values;

        // reference: -div(j u) with the closed-form circulation velocity
        CurrentField ju = CurrentField::sample(g, [&](const Vector& x) {
            return (kk.ref_circulation(x) *
                    std::exp(-0.5 * (x - Vector::Constant(2, 0.5)).squaredNorm()))
                .eval();
        });
        Vector ref = -grid_divergence(ju).values;

        double num = 0, den = 0;
        for (Eigen::Index i = 0; i < g.size(); ++i) {
            auto mi = g.unravel(i);
            bool interior = true;
            for (int k = 0; k < 2; ++k)
                if (mi[k] < 3 || mi[k] > g.count(k) - 4) interior = false;
            if (!interior || st.density.values[i] < 1e-6) continue;
            num += (la_u[i] - ref[i]) * (la_u[i] - ref[i]);
            den += ref[i] * ref[i];
        }
        errs.push_back(std::sqrt(num / den));
    }
    CHECK(errs[0] / errs[1] > 2.0);  // roughly second order
    CHECK(errs[1] < 0.05);
}

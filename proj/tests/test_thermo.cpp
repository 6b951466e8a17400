#include <doctest.h>

#include <cmath>
#include <numbers>

#include "difftherm/fpe/evolve.hpp"
#include "difftherm/fpe/stationary.hpp"
#include "difftherm/model/catalog.hpp"
#include "difftherm/numerics/rng.hpp"
#include "difftherm/thermo/ledger.hpp"

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

GridField gaussian_1d(const Grid& g, double mean, double var)
{
    return GridField::sample(g, [&](const Vector& x) {
        return std::exp(-0.5 * (x[0] - mean) * (x[0] - mean) / var) /
               std::sqrt(2 * std::numbers::pi * var);
    });
}

}  // namespace

TEST_CASE("free_energy: gaussian relative entropy")
{
    Grid g = Grid::uniform(-10.0, 10.0, 500);
    GridField fss = gaussian_1d(g, 0.0, 1.0);
    GridField f = gaussian_1d(g, 1.0, 2.0);

    CHECK(free_energy(fss, fss, 1.0) == doctest::Approx(0.0).epsilon(1e-10));

    const double kl = 0.5 * (1.0 + 2.0 - 1.0 - std::log(2.0));  // = 1 - ln(2)/2
    CHECK(std::abs(free_energy(f, fss, 1.0) - kl) < 1e-4);
    CHECK(std::abs(free_energy(f, fss, 2.0) - kl / 2) < 1e-4);
    CHECK(free_energy(f, fss, 1.0) >= -1e-10);

    GridField zero_ss(g, Vector::Zero(g.size()));
    CHECK_THROWS_AS(free_energy(f, zero_ss, 1.0), std::domain_error);
}

TEST_CASE("entropy: uniform and gaussian closed forms")
{
    Grid gu = Grid::uniform(0.0, 1.0, 64);
    GridField uniform = GridField::sample(gu, [](const Vector&) { return 1.0; });
    CHECK(entropy(uniform) == doctest::Approx(0.0).epsilon(1e-12));

    Grid g = Grid::uniform(-8.0, 8.0, 400);
    CHECK(std::abs(entropy(gaussian_1d(g, 0.0, 1.0)) - 0.5 * std::log(2 * std::numbers::pi * std::exp(1.0))) <
          1e-4);
    Grid g4 = Grid::uniform(-16.0, 16.0, 800);
    CHECK(std::abs(entropy(gaussian_1d(g4, 0.0, 4.0)) -
                   0.5 * std::log(2 * std::numbers::pi * std::exp(1.0) * 4.0)) < 1e-4);
}

TEST_CASE("chemical_potential: flat at stationarity, affine for shifted gaussian")
{
    DiffusionModel ou = ou_1d();
    Grid g = Grid::uniform(-8.0, 8.0, 400);
    StationaryResult st = stationary_density(assemble_operator(ou, g));
    GridField phi = GridField::sample(g, ou.potential);

    GridField mu_ss = chemical_potential(st.density, phi, 1.0);
    CHECK(mu_ss.values.maxCoeff() - mu_ss.values.minCoeff() < 1e-10);

    GridField f = gaussian_1d(g, 1.0, 1.0);
    GridField mu = chemical_potential(f, phi, 1.0);
    const double offset = -0.5 - 0.5 * std::log(2 * std::numbers::pi);
    for (Eigen::Index i = 100; i < 300; i += 37) {
        double x = g.cell_center(i)[0];
        CHECK(mu.values[i] == doctest::Approx(x + offset).epsilon(1e-10));
    }

    // large beta: mu approaches phi pointwise
    GridField mu_big = chemical_potential(f, phi, 1e12);
    CHECK(std::abs(mu_big.values[200] - phi.values[200]) < 1e-9);
}

TEST_CASE("entropy_production_rate: equilibrium is silent, displaced gaussian is not")
{
    DiffusionModel ou = ou_1d();
    Grid g = Grid::uniform(-9.0, 11.0, 500);
    StationaryResult st = stationary_density(assemble_operator(ou, g));

    CHECK(std::abs(entropy_production_rate(st.density, ou, g)) < 1e-8);

    GridField f = normalize_density(gaussian_1d(g, 1.0, 2.0));
    // gaussian force balance: m^2 + (v-1)^2/v at m=1, v=2
    CHECK(entropy_production_rate(f, ou, g) == doctest::Approx(1.5).epsilon(0.01));
    CHECK(entropy_production_rate(f, ou, g) >= -1e-8);
}

TEST_CASE("entropy_production_rate: rotating model dissipates at its stationary state")
{
    DiffusionModel ou = make_ou(mat2(1, 2, -2, 1), Matrix::Identity(2, 2), 1.0);
    Grid g(std::vector<double>{-6, -6}, std::vector<double>{6, 6}, std::vector<int>{121, 121});
    StationaryResult st = stationary_density(assemble_operator(ou, g));

    // circulation speed 2|x|: integral of |j|^2 over the unit gaussian = 8
    double ep = entropy_production_rate(st.density, ou, g);
    CHECK(ep == doctest::Approx(8.0).epsilon(0.02));

    double ein = housekeeping_input_rate(st.density, st.density, ou);
    CHECK(ein == doctest::Approx(ep).epsilon(0.02));
    CHECK(ein > 0.1);
}

TEST_CASE("housekeeping_input_rate: identically zero for gradient flows")
{
    DiffusionModel dw = make_gradient_model(double_well_potential(), Matrix::Identity(1, 1), 4.0);
    Grid g = Grid::uniform(-3.0, 3.0, 301);
    StationaryResult st = stationary_density(assemble_operator(dw, g));

    RngStream rng(77, 0);
    for (int i = 0; i < 20; ++i) {
        double mean = rng.uniform(-1.2, 1.2);
        double var = rng.uniform(0.05, 0.4);
        GridField f = normalize_density(gaussian_1d(g, mean, var));
        CHECK(std::abs(housekeeping_input_rate(f, st.density, dw)) <= 1e-8);
    }
}

TEST_CASE("entropy production routes coincide for detailed balance at any noise scale")
{
    DiffusionModel dw = make_gradient_model(double_well_potential(), Matrix::Identity(1, 1), 4.0);
    Grid g = Grid::uniform(-3.0, 3.0, 301);
    StationaryResult st = stationary_density(assemble_operator(dw, g));
    GridField f = normalize_density(gaussian_1d(g, -0.8, 0.15));

    double over = entropy_production_rate(f, dw, g);
    double nonad = free_energy_decay_rate(f, st.density, dw);
    CHECK(std::abs(over - nonad) <= 1e-6 * std::abs(over));
}

TEST_CASE("conservative circulation drops out of the free-energy decay rate")
{
    // same stationary state, drift with and without the circulation part
    PotentialSpec phi = quadratic_potential(2);
    DiffusionModel plain = make_gradient_model(phi, Matrix::Identity(2, 2), 1.0);
    DiffusionModel rotating = make_ou(mat2(1, 2, -2, 1), Matrix::Identity(2, 2), 1.0);

    Grid g(std::vector<double>{-6, -6}, std::vector<double>{6, 6}, std::vector<int>{81, 81});
    GridField fss = normalize_density(GridField::sample(g, rotating.ref_density));
    GridField f = normalize_density(GridField::sample(g, [](const Vector& x) {
        Vector c(2);
        c << 1, 0;
        return std::exp(-0.5 * (x - c).squaredNorm());
    }));

    double rate_plain = free_energy_decay_rate(f, fss, plain);
    double rate_rotating = free_energy_decay_rate(f, fss, rotating);
    CHECK(std::abs(rate_plain - rate_rotating) <= 1e-6 * std::abs(rate_plain));

    // while the flux-force entropy production does see the circulation
    double ep_plain = entropy_production_rate(f, plain, g);
    double ep_rot = entropy_production_rate(f, rotating, g);
    CHECK(ep_rot > ep_plain + 1.0);
}

TEST_CASE("ledger: stationary series has vanishing rates")
{
    DiffusionModel ou = ou_1d();
    Grid g = Grid::uniform(-8.0, 8.0, 300);
    DiscreteOperator op = assemble_operator(ou, g);
    StationaryResult st = stationary_density(op);

    std::vector<GridField> series(5, st.density);
    ThermoLedger led = make_ledger(series, ou, st.density, 0.1);
    for (std::size_t k = 0; k < led.times.size(); ++k) {
        CHECK(std::abs(led.free_energy[k]) < 1e-10);
        CHECK(std::abs(led.dF_dt[k]) < 1e-10);
        CHECK(std::abs(led.ep_overdamped[k]) < 1e-10);
        CHECK(std::abs(led.housekeeping[k]) < 1e-10);
        CHECK(std::abs(led.balance_residual[k]) < 1e-9);
        CHECK(std::abs(led.eq9_residual[k]) < 1e-9);
    }
}

TEST_CASE("ledger: linear relaxation reproduces the gaussian flow")
{
    DiffusionModel ou = ou_1d();
    Grid g = Grid::uniform(-8.0, 10.0, 450);
    DiscreteOperator op = assemble_operator(ou, g);
    StationaryResult st = stationary_density(op);
    GridField f0 = normalize_density(gaussian_1d(g, 1.0, 2.0));

    const double dt = 1e-3;
    const int stride = 20;
    auto seq = evolve(op, f0, dt, 2000, stride);
    ThermoLedger led = make_ledger(seq, ou, st.density, dt * stride);

    // initial free energy and entropy production against the closed forms
    const double f_expect = 1.0 - 0.5 * std::log(2.0);
    CHECK(std::abs(led.free_energy[0] - f_expect) < 1e-3);
    CHECK(led.ep_overdamped[0] == doctest::Approx(1.5).epsilon(0.02));

    const std::size_t n = led.times.size();
    for (std::size_t k = 0; k < n; ++k) {
        const double t = led.times[k];
        const double m = std::exp(-t);
        const double v = 1 + std::exp(-2 * t);
        const double ep_expect = m * m + (v - 1) * (v - 1) / v;
        CHECK(std::abs(led.ep_overdamped[k] - ep_expect) <= 0.02 * ep_expect);
        // detailed balance: no housekeeping input
        CHECK(std::abs(led.housekeeping[k]) <= 1e-8);
        // monotone free energy
        if (k > 0) CHECK(led.free_energy[k] <= led.free_energy[k - 1] + 1e-10);
        // the printed entropy-balance convention closes at beta = 1
        if (k > 0 && k + 1 < n) CHECK(std::abs(led.eq9_residual[k]) < 2e-3);
    }
    // balance of the free-energy rate, away from the one-sided ends
    for (std::size_t k = 1; k + 1 < n; ++k)
        CHECK(std::abs(led.balance_residual[k]) <= 0.01 * std::abs(led.ep_overdamped[k]));
}

TEST_CASE("ledger: rotating relaxation balances dissipation against input")
{
    DiffusionModel ou = make_ou(mat2(1, 2, -2, 1), Matrix::Identity(2, 2), 1.0);
    Grid g(std::vector<double>{-6, -6}, std::vector<double>{6, 6}, std::vector<int>{121, 121});
    DiscreteOperator op = assemble_operator(ou, g);
    StationaryResult st = stationary_density(op);

    GridField f0 = normalize_density(GridField::sample(g, [](const Vector& x) {
        Vector c(2);
        c << 1, 0;
        return std::exp(-0.5 * (x - c).squaredNorm());
    }));
    const double dt = 2e-3;
    const int stride = 10;
    auto seq = evolve(op, f0, dt, 200, stride);
    ThermoLedger led = make_ledger(seq, ou, st.density, dt * stride);

    const std::size_t n = led.times.size();
    for (std::size_t k = 0; k < n; ++k) {
        CHECK(led.ep_overdamped[k] >= -1e-8);
        CHECK(led.housekeeping[k] >= -1e-8);
        if (k > 0) CHECK(led.free_energy[k] <= led.free_energy[k - 1] + 1e-10);
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
        double scale = std::max({std::abs(led.ep_overdamped[k]), std::abs(led.housekeeping[k]), 1e-6});
        CHECK(std::abs(led.balance_residual[k]) <= 0.01 * scale);
    }
}

TEST_CASE("ledger: input validation")
{
    DiffusionModel ou = ou_1d();
    Grid g = Grid::uniform(-8.0, 8.0, 300);
    StationaryResult st = stationary_density(assemble_operator(ou, g));
    std::vector<GridField> two(2, st.density);
    CHECK_THROWS_AS(make_ledger(two, ou, st.density, 0.1), std::invalid_argument);
}

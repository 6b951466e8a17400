#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "difftherm/numerics/rng.hpp"

namespace difftherm {

/// Energy bookkeeping of the damped, driven pendulum
///
///   m x'' = -k sin x - eta x' + xi(t),
///
/// integrated with velocity Verlet (the velocity update is linear in the
/// damping and solved exactly).  The ledger tracks the mechanical energy
/// H = m x'^2 / 2 + k (1 - cos x), the injected work of the drive and the
/// dissipated heat, accumulated with trapezoidal power quadrature so that
/// H(t) - H(0) = work_in - dissipation holds to the integrator's order.
struct PendulumLedger {
    std::vector<double> times;
    std::vector<double> position;
    std::vector<double> velocity;
    std::vector<double> energy;
    std::vector<double> work_in;
    std::vector<double> dissipation;
    std::vector<double> residual;  // |dH - work_in + dissipation| at each record
    double max_residual = 0;
    double mean_dissipation_rate = 0;  // time averages over the full run
    double mean_input_rate = 0;
};

struct PendulumSpec {
    double mass = 1;
    double stiffness = 1;  // k of the restoring torque k sin x
    double damping = 0;    // eta
    std::function<double(double)> drive;  // deterministic xi(t); may be empty
    double x0 = 0;
    double v0 = 0;
    double dt = 1e-3;
    double t_final = 1;
    int record_stride = 100;
    double noise_amplitude = 0;  // optional additive white force
    std::uint64_t seed = 0;
};

inline PendulumLedger driven_pendulum_ledger(const PendulumSpec& spec)
{
    if (!(spec.mass > 0) || !(spec.stiffness > 0))
        throw std::invalid_argument("driven_pendulum_ledger: mass and stiffness must be positive");
    if (spec.damping < 0) throw std::invalid_argument("driven_pendulum_ledger: damping must be >= 0");
    if (!(spec.dt > 0) || !(spec.t_final > 0))
        throw std::invalid_argument("driven_pendulum_ledger: dt and t_final must be positive");

    const double m = spec.mass, k = spec.stiffness, eta = spec.damping, dt = spec.dt;
    RngStream rng(spec.seed, 0);
    const double noise_scale = spec.noise_amplitude * std::sqrt(2.0 / dt);


    auto drive_at = [&](double t) { return spec.drive ? spec.drive(t) : 0.0; };
    auto hamiltonian = [&](double x, double v) { return 0.5 * m * v * v + k * (1 - std::cos(x)); };

    const long steps = static_cast<long>(std::llround(spec.t_final / dt));
    double x = spec.x0, v = spec.v0;
    double xi = drive_at(0) + (spec.noise_amplitude > 0 ? noise_scale * rng.normal() : 0.0);
    double acc = (-k * std::sin(x) - eta * v + xi) / m;
    const double h0 = hamiltonian(x, v);

    PendulumLedger led;
    double work = 0, heat = 0;
    double sum_diss = 0, sum_input = 0;

    auto record = [&](long s) {
        led.times.push_back(s * dt);
        led.position.push_back(x);
        led.velocity.push_back(v);
        led.energy.push_back(hamiltonian(x, v));
        led.work_in.push_back(work);
        led.dissipation.push_back(heat);
        double r = std::abs(led.energy.back() - h0 - work + heat);
        led.residual.push_back(r);
        led.max_residual = std::max(led.max_residual, r);
    };
    record(0);

    for (long s = 1; s <= steps; ++s) {
        const double t1 = s * dt;
        const double x_new = x + v * dt + 0.5 * acc * dt * dt;
        const double xi1 =
            drive_at(t1) + (spec.noise_amplitude > 0 ? noise_scale * rng.normal() : 0.0);
        // v_{n+1} = v_n + dt/2 (a_n + a_{n+1}) with a_{n+1} linear in v_{n+1}
        const double v_new =
            (v + 0.5 * dt * (acc + (-k * std::sin(x_new) + xi1) / m)) / (1 + 0.5 * dt * eta / m);
        const double acc_new = (-k * std::sin(x_new) - eta * v_new + xi1) / m;

        work += 0.5 * dt * (v * xi + v_new * xi1);
        heat += 0.5 * dt * eta * (v * v + v_new * v_new);
        sum_input += 0.5 * dt * (v * xi + v_new * xi1);
        sum_diss += 0.5 * dt * eta * (v * v + v_new * v_new);

        x = x_new;
        v = v_new;
        xi = xi1;
        acc = acc_new;
        if (!std::isfinite(x) || !std::isfinite(v))
            throw std::runtime_error("driven_pendulum_ledger: trajectory diverged");
        if (s % spec.record_stride == 0 || s == steps) record(s);
    }

    led.mean_dissipation_rate = sum_diss / spec.t_final;
    led.mean_input_rate = sum_input / spec.t_final;
    return led;
}

}  // namespace difftherm

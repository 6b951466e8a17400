#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace difftherm {

/// Cycle specification for the power-law entropy family
/// sigma(h, alpha) = mu ln h + nu ln alpha.  The iso-temperature and
/// iso-entropy branches in the (alpha, F_alpha) plane are
///
///   alpha F = nu theta        and      alpha^{1 + nu/mu} F = (nu/mu) e^{sigma/mu}.
struct CarnotSpec {
    double mu = 1;
    double nu = 0.5;
    double theta_hot = 2;
    double theta_cold = 1;
    double sigma_low = 0;
    double sigma_high = 1;
};

struct CarnotPoint {
    double alpha = 0;
    double force = 0;
};

struct CarnotBranch {
    std::string label;       // "iso_theta_hot", "iso_sigma_high", ...
    double level = 0;        // the held quantity on this branch
    std::vector<CarnotPoint> points;
};

struct CarnotCycle {
    std::vector<CarnotBranch> branches;  // hot, sigma_high, cold, sigma_low
    std::vector<CarnotPoint> corners;    // intersections, cycle order
};

namespace detail {

inline double iso_theta_force(const CarnotSpec& s, double theta, double alpha)
{
    return s.nu * theta / alpha;
}

inline double iso_sigma_force(const CarnotSpec& s, double sigma, double alpha)
{
    return (s.nu / s.mu) * std::exp(sigma / s.mu) * std::pow(alpha, -(1 + s.nu / s.mu));
}

/// Corner of an iso-theta and an iso-sigma branch, in closed form:
/// alpha = (e^{sigma/mu} / (mu theta))^{mu/nu}.
inline CarnotPoint corner(const CarnotSpec& s, double theta, double sigma)
{
    CarnotPoint p;
    p.alpha = std::pow(std::exp(sigma / s.mu) / (s.mu * theta), s.mu / s.nu);
    p.force = s.nu * theta / p.alpha;
    return p;
}

}  // namespace detail

/// Builds the four branches of the cycle with closed-form corner points.
/// Every emitted point satisfies its branch equation by construction.
inline CarnotCycle carnot_curves(const CarnotSpec& spec, int points_per_branch = 64)
{
    if (!(spec.mu > 0) || !(spec.nu > 0))
        throw std::invalid_argument("carnot_curves: mu and nu must be positive");
    if (!(spec.theta_hot > spec.theta_cold) || !(spec.theta_cold > 0))
        throw std::invalid_argument("carnot_curves: need theta_hot > theta_cold > 0");
    if (!(spec.sigma_high > spec.sigma_low))
        throw std::invalid_argument("carnot_curves: need sigma_high > sigma_low");
    if (points_per_branch < 2) throw std::invalid_argument("carnot_curves: need >= 2 points");

    // cycle corners: (hot, low) -> (hot, high) -> (cold, high) -> (cold, low)
    CarnotPoint c_hl = detail::corner(spec, spec.theta_hot, spec.sigma_low);
    CarnotPoint c_hh = detail::corner(spec, spec.theta_hot, spec.sigma_high);
    CarnotPoint c_ch = detail::corner(spec, spec.theta_cold, spec.sigma_high);
    CarnotPoint c_cl = detail::corner(spec, spec.theta_cold, spec.sigma_low);
    for (const CarnotPoint& p : {c_hl, c_hh, c_ch, c_cl})
        if (!(p.alpha > 0) || !(p.force > 0) || !std::isfinite(p.alpha))
            throw std::runtime_error("carnot_curves: corners leave the positive quadrant");

    auto sweep = [&](const std::string& label, double level, bool iso_theta, double a0, double a1) {
        CarnotBranch br;
        br.label = label;
        br.level = level;
        for (int i = 0; i < points_per_branch; ++i) {
            double a = a0 + (a1 - a0) * i / (points_per_branch - 1);
            CarnotPoint p;
            p.alpha = a;
            p.force = iso_theta ? detail::iso_theta_force(spec, level, a)
                                : detail::iso_sigma_force(spec, level, a);
            br.points.push_back(p);
        }
        return br;
    };

    CarnotCycle cyc;
    cyc.branches.push_back(sweep("iso_theta_hot", spec.theta_hot, true, c_hl.alpha, c_hh.alpha));
    cyc.branches.push_back(sweep("iso_sigma_high", spec.sigma_high, false, c_hh.alpha, c_ch.alpha));
    cyc.branches.push_back(sweep("iso_theta_cold", spec.theta_cold, true, c_ch.alpha, c_cl.alpha));
    cyc.branches.push_back(sweep("iso_sigma_low", spec.sigma_low, false, c_cl.alpha, c_hl.alpha));
    cyc.corners = {c_hl, c_hh, c_ch, c_cl};
    return cyc;
}

}  // namespace difftherm

#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "difftherm/numerics/grid.hpp"

namespace difftherm {

struct FlowDiagnostics {
    std::vector<double> times;
    std::vector<Vector> states;
    double max_phi_drift = 0;   // max |phi(x(t)) - phi(x0)| along the orbit
    double max_divergence = 0;  // numeric divergence of the field along the orbit
    bool exited = false;        // left the supplied box before t_final
    double exit_time = 0;
};

/// Integrates the conservative circulation flow dx/dt = j(x) with classical
/// RK4 and tracks the first integral phi along the orbit.  The field is
/// volume-preserving when its divergence vanishes; the numeric divergence is
/// sampled along the path as a diagnostic.  If `box` is supplied, integration
/// stops when the orbit leaves it.
inline FlowDiagnostics conservative_flow(const std::function<Vector(const Vector&)>& j,
                                         const std::function<double(const Vector&)>& phi,
                                         Vector x0, double dt, double t_final,
                                         const Grid* box = nullptr, int record_stride = 100)
{
    if (!(dt > 0) || !(t_final > 0))
        throw std::invalid_argument("conservative_flow: dt and t_final must be positive");
    FlowDiagnostics out;
    const double phi0 = phi(x0);
    const int n = static_cast<int>(x0.size());
    const double eps = 1e-5;

    Vector x = std::move(x0);
    const long steps = static_cast<long>(std::llround(t_final / dt));
    out.times.push_back(0);
    out.states.push_back(x);
    for (long s = 1; s <= steps; ++s) {
        Vector k1 = j(x);
        Vector k2 = j(x + 0.5 * dt * k1);
        Vector k3 = j(x + 0.5 * dt * k2);
        Vector k4 = j(x + dt * k3);
        x += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        if (!x.allFinite()) throw std::runtime_error("conservative_flow: orbit diverged");

        if (box && !box->contains(x)) {
            out.exited = true;
            out.exit_time = s * dt;
            break;
        }
        out.max_phi_drift = std::max(out.max_phi_drift, std::abs(phi(x) - phi0));
        if (s % record_stride == 0 || s == steps) {
            out.times.push_back(s * dt);
            out.states.push_back(x);
        }
        if (s % record_stride == 0) {
            double div = 0;
            for (int k = 0; k < n; ++k) {
                Vector xp = x, xm = x;
                xp[k] += eps;
                xm[k] -= eps;
                div += (j(xp)[k] - j(xm)[k]) / (2 * eps);
            }
            out.max_divergence = std::max(out.max_divergence, std::abs(div));
        }
    }
    return out;
}

/// Grid-field version: the circulation and potential are interpolated
/// multilinearly; the orbit stops with a truncation notice when it exits the
/// grid box.
inline FlowDiagnostics conservative_flow(const CurrentField& j, const GridField& phi, Vector x0,
                                         double dt, double t_final, int record_stride = 100)
{
    if (!j.grid.contains(x0)) throw std::invalid_argument("conservative_flow: x0 outside grid");
    auto jf = [&j](const Vector& x) { return interpolate(j, x); };
    auto pf = [&phi](const Vector& x) { return interpolate(phi, x); };
    return conservative_flow(jf, pf, std::move(x0), dt, t_final, &j.grid, record_stride);
}

enum class SegmentKind { Driven, Dissipative, Conservative };

inline const char* to_string(SegmentKind k)
{
    switch (k) {
        case SegmentKind::Driven: return "driven";
        case SegmentKind::Dissipative: return "dissipative";
        case SegmentKind::Conservative: return "conservative";
    }
    return "?";
}

struct CycleSegment {
    Vector from, to;
    double delta_phi = 0;
    SegmentKind kind = SegmentKind::Conservative;
};

struct CycleReport {
    std::vector<CycleSegment> segments;
    double total_delta_phi = 0;  // telescopes to zero for a closed loop
    int driven = 0, dissipative = 0, conservative = 0;
};

/// Classifies the legs of a closed polyline by the potential change along
/// each leg: ascending legs must be externally driven, descending legs relax
/// spontaneously with dissipation, and iso-potential legs are conservative.
inline CycleReport four_step_cycle_report(const std::function<double(const Vector&)>& phi,
                                          const std::vector<Vector>& loop, double tol = 1e-9)
{
    if (loop.size() < 2 || (loop.front() - loop.back()).norm() > 1e-12)
        throw std::invalid_argument("four_step_cycle_report: polyline must be closed");
    CycleReport rep;
    for (std::size_t k = 0; k + 1 < loop.size(); ++k) {
        CycleSegment seg;
        seg.from = loop[k];
        seg.to = loop[k + 1];
        seg.delta_phi = phi(loop[k + 1]) - phi(loop[k]);
        if (seg.delta_phi > tol) {
            seg.kind = SegmentKind::Driven;
            ++rep.driven;
        } else if (seg.delta_phi < -tol) {
            seg.kind = SegmentKind::Dissipative;
            ++rep.dissipative;
        } else {
            seg.kind = SegmentKind::Conservative;
            ++rep.conservative;
        }
        rep.total_delta_phi += seg.delta_phi;
        rep.segments.push_back(std::move(seg));
    }
    return rep;
}

inline CycleReport four_step_cycle_report(const GridField& phi, const std::vector<Vector>& loop,
                                          double tol = 1e-9)
{
    auto pf = [&phi](const Vector& x) { return interpolate(phi, x); };
    return four_step_cycle_report(pf, loop, tol);
}

}  // namespace difftherm

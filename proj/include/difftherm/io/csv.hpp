#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "difftherm/decomp/flow.hpp"
#include "difftherm/helmholtz/carnot.hpp"
#include "difftherm/helmholtz/sigma.hpp"
#include "difftherm/numerics/grid.hpp"
#include "difftherm/sde/ensemble.hpp"
#include "difftherm/sde/pendulum.hpp"
#include "difftherm/thermo/ledger.hpp"

namespace difftherm {

/// Minimal CSV emitter with deterministic %.17g number formatting, so equal
/// inputs produce byte-identical files.
class CsvWriter {
public:
    explicit CsvWriter(const std::filesystem::path& path) : out_(path)
    {
        if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path.string());
    }

    void header(const std::vector<std::string>& names)
    {
        for (std::size_t i = 0; i < names.size(); ++i)
            out_ << (i ? "," : "") << names[i];
        out_ << "\n";
    }

    void row(const std::vector<double>& values, const std::string& tag = {})
    {
        bool first = true;
        if (!tag.empty()) {
            out_ << tag;
            first = false;
        }
        char buf[32];
        for (double v : values) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out_ << (first ? "" : ",") << buf;
            first = false;
        }
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

/// One row per cell: coordinates, density, current components.
inline void write_density_csv(const std::filesystem::path& path, const GridField& f,
                              const CurrentField* current = nullptr)
{
    CsvWriter csv(path);
    std::vector<std::string> names;
    for (int k = 0; k < f.grid.dim(); ++k) names.push_back("x" + std::to_string(k));
    names.push_back("f");
    if (current)
        for (int k = 0; k < f.grid.dim(); ++k) names.push_back("J" + std::to_string(k));
    csv.header(names);
    for (Eigen::Index i = 0; i < f.grid.size(); ++i) {
        Vector x = f.grid.cell_center(i);
        std::vector<double> row(x.data(), x.data() + x.size());
        row.push_back(f.values[i]);
        if (current)
            for (int k = 0; k < f.grid.dim(); ++k) row.push_back(current->vectors(i, k));
        csv.row(row);
    }
}

inline void write_ledger_csv(const std::filesystem::path& path, const ThermoLedger& led)
{
    CsvWriter csv(path);
    csv.header({"t", "F", "S", "ep_overdamped", "ep_nonadiabatic", "E_in", "dphi_dt", "dF_dt",
                "balance_residual", "eq9_residual"});
    for (std::size_t k = 0; k < led.times.size(); ++k)
        csv.row({led.times[k], led.free_energy[k], led.entropy[k], led.ep_overdamped[k],
                 led.ep_nonadiabatic[k], led.housekeeping[k], led.dphi_dt[k], led.dF_dt[k],
                 led.balance_residual[k], led.eq9_residual[k]});
}

inline void write_sigma_csv(const std::filesystem::path& path, const SigmaTable& t)
{
    CsvWriter csv(path);
    csv.header({"h", "alpha", "sigma", "sigma_se", "dsigma_dh", "dsigma_dalpha", "theta",
                "F_alpha"});
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(t.h_grid.size()); ++i)
        for (Eigen::Index a = 0; a < static_cast<Eigen::Index>(t.alpha_grid.size()); ++a) {
            std::vector<double> row{t.h_grid[i], t.alpha_grid[a], t.sigma(i, a), t.sigma_se(i, a)};
            if (t.partials_filled) {
                row.push_back(t.dsigma_dh(i, a));
                row.push_back(t.dsigma_dalpha(i, a));
                row.push_back(t.theta(i, a));
                row.push_back(t.force_alpha(i, a));
            } else {
                row.insert(row.end(), 4, std::numeric_limits<double>::quiet_NaN());
            }
            csv.row(row);
        }
}

inline void write_carnot_csv(const std::filesystem::path& path, const CarnotCycle& cyc)
{
    CsvWriter csv(path);
    csv.header({"branch", "level", "alpha", "F_alpha"});
    for (const CarnotBranch& br : cyc.branches)
        for (const CarnotPoint& p : br.points)
            csv.row({br.level, p.alpha, p.force}, br.label + ",");
}

inline void write_carnot_corners_csv(const std::filesystem::path& path, const CarnotCycle& cyc)
{
    CsvWriter csv(path);
    csv.header({"corner", "alpha", "F_alpha"});
    for (std::size_t c = 0; c < cyc.corners.size(); ++c)
        csv.row({cyc.corners[c].alpha, cyc.corners[c].force}, std::to_string(c) + ",");
}

inline void write_pendulum_csv(const std::filesystem::path& path, const PendulumLedger& led)
{
    CsvWriter csv(path);
    csv.header({"t", "x", "v", "H", "work_in", "dissipation", "residual"});
    for (std::size_t k = 0; k < led.times.size(); ++k)
        csv.row({led.times[k], led.position[k], led.velocity[k], led.energy[k], led.work_in[k],
                 led.dissipation[k], led.residual[k]});
}

inline void write_ensemble_csv(const std::filesystem::path& path, const EnsembleStats& st)
{
    CsvWriter csv(path);
    const int n = st.mean.empty() ? 0 : static_cast<int>(st.mean[0].size());
    std::vector<std::string> names{"t"};
    for (int k = 0; k < n; ++k) names.push_back("mean" + std::to_string(k));
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
            names.push_back("cov" + std::to_string(k) + std::to_string(l));
    csv.header(names);
    for (std::size_t t = 0; t < st.times.size(); ++t) {
        std::vector<double> row{st.times[t]};
        for (int k = 0; k < n; ++k) row.push_back(st.mean[t][k]);
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) row.push_back(st.covariance[t](k, l));
        csv.row(row);
    }
}

/// Snapshot rows as little-endian 64-bit floats: a fixed 24-byte header
/// ("DTHERMv1", cell count, columns) followed by the density table in cell
/// order.  Matches the CSV layout of write_density_csv.
inline void write_density_binary(const std::filesystem::path& path, const GridField& f,
                                 const CurrentField* current = nullptr)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_density_binary: cannot open " + path.string());
    const char magic[8] = {'D', 'T', 'H', 'E', 'R', 'M', 'v', '1'};
    std::uint64_t cells = static_cast<std::uint64_t>(f.grid.size());
    std::uint64_t cols = f.grid.dim() + 1 + (current ? f.grid.dim() : 0);
    out.write(magic, 8);
    out.write(reinterpret_cast<const char*>(&cells), 8);
    out.write(reinterpret_cast<const char*>(&cols), 8);
    for (Eigen::Index i = 0; i < f.grid.size(); ++i) {
        Vector x = f.grid.cell_center(i);
        out.write(reinterpret_cast<const char*>(x.data()), 8 * x.size());
        out.write(reinterpret_cast<const char*>(&f.values[i]), 8);
        if (current) {
            Vector j = current->vectors.row(i).transpose();
            out.write(reinterpret_cast<const char*>(j.data()), 8 * j.size());
        }
    }
}

}  // namespace difftherm

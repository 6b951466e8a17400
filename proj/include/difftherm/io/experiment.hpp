#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "difftherm/decomp/decomposition.hpp"
#include "difftherm/decomp/flow.hpp"
#include "difftherm/fpe/adjoint_split.hpp"
#include "difftherm/fpe/evolve.hpp"
#include "difftherm/fpe/stationary.hpp"
#include "difftherm/helmholtz/partition.hpp"
#include "difftherm/io/csv.hpp"
#include "difftherm/model/catalog.hpp"
#include "difftherm/ou/stationary.hpp"
#include "difftherm/sde/ensemble.hpp"
#include "difftherm/sde/pendulum.hpp"
#include "difftherm/thermo/ledger.hpp"

namespace difftherm {

using Json = nlohmann::json;

namespace config {

inline Matrix parse_matrix(const Json& j)
{
    if (!j.is_array() || j.empty()) throw std::invalid_argument("config: expected a matrix");
    if (!j[0].is_array()) {  // scalar list -> diagonal
        Matrix m = Matrix::Zero(j.size(), j.size());
        for (std::size_t i = 0; i < j.size(); ++i) m(i, i) = j[i].get<double>();
        return m;
    }
    Matrix m(j.size(), j[0].size());
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (j[r].size() != j[0].size()) throw std::invalid_argument("config: ragged matrix");
        for (std::size_t c = 0; c < j[r].size(); ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

inline Vector parse_vector(const Json& j)
{
    Vector v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
    return v;
}

/// Named potentials available from configuration files.
inline PotentialSpec parse_potential(const Json& j)
{
    const std::string name = j.value("name", "quadratic");
    if (name == "quadratic") return quadratic_potential(0);
    if (name == "double_well") return double_well_potential();
    if (name == "quartic") {
        PotentialSpec p;
        p.phi = [](const Vector& x) { return 0.25 * std::pow(x.squaredNorm(), 2); };
        p.grad = [](const Vector& x) { return (x.squaredNorm() * x).eval(); };
        return p;
    }
    throw std::invalid_argument("config: unknown potential '" + name + "'");
}

inline DiffusionModel parse_model(const Json& j)
{
    const std::string name = j.at("name").get<std::string>();
    if (name == "ou")
        return make_ou(parse_matrix(j.at("B")), parse_matrix(j.at("D")), j.value("beta", 1.0));
    if (name == "gradient")
        return make_gradient_model(parse_potential(j.at("potential")), parse_matrix(j.at("D")),
                                   j.value("beta", 1.0));
    if (name == "klein_kramers") {
        const double eta = j.value("eta", 1.0);
        return make_klein_kramers(j.value("mass", 1.0), parse_potential(j.at("potential")),
                                  [eta](double) { return eta; }, j.value("kBT", 1.0));
    }
    if (name == "ao")
        return make_ao(static_cast<int>(j.at("G").size()), parse_matrix(j.at("G")),
                       parse_potential(j.at("potential")));
    throw std::invalid_argument("config: unknown model '" + name + "'");
}

inline Grid parse_grid(const Json& j)
{
    std::vector<double> lo = j.at("lo").get<std::vector<double>>();
    std::vector<double> hi = j.at("hi").get<std::vector<double>>();
    std::vector<int> counts = j.at("counts").get<std::vector<int>>();
    return Grid(lo, hi, counts);
}

inline DecompositionThresholds parse_thresholds(const Json& j)
{
    DecompositionThresholds tol;
    tol.rel_j = j.value("rel_j", tol.rel_j);
    tol.div = j.value("div", tol.div);
    tol.orth = j.value("orth", tol.orth);
    tol.mass_floor = j.value("mass_floor", tol.mass_floor);
    tol.pointwise_floor = j.value("pointwise_floor", tol.pointwise_floor);
    return tol;
}

}  // namespace config

struct ExperimentResult {
    Json summary;
    bool passed = true;
    std::filesystem::path output_dir;
};

/// Runs every analysis listed in the configuration, writing one CSV artifact
/// per analysis plus a summary.json with residuals, classifications and
/// pass/fail verdicts against the configured tolerances.  Identical
/// configuration and seed produce byte-identical artifacts; the only
/// timestamp lives in the summary's meta block.
inline ExperimentResult run_experiment(const Json& cfg)
{
    namespace fs = std::filesystem;

    std::string out_name = cfg.value("output_dir", "out");
    if (const char* env = std::getenv("DIFFTHERM_OUTPUT_DIR")) out_name = env;
    fs::path out_dir(out_name);
    fs::create_directories(out_dir);

    const std::uint64_t seed = cfg.value("seed", 0);
    DecompositionThresholds tol = config::parse_thresholds(cfg.value("tolerances", Json::object()));

    DiffusionModel model;
    if (cfg.contains("model")) model = config::parse_model(cfg.at("model"));
    Grid grid;
    if (cfg.contains("grid")) grid = config::parse_grid(cfg.at("grid"));

    const Json analyses = cfg.at("analyses");
    if (!analyses.is_array() || analyses.empty())
        throw std::invalid_argument("config: analyses must be a non-empty list");

    ExperimentResult result;
    result.output_dir = out_dir;
    Json& summary = result.summary;
    summary["tolerances"] = {{"rel_j", tol.rel_j},
                             {"div", tol.div},
                             {"orth", tol.orth},
                             {"mass_floor", tol.mass_floor},
                             {"pointwise_floor", tol.pointwise_floor}};
    summary["seed"] = seed;
    summary["analyses"] = Json::array();

    // lazily computed stationary pair shared by the analyses that need it
    std::optional<DiscreteOperator> op;
    std::optional<StationaryResult> stationary;
    auto ensure_stationary = [&]() -> StationaryResult& {
        if (!stationary) {
            op = assemble_operator(model, grid);
            stationary = stationary_density(*op);
        }
        return *stationary;
    };

    for (const Json& a : analyses) {
        const std::string type = a.at("type").get<std::string>();
        Json rep;
        rep["type"] = type;
        bool ok = true;

        if (type == "stationary") {
            StationaryResult& st = ensure_stationary();
            write_density_csv(out_dir / "stationary.csv", st.density, &st.current);
            rep["divergence_max"] = st.divergence_max;
            rep["iterations"] = st.iterations;
            ok = st.divergence_max <= 1e-10;
        } else if (type == "decompose") {
            DriftDecomposition dec;
            if (a.value("use_analytic_fields", false)) {
                dec = decompose_analytic(model, grid, tol);
            } else {
                StationaryResult& st = ensure_stationary();
                dec = decompose(model, st.density, st.current, tol);
            }
            write_density_csv(out_dir / "decomposition_phi.csv", dec.phi, &dec.circulation);
            rep["classification"] = to_string(dec.classification);
            rep["rel_j"] = dec.rel_j;
            rep["div_j_norm"] = dec.div_j_norm;
            rep["orth_norm"] = dec.orth_norm;
            rep["orth_max"] = dec.orth_max;
            rep["recon_residual"] = dec.recon_residual;
        } else if (type == "adjoint_split") {
            StationaryResult& st = ensure_stationary();
            AdjointSplit split = weighted_adjoint_split(*op, st.density);
            rep["antisym_ratio"] = split.antisym_ratio;
            rep["sym_residual"] = split.sym_residual;
            rep["antisym_residual"] = split.antisym_residual;
            rep["split_residual"] = split.split_residual;
            ok = split.sym_residual <= 1e-9 && split.antisym_residual <= 1e-9;
        } else if (type == "ou_analytic") {
            OuStationary st = ou_stationary(config::parse_matrix(cfg.at("model").at("B")),
                                            config::parse_matrix(cfg.at("model").at("D")),
                                            cfg.at("model").value("beta", 1.0));
            OuCertificate cert = ou_mb_certificate(st);
            rep["detailed_balance"] = ou_detailed_balance(st.drift_matrix, st.diffusion);
            rep["orth_residual"] = cert.orth_residual;
            rep["antisym_residual"] = cert.antisym_residual;
            rep["gram_residual"] = cert.gram_residual;
            rep["m_form_available"] = st.m_form_available;
            ok = cert.orth_residual <= 1e-10 && cert.antisym_residual <= 1e-10 &&
                 cert.gram_residual <= 1e-10;
        } else if (type == "ledger") {
            StationaryResult& st = ensure_stationary();
            const Json& init = a.at("initial");
            Vector mean = config::parse_vector(init.at("mean"));
            Matrix cov = config::parse_matrix(init.at("cov"));
            Matrix prec = cov.inverse();
            const double lognorm =
                -0.5 * (model.dim * std::log(2 * std::numbers::pi) + std::log(cov.determinant()));
            GridField f0 = normalize_density(GridField::sample(grid, [&](const Vector& x) {
                return std::exp(lognorm - 0.5 * (x - mean).dot(prec * (x - mean)));
            }));
            const double dt = a.value("dt", 1e-3);
            const int steps = a.value("steps", 1000);
            const int stride = a.value("stride", 10);
            auto seq = evolve(*op, f0, dt, steps, stride);
            ThermoLedger led = make_ledger(seq, model, st.density, dt * stride);
            write_ledger_csv(out_dir / "ledger.csv", led);
            double worst_balance = 0, min_f_step = 0;
            for (std::size_t k = 1; k + 1 < led.times.size(); ++k) {
                double scale = std::max(std::abs(led.ep_overdamped[k]), 1e-6);
                worst_balance = std::max(worst_balance, std::abs(led.balance_residual[k]) / scale);
            }
            for (std::size_t k = 1; k < led.times.size(); ++k)
                min_f_step = std::min(min_f_step, led.free_energy[k - 1] - led.free_energy[k]);
            rep["F0"] = led.free_energy.front();
            rep["ep0"] = led.ep_overdamped.front();
            rep["worst_relative_balance_residual"] = worst_balance;
            rep["free_energy_monotone"] = min_f_step >= -1e-10;
            ok = min_f_step >= -1e-10 && worst_balance <= 1e-2;
            for (std::size_t k = 0; k < led.times.size(); ++k) {
                ok = ok && led.free_energy[k] >= -1e-9 && led.ep_overdamped[k] >= -1e-9;
                if (std::isfinite(led.housekeeping[k])) ok = ok && led.housekeeping[k] >= -1e-9;
            }
        } else if (type == "ensemble") {
            EnsembleSpec spec;
            spec.n_paths = a.value("n_paths", 10000);
            spec.dt = a.value("dt", 1e-3);
            spec.output_times = a.at("times").get<std::vector<double>>();
            spec.seed = seed;
            const Json& init = a.at("initial");
            if (init.contains("cov"))
                spec.initial = InitialDistribution::gaussian(config::parse_vector(init.at("mean")),
                                                             config::parse_matrix(init.at("cov")));
            else
                spec.initial = InitialDistribution::point(config::parse_vector(init.at("mean")));
            if (a.value("histogram", false)) spec.histogram_grid = grid;
            EnsembleStats st = simulate(model, spec);
            write_ensemble_csv(out_dir / "ensemble.csv", st);
            if (spec.histogram_grid) {
                write_density_csv(out_dir / "ensemble_histogram.csv", st.histogram.back(),
                                  &st.current.back());
                if (a.value("binary_snapshot", false))
                    write_density_binary(out_dir / "ensemble_histogram.bin", st.histogram.back(),
                                         &st.current.back());
                double mass = grid_integrate(st.histogram.back());
                rep["histogram_mass"] = mass;
                rep["outside_fraction"] = st.outside_fraction.back();
                ok = std::abs(mass - (1.0 - st.outside_fraction.back())) <= 1e-9;
            }
            rep["n_paths"] = spec.n_paths;
        } else if (type == "helmholtz") {
            SampleBox box;
            box.lo = config::parse_vector(a.at("box_lo"));
            box.hi = config::parse_vector(a.at("box_hi"));
            std::vector<double> h_grid = a.at("h_grid").get<std::vector<double>>();
            std::vector<double> alpha_grid = a.at("alpha_grid").get<std::vector<double>>();
            const long n_samples = a.value("n_samples", 1000000);
            const double scale = a.value("alpha_scales_first_axis", true) ? 1.0 : 0.0;
            auto phi = [scale](const Vector& x, double alpha) {
                double first = scale > 0 ? x[0] * x[0] / alpha : x[0] * x[0];
                double rest = x.squaredNorm() - x[0] * x[0];
                return 0.5 * (first + rest);
            };
            SigmaTable t = build_sigma_table(phi, h_grid, alpha_grid, box, n_samples, seed);
            theta_and_force(t);
            MaxwellReport mx = maxwell_check(t);
            write_sigma_csv(out_dir / "sigma_table.csv", t);
            rep["maxwell_max_abs"] = mx.max_abs;
            rep["sigma_se_max"] = t.sigma_se.maxCoeff();
            ok = mx.max_abs <= 1e-10;
        } else if (type == "carnot") {
            CarnotSpec spec;
            spec.mu = a.value("mu", 1.0);
            spec.nu = a.value("nu", 0.5);
            spec.theta_hot = a.value("theta_hot", 2.0);
            spec.theta_cold = a.value("theta_cold", 1.0);
            spec.sigma_low = a.value("sigma_low", 0.0);
            spec.sigma_high = a.value("sigma_high", 1.0);
            CarnotCycle cyc = carnot_curves(spec, a.value("points_per_branch", 64));
            write_carnot_csv(out_dir / "carnot_branches.csv", cyc);
            write_carnot_corners_csv(out_dir / "carnot_corners.csv", cyc);
            double worst = 0;
            for (std::size_t br = 0; br < cyc.branches.size(); ++br)
                for (const CarnotPoint& p : cyc.branches[br].points) {
                    double r = br % 2 == 0
                                   ? p.alpha * p.force - spec.nu * cyc.branches[br].level
                                   : std::pow(p.alpha, 1 + spec.nu / spec.mu) * p.force -
                                         (spec.nu / spec.mu) *
                                             std::exp(cyc.branches[br].level / spec.mu);
                    worst = std::max(worst, std::abs(r));
                }
            rep["branch_equation_residual"] = worst;
            rep["corners"] = Json::array();
            for (const CarnotPoint& p : cyc.corners)
                rep["corners"].push_back({{"alpha", p.alpha}, {"F_alpha", p.force}});
            ok = worst <= 1e-12;
        } else if (type == "pendulum") {
            PendulumSpec spec;
            spec.mass = a.value("mass", 1.0);
            spec.stiffness = a.value("stiffness", 1.0);
            spec.damping = a.value("damping", 0.0);
            spec.x0 = a.value("x0", 1.0);
            spec.v0 = a.value("v0", 0.0);
            spec.dt = a.value("dt", 1e-3);
            spec.t_final = a.value("t_final", 100.0);
            spec.record_stride = a.value("record_stride", 1000);
            const double amp = a.value("drive_amplitude", 0.0);
            const double freq = a.value("drive_frequency", 0.9);
            if (amp != 0) spec.drive = [amp, freq](double t) { return amp * std::cos(freq * t); };
            spec.noise_amplitude = a.value("noise_amplitude", 0.0);
            spec.seed = seed;
            PendulumLedger led = driven_pendulum_ledger(spec);
            write_pendulum_csv(out_dir / "pendulum.csv", led);
            rep["max_residual"] = led.max_residual;
            rep["mean_input_rate"] = led.mean_input_rate;
            rep["mean_dissipation_rate"] = led.mean_dissipation_rate;
            ok = led.max_residual <= 1e-5 * std::max(spec.t_final, 1.0);
        } else {
            throw std::invalid_argument("config: unknown analysis '" + type + "'");
        }

        rep["passed"] = ok;
        result.passed = result.passed && ok;
        summary["analyses"].push_back(rep);
    }

    summary["passed"] = result.passed;
    Json meta;
    meta["timestamp"] =
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count();
    Json with_meta = summary;
    with_meta["meta"] = meta;
    std::ofstream(out_dir / "summary.json") << with_meta.dump(2) << "\n";
    return result;
}

inline ExperimentResult run_experiment_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path.string());
    Json cfg = Json::parse(in);
    return run_experiment(cfg);
}

/// Model catalog documentation for the command line.
inline std::string catalog_listing()
{
    return "available models:\n"
           "  ou            linear drift -Bx, constant diffusion\n"
           "                params: B (matrix), D (matrix), beta\n"
           "                example: rotating two-dimensional process B=[[1,2],[-2,1]], D=I\n"
           "  gradient      gradient flow b = -D grad(phi), detailed balanced\n"
           "                params: potential {name: quadratic|double_well|quartic}, D, beta\n"
           "  klein_kramers underdamped phase-space dynamics with velocity noise\n"
           "                params: mass, potential (for U), eta, kBT\n"
           "  ao            skew-mobility gradient process b = -G grad(phi), D = sym(G)\n"
           "                params: G (matrix), potential\n";
}

inline std::string config_schema()
{
    return "configuration file (JSON):\n"
           "  model:      {name, ...params}  see list-models\n"
           "  grid:       {lo: [..], hi: [..], counts: [..]}  cell-centered box\n"
           "  seed:       integer, drives every sampled analysis\n"
           "  output_dir: artifact directory (env DIFFTHERM_OUTPUT_DIR overrides)\n"
           "  tolerances: {rel_j, div, orth, mass_floor, pointwise_floor}\n"
           "  analyses:   list of\n"
           "    {type: stationary}                         stationary.csv: x.., f, J..\n"
           "    {type: decompose, use_analytic_fields?}    decomposition_phi.csv: x.., phi, j..\n"
           "    {type: adjoint_split}                      residuals in summary only\n"
           "    {type: ou_analytic}                        certificate residuals in summary\n"
           "    {type: ledger, initial: {mean, cov}, dt, steps, stride}\n"
           "                                               ledger.csv: t, F, S, ep_overdamped,\n"
           "                                               ep_nonadiabatic, E_in, dphi_dt, dF_dt,\n"
           "                                               balance_residual, eq9_residual\n"
           "    {type: ensemble, n_paths, dt, times: [..], initial, histogram?, binary_snapshot?}\n"
           "                                               ensemble.csv, ensemble_histogram.csv\n"
           "    {type: helmholtz, h_grid, alpha_grid, box_lo, box_hi, n_samples}\n"
           "                                               sigma_table.csv: h, alpha, sigma, ...\n"
           "    {type: carnot, mu, nu, theta_hot, theta_cold, sigma_low, sigma_high}\n"
           "                                               carnot_branches.csv, carnot_corners.csv\n"
           "    {type: pendulum, mass, stiffness, damping, drive_amplitude, drive_frequency,\n"
           "     x0, v0, dt, t_final}                      pendulum.csv\n"
           "exit status is 0 iff every analysis passed its invariant checks.\n";
}

}  // namespace difftherm

// detlab: command-line front end for detection-time experiments.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "detlab/detlab.hpp"

namespace {

using namespace detlab;

void print_checks(const std::vector<CheckResult>& checks) {
    for (const auto& c : checks)
        std::printf("  %-30s %-5s value=%s tol=%s\n", c.name.c_str(), c.pass ? "ok" : "FAIL",
                    format_number(c.value).c_str(), format_number(c.tolerance).c_str());
}

int cmd_simulate(const std::string& path, bool svg) {
    const auto cfg = load_config(path);
    const auto res = run_experiment(cfg);
    const auto dir = output_directory(cfg);
    const auto stem = dir / cfg.name;
    write_json(stem.string() + ".report.json", experiment_to_json(res));
    write_record_csv(stem.string() + ".record.csv", res.coarse.record);

    std::optional<EnergyDensity> density;
    if (potential_is_uniform(cfg.potential)) {
        const Grid grid = build_grid(cfg.geometry, cfg.n_interior);
        density = energy_density(make_state(cfg.state, grid, cfg.constants));
        write_energy_density_csv(stem.string() + ".energy_density.csv", *density);
    }
    if (svg) {
        const auto& rec = res.coarse.record;
        write_svg_plot(stem.string() + ".w.svg", rec.times, rec.density, "detection density", "t", "w(t)");
        if (density) write_svg_plot(stem.string() + ".rho.svg", density->energies, density->rho, "energy density", "E", "rho(E)");
    }

    const auto& r = res.report;
    std::printf("%s  [%s]\n", cfg.name.c_str(), r.config_hash.c_str());
    std::printf("  p_hat=%s sigma_T=%s sigma_E=%s\n", format_number(r.p_hat).c_str(), format_number(r.sigma_T).c_str(),
                format_number(r.sigma_E).c_str());
    std::printf("  product=%s bound=%s margin=%s delta_num=%s status=%s\n", format_number(r.product).c_str(),
                format_number(r.bound).c_str(), format_number(r.margin).c_str(), format_number(r.delta_num).c_str(),
                to_string(r.status).c_str());
    print_checks(r.checks);
    std::printf("  wrote %s.*  (%.1f s)\n", stem.string().c_str(), res.seconds);
    return r.all_checks_pass() ? 0 : 1;
}

int cmd_sweep(const std::string& path, const std::vector<std::string>& axis_specs, unsigned workers) {
    const auto cfg = load_config(path);
    std::vector<SweepAxis> axes;
    for (const auto& s : axis_specs) axes.push_back(parse_axis(s));
    const auto res = sweep(cfg, axes, workers);
    const auto dir = output_directory(cfg);
    const auto file = dir / (cfg.name + ".sweep.csv");

    std::vector<std::string> header{"index"};
    for (const auto& a : res.axes) header.push_back(a);
    for (const char* h : {"p_hat", "sigma_T", "sigma_E", "product", "bound", "margin", "delta_num", "status", "pass",
                          "config_hash", "error"})
        header.push_back(h);
    CsvWriter csv(file, header);
    for (const auto& row : res.rows) {
        std::vector<std::string> cells{std::to_string(row.index)};
        for (double v : row.parameters) cells.push_back(format_number(v));
        if (row.report) {
            const auto& r = *row.report;
            for (double v : {r.p_hat, r.sigma_T, r.sigma_E, r.product, r.bound, r.margin, r.delta_num})
                cells.push_back(format_number(v));
            cells.push_back(to_string(r.status));
            cells.push_back(row.pass() ? "true" : "false");
            cells.push_back(r.config_hash);
        } else {
            for (int i = 0; i < 8; ++i) cells.emplace_back();
            cells.back() = "false";
            cells.emplace_back();
        }
        cells.push_back(row.error);
        csv.row_strings(cells);
        std::printf("  row %zu %s%s\n", row.index, row.pass() ? "ok" : "FAIL",
                    row.error.empty() ? "" : (" (" + row.error + ")").c_str());
    }
    std::printf("wrote %s (%zu rows)\n", file.string().c_str(), res.rows.size());
    return res.all_pass() ? 0 : 1;
}

int cmd_operator_check(const std::string& path, std::size_t dense_n) {
    const auto cfg = load_config(path);
    OperatorCheckOptions opt;
    opt.dense_n = dense_n;
    const auto res = operator_check(cfg, opt);
    const auto dir = output_directory(cfg);
    json j;
    j["config_hash"] = config_hash(cfg);
    j["checks"] = checks_to_json(res.checks);
    j["skew_residual"] = res.skew_residual;
    j["povm_residual"] = res.povm_residual;
    j["povm_trapezoid_ratio"] = res.povm_trapezoid_ratio;
    j["contraction_norms"] = res.semigroup.norms;
    j["slowest_decay_rate"] = res.spectrum.slowest_decay_rate;
    j["undetected_norm"] = res.undetected_norm;
    if (res.dilation)
        j["dilation"] = {{"norm_sq", res.dilation->norm_sq},
                         {"sigma_T_tilde", res.dilation->sigma_T_tilde},
                         {"sigma_H_tilde", res.dilation->sigma_H_tilde},
                         {"sigma_H_tilde_raw", res.dilation->sigma_H_tilde_raw},
                         {"sigma_H_tilde_fd", res.dilation->sigma_H_tilde_fd},
                         {"sigma_E", res.dilation_sigma_E},
                         {"kennard_product", res.dilation->kennard_product},
                         {"delta", res.dilation_delta}};
    j["pass"] = res.all_pass();
    write_json(dir / (cfg.name + ".operator.json"), j);
    CsvWriter csv(dir / (cfg.name + ".operator.csv"), {"check", "value", "tolerance", "pass"});
    for (const auto& c : res.checks)
        csv.row_strings({c.name, format_number(c.value), format_number(c.tolerance), c.pass ? "true" : "false"});
    std::printf("%s operator checks\n", cfg.name.c_str());
    print_checks(res.checks);
    return res.all_pass() ? 0 : 1;
}

int cmd_spectrum(const std::string& path, std::size_t dense_n) {
    const auto cfg = load_config(path);
    const Grid grid = build_grid(cfg.geometry, dense_n);
    const auto h =
        assemble_hamiltonian(grid, cfg.constants, DetectorSpec(cfg.kappa), make_potential(cfg.potential, grid));
    const auto rep = spectrum_check(build_dense(h, grid.dx()));
    const auto dir = output_directory(cfg);
    CsvWriter csv(dir / (cfg.name + ".spectrum.csv"), {"index", "re", "im", "decay_rate"});
    for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i) {
        const auto& e = rep.eigenvalues[i];
        csv.row({static_cast<double>(i), e.real(), e.imag(), -2.0 * e.imag() / cfg.constants.hbar});
    }
    const auto c = check_below("max_imag_eigenvalue", rep.max_imag, 1e-10);
    std::printf("%s spectrum: %zu eigenvalues, max Im = %s, slowest decay rate = %s, non-normality = %s\n",
                cfg.name.c_str(), rep.eigenvalues.size(), format_number(rep.max_imag).c_str(),
                format_number(rep.slowest_decay_rate).c_str(), format_number(rep.non_normality).c_str());
    return c.pass ? 0 : 1;
}

int cmd_minimize(const std::string& path, std::size_t budget) {
    const auto cfg = load_config(path);
    const auto res = minimize_product(cfg, budget);
    const auto dir = output_directory(cfg);
    CsvWriter csv(dir / (cfg.name + ".search.csv"),
                  {"index", "restart", "x0", "p0", "sigma_x", "kappa", "product", "error"});
    for (const auto& e : res.trajectory)
        csv.row_strings({std::to_string(e.index), std::to_string(e.restart), format_number(e.point.x0),
                         format_number(e.point.p0), format_number(e.point.sigma_x), format_number(e.point.kappa),
                         format_number(e.product), e.error});
    json j{{"best", {{"x0", res.best.x0}, {"p0", res.best.p0}, {"sigma_x", res.best.sigma_x}, {"kappa", res.best.kappa}}},
           {"best_product", res.best_product},
           {"delta_num", res.delta_num},
           {"floor", res.floor},
           {"floor_holds", res.floor_holds()},
           {"converged", res.converged},
           {"budget_exhausted", res.budget_exhausted},
           {"evaluations", res.trajectory.size()},
           {"config_hash", config_hash(cfg)}};
    write_json(dir / (cfg.name + ".search.json"), j);
    std::printf("best product %s at x0=%s p0=%s sigma_x=%s kappa=%s (delta_num %s, %zu evaluations%s)\n",
                format_number(res.best_product).c_str(), format_number(res.best.x0).c_str(),
                format_number(res.best.p0).c_str(), format_number(res.best.sigma_x).c_str(),
                format_number(res.best.kappa).c_str(), format_number(res.delta_num).c_str(), res.trajectory.size(),
                res.converged ? ", converged" : "");
    std::printf("floor %s: %s\n", format_number(res.floor).c_str(), res.floor_holds() ? "holds" : "VIOLATED");
    return res.floor_holds() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"absorbing-boundary detection time lab"};
    app.require_subcommand(1);
    std::string config;
    bool svg = false;
    std::vector<std::string> axes;
    unsigned workers = 0;
    std::size_t dense_n = 128, budget = 200;

    auto* sim = app.add_subcommand("simulate", "run one experiment");
    sim->add_option("config", config, "JSON config")->required()->check(CLI::ExistingFile);
    sim->add_flag("--svg", svg, "also write SVG plots");

    auto* sw = app.add_subcommand("sweep", "cartesian sweep over parameters");
    sw->add_option("config", config)->required()->check(CLI::ExistingFile);
    sw->add_option("--axis", axes, "name=v1,v2,... (repeatable)")->required();
    sw->add_option("--workers", workers, "worker threads (0: hardware)");

    auto* op = app.add_subcommand("operator-check", "dense operator identities and dilation checks");
    op->add_option("config", config)->required()->check(CLI::ExistingFile);
    op->add_option("--n", dense_n, "interior nodes of the dense grid")->check(CLI::Range(16, 510));

    auto* sp = app.add_subcommand("spectrum", "eigenvalues of the absorbing Hamiltonian");
    sp->add_option("config", config)->required()->check(CLI::ExistingFile);
    sp->add_option("--n", dense_n, "interior nodes of the dense grid")->check(CLI::Range(16, 510));

    auto* mn = app.add_subcommand("minimize", "search for the smallest uncertainty product");
    mn->add_option("config", config)->required()->check(CLI::ExistingFile);
    mn->add_option("--budget", budget, "number of simulations")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);
    try {
        if (*sim) return cmd_simulate(config, svg);
        if (*sw) return cmd_sweep(config, axes, workers);
        if (*op) return cmd_operator_check(config, dense_n);
        if (*sp) return cmd_spectrum(config, dense_n);
        if (*mn) return cmd_minimize(config, budget);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}

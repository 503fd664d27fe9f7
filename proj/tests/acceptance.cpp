// Acceptance run: one PASS/FAIL line per criterion, exit code 0 iff all pass.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "acceptance_suite.hpp"
#include "detlab/detlab.hpp"

using namespace detlab;

namespace {

int failures = 0;

void verdict(int id, bool pass, const std::string& what, const std::string& detail) {
    std::printf("criterion %d: %s  %s (%s)\n", id, pass ? "PASS" : "FAIL", what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

struct Run {
    ExperimentConfig cfg;
    ExperimentResult res;
    std::string error;
};

std::vector<Run> run_all(const std::vector<ExperimentConfig>& cfgs) {
    std::vector<Run> out;
    for (const auto& c : cfgs) {
        Run r{c, {}, {}};
        try {
            r.res = run_experiment(c);
            const auto& p = r.res.report;
            std::printf("  %-22s p=%.6f sigma_T=%.6g sigma_E=%.6g product=%.6g bound=%.4g delta=%.2e %.1fs\n",
                        c.name.c_str(), p.p_hat, p.sigma_T, p.sigma_E, p.product, p.bound, p.delta_num, r.res.seconds);
        } catch (const std::exception& e) {
            r.error = e.what();
            std::printf("  %-22s ERROR %s\n", c.name.c_str(), e.what());
        }
        std::fflush(stdout);
        out.push_back(std::move(r));
    }
    return out;
}

bool bound_holds(const Run& r) {
    const auto& p = r.res.report;
    return r.error.empty() && p.delta_num < 0.01 && p.product >= p.bound * (1.0 - p.delta_num);
}

void criterion_main_inequality(const std::vector<Run>& runs) {
    std::size_t ok = 0, kinds = 0;
    double worst_time = 0.0, worst_delta = 0.0, min_ratio = INFINITY;
    bool interval = false, ball = false, gauss = false, bump = false, modes = false;
    bool k01 = false, k1 = false, k10 = false, v0 = false, vc = false, vb = false;
    for (const auto& r : runs) {
        if (!r.error.empty()) continue;
        const auto& p = r.res.report;
        ok += bound_holds(r) && r.res.seconds <= 30.0 && r.cfg.n_interior == 2048 && !r.cfg.dt;
        worst_time = std::max(worst_time, r.res.seconds);
        worst_delta = std::max(worst_delta, p.delta_num);
        min_ratio = std::min(min_ratio, p.product / p.bound);
        interval |= std::holds_alternative<Interval>(r.cfg.geometry);
        ball |= std::holds_alternative<Ball>(r.cfg.geometry);
        gauss |= std::holds_alternative<GaussianState>(r.cfg.state);
        bump |= std::holds_alternative<BumpState>(r.cfg.state);
        modes |= std::holds_alternative<ModeState>(r.cfg.state);
        k01 |= r.cfg.kappa == 0.1;
        k1 |= r.cfg.kappa == 1.0;
        k10 |= r.cfg.kappa == 10.0;
        v0 |= std::holds_alternative<NoPotential>(r.cfg.potential);
        vc |= std::holds_alternative<ConstantPotential>(r.cfg.potential);
        vb |= std::holds_alternative<BumpPotential>(r.cfg.potential);
    }
    kinds = interval + ball + gauss + bump + modes + k01 + k1 + k10 + v0 + vc + vb;
    const bool pass = runs.size() >= 20 && ok == runs.size() && kinds == 11;
    verdict(1, pass, "sigma_T sigma_E >= hbar/2 (1 - delta_num) on bounded regions",
            std::to_string(ok) + "/" + std::to_string(runs.size()) + " runs, smallest product/bound " +
                fmt("%.4g", min_ratio) + ", max delta_num " + fmt("%.2e", worst_delta) + ", slowest run " +
                fmt("%.1f s", worst_time) + ", coverage " + std::to_string(kinds) + "/11");
}

void criterion_conditional(const std::vector<Run>& runs) {
    std::size_t ok = 0;
    double lo = 1.0, hi = 0.0, min_ratio = INFINITY;
    for (const auto& r : runs) {
        if (!r.error.empty()) continue;
        const auto& p = r.res.report;
        const double b = std::sqrt(p.p_hat) * 0.5 * r.cfg.constants.hbar;
        ok += bound_holds(r) && std::abs(p.bound - b) < 1e-15 && p.tail_method == TailMethod::WindowTruncated;
        lo = std::min(lo, p.p_hat);
        hi = std::max(hi, p.p_hat);
        min_ratio = std::min(min_ratio, p.product / p.bound);
    }
    const bool pass = runs.size() >= 5 && ok == runs.size() && lo <= 0.05 && hi >= 0.95;
    verdict(2, pass, "sigma_T sigma_E >= sqrt(p) hbar/2 (1 - delta_num) on the half-line",
            std::to_string(ok) + "/" + std::to_string(runs.size()) + " runs, p_hat in [" + fmt("%.4f", lo) + ", " +
                fmt("%.4f", hi) + "], smallest product/bound " + fmt("%.4g", min_ratio));
}

void criterion_norm_balance(const std::vector<const Run*>& runs) {
    double worst = 0.0;
    std::size_t n = 0;
    for (const auto* r : runs) {
        if (!r->error.empty()) {
            worst = INFINITY;
            continue;
        }
        worst = std::max(worst, norm_balance_defect(r->res.coarse.record));
        if (r->res.fine) worst = std::max(worst, norm_balance_defect(r->res.fine->record));
        n += r->res.fine ? 2 : 1;
    }
    verdict(3, worst < 1e-12, "norm balance |1 - ||psi_t||^2 - sum w dt| < 1e-12",
            std::to_string(n) + " evolutions, worst " + fmt("%.2e", worst));
}

void criterion_flux_routes(const std::vector<const Run*>& runs) {
    double worst = 0.0;
    std::vector<double> ratios;
    for (const auto* r : runs) {
        if (!r->error.empty() || !r->res.fine) {
            worst = INFINITY;
            continue;
        }
        const double a = r->res.coarse.flux_difference, b = r->res.fine->flux_difference;
        worst = std::max(worst, a);
        ratios.push_back(a / b);
    }
    std::sort(ratios.begin(), ratios.end());
    const double median = ratios.empty() ? 0.0 : ratios[ratios.size() / 2];
    // every run at least second order, the typical run at ~4x
    const bool pass = !ratios.empty() && worst < 1e-3 && ratios.front() >= 3.0 && median >= 3.5 && median <= 4.5;
    verdict(4, pass, "prob1/prob2 relative L2 difference < 1e-3, shrinking ~4x under dx halving",
            std::to_string(ratios.size()) + " runs, worst " + fmt("%.2e", worst) + ", halving ratio median " +
                fmt("%.2f", median) + " range [" + fmt("%.2f", ratios.empty() ? 0.0 : ratios.front()) + ", " +
                fmt("%.2f", ratios.empty() ? 0.0 : ratios.back()) + "]");
}

void criterion_energy_routes(const std::vector<Run>& runs) {
    double worst = 0.0;
    std::size_t n = 0;
    for (const auto& r : runs) {
        const bool eligible = std::holds_alternative<Interval>(r.cfg.geometry) &&
                              !std::holds_alternative<GaussianState>(r.cfg.state) &&
                              potential_is_uniform(r.cfg.potential);
        if (!eligible) continue;
        if (!r.error.empty()) {
            worst = INFINITY;
            continue;
        }
        if (r.res.coarse.routes.size() < 3) {
            worst = INFINITY;
            continue;
        }
        worst = std::max(worst, max_route_spread(r.res.coarse.routes));
        ++n;
    }
    const std::vector<cplx> c{1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
    const auto psi = make_mode_superposition(build_grid(suite::unit_interval, 2048), PhysicalConstants{}, c);
    const double exact = 3.0 * std::numbers::pi * std::numbers::pi / 4.0;
    const double e_op = std::abs(sigmaE_operator(psi).sigma_E - exact) / exact;
    const double e_dir = std::abs(sigmaE_dirichlet(psi, 2048).sigma_E - exact) / exact;
    const bool pass = n > 0 && worst < 1e-3 && e_op < 1e-4 && e_dir < 1e-4;
    verdict(5, pass, "sigma_E routes agree to 1e-3; two-mode 3 pi^2/4 to 1e-4",
            std::to_string(n) + " bump/mode runs, worst spread " + fmt("%.2e", worst) + ", two-mode error operator " +
                fmt("%.2e", e_op) + " dirichlet " + fmt("%.2e", e_dir));
}

const CheckResult* find(const std::vector<CheckResult>& checks, const std::string& name) {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

bool passed(const std::vector<CheckResult>& checks, const std::vector<std::string>& names, std::string& detail) {
    bool all = true;
    for (const auto& n : names) {
        const auto* c = find(checks, n);
        all = all && c && c->pass;
        detail += (detail.empty() ? "" : ", ") + n + " " + (c ? fmt("%.2e", c->value) : std::string("missing"));
    }
    return all;
}

void criteria_operator_lab() {
    ExperimentConfig cfg = suite::make("lab_bump_k1", suite::unit_interval, 1.0, BumpState{0.5, 0.2, 0.0});
    OperatorCheckResult res;
    std::string err;
    try {
        res = operator_check(cfg);
    } catch (const std::exception& e) {
        err = e.what();
    }
    std::string d6, d7;
    const bool p6 = err.empty() && passed(res.checks,
                                          {"skew_identity_residual", "contraction_max_norm", "semigroup_defect",
                                           "povm_completeness_residual", "max_imag_eigenvalue",
                                           "undetected_operator_norm"},
                                          d6);
    verdict(6, p6, "dense operator identities (N=128)", err.empty() ? d6 : err);

    const bool p7a = err.empty() && passed(res.checks,
                                           {"dilation_norm_vs_p_hat", "intertwining_defect", "sigma_H_tilde_vs_sigma_E",
                                            "kennard_margin"},
                                           d7);
    // p < 1: the conditional chain in the dilation space
    ExperimentConfig hl;
    hl.name = "lab_halfline";
    hl.geometry = HalfLine{30.0};
    hl.n_interior = 3000;
    hl.kappa = 2.0;
    hl.state = GaussianState{2.0, 1.0, 0.25};
    OperatorCheckOptions opt;
    opt.dilation_n = hl.n_interior;
    opt.dilation_dt_factor = 0.25;
    bool p7b = false;
    try {
        OperatorCheckResult h;
        dilation_checks(hl, opt, h);
        std::string dh;
        p7b = passed(h.checks, {"dilation_norm_vs_p_hat", "conditional_chain_unordered", "kennard_margin"}, dh);
        d7 += "; half-line p=" + fmt("%.4f", h.dilation->norm_sq) + " chain " + (p7b ? "ordered" : "broken");
    } catch (const std::exception& e) {
        d7 += std::string("; half-line error ") + e.what();
    }
    verdict(7, p7a && p7b, "dilation isometry, intertwining, sigma_H~ = sigma_E, Kennard on phi",
            err.empty() ? d7 : err);
}

void criterion_injected() {
    struct Case {
        const char* name;
        std::function<double(double)> cdf;
        double t_max, mean, var;
    };
    const std::vector<Case> cases{
        {"exponential", [](double t) { return 1.0 - std::exp(-2.0 * t); }, 12.0, 0.5, 0.25},
        {"exponential+tail", [](double t) { return 1.0 - std::exp(-2.0 * t); }, 5.0, 0.5, 0.25},
        {"uniform", [](double t) { return std::clamp((t - 1.0) / 2.0, 0.0, 1.0); }, 4.0, 2.0, 1.0 / 3.0},
        {"two-point", [](double t) { return (t > 1.0005 ? 0.3 : 0.0) + (t > 2.0005 ? 0.7 : 0.0); }, 3.0, 1.7005, 0.21},
    };
    double worst = 0.0;
    for (const auto& c : cases) {
        const auto st = conditional_time_moments(inject_distribution(c.cdf, 1e-3, c.t_max));
        worst = std::max({worst, std::abs(st.mean_T - c.mean), std::abs(st.var_T - c.var)});
    }
    verdict(8, worst < 1e-6, "injected densities reproduce closed-form moments",
            std::to_string(cases.size()) + " densities, worst error " + fmt("%.2e", worst));
}

void criterion_search() {
    ExperimentConfig base;
    base.name = "search";
    base.t_max = 1000.0;
    try {
        const auto r = minimize_product(base, 200);
        const auto& b = r.best;
        char detail[256];
        std::snprintf(detail, sizeof detail,
                      "%zu evaluations, best %.6g at x0=%.3f p0=%.3f sigma_x=%.4f kappa=%.3f, delta_num %.2e%s",
                      r.trajectory.size(), r.best_product, b.x0, b.p0, b.sigma_x, b.kappa, r.delta_num,
                      r.converged ? ", converged" : "");
        verdict(9, r.floor_holds() && r.delta_num < 0.01, "search never goes below hbar/2 (1 - delta_num)", detail);
    } catch (const std::exception& e) {
        verdict(9, false, "search never goes below hbar/2 (1 - delta_num)", e.what());
    }
}

}  // namespace

int main() {
    std::printf("bounded suite\n");
    const auto bounded = run_all(suite::bounded_suite());
    std::printf("half-line suite\n");
    const auto halfline = run_all(suite::halfline_suite());

    std::vector<const Run*> every;
    for (const auto& r : bounded) every.push_back(&r);
    for (const auto& r : halfline) every.push_back(&r);

    criterion_main_inequality(bounded);
    criterion_conditional(halfline);
    criterion_norm_balance(every);
    criterion_flux_routes(every);
    criterion_energy_routes(bounded);
    criteria_operator_lab();
    criterion_injected();
    criterion_search();
    std::printf("%s\n", failures ? "ACCEPTANCE FAILED" : "ACCEPTANCE PASSED");
    return failures ? 1 : 0;
}

#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "detlab/config.hpp"
#include "detlab/experiment.hpp"

namespace detlab {

struct SweepAxis {
    std::string name;
    std::vector<double> values;
};

/// "kappa=0.1,1,10" -> {kappa, [0.1, 1, 10]}. "k" is accepted for kappa.
inline SweepAxis parse_axis(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw std::invalid_argument("axis must look like name=v1,v2,...: " + spec);
    SweepAxis a;
    a.name = spec.substr(0, eq);
    if (a.name == "k") a.name = "kappa";
    std::size_t pos = eq + 1;
    while (pos < spec.size()) {
        auto comma = spec.find(',', pos);
        if (comma == std::string::npos) comma = spec.size();
        double v = 0.0;
        const auto* first = spec.data() + pos;
        const auto* last = spec.data() + comma;
        const auto r = std::from_chars(first, last, v);
        if (r.ec != std::errc() || r.ptr != last)
            throw std::invalid_argument("bad axis value '" + spec.substr(pos, comma - pos) + "' in " + spec);
        a.values.push_back(v);
        pos = comma + 1;
    }
    if (a.values.empty()) throw std::invalid_argument("axis '" + a.name + "' is empty");
    return a;
}

/// Sets one named parameter on a copy of the config.
inline ExperimentConfig with_parameter(ExperimentConfig c, const std::string& name, double v) {
    auto bad = [&] { return std::invalid_argument("parameter '" + name + "' does not apply to this config"); };
    if (name == "kappa") {
        c.kappa = v;
    } else if (name == "t_max") {
        c.t_max = v;
    } else if (name == "n_interior") {
        c.n_interior = static_cast<std::size_t>(v);
    } else if (auto* g = std::get_if<GaussianState>(&c.state)) {
        if (name == "x0") g->x0 = v;
        else if (name == "p0") g->p0 = v;
        else if (name == "sigma_x") g->sigma_x = v;
        else throw bad();
    } else if (auto* b = std::get_if<BumpState>(&c.state)) {
        if (name == "center") b->center = v;
        else if (name == "half_width") b->half_width = v;
        else if (name == "p0") b->p0 = v;
        else throw bad();
    } else {
        throw bad();
    }
    return c;
}

struct SweepRow {
    std::size_t index = 0;
    std::vector<double> parameters;  // one per axis
    std::optional<UncertaintyReport> report;
    std::string error;  // non-empty for a failed row
    double seconds = 0.0;

    bool pass() const { return report && error.empty() && report->all_checks_pass(); }
};

struct SweepResult {
    std::vector<std::string> axes;
    std::vector<SweepRow> rows;  // cartesian index order, first axis slowest

    bool all_pass() const {
        return std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.pass(); });
    }
};

/// One run per combination of axis values. Failed runs are flagged in their
/// row; the sweep carries on.
inline SweepResult sweep(const ExperimentConfig& base, const std::vector<SweepAxis>& axes, unsigned workers = 0) {
    if (axes.empty()) throw std::invalid_argument("sweep needs at least one axis");
    std::size_t total = 1;
    for (const auto& a : axes) {
        if (a.values.empty()) throw std::invalid_argument("axis '" + a.name + "' is empty");
        total *= a.values.size();
    }
    SweepResult out;
    for (const auto& a : axes) out.axes.push_back(a.name);
    out.rows.resize(total);
    for (std::size_t i = 0; i < total; ++i) {
        auto& row = out.rows[i];
        row.index = i;
        row.parameters.resize(axes.size());
        std::size_t rem = i;
        for (std::size_t a = axes.size(); a-- > 0;) {
            row.parameters[a] = axes[a].values[rem % axes[a].values.size()];
            rem /= axes[a].values.size();
        }
    }

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < total;) {
            auto& row = out.rows[i];
            const auto start = std::chrono::steady_clock::now();
            try {
                ExperimentConfig c = base;
                for (std::size_t a = 0; a < axes.size(); ++a) c = with_parameter(std::move(c), axes[a].name, row.parameters[a]);
                row.report = run_experiment(c).report;
            } catch (const std::exception& e) {
                row.error = e.what();
            }
            row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        }
    };
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, total));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    return out;
}

}  // namespace detlab

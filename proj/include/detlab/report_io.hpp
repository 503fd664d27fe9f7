#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <locale>
#include <string>
#include <vector>

#include <json.hpp>

#include "detlab/config.hpp"
#include "detlab/detection.hpp"
#include "detlab/energy.hpp"
#include "detlab/experiment.hpp"

namespace detlab {

inline constexpr const char* output_dir_env = "DETLAB_OUTPUT_DIR";

/// Output directory: the environment override wins over the config; created if missing.
inline std::filesystem::path output_directory(const ExperimentConfig& cfg) {
    const char* env = std::getenv(output_dir_env);
    std::filesystem::path dir = (env && *env) ? env : cfg.output_dir;
    std::filesystem::create_directories(dir);
    return dir;
}

/// Shortest round-trip decimal form; independent of the global locale.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, r.ptr};
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
        if (!out_) throw std::runtime_error("cannot write " + path.string());
        row_strings(header);
    }

    void row(const std::vector<double>& values) {
        std::vector<std::string> s;
        s.reserve(values.size());
        for (double v : values) s.push_back(format_number(v));
        row_strings(s);
    }

    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << quote(cells[i]);
        }
        out_ << '\n';
    }

private:
    static std::string quote(const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += '"';
            q += c;
        }
        return q + "\"";
    }
    std::ofstream out_;
};

/// Columns: t, w_norm_decrement, then w_prob1_b<i>, w_prob2_b<i> per boundary element, norm_sq.
inline void write_record_csv(const std::filesystem::path& path, const DetectionRecord& rec) {
    std::vector<std::string> header{"t", "w_norm_decrement"};
    for (std::size_t b = 0; b < rec.boundary_count(); ++b) {
        header.push_back("w_prob1_b" + std::to_string(b));
        header.push_back("w_prob2_b" + std::to_string(b));
    }
    header.push_back("norm_sq");
    CsvWriter csv(path, header);
    std::vector<double> row;
    for (std::size_t k = 0; k < rec.steps(); ++k) {
        row.clear();
        row.push_back(rec.times[k]);
        row.push_back(rec.density[k]);
        for (std::size_t b = 0; b < rec.boundary_count(); ++b) {
            row.push_back(rec.current_density[b][k]);
            row.push_back(rec.kappa_density[b][k]);
        }
        row.push_back(rec.norm_sq[k]);
        csv.row(row);
    }
}

inline void write_energy_density_csv(const std::filesystem::path& path, const EnergyDensity& d) {
    CsvWriter csv(path, {"E", "rho"});
    for (std::size_t i = 0; i < d.energies.size(); ++i) csv.row({d.energies[i], d.rho[i]});
}

inline json checks_to_json(const std::vector<CheckResult>& checks) {
    json a = json::array();
    for (const auto& c : checks)
        a.push_back({{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"pass", c.pass}});
    return a;
}

inline json report_to_json(const UncertaintyReport& r) {
    json routes = json::object();
    for (const auto& e : r.energy_routes) routes[e.route] = e.sigma_E;
    return {{"sigma_T", r.sigma_T},
            {"sigma_E", r.sigma_E},
            {"sigma_E_routes", routes},
            {"p_hat", r.p_hat},
            {"undetected", r.undetected},
            {"product", r.product},
            {"bound", r.bound},
            {"margin", r.margin},
            {"conditional_bound", r.conditional_bound},
            {"mean_T_sigma_E", r.mean_T_sigma_E},
            {"delta_num", r.delta_num},
            {"tail_method", to_string(r.tail_method)},
            {"status", to_string(r.status)},
            {"checks", checks_to_json(r.checks)},
            {"config_hash", r.config_hash},
            {"pass", r.all_checks_pass()}};
}

inline json experiment_to_json(const ExperimentResult& res) {
    json j = report_to_json(res.report);
    j["config"] = to_json(res.config);
    const auto& c = res.coarse;
    j["run"] = {{"n_interior", c.n_interior},
                {"dt", c.dt},
                {"steps", c.record.steps()},
                {"t_end", c.record.t_max},
                {"residual_norm_sq", c.record.residual_norm_sq},
                {"validity_window", std::isfinite(c.validity_window) ? json(c.validity_window) : json(nullptr)},
                {"mean_T", c.stats.mean_T},
                {"tail_correction", c.stats.tail_correction},
                {"decay_rate", c.stats.decay_rate},
                {"mean_E", c.energy.mean_E},
                {"flux_route_difference", c.flux_difference}};
    if (res.fine)
        j["fine_run"] = {{"n_interior", res.fine->n_interior},
                         {"dt", res.fine->dt},
                         {"sigma_T", res.fine->stats.sigma_T},
                         {"sigma_E", res.fine->energy.sigma_E},
                         {"p_hat", res.fine->stats.p_hat},
                         {"product", res.fine->product()},
                         {"flux_route_difference", res.fine->flux_difference}};
    return j;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

/// Minimal static SVG line plot.
inline void write_svg_plot(const std::filesystem::path& path, const std::vector<double>& x, const std::vector<double>& y,
                           const std::string& title, const std::string& xlabel, const std::string& ylabel) {
    constexpr double W = 640, H = 400, ml = 70, mr = 20, mt = 40, mb = 50;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
        x0 = std::min(x0, x[i]);
        x1 = std::max(x1, x[i]);
        y0 = std::min(y0, y[i]);
        y1 = std::max(y1, y[i]);
    }
    if (!(x1 > x0)) x1 = x0 + 1.0;
    if (!(y1 > y0)) y1 = y0 + 1.0;
    auto sx = [&](double v) { return ml + (v - x0) / (x1 - x0) * (W - ml - mr); };
    auto sy = [&](double v) { return H - mb - (v - y0) / (y1 - y0) * (H - mt - mb); };

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.imbue(std::locale::classic());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\">" << title
        << "</text>\n"
        << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\"" << H - mb
        << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
        << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-family=\"sans-serif\">"
        << xlabel << "</text>\n"
        << "<text x=\"16\" y=\"" << H / 2 << "\" transform=\"rotate(-90 16 " << H / 2
        << ")\" text-anchor=\"middle\" font-family=\"sans-serif\">" << ylabel << "</text>\n"
        << "<text x=\"" << ml << "\" y=\"" << H - mb + 16 << "\" font-size=\"11\">" << format_number(x0) << "</text>\n"
        << "<text x=\"" << W - mr << "\" y=\"" << H - mb + 16 << "\" font-size=\"11\" text-anchor=\"end\">"
        << format_number(x1) << "</text>\n"
        << "<text x=\"" << ml - 4 << "\" y=\"" << H - mb << "\" font-size=\"11\" text-anchor=\"end\">"
        << format_number(y0) << "</text>\n"
        << "<text x=\"" << ml - 4 << "\" y=\"" << mt + 8 << "\" font-size=\"11\" text-anchor=\"end\">"
        << format_number(y1) << "</text>\n"
        << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.2\" points=\"";
    // thin long series to ~2000 vertices
    const std::size_t n = std::min(x.size(), y.size());
    const std::size_t stride = std::max<std::size_t>(1, n / 2000);
    for (std::size_t i = 0; i < n; i += stride)
        if (std::isfinite(x[i]) && std::isfinite(y[i])) out << sx(x[i]) << ',' << sy(y[i]) << ' ';
    out << "\"/>\n</svg>\n";
}

}  // namespace detlab

#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "detlab/geometry.hpp"
#include "detlab/hamiltonian.hpp"
#include "detlab/wavefunction.hpp"

namespace detlab {

using json = nlohmann::json;

struct GaussianState {
    double x0 = 0.5;
    double p0 = 0.0;
    double sigma_x = 0.05;
    friend bool operator==(const GaussianState&, const GaussianState&) = default;
};

struct BumpState {
    double center = 0.5;
    double half_width = 0.2;
    double p0 = 0.0;
    friend bool operator==(const BumpState&, const BumpState&) = default;
};

struct ModeState {
    std::vector<cplx> coefficients;
    friend bool operator==(const ModeState&, const ModeState&) = default;
};

using StateSpec = std::variant<GaussianState, BumpState, ModeState>;

struct NoPotential {
    friend bool operator==(const NoPotential&, const NoPotential&) = default;
};
struct ConstantPotential {
    double value = 0.0;
    friend bool operator==(const ConstantPotential&, const ConstantPotential&) = default;
};
struct BumpPotential {
    double height = 0.0;
    double center = 0.5;
    double width = 0.1;
    friend bool operator==(const BumpPotential&, const BumpPotential&) = default;
};

using PotentialSpec = std::variant<NoPotential, ConstantPotential, BumpPotential>;

struct Tolerances {
    double norm_balance = 1e-12;
    double delta_num = 0.01;
    double flux_agreement = 1e-3;
    double route_agreement = 1e-3;
    double imag_defect = 1e-10;
    friend bool operator==(const Tolerances&, const Tolerances&) = default;
};

/// Box for the product search; each entry is [lo, hi].
struct SearchSpace {
    std::array<double, 2> x0{0.2, 0.8};
    std::array<double, 2> p0{-20.0, 20.0};
    std::array<double, 2> sigma_x{0.03, 0.12};
    std::array<double, 2> kappa{0.5, 10.0};
    std::size_t n_interior = 1023;
    std::size_t restarts = 4;
    friend bool operator==(const SearchSpace&, const SearchSpace&) = default;
};

struct ExperimentConfig {
    std::string name = "experiment";
    Geometry geometry = Interval{1.0, BoundaryKind::Absorbing, BoundaryKind::Absorbing};
    std::size_t n_interior = 2048;
    std::optional<double> dt;  // defaults to dx
    PhysicalConstants constants;
    double kappa = 1.0;
    StateSpec state = GaussianState{};
    PotentialSpec potential = NoPotential{};
    double t_max = 100.0;
    double residual_target = 1e-9;  // evolution stops once the norm drops below this
    bool convergence_check = true;
    Tolerances tolerances;
    SearchSpace search;
    std::uint64_t seed = 1;
    std::string output_dir = "detlab-out";

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

inline std::string to_string(BoundaryKind k) { return k == BoundaryKind::Absorbing ? "absorbing" : "dirichlet"; }

inline BoundaryKind boundary_kind_from_string(const std::string& s) {
    if (s == "absorbing") return BoundaryKind::Absorbing;
    if (s == "dirichlet" || s == "wall") return BoundaryKind::DirichletWall;
    throw std::invalid_argument("unknown boundary kind '" + s + "'");
}

inline json geometry_to_json(const Geometry& g) {
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Interval>)
                return {{"kind", "interval"}, {"length", v.length}, {"left", to_string(v.left)}, {"right", to_string(v.right)}};
            else if constexpr (std::is_same_v<T, HalfLine>)
                return {{"kind", "half_line"}, {"x_truncate", v.x_truncate}};
            else
                return {{"kind", "ball"}, {"radius", v.radius}};
        },
        g);
}

inline Geometry geometry_from_json(const json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "interval")
        return Interval{j.value("length", 1.0), boundary_kind_from_string(j.value("left", std::string("absorbing"))),
                        boundary_kind_from_string(j.value("right", std::string("absorbing")))};
    if (kind == "half_line") return HalfLine{j.at("x_truncate").get<double>()};
    if (kind == "ball") return Ball{j.at("radius").get<double>()};
    throw std::invalid_argument("unknown geometry kind '" + kind + "'");
}

inline json state_to_json(const StateSpec& s) {
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, GaussianState>)
                return {{"kind", "gaussian"}, {"x0", v.x0}, {"p0", v.p0}, {"sigma_x", v.sigma_x}};
            else if constexpr (std::is_same_v<T, BumpState>)
                return {{"kind", "bump"}, {"center", v.center}, {"half_width", v.half_width}, {"p0", v.p0}};
            else {
                json c = json::array();
                for (const auto& z : v.coefficients) c.push_back({z.real(), z.imag()});
                return {{"kind", "modes"}, {"coefficients", c}};
            }
        },
        s);
}

inline StateSpec state_from_json(const json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "gaussian")
        return GaussianState{j.at("x0").get<double>(), j.value("p0", 0.0), j.at("sigma_x").get<double>()};
    if (kind == "bump")
        return BumpState{j.at("center").get<double>(), j.at("half_width").get<double>(), j.value("p0", 0.0)};
    if (kind == "modes") {
        ModeState m;
        for (const auto& c : j.at("coefficients")) {
            if (c.is_number())
                m.coefficients.emplace_back(c.get<double>(), 0.0);
            else
                m.coefficients.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
        }
        return m;
    }
    throw std::invalid_argument("unknown state kind '" + kind + "'");
}

inline json potential_to_json(const PotentialSpec& p) {
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, NoPotential>)
                return {{"kind", "none"}};
            else if constexpr (std::is_same_v<T, ConstantPotential>)
                return {{"kind", "constant"}, {"value", v.value}};
            else
                return {{"kind", "gaussian_bump"}, {"height", v.height}, {"center", v.center}, {"width", v.width}};
        },
        p);
}

inline PotentialSpec potential_from_json(const json& j) {
    const auto kind = j.value("kind", std::string("none"));
    if (kind == "none") return NoPotential{};
    if (kind == "constant") return ConstantPotential{j.at("value").get<double>()};
    if (kind == "gaussian_bump")
        return BumpPotential{j.at("height").get<double>(), j.at("center").get<double>(), j.at("width").get<double>()};
    throw std::invalid_argument("unknown potential kind '" + kind + "'");
}

inline json to_json(const ExperimentConfig& c) {
    json j;
    j["name"] = c.name;
    j["geometry"] = geometry_to_json(c.geometry);
    j["n_interior"] = c.n_interior;
    j["dt"] = c.dt ? json(*c.dt) : json(nullptr);
    j["constants"] = {{"hbar", c.constants.hbar}, {"mass", c.constants.mass}};
    j["kappa"] = c.kappa;
    j["state"] = state_to_json(c.state);
    j["potential"] = potential_to_json(c.potential);
    j["t_max"] = c.t_max;
    j["residual_target"] = c.residual_target;
    j["convergence_check"] = c.convergence_check;
    const auto& t = c.tolerances;
    j["tolerances"] = {{"norm_balance", t.norm_balance},
                       {"delta_num", t.delta_num},
                       {"flux_agreement", t.flux_agreement},
                       {"route_agreement", t.route_agreement},
                       {"imag_defect", t.imag_defect}};
    const auto& s = c.search;
    j["search"] = {{"x0", s.x0},       {"p0", s.p0},           {"sigma_x", s.sigma_x},
                   {"kappa", s.kappa}, {"n_interior", s.n_interior}, {"restarts", s.restarts}};
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    return j;
}

inline void validate(const ExperimentConfig& c) {
    detlab::validate(c.geometry);
    c.constants.validate();
    if (c.n_interior < 16) throw std::invalid_argument("n_interior must be at least 16");
    if (c.dt && !(*c.dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (!(c.kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
    if (!(c.t_max >= 0.0)) throw std::invalid_argument("t_max must be non-negative");
    if (!(c.residual_target >= 0.0 && c.residual_target < 1.0))
        throw std::invalid_argument("residual_target must lie in [0, 1)");
    if (std::holds_alternative<ModeState>(c.state) && !std::holds_alternative<Interval>(c.geometry))
        throw std::invalid_argument("mode superpositions require an interval geometry");
    for (const auto* r : {&c.search.x0, &c.search.p0, &c.search.sigma_x, &c.search.kappa})
        if (!((*r)[0] <= (*r)[1])) throw std::invalid_argument("search ranges must satisfy lo <= hi");
}

/// Missing keys take their defaults; unknown keys are rejected so typos do not
/// silently fall back to a default.
inline ExperimentConfig config_from_json(const json& j) {
    static const char* known[] = {"name",    "geometry",        "n_interior",        "dt",         "constants",
                                  "kappa",   "state",           "potential",         "t_max",      "residual_target",
                                  "convergence_check", "tolerances", "search", "seed", "output_dir"};
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw std::invalid_argument("unknown config key '" + key + "'");
    }
    ExperimentConfig c;
    c.name = j.value("name", c.name);
    if (j.contains("geometry")) c.geometry = geometry_from_json(j.at("geometry"));
    c.n_interior = j.value("n_interior", c.n_interior);
    if (j.contains("dt") && !j.at("dt").is_null()) c.dt = j.at("dt").get<double>();
    if (j.contains("constants")) {
        c.constants.hbar = j.at("constants").value("hbar", 1.0);
        c.constants.mass = j.at("constants").value("mass", 1.0);
    }
    c.kappa = j.value("kappa", c.kappa);
    if (j.contains("state")) c.state = state_from_json(j.at("state"));
    if (j.contains("potential")) c.potential = potential_from_json(j.at("potential"));
    c.t_max = j.value("t_max", c.t_max);
    c.residual_target = j.value("residual_target", c.residual_target);
    c.convergence_check = j.value("convergence_check", c.convergence_check);
    if (j.contains("tolerances")) {
        const auto& t = j.at("tolerances");
        auto& o = c.tolerances;
        o.norm_balance = t.value("norm_balance", o.norm_balance);
        o.delta_num = t.value("delta_num", o.delta_num);
        o.flux_agreement = t.value("flux_agreement", o.flux_agreement);
        o.route_agreement = t.value("route_agreement", o.route_agreement);
        o.imag_defect = t.value("imag_defect", o.imag_defect);
    }
    if (j.contains("search")) {
        const auto& s = j.at("search");
        auto& o = c.search;
        o.x0 = s.value("x0", o.x0);
        o.p0 = s.value("p0", o.p0);
        o.sigma_x = s.value("sigma_x", o.sigma_x);
        o.kappa = s.value("kappa", o.kappa);
        o.n_interior = s.value("n_interior", o.n_interior);
        o.restarts = s.value("restarts", o.restarts);
    }
    c.seed = j.value("seed", c.seed);
    c.output_dir = j.value("output_dir", c.output_dir);
    validate(c);
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config '" + path + "': " + e.what());
    }
    return config_from_json(j);
}

/// FNV-1a over the canonical JSON form.
inline std::string config_hash(const ExperimentConfig& c) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : to_json(c).dump()) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline double resolved_dt(const ExperimentConfig& c, const Grid& grid) { return c.dt.value_or(grid.dx()); }

inline WaveFunction make_state(const StateSpec& s, const Grid& grid, const PhysicalConstants& c) {
    return std::visit(
        [&](const auto& v) -> WaveFunction {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, GaussianState>)
                return make_gaussian(grid, c, v.x0, v.p0, v.sigma_x);
            else if constexpr (std::is_same_v<T, BumpState>)
                return make_bump(grid, c, v.center, v.half_width, v.p0);
            else
                return make_mode_superposition(grid, c, v.coefficients);
        },
        s);
}

inline Potential make_potential(const PotentialSpec& p, const Grid& grid) {
    return std::visit(
        [&](const auto& v) -> Potential {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, NoPotential>)
                return Potential::none();
            else if constexpr (std::is_same_v<T, ConstantPotential>)
                return Potential::constant(v.value);
            else
                return Potential::gaussian_bump(grid, v.height, v.center, v.width);
        },
        p);
}

}  // namespace detlab

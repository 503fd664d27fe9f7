#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "detlab/geometry.hpp"
#include "detlab/record.hpp"

namespace detlab {

namespace detail {

// Neumaier-compensated running sum.
struct CompensatedSum {
    double sum = 0.0, carry = 0.0;
    void add(double x) {
        const double t = sum + x;
        carry += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
        sum = t;
    }
    double value() const { return sum + carry; }
};

inline std::size_t samples_within(const DetectionRecord& rec, double horizon) {
    std::size_t n = 0;
    while (n < rec.steps() && static_cast<double>(n + 1) * rec.dt <= horizon * (1.0 + 1e-12)) ++n;
    return n;
}

}  // namespace detail

/// Sum of the recorded detection mass, sum_k w_k dt.
inline double detected_mass(const DetectionRecord& rec, std::size_t count) {
    detail::CompensatedSum s;
    for (std::size_t k = 0; k < count; ++k) s.add(rec.increments[k]);
    return s.value();
}
inline double detected_mass(const DetectionRecord& rec) { return detected_mass(rec, rec.steps()); }

/// Prob(T < infinity) estimated from the record, integrated up to `horizon`
/// (default: the whole run, clipped to the validity window on the half-line).
inline double detection_probability(const DetectionRecord& rec, std::optional<double> horizon = std::nullopt) {
    if (horizon && *horizon > rec.validity_window)
        throw std::out_of_range("integration horizon exceeds the validity window of the truncated half-line");
    const double h = horizon.value_or(std::min(rec.t_max, rec.validity_window));
    return detected_mass(rec, detail::samples_within(rec, h));
}

/// Probability still inside the region at the end of the usable record
/// (on the half-line: mass that has moved away from the detector).
inline double undetected_estimate(const DetectionRecord& rec) {
    const std::size_t n = detail::samples_within(rec, std::min(rec.t_max, rec.validity_window));
    return n == 0 ? rec.initial_norm_sq : rec.norm_sq[n - 1];
}

/// Time after which reflections from the artificial wall at x_truncate can
/// reach the detector: 2 (x_truncate - support edge) / v_max, v_max = (|p0| + 5 sigma_p)/m.
inline double halfline_validity_window(double x_truncate, double support_right_edge, double p_mean, double sigma_p,
                                       double mass) {
    const double v_max = (std::abs(p_mean) + 5.0 * sigma_p) / mass;
    if (!(v_max > 0.0)) throw std::invalid_argument("momentum spread must be positive");
    return 2.0 * (x_truncate - support_right_edge) / v_max;
}

enum class TailMethod { None, ExponentialFit, WindowTruncated };

inline std::string to_string(TailMethod m) {
    switch (m) {
        case TailMethod::None: return "none";
        case TailMethod::ExponentialFit: return "exponential_fit";
        default: return "window_truncated";
    }
}

struct TailOptions {
    double negligible_residual = 1e-9;  // below this the undetected mass is ignored
    double max_fit_residual = 0.01;     // above this no extrapolation is attempted
    double fit_fraction = 0.1;          // trailing share of the record used for the fit
};

struct DetectionStats {
    double p_hat = 0.0;
    double mean_T = 0.0;  // conditional on T < infinity
    double var_T = 0.0;
    double tail_correction = 0.0;  // variance added by the tail extrapolation
    double decay_rate = 0.0;       // fitted gamma when the tail was extrapolated
    double sigma_T = 0.0;
    TailMethod method = TailMethod::None;
};

/// Least-squares fit of log w(t) = a - gamma t over the trailing samples.
inline double fit_exponential_decay(const DetectionRecord& rec, double fraction) {
    const std::size_t n = rec.steps();
    const auto first = static_cast<std::size_t>(static_cast<double>(n) * (1.0 - fraction));
    double st = 0, sy = 0, stt = 0, sty = 0;
    std::size_t m = 0;
    for (std::size_t k = first; k < n; ++k) {
        if (!(rec.density[k] > 0.0)) continue;
        const double t = rec.times[k], y = std::log(rec.density[k]);
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
        ++m;
    }
    if (m < 3) throw std::domain_error("moments unreliable: too few positive tail samples to fit");
    const double denom = static_cast<double>(m) * stt - st * st;
    const double slope = (static_cast<double>(m) * sty - st * sy) / denom;
    if (!(slope < 0.0)) throw std::domain_error("moments unreliable: detection tail is not decaying");
    return -slope;
}

/// Moments of T conditional on T < infinity, with midpoint time assignment.
/// Bounded regions: a small undetected remainder is extrapolated with an
/// exponential tail; a large one makes the moments unreliable (throws).
/// Half-line: moments of the record inside the validity window.
inline DetectionStats conditional_time_moments(const DetectionRecord& rec, const TailOptions& opt = {}) {
    DetectionStats st;
    std::size_t n = rec.steps();
    double tail_mass = 0.0, gamma = 0.0;
    if (rec.bounded) {
        const double r = rec.residual_norm_sq;
        if (r > opt.negligible_residual) {
            if (r >= opt.max_fit_residual)
                throw std::domain_error("moments unreliable: residual probability " + std::to_string(r) +
                                        " too large to extrapolate");
            gamma = fit_exponential_decay(rec, opt.fit_fraction);
            tail_mass = r;
            st.method = TailMethod::ExponentialFit;
        }
    } else {
        n = detail::samples_within(rec, std::min(rec.t_max, rec.validity_window));
        st.method = TailMethod::WindowTruncated;
    }

    const double detected = detected_mass(rec, n);
    st.p_hat = detected + tail_mass;
    if (!(st.p_hat > 0.0)) throw std::domain_error("no detections: conditional moments undefined");

    detail::CompensatedSum s1;
    for (std::size_t k = 0; k < n; ++k) s1.add(rec.times[k] * rec.increments[k]);
    const double t_end = static_cast<double>(rec.steps()) * rec.dt;
    const double tail_mean = t_end + (gamma > 0.0 ? 1.0 / gamma : 0.0);
    const double mean = (s1.value() + tail_mass * tail_mean) / st.p_hat;

    detail::CompensatedSum s2;
    for (std::size_t k = 0; k < n; ++k) {
        const double d = rec.times[k] - mean;
        s2.add(d * d * rec.increments[k]);
    }
    double tail_var = 0.0;
    if (tail_mass > 0.0) {
        const double d = tail_mean - mean;
        tail_var = tail_mass * (d * d + 1.0 / (gamma * gamma)) / st.p_hat;
    }
    st.mean_T = mean;
    st.var_T = std::max(0.0, s2.value() / st.p_hat + tail_var);
    st.tail_correction = tail_var;
    st.decay_rate = gamma;
    st.sigma_T = std::sqrt(st.var_T);
    return st;
}

/// Builds a record whose step masses come from a cumulative distribution F
/// (mass F(t_{k+1}) - F(t_k) at t_{k+1/2}); total - F(t_max) is left undetected.
inline DetectionRecord inject_distribution(const std::function<double(double)>& cdf, double dt, double t_max,
                                           double total = 1.0, bool bounded = true) {
    DetectionRecord rec;
    rec.dt = dt;
    rec.bounded = bounded;
    const auto n = static_cast<std::size_t>(std::llround(t_max / dt));
    double prev = cdf(0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double next = cdf(static_cast<double>(k + 1) * dt);
        rec.times.push_back((static_cast<double>(k) + 0.5) * dt);
        rec.increments.push_back(next - prev);
        rec.density.push_back((next - prev) / dt);
        rec.norm_sq.push_back(total - next);
        prev = next;
    }
    rec.initial_norm_sq = total;
    rec.residual_norm_sq = total - prev;
    rec.t_max = static_cast<double>(n) * dt;
    return rec;
}

enum class BoundStatus { Satisfied, Violated, TriviallySatisfied };

inline std::string to_string(BoundStatus s) {
    switch (s) {
        case BoundStatus::Satisfied: return "satisfied";
        case BoundStatus::Violated: return "violated";
        default: return "trivially_satisfied";
    }
}

/// A named numerical check: value compared against a tolerance.
struct CheckResult {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

inline CheckResult check_below(std::string name, double value, double tolerance) {
    return {std::move(name), value, tolerance, std::isfinite(value) && value <= tolerance};
}
inline CheckResult check_above(std::string name, double value, double floor) {
    return {std::move(name), value, floor, !std::isnan(value) && value >= floor};
}

struct EnergyRouteValue {
    std::string route;
    double sigma_E = 0.0;
};

struct UncertaintyReport {
    double sigma_T = 0.0;
    double sigma_E = 0.0;
    double p_hat = 0.0;
    double undetected = 0.0;
    double product = 0.0;
    double bound = 0.0;
    double margin = 0.0;
    double mean_T_sigma_E = 0.0;  // exploratory, no bound asserted
    double delta_num = 0.0;
    bool conditional_bound = false;
    TailMethod tail_method = TailMethod::None;
    BoundStatus status = BoundStatus::Satisfied;
    std::vector<EnergyRouteValue> energy_routes;
    std::vector<CheckResult> checks;
    std::string config_hash;

    bool all_checks_pass() const {
        if (status == BoundStatus::Violated) return false;
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

/// sigma_T sigma_E against hbar/2, or against sqrt(p) hbar/2 when detection is
/// not certain. The bound is judged with a relative slack of delta_num.
inline UncertaintyReport uncertainty_product_report(const DetectionStats& stats, double sigma_E,
                                                    const PhysicalConstants& c, double delta_num = 0.0) {
    UncertaintyReport r;
    r.sigma_T = stats.sigma_T;
    r.sigma_E = sigma_E;
    r.p_hat = stats.p_hat;
    r.tail_method = stats.method;
    r.delta_num = delta_num;
    r.conditional_bound = stats.p_hat < 1.0 - 1e-6;
    r.bound = (r.conditional_bound ? std::sqrt(stats.p_hat) : 1.0) * c.hbar / 2.0;
    r.product = stats.sigma_T * sigma_E;
    r.margin = r.product - r.bound;
    r.mean_T_sigma_E = stats.mean_T * sigma_E;
    if (std::isinf(stats.sigma_T))
        r.status = BoundStatus::TriviallySatisfied;
    else
        r.status = r.product >= r.bound * (1.0 - delta_num) ? BoundStatus::Satisfied : BoundStatus::Violated;
    return r;
}

}  // namespace detlab

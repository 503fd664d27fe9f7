#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "detlab/detection.hpp"
#include "detlab/energy.hpp"
#include "detlab/propagator.hpp"

using namespace detlab;

namespace {

const PhysicalConstants units{};

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

TEST(Injected, ExponentialMoments) {
    const double gamma = 2.0;
    const auto rec = inject_distribution([&](double t) { return 1.0 - std::exp(-gamma * t); }, 1e-3, 12.0);
    const auto st = conditional_time_moments(rec);
    EXPECT_EQ(st.method, TailMethod::None);
    EXPECT_NEAR(st.mean_T, 0.5, 1e-6);
    EXPECT_NEAR(st.var_T, 0.25, 1e-6);
}

TEST(Injected, ExponentialTailExtrapolated) {
    const double gamma = 2.0;
    const auto rec = inject_distribution([&](double t) { return 1.0 - std::exp(-gamma * t); }, 1e-3, 5.0);
    ASSERT_GT(rec.residual_norm_sq, 1e-9);
    const auto st = conditional_time_moments(rec);
    EXPECT_EQ(st.method, TailMethod::ExponentialFit);
    EXPECT_NEAR(st.decay_rate, gamma, 1e-6);
    EXPECT_NEAR(st.p_hat, 1.0, 1e-12);
    EXPECT_NEAR(st.mean_T, 0.5, 1e-6);
    EXPECT_NEAR(st.var_T, 0.25, 1e-6);
}

TEST(Injected, UniformMoments) {
    const auto rec = inject_distribution([](double t) { return std::clamp((t - 1.0) / 2.0, 0.0, 1.0); }, 1e-3, 4.0);
    const auto st = conditional_time_moments(rec);
    EXPECT_NEAR(st.mean_T, 2.0, 1e-6);
    EXPECT_NEAR(st.var_T, 1.0 / 3.0, 1e-6);
}

TEST(Injected, TwoPointMoments) {
    // jumps inside the steps whose midpoints are 1.0005 and 2.0005
    const auto cdf = [](double t) { return (t > 1.0005 ? 0.3 : 0.0) + (t > 2.0005 ? 0.7 : 0.0); };
    const auto rec = inject_distribution(cdf, 1e-3, 3.0);
    const auto st = conditional_time_moments(rec);
    EXPECT_NEAR(st.mean_T, 1.7005, 1e-6);
    EXPECT_NEAR(st.var_T, 0.21, 1e-6);
}

TEST(Injected, PointMass) {
    const auto rec = inject_distribution([](double t) { return t > 0.505 ? 1.0 : 0.0; }, 0.01, 2.0);
    const auto st = conditional_time_moments(rec);
    EXPECT_NEAR(st.mean_T, 0.505, 1e-12);
    EXPECT_NEAR(st.var_T, 0.0, 1e-12);
}

TEST(Injected, LargeResidualIsUnreliable) {
    const auto rec = inject_distribution([](double t) { return std::min(0.5, t); }, 0.01, 2.0);
    EXPECT_NEAR(rec.residual_norm_sq, 0.5, 1e-12);
    EXPECT_THROW(conditional_time_moments(rec), std::domain_error);
}

TEST(Injected, HalfLineWindowedMoments) {
    auto rec = inject_distribution([](double t) { return 0.4 * std::min(1.0, t / 2.0); }, 1e-3, 4.0, 1.0, false);
    rec.validity_window = 3.0;
    const auto st = conditional_time_moments(rec);
    EXPECT_EQ(st.method, TailMethod::WindowTruncated);
    EXPECT_NEAR(st.p_hat, 0.4, 1e-12);
    EXPECT_NEAR(st.mean_T, 1.0, 1e-6);
    EXPECT_NEAR(st.var_T, 1.0 / 3.0, 1e-6);
    EXPECT_THROW(detection_probability(rec, 3.5), std::out_of_range);
}

TEST(DetectionProbability, ZeroHorizon) {
    const auto rec = inject_distribution([](double t) { return 1.0 - std::exp(-t); }, 0.01, 5.0);
    EXPECT_EQ(detection_probability(rec, 0.0), 0.0);
}

TEST(DetectionProbability, IntervalLongRun) {
    const Grid g = build_grid(Interval{}, 1023);
    const Propagator prop(assemble_hamiltonian(g, units, DetectorSpec(5.0)), g.dx());
    const auto rec = evolve(prop, make_gaussian(g, units, 0.5, 0.0, 0.05), 50.0);
    EXPECT_GE(detection_probability(rec), 1.0 - 1e-6);
}

TEST(DetectionProbability, OutgoingPacketOnHalfLine) {
    // p0 pointing away: only the p < 0 tail can ever cross x = 0 under free motion
    const Grid g = build_grid(HalfLine{60.0}, 6000);
    const double p0 = 7.5, sigma_x = 0.2, sigma_p = 0.5 / sigma_x;
    const auto psi = make_gaussian(g, units, 1.5, p0, sigma_x);
    const Propagator prop(assemble_hamiltonian(g, units, DetectorSpec(2.0)), g.dx());
    auto rec = evolve(prop, psi, 20.0);
    const auto mom = momentum_moments(psi);
    rec.validity_window = halfline_validity_window(60.0, support_right_edge(psi), mom.mean_p, mom.sigma_p, 1.0);
    const double p_hat = detection_probability(rec);
    const double free_crossing = normal_cdf(-p0 / sigma_p);
    EXPECT_LT(p_hat, 0.01);
    EXPECT_LE(p_hat, free_crossing * 1.01);
    EXPECT_GT(p_hat, 0.1 * free_crossing);
}

TEST(Report, ProductAndBound) {
    DetectionStats st;
    st.sigma_T = 0.5;
    st.p_hat = 1.0;
    const auto r = uncertainty_product_report(st, 7.4022, units);
    EXPECT_NEAR(r.product, 3.7011, 1e-12);
    EXPECT_DOUBLE_EQ(r.bound, 0.5);
    EXPECT_GT(r.margin, 0.0);
    EXPECT_EQ(r.status, BoundStatus::Satisfied);
}

TEST(Report, ConditionalBound) {
    DetectionStats st;
    st.sigma_T = 0.1;
    st.p_hat = 0.25;
    const auto r = uncertainty_product_report(st, 1.0, units);
    EXPECT_TRUE(r.conditional_bound);
    EXPECT_DOUBLE_EQ(r.bound, 0.25);
    EXPECT_EQ(r.status, BoundStatus::Violated);
    EXPECT_FALSE(r.all_checks_pass());
}

TEST(Report, InfiniteSpreadIsTrivial) {
    DetectionStats st;
    st.sigma_T = std::numeric_limits<double>::infinity();
    st.p_hat = 1.0;
    EXPECT_EQ(uncertainty_product_report(st, 3.0, units).status, BoundStatus::TriviallySatisfied);
}

TEST(Report, SlackFromConvergence) {
    DetectionStats st;
    st.sigma_T = 0.499;
    st.p_hat = 1.0;
    EXPECT_EQ(uncertainty_product_report(st, 1.0, units, 0.0).status, BoundStatus::Violated);
    EXPECT_EQ(uncertainty_product_report(st, 1.0, units, 0.01).status, BoundStatus::Satisfied);
}

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "detlab/detlab.hpp"

using namespace detlab;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.name = "small";
    c.n_interior = 255;
    c.kappa = 1.0;
    c.state = GaussianState{0.5, 0.0, 0.08};
    c.t_max = 200.0;
    return c;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST(Config, RoundTrip) {
    ExperimentConfig c = small_config();
    c.geometry = Interval{2.0, BoundaryKind::DirichletWall, BoundaryKind::Absorbing};
    c.dt = 1e-4;
    c.state = ModeState{{cplx{0.6, 0.0}, cplx{0.0, 0.8}}};
    c.potential = BumpPotential{3.0, 0.7, 0.1};
    c.search.restarts = 7;
    c.seed = 99;
    EXPECT_EQ(config_from_json(json::parse(to_json(c).dump())), c);

    c.geometry = Ball{1.5};
    c.state = BumpState{0.5, 0.2, 3.0};
    c.potential = ConstantPotential{-2.0};
    c.dt.reset();
    EXPECT_EQ(config_from_json(to_json(c)), c);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
    auto j = to_json(small_config());
    j["kapa"] = 1.0;
    EXPECT_THROW(config_from_json(j), std::invalid_argument);
    j = to_json(small_config());
    j["kappa"] = -1.0;
    EXPECT_THROW(config_from_json(j), std::invalid_argument);
    j = to_json(small_config());
    j["geometry"] = {{"kind", "torus"}};
    EXPECT_THROW(config_from_json(j), std::invalid_argument);
}

TEST(Config, HashTracksContent) {
    auto a = small_config(), b = small_config();
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.kappa = 1.5;
    EXPECT_NE(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Experiment, SatisfiesBoundAndIsDeterministic) {
    const auto c = small_config();
    const auto a = run_experiment(c), b = run_experiment(c);
    EXPECT_GE(a.report.p_hat, 1.0 - 1e-6);
    EXPECT_GE(a.report.product, 0.5 * (1.0 - a.report.delta_num));
    EXPECT_TRUE(a.report.all_checks_pass());
    EXPECT_EQ(a.report.config_hash, config_hash(c));
    EXPECT_EQ(experiment_to_json(a).dump(), experiment_to_json(b).dump());
}

TEST(Experiment, HypothesisViolationRejectedBeforeSimulation) {
    auto c = small_config();
    c.state = GaussianState{0.05, 0.0, 0.05};
    try {
        run_experiment(c);
        FAIL() << "expected a rejection";
    } catch (const ExperimentError& e) {
        EXPECT_EQ(e.stage(), "state");
        EXPECT_TRUE(e.hypothesis_violation());
        EXPECT_NE(std::string(e.what()).find("boundary"), std::string::npos);
    }
}

TEST(Experiment, HalfLineUsesConditionalBound) {
    ExperimentConfig c;
    c.geometry = HalfLine{40.0};
    c.n_interior = 4095;
    c.kappa = 2.0;
    c.state = GaussianState{2.0, 2.0, 0.3};
    c.t_max = 100.0;
    const auto r = run_experiment(c).report;
    EXPECT_TRUE(r.conditional_bound);
    EXPECT_LT(r.p_hat, 0.5);
    EXPECT_NEAR(r.bound, 0.5 * std::sqrt(r.p_hat), 1e-15);
    EXPECT_EQ(r.tail_method, TailMethod::WindowTruncated);
    EXPECT_TRUE(r.all_checks_pass());
}

TEST(Experiment, ConstantPotentialInvariance) {
    auto a = small_config(), b = small_config();
    b.potential = ConstantPotential{40.0};
    b.convergence_check = a.convergence_check = false;
    const auto ra = run_single(a, a.n_interior), rb = run_single(b, b.n_interior);
    ASSERT_EQ(ra.record.steps(), rb.record.steps());
    for (std::size_t k = 0; k < ra.record.steps(); ++k)
        EXPECT_NEAR(ra.record.increments[k], rb.record.increments[k], 1e-14);
    EXPECT_NEAR(rb.energy.mean_E - ra.energy.mean_E, 40.0, 1e-9);
    EXPECT_NEAR(rb.energy.sigma_E, ra.energy.sigma_E, 1e-9 * ra.energy.sigma_E);
}

TEST(Sweep, CardinalityAndConstantBound) {
    const auto res = sweep(small_config(), {parse_axis("k=0.5,1,10"), parse_axis("sigma_x=0.07,0.075,0.08")}, 2);
    ASSERT_EQ(res.rows.size(), 9u);
    EXPECT_EQ(res.axes[0], "kappa");
    EXPECT_EQ(res.rows[1].parameters[0], 0.5);
    EXPECT_EQ(res.rows[1].parameters[1], 0.075);
    for (const auto& r : res.rows) {
        ASSERT_TRUE(r.report) << r.error;
        EXPECT_DOUBLE_EQ(r.report->bound, 0.5);
        EXPECT_TRUE(r.pass());
    }
}

TEST(Sweep, FailedRowsAreFlagged) {
    const auto res = sweep(small_config(), {parse_axis("x0=0.5,0.02")}, 1);
    ASSERT_EQ(res.rows.size(), 2u);
    EXPECT_TRUE(res.rows[0].pass());
    EXPECT_FALSE(res.rows[1].pass());
    EXPECT_FALSE(res.rows[1].error.empty());
    EXPECT_FALSE(res.all_pass());
}

TEST(Sweep, AxisParsing) {
    EXPECT_THROW(parse_axis("kappa="), std::invalid_argument);
    EXPECT_THROW(parse_axis("=1,2"), std::invalid_argument);
    EXPECT_THROW(parse_axis("kappa=1,x"), std::invalid_argument);
    EXPECT_THROW(sweep(small_config(), {}), std::invalid_argument);
    EXPECT_THROW(sweep(small_config(), {SweepAxis{"kappa", {}}}), std::invalid_argument);
    const auto a = parse_axis("t_max=1.5,2e1");
    EXPECT_EQ(a.values, (std::vector<double>{1.5, 20.0}));
}

TEST(Search, BudgetOneEvaluatesSeedPoint) {
    auto c = small_config();
    const auto r = minimize_product(c, 1);
    ASSERT_EQ(r.trajectory.size(), 1u);
    EXPECT_TRUE(r.budget_exhausted);
    std::mt19937_64 rng(c.seed);
    std::array<double, 4> u{};
    for (auto& x : u) x = detail::unit_draw(rng);
    const auto p = map_search_point(c, u);
    EXPECT_EQ(r.trajectory[0].point.x0, p.x0);
    EXPECT_EQ(r.trajectory[0].point.kappa, p.kappa);
    auto seed_cfg = search_config(c, p);
    seed_cfg.convergence_check = false;
    EXPECT_EQ(r.best_product, run_single(seed_cfg, seed_cfg.n_interior).product());
    EXPECT_TRUE(r.floor_holds());
}

TEST(Search, SameSeedSameTrajectory) {
    const auto c = small_config();
    const auto a = minimize_product(c, 25), b = minimize_product(c, 25);
    ASSERT_EQ(a.trajectory.size(), b.trajectory.size());
    for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
        EXPECT_EQ(a.trajectory[i].product, b.trajectory[i].product);
        EXPECT_EQ(a.trajectory[i].point.p0, b.trajectory[i].point.p0);
    }
    EXPECT_TRUE(a.floor_holds());
    EXPECT_THROW(minimize_product(c, 0), std::invalid_argument);
}

TEST(Output, EnvironmentOverridesDirectory) {
    const auto dir = std::filesystem::temp_directory_path() / "detlab-env-test";
    std::filesystem::remove_all(dir);
    ::setenv(output_dir_env, dir.c_str(), 1);
    EXPECT_EQ(output_directory(small_config()), dir);
    EXPECT_TRUE(std::filesystem::is_directory(dir));
    ::unsetenv(output_dir_env);
    EXPECT_EQ(output_directory(small_config()), std::filesystem::path(small_config().output_dir));
    std::filesystem::remove_all(small_config().output_dir);
}

TEST(Output, CsvUsesDotDecimalAndHeader) {
    std::locale::global(std::locale(""));
    const auto file = std::filesystem::temp_directory_path() / "detlab-csv-test.csv";
    {
        CsvWriter w(file, {"a", "b,c"});
        w.row({0.5, -1.25e-7});
        w.row_strings({"x", "say \"hi\""});
    }
    std::locale::global(std::locale::classic());
    EXPECT_EQ(slurp(file), "a,\"b,c\"\n0.5,-1.25e-07\nx,\"say \"\"hi\"\"\"\n");
    std::filesystem::remove(file);
}

TEST(Output, RecordCsvAndReportJson) {
    auto c = small_config();
    c.convergence_check = false;
    const auto res = run_experiment(c);
    const auto dir = std::filesystem::temp_directory_path() / "detlab-out-test";
    std::filesystem::create_directories(dir);
    write_record_csv(dir / "r.csv", res.coarse.record);
    write_json(dir / "r.json", experiment_to_json(res));
    const auto text = slurp(dir / "r.csv");
    EXPECT_EQ(text.substr(0, text.find('\n')), "t,w_norm_decrement,w_prob1_b0,w_prob2_b0,w_prob1_b1,w_prob2_b1,norm_sq");
    const auto j = json::parse(slurp(dir / "r.json"));
    EXPECT_EQ(j.at("config_hash"), config_hash(c));
    EXPECT_EQ(config_from_json(j.at("config")), c);
    std::filesystem::remove_all(dir);
}

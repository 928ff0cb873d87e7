#include <gtest/gtest.h>

#include <cmath>

#include "nestcast/errors.hpp"
#include "nestcast/mcsim.hpp"

using namespace nestcast;
using namespace nestcast::mcsim;
using nesttest::Variant;

namespace {

struct Moments {
    double var_a, var_b, corr;
};

Moments moments(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
    ma /= n;
    mb /= n;
    double saa = 0, sbb = 0, sab = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
        sab += (a[i] - ma) * (b[i] - mb);
    }
    return {saa / n, sbb / n, sab / std::sqrt(saa * sbb)};
}

ExperimentGrid size_grid(std::size_t T, std::vector<double> phis, std::size_t reps) {
    ExperimentGrid g;
    g.T = {T};
    g.phi1 = std::move(phis);
    g.variants = {{Variant::s0_adj, 1.0, 0.9, 0.0}};
    g.n_reps = reps;
    g.seed = 99;
    return g;
}

}  // namespace

// ---------------------------------------------------------------- DGP1

TEST(Dgp1, GaussianMoments) {
    DgpSpec s;
    s.T = 100000;
    s.phi1 = 0.95;
    s.seed = 1;
    const auto d = gen_dgp1(s, 0);
    ASSERT_EQ(d.X.cols(), 1u);
    std::vector<double> u(s.T - 1), v(s.T - 1), x(s.T);
    for (std::size_t t = 0; t < s.T; ++t) x[t] = d.X(t, 0);
    for (std::size_t t = 1; t < s.T; ++t) {
        u[t - 1] = d.y[t];  // beta = 0
        v[t - 1] = x[t] - s.phi1 * x[t - 1];
    }
    const auto m = moments(u, v);
    EXPECT_NEAR(m.var_a / 3.0, 1.0, 0.05);
    EXPECT_NEAR(m.var_b / 0.01, 1.0, 0.05);
    EXPECT_NEAR(m.corr, -0.8, 0.05 * 0.8);
    const auto mx = moments(x, x);
    EXPECT_NEAR(mx.var_a / (0.01 / (1.0 - 0.95 * 0.95)), 1.0, 0.05);
}

TEST(Dgp1, ArchUnconditionalVariance) {
    DgpSpec s;
    s.T = 100000;
    s.phi1 = 0.75;
    s.error_mode = ErrorMode::arch;
    s.seed = 2;
    const auto d = gen_dgp1(s, 0);
    std::vector<double> u(d.y.begin(), d.y.end());
    EXPECT_NEAR(moments(u, u).var_a / 3.0, 1.0, 0.05);
    // Conditional heteroskedasticity shows up as autocorrelated squares.
    std::vector<double> a(u.size() - 1), b(u.size() - 1);
    for (std::size_t t = 1; t < u.size(); ++t) a[t - 1] = u[t] * u[t], b[t - 1] = u[t - 1] * u[t - 1];
    EXPECT_GT(moments(a, b).corr, 0.1);
}

TEST(Dgp1, SlopeEntersThroughLaggedPredictor) {
    DgpSpec s;
    s.T = 2000;
    s.beta = -2.0;
    s.seed = 3;
    const auto a = gen_dgp1(s, 4);
    s.beta = 0.0;
    const auto b = gen_dgp1(s, 4);
    for (std::size_t t = 1; t < s.T; ++t) EXPECT_NEAR(a.y[t] - b.y[t], -2.0 * a.X(t - 1, 0), 1e-12);
}

TEST(Dgp1, InterceptColumnOption) {
    DgpSpec s;
    s.T = 300;
    s.dgp1_intercept = true;
    const auto d = gen_dgp1(s, 0);
    ASSERT_EQ(d.X.cols(), 2u);
    for (std::size_t t = 0; t < s.T; ++t) EXPECT_EQ(d.X(t, 1), 1.0);
    const auto m = model_spec(s);
    EXPECT_FALSE(m.include_intercept);
    EXPECT_EQ(m.p1(), 0u);
    EXPECT_EQ(m.p2(), 2u);
}

// ---------------------------------------------------------------- DGP2

TEST(Dgp2, Moments) {
    DgpSpec s;
    s.kind = DgpKind::dgp2;
    s.T = 100000;
    s.seed = 5;
    const auto d = gen_dgp2(s, 0);
    ASSERT_EQ(d.X.cols(), 4u);
    const auto my = moments(d.y, d.y);
    EXPECT_NEAR(my.var_a / (1.0 / (1.0 - 0.0625)), 1.0, 0.05);
    std::vector<double> x1(s.T), x2(s.T), x3(s.T);
    for (std::size_t t = 0; t < s.T; ++t) x1[t] = d.X(t, 1), x2[t] = d.X(t, 2), x3[t] = d.X(t, 3);
    EXPECT_LT(std::fabs(moments(x3, x1).corr), 0.02);
    EXPECT_LT(std::fabs(moments(x3, x2).corr), 0.02);
    EXPECT_GT(moments(x1, x2).corr, 0.3);
    // The lagged target column is the target itself; the fit pairs it with
    // the next row.
    for (std::size_t t = 0; t < 10; ++t) EXPECT_EQ(d.X(t, 0), d.y[t]);
}

TEST(Dgp2, ModelSpec) {
    DgpSpec s;
    s.kind = DgpKind::dgp2;
    const auto m = model_spec(s);
    EXPECT_TRUE(m.include_intercept);
    EXPECT_EQ(m.p1(), 2u);
    EXPECT_EQ(m.p2(), 5u);
}

// ---------------------------------------------------------------- streams

TEST(Generate, DeterministicPerSeedAndStream) {
    for (DgpKind k : {DgpKind::dgp1, DgpKind::dgp2}) {
        DgpSpec s;
        s.kind = k;
        s.T = 400;
        s.seed = 11;
        const auto a = generate(s, 7);
        const auto b = generate(s, 7);
        const auto c = generate(s, 8);
        EXPECT_EQ(a.y, b.y);
        EXPECT_NE(a.y, c.y);
    }
}

TEST(Generate, Validation) {
    DgpSpec s;
    s.phi1 = 1.0;
    EXPECT_THROW(gen_dgp1(s, 0), ConfigError);
    s = DgpSpec{};
    EXPECT_THROW(gen_dgp2(s, 0), ConfigError);
    s.kind = DgpKind::dgp2;
    s.rho = 1.0;
    EXPECT_THROW(gen_dgp2(s, 0), ConfigError);
}

// ---------------------------------------------------------------- grid

TEST(Grid, ParseAndRoundTrip) {
    const auto g = parse_grid(R"({
        "dgp": "dgp1", "T": [250, 500], "beta": [0, -1], "phi1": [0.75, 0.95],
        "error_modes": ["gaussian", "arch"], "lrv": ["hom", "nw"],
        "variants": [{"variant": "s0_adj", "lambda2": [0.8, 0.9]},
                     {"variant": "sbar", "tau0": 0.8, "lambda2": 0.9},
                     {"variant": "dm"}],
        "n_reps": 300, "seed": 5, "nw_bandwidth": 4})");
    EXPECT_EQ(g.variants.size(), 4u);
    EXPECT_EQ(g.cell_count(), 2u * 2u * 2u * 2u * 2u * 4u);
    EXPECT_EQ(g.variants[3].variant, Variant::dm);
    EXPECT_EQ(g.variants[2].lambda1, 0.0);
    ASSERT_TRUE(g.nw_bandwidth.has_value());
    EXPECT_EQ(*g.nw_bandwidth, 4u);
    const auto h = parse_grid(grid_to_json(g));
    EXPECT_EQ(h.T, g.T);
    EXPECT_EQ(h.beta, g.beta);
    EXPECT_EQ(h.phi1, g.phi1);
    EXPECT_EQ(h.variants, g.variants);
    EXPECT_EQ(h.lrv, g.lrv);
    EXPECT_EQ(h.error_modes, g.error_modes);
    EXPECT_EQ(h.n_reps, g.n_reps);
    EXPECT_EQ(h.seed, g.seed);
}

TEST(Grid, Rejections) {
    EXPECT_THROW(parse_grid("{"), ConfigError);
    EXPECT_THROW(parse_grid("[]"), ConfigError);
    EXPECT_THROW(parse_grid(R"({"variants": [{"variant": "s0"}], "typo": 1})"), ConfigError);
    EXPECT_THROW(parse_grid(R"({"T": [500]})"), ConfigError);
    EXPECT_THROW(parse_grid(R"({"variants": [{"variant": "s0", "lambda1": 0.9, "lambda2": 0.9}]})"), ConfigError);
    EXPECT_THROW(parse_grid(R"({"variants": [{"variant": "s0"}], "n_reps": 10})"), ConfigError);
    EXPECT_THROW(parse_grid(R"({"variants": [{"variant": "s0"}], "T": [20]})"), ConfigError);
    EXPECT_THROW(parse_grid(R"({"dgp": "dgp2", "beta": [[1, 2]], "variants": [{"variant": "s0"}]})"),
                 ConfigError);
    EXPECT_THROW(parse_grid(R"({"variants": [{"variant": "s0"}], "T": "x"})"), ConfigError);
}

// ---------------------------------------------------------------- runner

TEST(RunExperiment, SmokeFrequenciesInRange) {
    ExperimentGrid g = size_grid(250, {0.95}, 100);
    g.variants = {{Variant::s0, 1.0, 0.9, 0.0}, {Variant::s0_adj, 1.0, 0.9, 0.0},
                  {Variant::sbar_adj, 0.0, 0.9, 0.8}, {Variant::dm, 0, 0, 0}, {Variant::cw, 0, 0, 0}};
    g.lrv = {lrv::Method::homoskedastic, lrv::Method::newey_west};
    const auto r = run_experiment(g);
    ASSERT_EQ(r.cells.size(), 10u);
    for (const auto& c : r.cells) {
        EXPECT_EQ(c.n_valid + c.n_excluded, 100u);
        EXPECT_GE(c.frequency(), 0.0);
        EXPECT_LE(c.frequency(), 0.3);
    }
}

TEST(RunExperiment, WorkerCountDoesNotChangeResults) {
    ExperimentGrid g = size_grid(250, {0.75, 0.95}, 200);
    g.variants.push_back({Variant::cw, 0, 0, 0});
    g.workers = 1;
    auto a = run_experiment(g);
    g.workers = 4;
    auto b = run_experiment(g);
    auto c = run_experiment_serial(g);
    a.elapsed_seconds = b.elapsed_seconds = c.elapsed_seconds = 0.0;
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
}

TEST(RunExperiment, SeedChangesResults) {
    ExperimentGrid g = size_grid(250, {0.95}, 400);
    const auto a = run_experiment(g);
    g.seed = 100;
    const auto b = run_experiment(g);
    EXPECT_NE(a.cells[0].rejections, b.cells[0].rejections);
}

TEST(RunExperiment, SizeStableAcrossPersistence) {
    const auto r = run_experiment(size_grid(250, {0.75, 0.95, 0.98}, 4000));
    ASSERT_EQ(r.cells.size(), 3u);
    double lo = 1.0, hi = 0.0;
    for (const auto& c : r.cells) {
        lo = std::min(lo, c.frequency());
        hi = std::max(hi, c.frequency());
    }
    EXPECT_LT(hi - lo, 0.025);
}

TEST(RunExperiment, FindByKey) {
    ExperimentGrid g = size_grid(250, {0.75, 0.95}, 100);
    const auto r = run_experiment(g);
    CellKey k;
    k.variant = g.variants[0];
    k.T = 250;
    k.phi1 = 0.95;
    k.beta = {0.0};
    const CellResult* c = r.find(k);
    ASSERT_NE(c, nullptr);
    EXPECT_EQ(c->key.phi1, 0.95);
    k.phi1 = 0.5;
    EXPECT_EQ(r.find(k), nullptr);
}

TEST(CellResult, FrequencyAndStandardError) {
    CellResult c;
    c.rejections = 25;
    c.n_valid = 100;
    EXPECT_DOUBLE_EQ(c.frequency(), 0.25);
    EXPECT_DOUBLE_EQ(c.mc_se(), std::sqrt(0.25 * 0.75 / 100.0));
    CellResult empty;
    EXPECT_TRUE(std::isnan(empty.frequency()));
}

TEST(Names, RoundTrip) {
    EXPECT_EQ(dgp_from_string(to_string(DgpKind::dgp2)), DgpKind::dgp2);
    EXPECT_EQ(error_mode_from_string(to_string(ErrorMode::arch)), ErrorMode::arch);
    EXPECT_THROW(dgp_from_string("dgp3"), ConfigError);
    EXPECT_THROW(error_mode_from_string("garch"), ConfigError);
}

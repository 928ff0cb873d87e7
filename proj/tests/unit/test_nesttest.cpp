#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nestcast/errors.hpp"
#include "nestcast/nesttest.hpp"
#include "nestcast/numcore/special.hpp"
#include "oracles.hpp"

using namespace nestcast;
using namespace nestcast::nesttest;
using forecast::ForecastErrorPair;
using num::Vector;

namespace {

ForecastErrorPair random_pair(std::size_t P, std::mt19937_64& g, double corr = 0.8) {
    std::normal_distribution<double> z;
    ForecastErrorPair p;
    p.k0 = 100;
    p.e1.resize(P);
    p.e2.resize(P);
    for (std::size_t i = 0; i < P; ++i) {
        const double a = z(g), b = z(g);
        p.e1[i] = a;
        p.e2[i] = corr * a + std::sqrt(1 - corr * corr) * b;
    }
    return p;
}

std::size_t seg(std::size_t P, double lam) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(static_cast<double>(P) * lam + 1e-9)));
}

forecast::TimeSeriesDataset nested_dataset(std::size_t T, std::uint64_t seed, double beta = 0.0) {
    std::mt19937_64 g(seed);
    std::normal_distribution<double> z;
    forecast::TimeSeriesDataset d;
    d.X = num::Matrix(T, 2);
    d.y.resize(T);
    double x = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        x = 0.9 * x + z(g);
        d.X(t, 0) = z(g);
        d.X(t, 1) = x;
        d.y[t] = 0.2 + (t ? beta * d.X(t - 1, 1) : 0.0) + z(g);
    }
    return d;
}

}  // namespace

// ---------------------------------------------------------------- variances

TEST(V0, Examples) {
    EXPECT_DOUBLE_EQ(v0(1.0, 0.5), 1.0);
    EXPECT_NEAR(v0(1.0, 0.9), 1.0 / 9.0, 1e-15);
    EXPECT_EQ(v0(0.9, 1.0), v0(1.0, 0.9));
    EXPECT_THROW(v0(0.7, 0.7), DegeneracyError);
    EXPECT_THROW(v0(0.0, 0.5), DomainError);
    EXPECT_THROW(v0(1.2, 0.5), DomainError);
}

TEST(V0, MatchesBrownianCovariance) {
    for (double a : {0.3, 0.5, 0.8, 1.0})
        for (double b : {0.2, 0.55, 0.9, 1.0})
            if (a != b) EXPECT_NEAR(v0(a, b), oracle::v0_covariance(a, b), 1e-12);
}

TEST(Vbar, Examples) {
    EXPECT_NEAR(vbar(0.0, 1.0), 1.0, 1e-15);
    EXPECT_NEAR(vbar(0.0, 0.5), 0.6137056, 5e-8);
    EXPECT_NEAR(vbar(0.5, 0.4), 0.95482256, 5e-8);
    EXPECT_NEAR(vbar(0.8, 0.9), 0.02065279, 5e-8);
}

TEST(Vbar, QuotedNumericalAnchors) {
    // These two reference values come from a numerical double integral and
    // sit 3.1e-7 and 7.4e-7 away from the closed form, which itself agrees
    // with the quadrature oracle below to 1e-9.  Check them at 1e-6.
    EXPECT_NEAR(vbar(0.8, 0.9), 0.0206531, 1e-6);
    EXPECT_NEAR(vbar(0.5, 0.4), 0.9548233, 1e-6);
}

TEST(Vbar, MatchesQuadratureOnGrid) {
    for (double tau : {0.0, 0.1, 0.25, 0.5, 0.7, 0.8, 0.9}) {
        for (double lam : {0.05, 0.2, 0.4, 0.5, 0.7, 0.8, 0.85, 0.9, 0.95, 1.0}) {
            const double q = oracle::vbar_quadrature(tau, lam);
            EXPECT_NEAR(vbar(tau, lam), q, 1e-9 * std::max(1.0, q)) << "tau=" << tau << " lam=" << lam;
        }
    }
}

TEST(Vbar, BranchContinuity) {
    for (int i = 1; i <= 9; ++i) {
        const double tau = 0.1 * i;
        const double below = vbar(tau, std::nextafter(tau, 0.0));
        const double above = vbar(tau, std::nextafter(tau, 1.0));
        EXPECT_NEAR(below, above, 1e-12 * std::max(1.0, below)) << "tau=" << tau;
    }
    for (double lam : {0.3, 0.5, 0.9, 1.0}) {
        EXPECT_NEAR(vbar(1e-12, lam), vbar(0.0, lam), 1e-8);
    }
}

TEST(Vbar, Domain) {
    EXPECT_THROW(vbar(1.0, 0.5), DomainError);
    EXPECT_THROW(vbar(-0.1, 0.5), DomainError);
    EXPECT_THROW(vbar(0.5, 0.0), DomainError);
}

// ---------------------------------------------------------------- z_stat

TEST(ZStat, Examples) {
    const Vector c(10, 2.0);
    EXPECT_EQ(z_stat(c, c, 3, 7), 0.0);
    EXPECT_NEAR(z_stat({4, 0}, {0, 0}, 1, 2), std::sqrt(2.0) * 4.0, 1e-14);
    EXPECT_THROW(z_stat(c, c, 0, 3), IndexError);
    EXPECT_THROW(z_stat(c, c, 3, 11), IndexError);
}

TEST(ZStat, FullSegmentsReduceToMeanDifferential) {
    std::mt19937_64 g(1);
    for (int trial = 0; trial < 20; ++trial) {
        const auto p = random_pair(37 + trial, g);
        const auto [a, b] = forecast::loss_sequences(p);
        const std::size_t P = a.size();
        double dbar = 0.0;
        for (std::size_t i = 0; i < P; ++i) dbar += a[i] - b[i];
        dbar /= static_cast<double>(P);
        EXPECT_NEAR(z_stat(a, b, P, P), std::sqrt(static_cast<double>(P)) * dbar, 1e-13);
    }
}

TEST(SegmentLength, FloorWithGuard) {
    EXPECT_EQ(segment_length(750, 0.9), 675u);
    EXPECT_EQ(segment_length(10, 0.01), 1u);
    EXPECT_EQ(segment_length(100, 0.29), 29u);
    EXPECT_EQ(segment_length(40, 1.0), 40u);
}

// ---------------------------------------------------------------- statistics

TEST(S0, EqualLossesGiveZero) {
    ForecastErrorPair p;
    p.e1 = Vector(40, 1.5);
    p.e2 = p.e1;
    const auto r = s0_statistic(p, 1.0, 0.9, 1.0);
    EXPECT_EQ(r.statistic, 0.0);
    EXPECT_DOUBLE_EQ(r.p_value, 0.5);
    EXPECT_FALSE(r.reject);
}

TEST(S0, FortyObservationDirectFormula) {
    std::mt19937_64 g(2);
    const auto p = random_pair(40, g);
    const auto r = s0_statistic(p, 1.0, 0.8, 1.0);
    // Direct evaluation: l1 = 40, l2 = 32.
    double m1 = 0, m2 = 0;
    for (int i = 0; i < 40; ++i) m1 += p.e1[i] * p.e1[i];
    for (int i = 0; i < 32; ++i) m2 += p.e2[i] * p.e2[i];
    m1 /= 40.0;
    m2 /= 32.0;
    const double expected = std::sqrt(40.0) * (m1 - m2) / std::sqrt(0.2 / 0.8);
    EXPECT_NEAR(r.statistic, expected, 1e-12);
    EXPECT_NEAR(r.p_value, 1.0 - oracle::normal_cdf_series(expected), 1e-12);
    EXPECT_EQ(r.reject, expected > 1.2815515655446004);
    EXPECT_DOUBLE_EQ(r.variance_used, 0.25);
}

TEST(Adjusted, IdentityHoldsOnRandomInputs) {
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> U(0.05, 1.0), Ut(0.0, 0.95), Us(0.2, 5.0);
    std::uniform_int_distribution<std::size_t> Pd(20, 400);
    for (int trial = 0; trial < 100; ++trial) {
        const auto p = random_pair(Pd(g), g, 0.5 + 0.49 * U(g));
        const double s2 = Us(g);
        double l1 = U(g), l2 = U(g);
        if (seg(p.P(), l1) == seg(p.P(), l2)) l1 = 1.0, l2 = 0.5;
        const double tau = Ut(g);
        const double a = s0_adj_statistic(p, l1, l2, s2).statistic;
        const double b = s0_statistic(p, l1, l2, s2).statistic + h0_term(p, l1, l2, s2);
        EXPECT_NEAR(a, b, 1e-10 * std::max(1.0, std::fabs(a))) << "trial " << trial;
        EXPECT_GE(h0_term(p, l1, l2, s2), 0.0);
        if (static_cast<double>(p.P()) * (1.0 - tau) >= 2.0) {
            const double c = sbar_adj_statistic(p, tau, l2, s2).statistic;
            const double d = sbar_statistic(p, tau, l2, s2).statistic + hbar_term(p, tau, l2, s2);
            EXPECT_NEAR(c, d, 1e-10 * std::max(1.0, std::fabs(c))) << "trial " << trial;
            EXPECT_GE(c, sbar_statistic(p, tau, l2, s2).statistic);
        }
    }
}

TEST(Adjusted, FortyObservationTwoRoutes) {
    std::mt19937_64 g(4);
    const auto p = random_pair(40, g);
    // Route 1: unadjusted statistic on the adjusted losses.
    const auto e1sq = forecast::loss_sequences(p).first;
    const Vector adj = cw_adjusted_losses(p.e1, p.e2);
    const double route1 = s0_value(e1sq, adj, 1.0, 0.9, 1.3);
    // Route 2: unadjusted plus the additive correction written out.
    double corr = 0.0;
    for (int i = 0; i < 36; ++i) corr += (p.e1[i] - p.e2[i]) * (p.e1[i] - p.e2[i]);
    const double h = corr / (std::sqrt(1.3) * 0.9 * std::sqrt(v0(1.0, 0.9)) * std::sqrt(40.0));
    const double route2 = s0_statistic(p, 1.0, 0.9, 1.3).statistic + h;
    EXPECT_NEAR(route1, route2, 1e-10);
    EXPECT_NEAR(s0_adj_statistic(p, 1.0, 0.9, 1.3).statistic, route1, 1e-12);
}

TEST(Adjusted, EqualErrorsLeaveStatisticUnchanged) {
    std::mt19937_64 g(5);
    auto p = random_pair(60, g);
    p.e2 = p.e1;
    EXPECT_EQ(s0_adj_statistic(p, 1.0, 0.9, 1.0).statistic, s0_statistic(p, 1.0, 0.9, 1.0).statistic);
    EXPECT_EQ(sbar_adj_statistic(p, 0.8, 0.9, 1.0).statistic, sbar_statistic(p, 0.8, 0.9, 1.0).statistic);
}

TEST(CwLosses, HandArithmetic) {
    EXPECT_EQ(cw_adjusted_losses({2.0}, {1.0}), (Vector{0.0}));
    EXPECT_EQ(cw_adjusted_losses({0.0}, {3.0}), (Vector{0.0}));
    EXPECT_EQ(cw_adjusted_losses({1.5, -2.0}, {1.5, -2.0}), (Vector{2.25, 4.0}));
}

TEST(Sbar, PrefixSumEqualsNaiveDoubleLoop) {
    std::mt19937_64 g(6);
    std::uniform_real_distribution<double> Ut(0.0, 0.9), Ul(0.05, 1.0);
    std::uniform_int_distribution<std::size_t> Pd(4, 200);
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = random_pair(Pd(g), g);
        const auto [a, b] = forecast::loss_sequences(p);
        const double tau = Ut(g), lam = Ul(g);
        if (static_cast<double>(p.P()) * (1.0 - tau) < 2.0) continue;
        const double fast = sbar_value(a, b, tau, lam, 1.0) * std::sqrt(vbar(tau, lam));
        const double slow = oracle::naive_sbar_average(a, b, tau, seg(p.P(), lam));
        EXPECT_NEAR(fast, slow, 1e-10 * std::max(1.0, std::fabs(slow))) << "trial " << trial;
    }
}

TEST(Sbar, FourElementHandEvaluation) {
    const Vector a{1, 2, 3, 4}, b{0.5, 0.5, 0.5, 0.5};
    // tau0 = 0.5 averages over l1 in {3, 4}; l2 = floor(4 * 0.75) = 3.
    const double z3 = 2.0 * (2.0 - 0.5), z4 = 2.0 * (2.5 - 0.5);
    const double expected = 0.5 * (z3 + z4) / std::sqrt(vbar(0.5, 0.75));
    EXPECT_NEAR(sbar_value(a, b, 0.5, 0.75, 1.0), expected, 1e-14);
}

TEST(Sbar, TauZeroAveragesFullRange) {
    std::mt19937_64 g(7);
    const auto p = random_pair(50, g);
    const auto [a, b] = forecast::loss_sequences(p);
    double total = 0.0;
    for (std::size_t l1 = 1; l1 <= 50; ++l1) total += z_stat(a, b, l1, 45);
    EXPECT_NEAR(sbar_value(a, b, 0.0, 0.9, 1.0), total / 50.0 / std::sqrt(vbar(0.0, 0.9)), 1e-12);
}

TEST(Sbar, ConstantEqualLossesGiveZero) {
    const Vector c(30, 0.7);
    EXPECT_EQ(sbar_value(c, c, 0.8, 0.9, 1.0), 0.0);
}

TEST(Sbar, TooFewAveragingTerms) {
    const Vector c(10, 0.7);
    EXPECT_THROW(sbar_value(c, c, 0.95, 0.9, 1.0), ConfigError);
    EXPECT_NO_THROW(sbar_value(c, c, 0.8, 0.9, 1.0));
}

TEST(Statistics, ZeroSigmaIsDegenerate) {
    std::mt19937_64 g(8);
    const auto p = random_pair(30, g);
    EXPECT_THROW(s0_statistic(p, 1.0, 0.9, 0.0), DegeneracyError);
    EXPECT_THROW(sbar_statistic(p, 0.8, 0.9, -1.0), DegeneracyError);
}

// ---------------------------------------------------------------- DM / CW

TEST(Dm, Examples) {
    ForecastErrorPair p;
    p.e1 = {std::sqrt(2.0), 0.0, std::sqrt(2.0), 0.0};
    p.e2 = {0.0, 0.0, 0.0, 0.0};
    const auto r = dm_statistic(p, lrv::Method::newey_west, 0);
    EXPECT_NEAR(r.statistic, 2.0, 1e-12);
    EXPECT_DOUBLE_EQ(r.variance_used, 1.0);

    ForecastErrorPair same;
    same.e1 = {1, 2, 3, 4, 5};
    same.e2 = same.e1;
    EXPECT_THROW(dm_statistic(same, lrv::Method::homoskedastic), DegeneracyError);
    EXPECT_THROW(cw_statistic(same, lrv::Method::homoskedastic), DegeneracyError);

    ForecastErrorPair shortp;
    shortp.e1 = {1, 2, 3};
    shortp.e2 = {0, 1, 0};
    EXPECT_THROW(dm_statistic(shortp, lrv::Method::homoskedastic), ConfigError);
}

TEST(Cw, ConstantDifferentialIsDegenerate) {
    ForecastErrorPair p;
    p.e1 = {2, 2, 2, 2};
    p.e2 = {1, 1, 1, 1};
    EXPECT_THROW(cw_statistic(p, lrv::Method::homoskedastic), DegeneracyError);
}

TEST(Cw, MatchesTwoPassImplementation) {
    std::mt19937_64 g(9);
    const auto p = random_pair(250, g, 0.9);
    for (auto method : {lrv::Method::homoskedastic, lrv::Method::newey_west}) {
        const std::size_t m = method == lrv::Method::homoskedastic ? 0 : 5;
        const std::size_t P = p.P();
        Vector d(P);
        double mean = 0.0;
        for (std::size_t i = 0; i < P; ++i) {
            const double diff = p.e1[i] - p.e2[i];
            d[i] = p.e1[i] * p.e1[i] - (p.e2[i] * p.e2[i] - diff * diff);
            mean += d[i];
        }
        mean /= static_cast<double>(P);
        double s2 = 0.0;
        for (std::size_t j = 0; j <= m; ++j) {
            double gj = 0.0;
            for (std::size_t t = j; t < P; ++t) gj += (d[t] - mean) * (d[t - j] - mean);
            gj /= static_cast<double>(P);
            s2 += (j == 0 ? 1.0 : 2.0 * (1.0 - static_cast<double>(j) / (m + 1.0))) * gj;
        }
        const double expected = std::sqrt(static_cast<double>(P)) * mean / std::sqrt(s2);
        const auto r = cw_statistic(p, method, m);
        EXPECT_NEAR(r.statistic, expected, 1e-10);
        EXPECT_NEAR(r.sigma2, s2, 1e-12);
    }
}

TEST(Dm, NullRejectionForNonNestedPairs) {
    // Independent errors with equal variance: the differential has mean
    // zero and positive variance, so DM is asymptotically N(0,1).
    std::mt19937_64 g(10);
    std::normal_distribution<double> z;
    const int reps = 4000;
    const std::size_t P = 10000;
    int rejections = 0;
    ForecastErrorPair p;
    p.e1.resize(P);
    p.e2.resize(P);
    for (int r = 0; r < reps; ++r) {
        for (std::size_t i = 0; i < P; ++i) {
            p.e1[i] = z(g);
            p.e2[i] = z(g);
        }
        rejections += dm_statistic(p, lrv::Method::homoskedastic).reject ? 1 : 0;
    }
    EXPECT_NEAR(rejections / static_cast<double>(reps), 0.10, 0.015);
}

// ---------------------------------------------------------------- pipeline

TEST(RunTest, SmokeOnNullData) {
    const auto d = nested_dataset(500, 11);
    forecast::NestedModelSpec spec;
    spec.idx1 = {0};
    spec.idx2_extra = {1};
    const auto r = run_test(d, spec, SpreadConfig::s0_preset(1.0, 0.9, true));
    EXPECT_TRUE(std::isfinite(r.statistic));
    EXPECT_GT(r.p_value, 0.0);
    EXPECT_LT(r.p_value, 1.0);
    EXPECT_EQ(r.k0, 125u);
    EXPECT_EQ(r.P, 375u);
}

TEST(RunTest, SbarEqualsManualComposition) {
    const auto d = nested_dataset(400, 12, 0.3);
    forecast::NestedModelSpec spec;
    spec.idx1 = {0};
    spec.idx2_extra = {1};
    SpreadConfig cfg = SpreadConfig::sbar_preset(0.8, 0.9, false);
    cfg.lrv_method = lrv::Method::newey_west;
    const auto r = run_test(d, spec, cfg);

    const auto pair = forecast::generate_errors(d, spec);
    const auto eta = lrv::eta_series(d, spec);
    const auto sig = lrv::sigma2_nw(eta);
    const auto [a, b] = forecast::loss_sequences(pair);
    const double manual = sbar_value(a, b, 0.8, 0.9, sig.sigma2);
    EXPECT_NEAR(r.statistic, manual, 1e-12);
    EXPECT_EQ(r.bandwidth, sig.bandwidth);
    EXPECT_NEAR(r.sigma2, sig.sigma2, 1e-15);
}

TEST(RunTest, ScaleInvarianceForEveryVariant) {
    const auto d = nested_dataset(300, 13, 0.2);
    auto d2 = d;
    for (double& v : d2.y) v *= 2.0;
    forecast::NestedModelSpec spec;
    spec.idx1 = {0};
    spec.idx2_extra = {1};
    for (Variant v : {Variant::s0, Variant::sbar, Variant::s0_adj, Variant::sbar_adj, Variant::dm, Variant::cw}) {
        for (auto m : {lrv::Method::homoskedastic, lrv::Method::newey_west}) {
            SpreadConfig cfg;
            cfg.variant = v;
            cfg.lrv_method = m;
            const double a = run_test(d, spec, cfg).statistic;
            const double b = run_test(d2, spec, cfg).statistic;
            EXPECT_NEAR(a, b, 1e-8 * std::max(1.0, std::fabs(a))) << to_string(v);
        }
    }
}

TEST(RunTest, DmOnNestedNullIsLeftShifted) {
    // Under nestedness the DM statistic concentrates below zero because the
    // large model pays for estimating a useless coefficient.
    forecast::NestedModelSpec spec;
    spec.idx1 = {0};
    spec.idx2_extra = {1};
    SpreadConfig cfg;
    cfg.variant = Variant::dm;
    cfg.lrv_method = lrv::Method::homoskedastic;
    double sum = 0.0;
    int n = 0;
    for (std::uint64_t s = 0; s < 200; ++s) {
        try {
            sum += run_test(nested_dataset(300, 100 + s), spec, cfg).statistic;
            ++n;
        } catch (const DegeneracyError&) {
        }
    }
    ASSERT_GT(n, 150);
    EXPECT_LT(sum / n, -0.3);
}

TEST(SpreadConfig, Validation) {
    SpreadConfig c = SpreadConfig::s0_preset(0.9, 0.9);
    try {
        c.validate();
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_STREQ(e.what(), "variance degeneracy: lambda1 == lambda2");
    }
    c = SpreadConfig::sbar_preset();
    c.alpha = 1.5;
    EXPECT_THROW(c.validate(), ConfigError);
    c = SpreadConfig::sbar_preset(1.0, 0.9);
    EXPECT_THROW(c.validate(), ConfigError);
    EXPECT_NO_THROW(SpreadConfig{}.validate());
    EXPECT_EQ(SpreadConfig{}.variant, Variant::sbar_adj);
}

TEST(Variant, Names) {
    for (Variant v : {Variant::s0, Variant::sbar, Variant::s0_adj, Variant::sbar_adj, Variant::dm, Variant::cw}) {
        EXPECT_EQ(variant_from_string(to_string(v)), v);
    }
    EXPECT_THROW(variant_from_string("s1"), ConfigError);
}

// ---------------------------------------------------------------- null law

TEST(NullNormality, SquaredGaussianLossesPassKs) {
    // Identical loss sequences u^2 for both models; sigma^2 = Var(u^2) is
    // estimated from the same draws.
    std::mt19937_64 g(14);
    std::normal_distribution<double> z;
    const std::size_t P = 2000, reps = 10000;
    std::vector<double> stats(reps);
    Vector l(P), eta(P);
    for (std::size_t r = 0; r < reps; ++r) {
        double m = 0.0;
        for (std::size_t i = 0; i < P; ++i) {
            const double u = z(g);
            l[i] = u * u;
            m += l[i];
        }
        m /= static_cast<double>(P);
        for (std::size_t i = 0; i < P; ++i) eta[i] = l[i] - m;
        stats[r] = s0_value(l, l, 1.0, 0.9, lrv::sigma2_hom(eta).sigma2);
    }
    const double d = oracle::ks_distance(stats, [](double x) { return oracle::normal_cdf_series(x); });
    const double p = oracle::ks_pvalue(d, reps);
    EXPECT_GT(p, 0.01) << "KS distance " << d;
}

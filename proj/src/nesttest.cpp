#include "nestcast/nesttest.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nestcast/errors.hpp"
#include "nestcast/numcore/special.hpp"

namespace nestcast::nesttest {

namespace {

void check_fraction(double v, const char* name, bool allow_zero, bool allow_one) {
    const bool lo_ok = allow_zero ? v >= 0.0 : v > 0.0;
    const bool hi_ok = allow_one ? v <= 1.0 : v < 1.0;
    if (!(lo_ok && hi_ok) || !std::isfinite(v)) {
        throw DomainError(std::string(name) + " out of range: " + std::to_string(v));
    }
}

double critical_value(double alpha) { return num::std_normal_quantile(1.0 - alpha); }

void finish(TestResult& r, double alpha) {
    r.p_value = num::std_normal_sf(r.statistic);
    r.reject = r.statistic > critical_value(alpha);
}

void check_sigma2(double sigma2) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
        throw DegeneracyError("variance degeneracy: sigma2 must be positive");
    }
}

void check_losses(const Vector& e1sq, const Vector& e2sq) {
    if (e1sq.size() != e2sq.size()) throw ConfigError("loss sequences differ in length");
    if (e1sq.empty()) throw ConfigError("loss sequences are empty");
}

// Sum of the first l2 values of (e1 - e2)^2.
double spread_correction_sum(const forecast::ForecastErrorPair& pair, std::size_t l2) {
    double s = 0.0;
    for (std::size_t i = 0; i < l2; ++i) {
        const double d = pair.e1[i] - pair.e2[i];
        s += d * d;
    }
    return s;
}

TestResult base_result(const forecast::ForecastErrorPair& pair, const SpreadConfig& cfg, double variance,
                       double sigma2) {
    TestResult r;
    r.variance_used = variance;
    r.sigma2 = sigma2;
    r.k0 = pair.k0;
    r.P = pair.P();
    r.config = cfg;
    return r;
}

}  // namespace

std::string_view to_string(Variant v) noexcept {
    switch (v) {
        case Variant::s0: return "s0";
        case Variant::sbar: return "sbar";
        case Variant::s0_adj: return "s0_adj";
        case Variant::sbar_adj: return "sbar_adj";
        case Variant::dm: return "dm";
        case Variant::cw: return "cw";
    }
    return "?";
}

Variant variant_from_string(std::string_view s) {
    for (Variant v : {Variant::s0, Variant::sbar, Variant::s0_adj, Variant::sbar_adj, Variant::dm, Variant::cw}) {
        if (s == to_string(v)) return v;
    }
    throw ConfigError("unknown variant '" + std::string(s) + "' (expected s0, sbar, s0_adj, sbar_adj, dm, cw)");
}

bool is_point_variant(Variant v) noexcept { return v == Variant::s0 || v == Variant::s0_adj; }
bool is_average_variant(Variant v) noexcept { return v == Variant::sbar || v == Variant::sbar_adj; }
bool is_adjusted(Variant v) noexcept { return v == Variant::s0_adj || v == Variant::sbar_adj; }

SpreadConfig SpreadConfig::s0_preset(double lambda1, double lambda2, bool adjusted) {
    SpreadConfig c;
    c.lambda1 = lambda1;
    c.lambda2 = lambda2;
    c.variant = adjusted ? Variant::s0_adj : Variant::s0;
    return c;
}

SpreadConfig SpreadConfig::sbar_preset(double tau0, double lambda2, bool adjusted) {
    SpreadConfig c;
    c.tau0 = tau0;
    c.lambda2 = lambda2;
    c.variant = adjusted ? Variant::sbar_adj : Variant::sbar;
    return c;
}

void SpreadConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
    if (is_point_variant(variant)) {
        if (!(lambda1 > 0.0 && lambda1 <= 1.0)) throw ConfigError("lambda1 must lie in (0,1]");
        if (!(lambda2 > 0.0 && lambda2 <= 1.0)) throw ConfigError("lambda2 must lie in (0,1]");
        if (lambda1 == lambda2) throw ConfigError("variance degeneracy: lambda1 == lambda2");
    } else if (is_average_variant(variant)) {
        if (!(lambda2 > 0.0 && lambda2 <= 1.0)) throw ConfigError("lambda2 must lie in (0,1]");
        if (!(tau0 >= 0.0 && tau0 < 1.0)) throw ConfigError("tau0 must lie in [0,1)");
    }
}

double v0(double lambda1, double lambda2) {
    check_fraction(lambda1, "lambda1", false, true);
    check_fraction(lambda2, "lambda2", false, true);
    if (lambda1 == lambda2) throw DegeneracyError("variance degeneracy: lambda1 == lambda2");
    return std::abs(lambda1 - lambda2) / (lambda1 * lambda2);
}

double vbar(double tau0, double lambda2) {
    check_fraction(tau0, "tau0", true, false);
    check_fraction(lambda2, "lambda2", false, true);
    const double l = lambda2;
    const double t = tau0;
    double v;
    if (t == 0.0) {
        v = (1.0 + 2.0 * l * std::log(l)) / l;
    } else {
        const double omt = 1.0 - t;
        if (l <= t) {
            v = (omt * omt + 2.0 * l * (omt + std::log(t))) / (l * omt * omt);
        } else {
            v = (1.0 - t * t + 2.0 * l * (omt * std::log(l) + t * std::log(t))) / (l * omt * omt);
        }
    }
    if (!(v > 0.0)) {
        throw DegeneracyError("variance degeneracy: average-statistic variance is not positive at tau0=" +
                              std::to_string(tau0) + ", lambda2=" + std::to_string(lambda2));
    }
    return v;
}

std::size_t segment_length(std::size_t P, double lambda) {
    const auto l = static_cast<std::size_t>(std::floor(static_cast<double>(P) * lambda + 1e-9));
    return std::clamp<std::size_t>(l, 1, P);
}

double z_stat(const Vector& e1sq, const Vector& e2sq, std::size_t l1, std::size_t l2) {
    check_losses(e1sq, e2sq);
    const std::size_t P = e1sq.size();
    if (l1 < 1 || l1 > P || l2 < 1 || l2 > P) {
        throw IndexError("z_stat: segment lengths (" + std::to_string(l1) + ", " + std::to_string(l2) +
                         ") outside [1, " + std::to_string(P) + "]");
    }
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < l1; ++i) s1 += e1sq[i];
    for (std::size_t i = 0; i < l2; ++i) s2 += e2sq[i];
    return std::sqrt(static_cast<double>(P)) * (s1 / static_cast<double>(l1) - s2 / static_cast<double>(l2));
}

Vector cw_adjusted_losses(const Vector& e1, const Vector& e2) {
    if (e1.size() != e2.size()) throw ConfigError("cw_adjusted_losses: length mismatch");
    Vector out(e1.size());
    for (std::size_t i = 0; i < e1.size(); ++i) {
        const double d = e1[i] - e2[i];
        out[i] = e2[i] * e2[i] - d * d;
    }
    return out;
}

double s0_value(const Vector& e1sq, const Vector& e2sq, double lambda1, double lambda2, double sigma2) {
    check_sigma2(sigma2);
    const double v = v0(lambda1, lambda2);
    const std::size_t P = e1sq.size();
    const double z = z_stat(e1sq, e2sq, segment_length(P, lambda1), segment_length(P, lambda2));
    return z / (std::sqrt(sigma2) * std::sqrt(v));
}

double sbar_value(const Vector& e1sq, const Vector& e2sq, double tau0, double lambda2, double sigma2) {
    check_sigma2(sigma2);
    check_losses(e1sq, e2sq);
    const double v = vbar(tau0, lambda2);
    const std::size_t P = e1sq.size();
    if (static_cast<double>(P) * (1.0 - tau0) < 2.0 - 1e-9) {
        throw ConfigError("sbar: fewer than 2 averaging terms (P=" + std::to_string(P) +
                          ", tau0=" + std::to_string(tau0) + ")");
    }
    const auto start = static_cast<std::size_t>(std::floor(static_cast<double>(P) * tau0 + 1e-9)) + 1;
    const std::size_t l2 = segment_length(P, lambda2);

    // Running prefix sum of e1sq; accumulate S1[l1]/l1 for l1 in [start, P].
    double prefix = 0.0;
    double acc = 0.0;
    double s2 = 0.0;
    for (std::size_t i = 0; i < P; ++i) {
        prefix += e1sq[i];
        if (i < l2) s2 += e2sq[i];
        const std::size_t l1 = i + 1;
        if (l1 >= start) acc += prefix / static_cast<double>(l1);
    }
    const double n_terms = static_cast<double>(P - start + 1);
    const double mean_z = std::sqrt(static_cast<double>(P)) * (acc / n_terms - s2 / static_cast<double>(l2));
    return mean_z / (std::sqrt(sigma2) * std::sqrt(v));
}

TestResult s0_statistic(const forecast::ForecastErrorPair& pair, double lambda1, double lambda2, double sigma2) {
    const auto [e1sq, e2sq] = forecast::loss_sequences(pair);
    TestResult r = base_result(pair, SpreadConfig::s0_preset(lambda1, lambda2, false), v0(lambda1, lambda2), sigma2);
    r.statistic = s0_value(e1sq, e2sq, lambda1, lambda2, sigma2);
    finish(r, r.config.alpha);
    return r;
}

TestResult sbar_statistic(const forecast::ForecastErrorPair& pair, double tau0, double lambda2, double sigma2) {
    const auto [e1sq, e2sq] = forecast::loss_sequences(pair);
    TestResult r = base_result(pair, SpreadConfig::sbar_preset(tau0, lambda2, false), vbar(tau0, lambda2), sigma2);
    r.statistic = sbar_value(e1sq, e2sq, tau0, lambda2, sigma2);
    finish(r, r.config.alpha);
    return r;
}

TestResult s0_adj_statistic(const forecast::ForecastErrorPair& pair, double lambda1, double lambda2,
                            double sigma2) {
    const auto e1sq = forecast::loss_sequences(pair).first;
    const Vector adj = cw_adjusted_losses(pair.e1, pair.e2);
    TestResult r = base_result(pair, SpreadConfig::s0_preset(lambda1, lambda2, true), v0(lambda1, lambda2), sigma2);
    r.statistic = s0_value(e1sq, adj, lambda1, lambda2, sigma2);
    finish(r, r.config.alpha);
    return r;
}

TestResult sbar_adj_statistic(const forecast::ForecastErrorPair& pair, double tau0, double lambda2,
                              double sigma2) {
    const auto e1sq = forecast::loss_sequences(pair).first;
    const Vector adj = cw_adjusted_losses(pair.e1, pair.e2);
    TestResult r = base_result(pair, SpreadConfig::sbar_preset(tau0, lambda2, true), vbar(tau0, lambda2), sigma2);
    r.statistic = sbar_value(e1sq, adj, tau0, lambda2, sigma2);
    finish(r, r.config.alpha);
    return r;
}

// With the effective fraction l2/P in place of lambda2, this matches the
// difference between the adjusted and unadjusted statistics to rounding.
double h0_term(const forecast::ForecastErrorPair& pair, double lambda1, double lambda2, double sigma2) {
    check_sigma2(sigma2);
    const std::size_t P = pair.P();
    const std::size_t l2 = segment_length(P, lambda2);
    const double lam_eff = static_cast<double>(l2) / static_cast<double>(P);
    return spread_correction_sum(pair, l2) /
           (std::sqrt(sigma2) * lam_eff * std::sqrt(v0(lambda1, lambda2)) * std::sqrt(static_cast<double>(P)));
}

double hbar_term(const forecast::ForecastErrorPair& pair, double tau0, double lambda2, double sigma2) {
    check_sigma2(sigma2);
    const std::size_t P = pair.P();
    const std::size_t l2 = segment_length(P, lambda2);
    const double lam_eff = static_cast<double>(l2) / static_cast<double>(P);
    return spread_correction_sum(pair, l2) /
           (std::sqrt(sigma2) * lam_eff * std::sqrt(vbar(tau0, lambda2)) * std::sqrt(static_cast<double>(P)));
}

namespace {

TestResult differential_test(const forecast::ForecastErrorPair& pair, const Vector& d, Variant variant,
                             lrv::Method method, std::optional<std::size_t> bandwidth, double alpha) {
    const std::size_t P = d.size();
    if (P < 4) throw ConfigError("loss-differential test needs at least 4 out-of-sample points");
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= static_cast<double>(P);
    Vector centered(d);
    for (double& v : centered) v -= mean;
    const lrv::LrvEstimate est = lrv::estimate(centered, method, bandwidth);

    SpreadConfig cfg;
    cfg.variant = variant;
    cfg.lrv_method = method;
    cfg.nw_bandwidth = bandwidth;
    cfg.alpha = alpha;
    TestResult r = base_result(pair, cfg, 1.0, est.sigma2);
    r.bandwidth = est.bandwidth;
    r.statistic = std::sqrt(static_cast<double>(P)) * mean / std::sqrt(est.sigma2);
    finish(r, alpha);
    return r;
}

}  // namespace

TestResult dm_statistic(const forecast::ForecastErrorPair& pair, lrv::Method method,
                        std::optional<std::size_t> bandwidth, double alpha) {
    const auto [e1sq, e2sq] = forecast::loss_sequences(pair);
    Vector d(e1sq.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = e1sq[i] - e2sq[i];
    return differential_test(pair, d, Variant::dm, method, bandwidth, alpha);
}

TestResult cw_statistic(const forecast::ForecastErrorPair& pair, lrv::Method method,
                        std::optional<std::size_t> bandwidth, double alpha) {
    const auto e1sq = forecast::loss_sequences(pair).first;
    const Vector adj = cw_adjusted_losses(pair.e1, pair.e2);
    Vector d(e1sq.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = e1sq[i] - adj[i];
    return differential_test(pair, d, Variant::cw, method, bandwidth, alpha);
}

TestResult evaluate(const forecast::ForecastErrorPair& pair, const SpreadConfig& config,
                    const lrv::LrvEstimate& sigma) {
    config.validate();
    TestResult r;
    switch (config.variant) {
        case Variant::dm:
            return dm_statistic(pair, config.lrv_method, config.nw_bandwidth, config.alpha);
        case Variant::cw:
            return cw_statistic(pair, config.lrv_method, config.nw_bandwidth, config.alpha);
        case Variant::s0:
            r = s0_statistic(pair, config.lambda1, config.lambda2, sigma.sigma2);
            break;
        case Variant::s0_adj:
            r = s0_adj_statistic(pair, config.lambda1, config.lambda2, sigma.sigma2);
            break;
        case Variant::sbar:
            r = sbar_statistic(pair, config.tau0, config.lambda2, sigma.sigma2);
            break;
        case Variant::sbar_adj:
            r = sbar_adj_statistic(pair, config.tau0, config.lambda2, sigma.sigma2);
            break;
    }
    r.config = config;
    r.bandwidth = sigma.bandwidth;
    finish(r, config.alpha);
    return r;
}

TestResult run_test(const forecast::TimeSeriesDataset& data, const forecast::NestedModelSpec& spec,
                    const SpreadConfig& config, lrv::EtaSource eta_source) {
    config.validate();
    const forecast::ForecastErrorPair pair = forecast::generate_errors(data, spec);
    if (config.variant == Variant::dm || config.variant == Variant::cw) {
        return evaluate(pair, config, lrv::LrvEstimate{});
    }
    const Vector eta = lrv::eta_series(data, spec, eta_source);
    const lrv::LrvEstimate sigma = lrv::estimate(eta, config.lrv_method, config.nw_bandwidth);
    return evaluate(pair, config, sigma);
}

}  // namespace nestcast::nesttest

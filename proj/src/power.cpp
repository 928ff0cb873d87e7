#include "nestcast/power.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "nestcast/errors.hpp"
#include "nestcast/numcore/rng.hpp"
#include "nestcast/numcore/special.hpp"

namespace nestcast::power {

void StationaryPowerInputs::validate() const {
    if (Q.rows() != Q.cols()) throw ConfigError("power inputs: Q must be square");
    if (p1 >= Q.rows()) throw ConfigError("power inputs: p1 must be smaller than the dimension of Q");
    if (gamma.size() != Q.rows() - p1) {
        throw ConfigError("power inputs: gamma length must equal the number of extra predictors");
    }
    if (!(sigma > 0.0)) throw ConfigError("power inputs: sigma must be positive");
    if (!(pi0 > 0.0 && pi0 < 1.0)) throw ConfigError("power inputs: pi0 must lie in (0,1)");
    for (std::size_t i = 0; i < Q.rows(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (std::abs(Q(i, j) - Q(j, i)) > 1e-12 * (std::abs(Q(i, j)) + std::abs(Q(j, i)) + 1.0)) {
                throw ConfigError("power inputs: Q must be symmetric");
            }
}

double schur_quadratic(const StationaryPowerInputs& in) {
    in.validate();
    const std::size_t p = in.Q.rows();
    const std::size_t p1 = in.p1;
    const std::size_t p2 = p - p1;
    Matrix S(p2, p2);
    for (std::size_t i = 0; i < p2; ++i)
        for (std::size_t j = 0; j < p2; ++j) S(i, j) = in.Q(p1 + i, p1 + j);
    if (p1 > 0) {
        Matrix Q11(p1, p1);
        for (std::size_t i = 0; i < p1; ++i)
            for (std::size_t j = 0; j < p1; ++j) Q11(i, j) = in.Q(i, j);
        const num::Cholesky chol(Q11);
        for (std::size_t j = 0; j < p2; ++j) {
            Vector q12(p1);
            for (std::size_t i = 0; i < p1; ++i) q12[i] = in.Q(i, p1 + j);
            const Vector w = chol.solve(q12);
            for (std::size_t i = 0; i < p2; ++i) {
                double s = 0.0;
                for (std::size_t k = 0; k < p1; ++k) s += in.Q(p1 + i, k) * w[k];
                S(i, j) -= s;
            }
        }
    }
    double q = 0.0;
    for (std::size_t i = 0; i < p2; ++i)
        for (std::size_t j = 0; j < p2; ++j) q += in.gamma[i] * S(i, j) * in.gamma[j];
    return std::max(q, 0.0);
}

double noncentrality_psi0(const StationaryPowerInputs& in, double lambda1, double lambda2) {
    const double v = nesttest::v0(lambda1, lambda2);
    return std::sqrt(1.0 - in.pi0) / (in.sigma * std::sqrt(v)) * schur_quadratic(in);
}

double noncentrality_psibar(const StationaryPowerInputs& in, double tau0, double lambda2) {
    const double v = nesttest::vbar(tau0, lambda2);
    return std::sqrt(1.0 - in.pi0) / (in.sigma * std::sqrt(v)) * schur_quadratic(in);
}

double alpf(double psi, double alpha, bool adjusted) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpf: alpha must lie in (0,1)");
    const double q = num::std_normal_quantile(1.0 - alpha);
    const double shift = adjusted ? 2.0 * psi : psi;
    return num::std_normal_sf(q - shift);
}

double optimal_lambda2(double tau0) {
    if (!(tau0 >= 0.0 && tau0 < 1.0)) throw DomainError("optimal_lambda2: tau0 must lie in [0,1)");
    return 0.5 * tau0 + 0.5;
}

double are_closed_form(double lambda1, double lambda2, double tau0) {
    if (lambda1 == lambda2) throw DegeneracyError("variance degeneracy: lambda1 == lambda2");
    const double t = tau0;
    const double t_log_t = t > 0.0 ? t * std::log(t) : 0.0;
    const double bracket = 2.0 * (1.0 - t) * (1.0 + std::log((1.0 + t) / 2.0)) + 2.0 * t_log_t;
    return lambda1 * lambda2 / std::abs(lambda1 - lambda2) * bracket / ((1.0 - t) * (1.0 - t));
}

double are(double lambda1, double lambda2, double tau0) {
    const double primary = nesttest::vbar(tau0, optimal_lambda2(tau0)) / nesttest::v0(lambda1, lambda2);
    const double check = are_closed_form(lambda1, lambda2, tau0);
    if (std::abs(primary - check) > 1e-10 * std::max(1.0, std::abs(primary))) {
        throw Error("are: closed-form cross-check disagrees (" + std::to_string(primary) + " vs " +
                    std::to_string(check) + ")");
    }
    return primary;
}

double are_threshold(double tau0) {
    if (!(tau0 > 0.0 && tau0 < 1.0)) throw DomainError("are_threshold: tau0 must lie in (0,1)");
    const double t = tau0;
    const double denom =
        (1.0 - t) * (3.0 - t) + 2.0 * (std::log(0.5 * (1.0 + t)) - t * std::log((1.0 + t) / (2.0 * t)));
    return (1.0 - t) * (1.0 - t) / denom;
}

double beta_to_gamma(double beta, std::size_t T, bool persistent) {
    if (T < 1) throw DomainError("beta_to_gamma: T must be positive");
    return beta * std::pow(static_cast<double>(T), persistent ? 0.75 : 0.25);
}

double gamma_to_beta(double gamma, std::size_t T, bool persistent) {
    if (T < 1) throw DomainError("gamma_to_beta: T must be positive");
    return gamma / std::pow(static_cast<double>(T), persistent ? 0.75 : 0.25);
}

void OuSpec::validate() const {
    if (c.empty()) throw ConfigError("OU spec: at least one coordinate is required");
    if (p1 >= c.size()) throw ConfigError("OU spec: p1 must leave at least one extra coordinate");
    for (double ci : c) {
        if (!(ci > 0.0) || !std::isfinite(ci)) throw ConfigError("OU spec: every c_i must be positive");
    }
    if (n_steps < 100) throw ConfigError("OU spec: n_steps must be at least 100");
    if (n_paths < 1000) throw ConfigError("OU spec: n_paths must be at least 1000");
    if (cov.rows() != 0 && (cov.rows() != c.size() || cov.cols() != c.size())) {
        throw ConfigError("OU spec: covariance dimension does not match c");
    }
}

namespace {

constexpr double kRidge = 1e-10;
constexpr double kMinGramEig = 1e-8;

// Everything a path needs that does not depend on the draws.
struct OuPlan {
    std::size_t p = 0, p1 = 0, p2 = 0, n = 0;
    std::size_t k_start = 0, n_out = 0;
    double h = 0.0;
    Vector decay;       // per-coordinate AR factor for one step
    Matrix step_chol;   // lower factor of the one-step innovation covariance
    Vector gamma;
    bool average = false;
    bool adjusted = false;
    std::size_t l1 = 0, l2 = 0, avg_start = 0;
    double scale = 0.0;
};

OuPlan make_plan(const OuSpec& spec, const Vector& gamma, double sigma, double pi0,
                 const nesttest::SpreadConfig& cfg) {
    spec.validate();
    cfg.validate();
    if (nesttest::is_point_variant(cfg.variant) == nesttest::is_average_variant(cfg.variant)) {
        throw ConfigError("OU noncentrality is defined for s0, sbar and their adjusted forms only");
    }
    if (!(pi0 > 0.0 && pi0 < 1.0)) throw ConfigError("OU noncentrality: pi0 must lie in (0,1)");
    if (!(sigma > 0.0)) throw ConfigError("OU noncentrality: sigma must be positive");

    OuPlan plan;
    plan.p = spec.c.size();
    plan.p1 = spec.p1;
    plan.p2 = plan.p - plan.p1;
    if (gamma.size() != plan.p2) throw ConfigError("OU noncentrality: gamma length must equal p - p1");
    plan.gamma = gamma;
    plan.n = spec.n_steps;
    plan.h = 1.0 / static_cast<double>(plan.n);
    plan.k_start = static_cast<std::size_t>(std::floor(static_cast<double>(plan.n) * pi0 + 1e-9));
    plan.n_out = plan.n - plan.k_start;

    const Matrix sig = spec.cov.rows() ? spec.cov : Matrix::identity(plan.p);
    Matrix V(plan.p, plan.p);
    plan.decay.resize(plan.p);
    for (std::size_t i = 0; i < plan.p; ++i) {
        if (spec.scheme == OuScheme::exact) {
            plan.decay[i] = std::exp(-spec.c[i] * plan.h);
        } else {
            plan.decay[i] = 1.0 - spec.c[i] * plan.h;
        }
        for (std::size_t j = 0; j < plan.p; ++j) {
            if (spec.scheme == OuScheme::exact) {
                const double cs = spec.c[i] + spec.c[j];
                V(i, j) = sig(i, j) * (-std::expm1(-cs * plan.h)) / cs;
            } else {
                V(i, j) = sig(i, j) * plan.h;
            }
        }
    }
    plan.step_chol = num::Cholesky(V).lower();

    plan.average = nesttest::is_average_variant(cfg.variant);
    plan.adjusted = nesttest::is_adjusted(cfg.variant);
    plan.l2 = nesttest::segment_length(plan.n_out, cfg.lambda2);
    double v;
    if (plan.average) {
        v = nesttest::vbar(cfg.tau0, cfg.lambda2);
        plan.avg_start =
            static_cast<std::size_t>(std::floor(static_cast<double>(plan.n_out) * cfg.tau0 + 1e-9)) + 1;
    } else {
        v = nesttest::v0(cfg.lambda1, cfg.lambda2);
        plan.l1 = nesttest::segment_length(plan.n_out, cfg.lambda1);
    }
    plan.scale = std::sqrt(1.0 - pi0) / (sigma * std::sqrt(v));
    return plan;
}

// Noncentrality draw for one path, or nullopt if the small-model Gram matrix
// at the forecast origin is numerically singular.
std::optional<double> ou_path_value(const OuPlan& plan, std::uint64_t seed, std::size_t path) {
    const std::size_t p = plan.p, p1 = plan.p1, p2 = plan.p2;
    num::RngStream rng(seed, path);
    Vector J(p, 0.0), z(p), next(p);
    Matrix G11(p1, p1), G21(p2, p1);
    Vector f;
    f.reserve(plan.n_out);
    Vector j_star(p2), rhs(p1);

    for (std::size_t k = 0; k < plan.n; ++k) {
        // J holds J(s_k); the Gram sums hold the left-Riemann integrals over [0, s_k).
        if (k >= plan.k_start) {
            if (p1 > 0) {
                if (k == plan.k_start && num::min_eigenvalue_sym(G11) < kMinGramEig) return std::nullopt;
                Matrix reg = G11;
                for (std::size_t i = 0; i < p1; ++i) reg(i, i) += kRidge;
                for (std::size_t i = 0; i < p1; ++i) rhs[i] = J[i];
                const Vector w = num::Cholesky(reg).solve(rhs);
                for (std::size_t i = 0; i < p2; ++i) {
                    double s = 0.0;
                    for (std::size_t m = 0; m < p1; ++m) s += G21(i, m) * w[m];
                    j_star[i] = J[p1 + i] - s;
                }
            } else {
                for (std::size_t i = 0; i < p2; ++i) j_star[i] = J[i];
            }
            double g = 0.0;
            for (std::size_t i = 0; i < p2; ++i) g += plan.gamma[i] * j_star[i];
            f.push_back(g * g);
        }
        for (std::size_t i = 0; i < p1; ++i) {
            for (std::size_t m = 0; m < p1; ++m) G11(i, m) += plan.h * J[i] * J[m];
        }
        for (std::size_t i = 0; i < p2; ++i) {
            for (std::size_t m = 0; m < p1; ++m) G21(i, m) += plan.h * J[p1 + i] * J[m];
        }
        for (std::size_t i = 0; i < p; ++i) z[i] = rng.normal();
        for (std::size_t i = 0; i < p; ++i) {
            double e = 0.0;
            for (std::size_t m = 0; m <= i; ++m) e += plan.step_chol(i, m) * z[m];
            next[i] = plan.decay[i] * J[i] + e;
        }
        J.swap(next);
    }

    // A(l) = mean of f over the first l out-of-sample grid points.
    Vector prefix(f.size() + 1, 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) prefix[i + 1] = prefix[i] + f[i];
    auto segment_mean = [&](std::size_t l) { return prefix[l] / static_cast<double>(l); };

    double value;
    if (plan.average) {
        double acc = 0.0;
        for (std::size_t l1 = plan.avg_start; l1 <= plan.n_out; ++l1) acc += segment_mean(l1);
        value = acc / static_cast<double>(plan.n_out - plan.avg_start + 1);
    } else {
        value = segment_mean(plan.l1);
    }
    if (plan.adjusted) value += segment_mean(plan.l2);
    return plan.scale * value;
}

double quantile_sorted(const std::vector<double>& s, double q) {
    if (s.empty()) return std::nan("");
    const double pos = q * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return s[lo] + frac * (s[hi] - s[lo]);
}

OuSummary summarize(const std::vector<std::optional<double>>& draws) {
    OuSummary out;
    for (std::size_t i = 0; i < draws.size(); ++i) {
        if (draws[i]) {
            out.values.push_back(*draws[i]);
            out.path_index.push_back(i);
        } else {
            ++out.n_discarded;
        }
    }
    const std::size_t n = out.values.size();
    if (n == 0) throw DegeneracyError("OU noncentrality: every path was discarded");
    double mean = 0.0;
    for (double v : out.values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : out.values) ss += (v - mean) * (v - mean);
    out.mean = mean;
    out.sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    out.se = out.sd / std::sqrt(static_cast<double>(n));
    std::vector<double> sorted = out.values;
    std::sort(sorted.begin(), sorted.end());
    out.q05 = quantile_sorted(sorted, 0.05);
    out.q25 = quantile_sorted(sorted, 0.25);
    out.q50 = quantile_sorted(sorted, 0.50);
    out.q75 = quantile_sorted(sorted, 0.75);
    out.q95 = quantile_sorted(sorted, 0.95);
    return out;
}

}  // namespace

OuSummary simulate_ou_noncentrality(const OuSpec& spec, const Vector& gamma, double sigma, double pi0,
                                    const nesttest::SpreadConfig& config) {
    const OuPlan plan = make_plan(spec, gamma, sigma, pi0, config);
    std::vector<std::optional<double>> draws(spec.n_paths);
    const long long n_paths = static_cast<long long>(spec.n_paths);
    const int threads = spec.workers > 0 ? static_cast<int>(spec.workers) : 0;
    if (threads > 0) {
#pragma omp parallel for schedule(static) num_threads(threads)
        for (long long i = 0; i < n_paths; ++i) {
            draws[static_cast<std::size_t>(i)] = ou_path_value(plan, spec.seed, static_cast<std::size_t>(i));
        }
    } else {
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < n_paths; ++i) {
            draws[static_cast<std::size_t>(i)] = ou_path_value(plan, spec.seed, static_cast<std::size_t>(i));
        }
    }
    return summarize(draws);
}

OuSummary simulate_ou_noncentrality_serial(const OuSpec& spec, const Vector& gamma, double sigma, double pi0,
                                           const nesttest::SpreadConfig& config) {
    const OuPlan plan = make_plan(spec, gamma, sigma, pi0, config);
    std::vector<std::optional<double>> draws(spec.n_paths);
    for (std::size_t i = 0; i < spec.n_paths; ++i) draws[i] = ou_path_value(plan, spec.seed, i);
    return summarize(draws);
}

}  // namespace nestcast::power

#ifndef NESTCAST_NESTTEST_HPP
#define NESTCAST_NESTTEST_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "nestcast/forecast.hpp"
#include "nestcast/lrv.hpp"

namespace nestcast::nesttest {

using num::Vector;

/// Statistic family.  The segment statistics compare the mean squared error
/// of the small model over the first l1 out-of-sample points with that of the
/// large model over the first l2 points; "bar" variants average over a range
/// of l1; "adj" variants subtract (e1 - e2)^2 from the large model's losses.
enum class Variant { s0, sbar, s0_adj, sbar_adj, dm, cw };

std::string_view to_string(Variant v) noexcept;
Variant variant_from_string(std::string_view s);

bool is_point_variant(Variant v) noexcept;    ///< s0, s0_adj
bool is_average_variant(Variant v) noexcept;  ///< sbar, sbar_adj
bool is_adjusted(Variant v) noexcept;         ///< s0_adj, sbar_adj

struct SpreadConfig {
    double lambda1 = 1.0;
    double lambda2 = 0.9;
    double tau0 = 0.8;
    Variant variant = Variant::sbar_adj;
    lrv::Method lrv_method = lrv::Method::newey_west;
    std::optional<std::size_t> nw_bandwidth;
    double alpha = 0.10;

    /// Point statistic with l1 = P * lambda1, l2 = P * lambda2.
    static SpreadConfig s0_preset(double lambda1 = 1.0, double lambda2 = 0.9, bool adjusted = false);
    /// Average statistic over l1 in (P * tau0, P] against l2 = P * lambda2.
    static SpreadConfig sbar_preset(double tau0 = 0.8, double lambda2 = 0.9, bool adjusted = false);

    /// Throws ConfigError for out-of-range fractions, alpha, or (point
    /// variants) lambda1 == lambda2.
    void validate() const;
};

struct TestResult {
    double statistic = 0.0;
    double variance_used = 1.0;
    double sigma2 = 0.0;
    double p_value = 0.5;
    bool reject = false;
    std::size_t k0 = 0;
    std::size_t P = 0;
    std::size_t bandwidth = 0;
    SpreadConfig config;
};

/// Null variance of the point statistic, |l1 - l2| / (l1 * l2).
/// Throws DegeneracyError when lambda1 == lambda2, DomainError outside (0,1].
double v0(double lambda1, double lambda2);

/// Null variance of the average statistic (piecewise closed form).
double vbar(double tau0, double lambda2);

/// Number of leading out-of-sample points for fraction lambda:
/// max(1, floor(P * lambda)), with a 1e-9 guard against representation error.
std::size_t segment_length(std::size_t P, double lambda);

/// sqrt(P) * (mean(e1sq[0, l1)) - mean(e2sq[0, l2))).
double z_stat(const Vector& e1sq, const Vector& e2sq, std::size_t l1, std::size_t l2);

/// e2^2 - (e1 - e2)^2, elementwise.
Vector cw_adjusted_losses(const Vector& e1, const Vector& e2);

TestResult s0_statistic(const forecast::ForecastErrorPair& pair, double lambda1, double lambda2, double sigma2);
TestResult sbar_statistic(const forecast::ForecastErrorPair& pair, double tau0, double lambda2, double sigma2);
TestResult s0_adj_statistic(const forecast::ForecastErrorPair& pair, double lambda1, double lambda2,
                            double sigma2);
TestResult sbar_adj_statistic(const forecast::ForecastErrorPair& pair, double tau0, double lambda2,
                              double sigma2);

/// Additive correction carried by the adjusted point statistic:
/// sum over the first l2 points of (e1 - e2)^2, divided by
/// sigma * (l2/P) * sqrt(v0) * sqrt(P).
double h0_term(const forecast::ForecastErrorPair& pair, double lambda1, double lambda2, double sigma2);
/// Same correction standardized by vbar instead of v0.
double hbar_term(const forecast::ForecastErrorPair& pair, double tau0, double lambda2, double sigma2);

/// Point statistic from loss sequences directly (no error pair needed).
double s0_value(const Vector& e1sq, const Vector& e2sq, double lambda1, double lambda2, double sigma2);
/// Average statistic from loss sequences using prefix sums (O(P)).
double sbar_value(const Vector& e1sq, const Vector& e2sq, double tau0, double lambda2, double sigma2);

TestResult dm_statistic(const forecast::ForecastErrorPair& pair, lrv::Method method,
                        std::optional<std::size_t> bandwidth = std::nullopt, double alpha = 0.10);
TestResult cw_statistic(const forecast::ForecastErrorPair& pair, lrv::Method method,
                        std::optional<std::size_t> bandwidth = std::nullopt, double alpha = 0.10);

/// Statistic for an already computed error pair.  sigma is the long-run
/// variance of the squared-error series; it is ignored by dm and cw, which
/// estimate the variance of their own loss differential.
TestResult evaluate(const forecast::ForecastErrorPair& pair, const SpreadConfig& config,
                    const lrv::LrvEstimate& sigma);

/// Full pipeline: recursive errors, long-run variance, statistic.
TestResult run_test(const forecast::TimeSeriesDataset& data, const forecast::NestedModelSpec& spec,
                    const SpreadConfig& config,
                    lrv::EtaSource eta_source = lrv::EtaSource::full_sample_fit);

}  // namespace nestcast::nesttest

#endif  // NESTCAST_NESTTEST_HPP

#include "nestcast/lrv.hpp"

#include <cmath>
#include <string>

#include "nestcast/errors.hpp"

namespace nestcast::lrv {

std::string_view to_string(Method m) noexcept {
    return m == Method::homoskedastic ? "hom" : "nw";
}

Method method_from_string(std::string_view s) {
    if (s == "hom" || s == "homoskedastic") return Method::homoskedastic;
    if (s == "nw" || s == "newey_west") return Method::newey_west;
    throw ConfigError("unknown lrv method '" + std::string(s) + "' (expected hom or nw)");
}

Vector eta_from_residuals(const Vector& u) {
    Vector eta(u.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        eta[i] = u[i] * u[i];
        mean += eta[i];
    }
    if (!u.empty()) mean /= static_cast<double>(u.size());
    for (double& e : eta) e -= mean;
    return eta;
}

Vector eta_series(const forecast::TimeSeriesDataset& data, const forecast::NestedModelSpec& spec,
                  EtaSource source) {
    if (source == EtaSource::recursive) {
        return eta_from_residuals(forecast::generate_errors(data, spec).e2);
    }
    data.validate();
    spec.validate(data.X.cols());
    const std::size_t T = data.T();
    const std::size_t k0 = forecast::forecast_origin(T, spec.pi0);
    forecast::check_sample_split(T, k0, spec.p2());

    const num::Matrix D = forecast::model_design(data.X, spec, true);
    // Full-sample fit on the pairs (x_{j-1}, y_j), j = 1..T-1.
    const num::Matrix lagged = D.row_block(0, T - 1);
    const Vector target(data.y.begin() + 1, data.y.end());
    const Vector b = num::ols_solve(lagged, target);

    Vector u(T - k0);
    for (std::size_t r = k0; r < T; ++r) {
        const double* x = D.row(r - 1);
        double fit = 0.0;
        for (std::size_t i = 0; i < b.size(); ++i) fit += b[i] * x[i];
        u[r - k0] = data.y[r] - fit;
    }
    return eta_from_residuals(u);
}

LrvEstimate sigma2_hom(const Vector& eta) {
    if (eta.size() < 2) throw ConfigError("sigma2_hom: need at least 2 observations");
    double s = 0.0;
    for (double e : eta) s += e * e;
    s /= static_cast<double>(eta.size());
    if (!(s > 0.0)) throw DegeneracyError("variance degeneracy: homoskedastic long-run variance is zero");
    return {s, Method::homoskedastic, 0, eta.size(), false};
}

std::size_t auto_bandwidth(std::size_t n) {
    return static_cast<std::size_t>(std::floor(4.0 * std::pow(static_cast<double>(n) / 100.0, 2.0 / 9.0)));
}

LrvEstimate sigma2_nw(const Vector& eta, std::optional<std::size_t> bandwidth, bool floor_degenerate) {
    const std::size_t n = eta.size();
    if (n < 4) throw ConfigError("sigma2_nw: need at least 4 observations");
    const std::size_t m = bandwidth.value_or(auto_bandwidth(n));
    if (m >= n) {
        throw ConfigError("sigma2_nw: bandwidth " + std::to_string(m) + " must be below the series length " +
                          std::to_string(n));
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    double g0 = 0.0;
    for (double e : eta) g0 += e * e;
    double s = g0 / static_cast<double>(n);
    for (std::size_t j = 1; j <= m; ++j) {
        double gj = 0.0;
        for (std::size_t t = j; t < n; ++t) gj += eta[t] * eta[t - j];
        const double w = 1.0 - static_cast<double>(j) / static_cast<double>(m + 1);
        s += 2.0 * w * gj * inv_n;
    }
    LrvEstimate est{s, Method::newey_west, m, n, false};
    if (!(s > 0.0)) {
        if (!floor_degenerate) {
            throw DegeneracyError("variance degeneracy: Newey-West long-run variance is not positive");
        }
        est.sigma2 = 1e-12;
        est.degenerate = true;
    }
    return est;
}

LrvEstimate estimate(const Vector& eta, Method method, std::optional<std::size_t> bandwidth) {
    return method == Method::homoskedastic ? sigma2_hom(eta) : sigma2_nw(eta, bandwidth);
}

}  // namespace nestcast::lrv

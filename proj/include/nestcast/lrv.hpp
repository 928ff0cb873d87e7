#ifndef NESTCAST_LRV_HPP
#define NESTCAST_LRV_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "nestcast/forecast.hpp"

namespace nestcast::lrv {

using num::Vector;

enum class Method { homoskedastic, newey_west };

std::string_view to_string(Method m) noexcept;
/// Accepts "hom"/"homoskedastic" and "nw"/"newey_west".  Throws ConfigError.
Method method_from_string(std::string_view s);

struct LrvEstimate {
    double sigma2 = 0.0;
    Method method = Method::homoskedastic;
    std::size_t bandwidth = 0;
    std::size_t n_used = 0;
    /// Set only when a nonpositive Newey-West value was floored on request.
    bool degenerate = false;
};

/// Which residuals feed the squared-error series.
enum class EtaSource {
    full_sample_fit,  ///< large model fit once on the whole sample (default)
    recursive,        ///< the large model's out-of-sample recursive errors
};

/// Demeaned squared residuals over the out-of-sample rows k0..T-1.
Vector eta_series(const forecast::TimeSeriesDataset& data, const forecast::NestedModelSpec& spec,
                  EtaSource source = EtaSource::full_sample_fit);

/// u_i^2 minus the mean of the u^2 values.
Vector eta_from_residuals(const Vector& u);

/// (1/n) * sum eta^2.  Throws DegeneracyError if the result is zero.
LrvEstimate sigma2_hom(const Vector& eta);

/// floor(4 * (n/100)^(2/9)).
std::size_t auto_bandwidth(std::size_t n);

/// Bartlett-kernel long-run variance with autocovariance divisor n.  A
/// missing bandwidth selects auto_bandwidth(n).  A raw value <= 0 throws
/// DegeneracyError unless floor_degenerate is set, in which case the result
/// is 1e-12 with the degenerate flag raised.
LrvEstimate sigma2_nw(const Vector& eta, std::optional<std::size_t> bandwidth = std::nullopt,
                      bool floor_degenerate = false);

/// Dispatch on method; bandwidth is ignored for the homoskedastic estimator.
LrvEstimate estimate(const Vector& eta, Method method, std::optional<std::size_t> bandwidth = std::nullopt);

}  // namespace nestcast::lrv

#endif  // NESTCAST_LRV_HPP

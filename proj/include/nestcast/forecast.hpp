#ifndef NESTCAST_FORECAST_HPP
#define NESTCAST_FORECAST_HPP

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "nestcast/numcore/linalg.hpp"

namespace nestcast::forecast {

using num::Matrix;
using num::Vector;

/// Observations in natural time order: row r holds (x_r, y_r).  The fit
/// pairs x_{r-1} with y_r internally, so x is never pre-shifted.
struct TimeSeriesDataset {
    Vector y;
    Matrix X;
    std::vector<std::string> names;

    std::size_t T() const noexcept { return y.size(); }

    /// Throws ConfigError on shape mismatch or non-finite values.
    void validate() const;
};

struct NestedModelSpec {
    std::vector<std::size_t> idx1;
    std::vector<std::size_t> idx2_extra;
    bool include_intercept = true;
    double pi0 = 0.25;

    std::size_t p1() const noexcept { return idx1.size() + (include_intercept ? 1 : 0); }
    std::size_t p2() const noexcept { return p1() + idx2_extra.size(); }

    /// Throws ConfigError if the index sets overlap, the extra set is empty,
    /// an index exceeds n_columns, or pi0 is outside (0, 1).
    void validate(std::size_t n_columns) const;
};

/// Out-of-sample one-step errors of both models.  Element i of e1/e2 is the
/// error for target row k0 + i.
struct ForecastErrorPair {
    std::size_t k0 = 0;
    Vector e1;
    Vector e2;

    std::size_t P() const noexcept { return e1.size(); }
};

/// floor(T * pi0) with a tiny guard so exact products such as 1000 * 0.25
/// are never rounded down by representation error.
std::size_t forecast_origin(std::size_t T, double pi0);

/// Throws ConfigError unless k0 >= p + 5 and T - k0 >= 10.
void check_sample_split(std::size_t T, std::size_t k0, std::size_t p);

/// Recursive (expanding-window) forecast errors of the small and large model.
/// For every target row r in [k0, T), each model is fit by OLS on the pairs
/// (x_{j-1}, y_j), j = 1..r-1, and forecasts y_r from x_{r-1}.
ForecastErrorPair generate_errors(const TimeSeriesDataset& data, const NestedModelSpec& spec);

/// Elementwise squares of both error vectors.
std::pair<Vector, Vector> loss_sequences(const ForecastErrorPair& pair);

/// Design matrix of model 1 (small) or model 2 (large) built from the raw
/// predictor matrix; the intercept, when requested, is column 0.
Matrix model_design(const Matrix& X, const NestedModelSpec& spec, bool large);

}  // namespace nestcast::forecast

#endif  // NESTCAST_FORECAST_HPP

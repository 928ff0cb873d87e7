#include "nestcast/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nestcast/errors.hpp"

namespace nestcast::forecast {

void TimeSeriesDataset::validate() const {
    if (X.rows() != y.size()) {
        throw ConfigError("dataset: y has " + std::to_string(y.size()) + " rows but X has " +
                          std::to_string(X.rows()));
    }
    if (!names.empty() && names.size() != X.cols()) {
        throw ConfigError("dataset: column name count does not match X");
    }
    for (std::size_t r = 0; r < y.size(); ++r) {
        if (!std::isfinite(y[r])) throw ConfigError("dataset: non-finite target at row " + std::to_string(r));
    }
    if (!X.all_finite()) throw ConfigError("dataset: non-finite predictor value");
}

void NestedModelSpec::validate(std::size_t n_columns) const {
    if (!(pi0 > 0.0 && pi0 < 1.0)) throw ConfigError("model spec: pi0 must lie in (0,1)");
    if (idx2_extra.empty()) throw ConfigError("model spec: the large model needs at least one extra predictor");
    for (std::size_t i : idx1) {
        if (i >= n_columns) throw ConfigError("model spec: model-1 column " + std::to_string(i) + " out of range");
        if (std::count(idx1.begin(), idx1.end(), i) > 1) throw ConfigError("model spec: repeated model-1 column");
    }
    for (std::size_t i : idx2_extra) {
        if (i >= n_columns) throw ConfigError("model spec: extra column " + std::to_string(i) + " out of range");
        if (std::find(idx1.begin(), idx1.end(), i) != idx1.end()) {
            throw ConfigError("model spec: column " + std::to_string(i) + " is in both models' index sets");
        }
        if (std::count(idx2_extra.begin(), idx2_extra.end(), i) > 1) {
            throw ConfigError("model spec: repeated extra column");
        }
    }
}

std::size_t forecast_origin(std::size_t T, double pi0) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(T) * pi0 + 1e-9));
}

void check_sample_split(std::size_t T, std::size_t k0, std::size_t p) {
    if (k0 < p + 5) {
        throw ConfigError("sample split: k0=" + std::to_string(k0) + " leaves too few estimation rows for p=" +
                          std::to_string(p) + " (need k0 >= p+5)");
    }
    if (k0 >= T || T - k0 < 10) {
        throw ConfigError("sample split: out-of-sample count " + std::to_string(T > k0 ? T - k0 : 0) +
                          " is below 10");
    }
}

Matrix model_design(const Matrix& X, const NestedModelSpec& spec, bool large) {
    std::vector<std::size_t> cols = spec.idx1;
    if (large) cols.insert(cols.end(), spec.idx2_extra.begin(), spec.idx2_extra.end());
    const std::size_t offset = spec.include_intercept ? 1 : 0;
    Matrix D(X.rows(), cols.size() + offset);
    for (std::size_t r = 0; r < X.rows(); ++r) {
        double* d = D.row(r);
        if (offset) d[0] = 1.0;
        for (std::size_t k = 0; k < cols.size(); ++k) d[offset + k] = X(r, cols[k]);
    }
    return D;
}

ForecastErrorPair generate_errors(const TimeSeriesDataset& data, const NestedModelSpec& spec) {
    data.validate();
    spec.validate(data.X.cols());
    const std::size_t T = data.T();
    const std::size_t k0 = forecast_origin(T, spec.pi0);
    check_sample_split(T, k0, spec.p2());

    const Matrix D1 = model_design(data.X, spec, false);
    const Matrix D2 = model_design(data.X, spec, true);
    const std::size_t p1 = D1.cols();
    num::RecursiveOls fit1(p1);
    num::RecursiveOls fit2(D2.cols());

    ForecastErrorPair out;
    out.k0 = k0;
    out.e1.reserve(T - k0);
    out.e2.reserve(T - k0);
    for (std::size_t r = 1; r < T; ++r) {
        if (r >= k0) {
            try {
                out.e1.push_back(p1 == 0 ? data.y[r] : data.y[r] - fit1.predict(D1.row(r - 1)));
                out.e2.push_back(data.y[r] - fit2.predict(D2.row(r - 1)));
            } catch (const SingularityError& e) {
                throw e.with_position(r);
            }
        }
        if (p1 > 0) fit1.add(D1.row(r - 1), data.y[r]);
        fit2.add(D2.row(r - 1), data.y[r]);
    }
    // Row 0 can only be a target when k0 == 0, which check_sample_split forbids.
    return out;
}

std::pair<Vector, Vector> loss_sequences(const ForecastErrorPair& pair) {
    Vector a(pair.e1.size()), b(pair.e2.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = pair.e1[i] * pair.e1[i];
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = pair.e2[i] * pair.e2[i];
    return {std::move(a), std::move(b)};
}

}  // namespace nestcast::forecast

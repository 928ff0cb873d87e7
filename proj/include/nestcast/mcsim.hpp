#ifndef NESTCAST_MCSIM_HPP
#define NESTCAST_MCSIM_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nestcast/forecast.hpp"
#include "nestcast/lrv.hpp"
#include "nestcast/nesttest.hpp"

namespace nestcast::mcsim {

enum class DgpKind { dgp1, dgp2 };
enum class ErrorMode { gaussian, arch };

std::string_view to_string(DgpKind k) noexcept;
std::string_view to_string(ErrorMode m) noexcept;
DgpKind dgp_from_string(std::string_view s);
ErrorMode error_mode_from_string(std::string_view s);

/// Simulation design.
///
/// dgp1: x_t = phi1 x_{t-1} + v_t, y_{t+1} = beta x_t + u_{t+1}; the small
/// model forecasts zero and the large model regresses y on lagged x (no
/// intercept unless dgp1_intercept is set, which adds a constant to the large
/// model only).
///
/// dgp2: x_t = Phi x_{t-1} + v_t (three predictors),
/// y_{t+1} = mu + rho y_t + beta' x_t + u_{t+1}; small model {1, y_t}, large
/// model adds x_t.
struct DgpSpec {
    DgpKind kind = DgpKind::dgp1;
    std::size_t T = 500;
    double beta = 0.0;
    std::array<double, 3> beta_vec{0.0, 0.0, 0.0};
    double phi1 = 0.95;
    ErrorMode error_mode = ErrorMode::gaussian;
    std::optional<double> arch_alpha0;  ///< default 1.8 (dgp1) or 0.6 (dgp2)
    std::optional<double> arch_alpha1;  ///< default 0.4
    double sigma2_u = 3.0;
    double sigma2_v = 0.01;
    double rho_uv = -0.8;
    double mu = 1.0;
    double rho = 0.25;
    std::array<std::array<double, 3>, 3> Phi{{{0.6, 0.1, 0.0}, {0.6, 0.25, 0.0}, {0.0, 0.0, 0.9}}};
    std::size_t burn_in = 200;
    std::uint64_t seed = 0;
    double pi0 = 0.25;
    bool dgp1_intercept = false;

    double alpha0() const noexcept;
    double alpha1() const noexcept;
    void validate() const;
};

forecast::TimeSeriesDataset gen_dgp1(const DgpSpec& spec, std::uint64_t stream);
forecast::TimeSeriesDataset gen_dgp2(const DgpSpec& spec, std::uint64_t stream);
forecast::TimeSeriesDataset generate(const DgpSpec& spec, std::uint64_t stream);

/// The nested model pair fitted to data from this design.
forecast::NestedModelSpec model_spec(const DgpSpec& spec);

/// One statistic parameterization inside a grid.
struct VariantSpec {
    nesttest::Variant variant = nesttest::Variant::s0_adj;
    double lambda1 = 1.0;
    double lambda2 = 0.9;
    double tau0 = 0.0;

    friend bool operator==(const VariantSpec&, const VariantSpec&) = default;
};

/// Declarative experiment: every combination of T, beta, phi1 (dgp1 only),
/// error mode, lrv method and variant is one cell.
struct ExperimentGrid {
    DgpKind dgp = DgpKind::dgp1;
    std::vector<std::size_t> T{500};
    std::vector<std::vector<double>> beta{{0.0}};  ///< one entry (dgp1) or three (dgp2) per point
    std::vector<double> phi1{0.95};
    std::vector<ErrorMode> error_modes{ErrorMode::gaussian};
    std::vector<lrv::Method> lrv{lrv::Method::homoskedastic};
    std::vector<VariantSpec> variants;
    std::size_t n_reps = 2000;
    std::uint64_t seed = 20240607;
    std::size_t workers = 0;
    double pi0 = 0.25;
    double alpha = 0.10;
    std::optional<std::size_t> nw_bandwidth;
    bool dgp1_intercept = false;

    void validate() const;
    std::size_t cell_count() const noexcept;
};

/// Parses the JSON grid format; throws ConfigError with a diagnostic.
ExperimentGrid parse_grid(std::string_view json_text);
std::string grid_to_json(const ExperimentGrid& grid);

struct CellKey {
    DgpKind dgp = DgpKind::dgp1;
    VariantSpec variant;
    std::size_t T = 0;
    double phi1 = 0.0;
    std::vector<double> beta;
    ErrorMode error_mode = ErrorMode::gaussian;
    lrv::Method lrv = lrv::Method::homoskedastic;

    friend bool operator==(const CellKey&, const CellKey&) = default;
};

struct CellResult {
    CellKey key;
    std::size_t rejections = 0;
    std::size_t n_valid = 0;
    std::size_t n_excluded = 0;
    bool flagged = false;  ///< exclusion rate at or above 0.5%

    double frequency() const noexcept;
    double mc_se() const noexcept;

    friend bool operator==(const CellResult&, const CellResult&) = default;
};

struct ExperimentReport {
    DgpKind dgp = DgpKind::dgp1;
    std::size_t n_reps = 0;
    std::uint64_t seed = 0;
    double pi0 = 0.25;
    double alpha = 0.10;
    std::vector<CellResult> cells;
    double elapsed_seconds = 0.0;

    /// Cell matching the key (doubles compared to 1e-9), or nullptr.
    const CellResult* find(const CellKey& key) const;

    friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

/// Replication-parallel run.  Replication r of every cell draws its data from
/// stream r of grid.seed, and rejections are stored per replication before
/// reduction, so the report does not depend on grid.workers.
ExperimentReport run_experiment(const ExperimentGrid& grid);

/// Single-threaded reference of run_experiment.
ExperimentReport run_experiment_serial(const ExperimentGrid& grid);

// ---------------------------------------------------------------------------
// Table emission

enum class Format { csv, json, text };
Format format_from_string(std::string_view s);

/// 0 selects the generic one-row-per-cell layout; 1..26 select the published
/// table layouts.
struct Layout {
    int table = 0;
    static Layout generic() { return {0}; }
    static Layout paper_table(int n);
};
Layout layout_from_string(std::string_view s);

/// Renders a report.  Cells a layout needs but the report lacks print as NA.
std::string emit_table(const ExperimentReport& report, Layout layout, Format format);

/// Inverse of emit_table(report, Layout::generic(), Format::json).
ExperimentReport parse_report(std::string_view json_text);

/// Experiment grid covering every cell of a published table layout.
ExperimentGrid grid_for_layout(int table, std::size_t n_reps = 2000, std::uint64_t seed = 20240607);

}  // namespace nestcast::mcsim

#endif  // NESTCAST_MCSIM_HPP

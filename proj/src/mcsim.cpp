#include "nestcast/mcsim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>

#include <json.hpp>

#include "nestcast/errors.hpp"
#include "nestcast/numcore/rng.hpp"

namespace nestcast::mcsim {

using nlohmann::json;

std::string_view to_string(DgpKind k) noexcept { return k == DgpKind::dgp1 ? "dgp1" : "dgp2"; }
std::string_view to_string(ErrorMode m) noexcept { return m == ErrorMode::gaussian ? "gaussian" : "arch"; }

DgpKind dgp_from_string(std::string_view s) {
    if (s == "dgp1") return DgpKind::dgp1;
    if (s == "dgp2") return DgpKind::dgp2;
    throw ConfigError("unknown dgp '" + std::string(s) + "' (expected dgp1 or dgp2)");
}

ErrorMode error_mode_from_string(std::string_view s) {
    if (s == "gaussian" || s == "hom" || s == "homoskedastic") return ErrorMode::gaussian;
    if (s == "arch") return ErrorMode::arch;
    throw ConfigError("unknown error mode '" + std::string(s) + "' (expected gaussian or arch)");
}

double DgpSpec::alpha0() const noexcept {
    return arch_alpha0.value_or(kind == DgpKind::dgp1 ? 1.8 : 0.6);
}

double DgpSpec::alpha1() const noexcept { return arch_alpha1.value_or(0.4); }

void DgpSpec::validate() const {
    if (T < 2) throw ConfigError("dgp: T must be at least 2");
    if (!(pi0 > 0.0 && pi0 < 1.0)) throw ConfigError("dgp: pi0 must lie in (0,1)");
    if (error_mode == ErrorMode::arch) {
        if (!(alpha1() >= 0.0 && alpha1() < 1.0)) throw ConfigError("dgp: ARCH alpha1 must lie in [0,1)");
        if (!(alpha0() > 0.0)) throw ConfigError("dgp: ARCH alpha0 must be positive");
    }
    if (kind == DgpKind::dgp1) {
        if (!(sigma2_u > 0.0) || sigma2_v < 0.0) throw ConfigError("dgp1: variances must be nonnegative");
        if (!(rho_uv >= -1.0 && rho_uv <= 1.0)) throw ConfigError("dgp1: rho_uv must lie in [-1,1]");
        if (!(std::abs(phi1) < 1.0)) throw ConfigError("dgp1: phi1 must lie in (-1,1)");
    } else if (!(std::abs(rho) < 1.0)) {
        throw ConfigError("dgp2: rho must lie in (-1,1)");
    }
}

namespace {

// ARCH(1) state: h_t = a0 + a1 u_{t-1}^2, started at the unconditional variance.
struct ArchState {
    double a0, a1, h;
    ArchState(double alpha0, double alpha1) : a0(alpha0), a1(alpha1), h(alpha0 / (1.0 - alpha1)) {}
    double draw(double eps) {
        const double u = eps * std::sqrt(h);
        h = a0 + a1 * u * u;
        return u;
    }
};

}  // namespace

forecast::TimeSeriesDataset gen_dgp1(const DgpSpec& spec, std::uint64_t stream) {
    if (spec.kind != DgpKind::dgp1) throw ConfigError("gen_dgp1: spec is not dgp1");
    spec.validate();
    num::RngStream rng(spec.seed, stream);
    const std::size_t n = spec.burn_in + spec.T;
    const double su = std::sqrt(spec.sigma2_u);
    const double sv = std::sqrt(spec.sigma2_v);
    const double rho = spec.rho_uv;
    const double rho_c = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    ArchState arch(spec.alpha0(), spec.alpha1());

    forecast::TimeSeriesDataset data;
    data.y.resize(spec.T);
    data.X = num::Matrix(spec.T, spec.dgp1_intercept ? 2 : 1);
    data.names = spec.dgp1_intercept ? std::vector<std::string>{"x", "const"} : std::vector<std::string>{"x"};

    double x_prev = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double z1 = rng.normal();
        const double z2 = rng.normal();
        const double u = spec.error_mode == ErrorMode::gaussian ? su * z1 : arch.draw(z1);
        const double v = sv * (rho * z1 + rho_c * z2);
        const double y = spec.beta * x_prev + u;
        const double x = spec.phi1 * x_prev + v;
        if (t >= spec.burn_in) {
            const std::size_t r = t - spec.burn_in;
            data.y[r] = y;
            data.X(r, 0) = x;
            if (spec.dgp1_intercept) data.X(r, 1) = 1.0;
        }
        x_prev = x;
    }
    return data;
}

forecast::TimeSeriesDataset gen_dgp2(const DgpSpec& spec, std::uint64_t stream) {
    if (spec.kind != DgpKind::dgp2) throw ConfigError("gen_dgp2: spec is not dgp2");
    spec.validate();
    num::RngStream rng(spec.seed, stream);
    const std::size_t n = spec.burn_in + spec.T;
    ArchState arch(spec.alpha0(), spec.alpha1());

    forecast::TimeSeriesDataset data;
    data.y.resize(spec.T);
    data.X = num::Matrix(spec.T, 4);
    data.names = {"y_lag", "x1", "x2", "x3"};

    double y_prev = spec.mu / (1.0 - spec.rho);
    std::array<double, 3> x_prev{0.0, 0.0, 0.0};
    for (std::size_t t = 0; t < n; ++t) {
        const double eps = rng.normal();
        const std::array<double, 3> v{rng.normal(), rng.normal(), rng.normal()};
        const double u = spec.error_mode == ErrorMode::gaussian ? eps : arch.draw(eps);
        double y = spec.mu + spec.rho * y_prev + u;
        for (std::size_t i = 0; i < 3; ++i) y += spec.beta_vec[i] * x_prev[i];
        std::array<double, 3> x{};
        for (std::size_t i = 0; i < 3; ++i) {
            x[i] = v[i];
            for (std::size_t j = 0; j < 3; ++j) x[i] += spec.Phi[i][j] * x_prev[j];
        }
        if (t >= spec.burn_in) {
            const std::size_t r = t - spec.burn_in;
            data.y[r] = y;
            data.X(r, 0) = y;
            for (std::size_t i = 0; i < 3; ++i) data.X(r, 1 + i) = x[i];
        }
        y_prev = y;
        x_prev = x;
    }
    return data;
}

forecast::TimeSeriesDataset generate(const DgpSpec& spec, std::uint64_t stream) {
    return spec.kind == DgpKind::dgp1 ? gen_dgp1(spec, stream) : gen_dgp2(spec, stream);
}

forecast::NestedModelSpec model_spec(const DgpSpec& spec) {
    forecast::NestedModelSpec m;
    m.pi0 = spec.pi0;
    if (spec.kind == DgpKind::dgp1) {
        m.include_intercept = false;
        m.idx2_extra = spec.dgp1_intercept ? std::vector<std::size_t>{1, 0} : std::vector<std::size_t>{0};
    } else {
        m.include_intercept = true;
        m.idx1 = {0};
        m.idx2_extra = {1, 2, 3};
    }
    return m;
}

// ---------------------------------------------------------------------------
// Grid

void ExperimentGrid::validate() const {
    if (T.empty()) throw ConfigError("grid: T list is empty");
    if (beta.empty()) throw ConfigError("grid: beta list is empty");
    const std::size_t beta_dim = dgp == DgpKind::dgp1 ? 1 : 3;
    for (const auto& b : beta) {
        if (b.size() != beta_dim) {
            throw ConfigError("grid: each beta entry must have " + std::to_string(beta_dim) + " component(s)");
        }
    }
    if (dgp == DgpKind::dgp1 && phi1.empty()) throw ConfigError("grid: phi1 list is empty");
    for (double p : phi1) {
        if (!(std::abs(p) < 1.0)) throw ConfigError("grid: phi1 must lie in (-1,1)");
    }
    if (error_modes.empty()) throw ConfigError("grid: error_modes list is empty");
    if (lrv.empty()) throw ConfigError("grid: lrv list is empty");
    if (variants.empty()) throw ConfigError("grid: variants list is empty");
    if (n_reps < 100) throw ConfigError("grid: n_reps must be at least 100");
    if (!(pi0 > 0.0 && pi0 < 1.0)) throw ConfigError("grid: pi0 must lie in (0,1)");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("grid: alpha must lie in (0,1)");
    DgpSpec probe;
    probe.kind = dgp;
    probe.pi0 = pi0;
    probe.dgp1_intercept = dgp1_intercept;
    const forecast::NestedModelSpec m = model_spec(probe);
    for (std::size_t t : T) {
        forecast::check_sample_split(t, forecast::forecast_origin(t, pi0), m.p2());
    }
    for (const auto& v : variants) {
        nesttest::SpreadConfig cfg;
        cfg.variant = v.variant;
        cfg.lambda1 = v.lambda1;
        cfg.lambda2 = v.lambda2;
        cfg.tau0 = v.tau0;
        cfg.alpha = alpha;
        cfg.validate();
    }
}

std::size_t ExperimentGrid::cell_count() const noexcept {
    const std::size_t n_phi = dgp == DgpKind::dgp1 ? phi1.size() : 1;
    return T.size() * beta.size() * n_phi * error_modes.size() * lrv.size() * variants.size();
}

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

std::vector<double> as_double_list(const json& j) {
    if (j.is_array()) return j.get<std::vector<double>>();
    return {j.get<double>()};
}

}  // namespace

ExperimentGrid parse_grid(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text.begin(), json_text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("grid: invalid JSON: ") + e.what());
    }
    try {
        if (!j.is_object()) throw ConfigError("grid: top level must be an object");
        static const char* const known[] = {"dgp",  "T",      "beta", "phi1", "error_modes", "lrv",
                                            "variants", "n_reps", "seed", "workers", "pi0", "alpha",
                                            "nw_bandwidth", "dgp1_intercept"};
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (std::find(std::begin(known), std::end(known), it.key()) == std::end(known)) {
                throw ConfigError("grid: unknown key '" + it.key() + "'");
            }
        }
        ExperimentGrid g;
        g.dgp = dgp_from_string(get_or<std::string>(j, "dgp", "dgp1"));
        if (j.contains("T")) g.T = j.at("T").get<std::vector<std::size_t>>();
        if (j.contains("beta")) {
            g.beta.clear();
            for (const auto& b : j.at("beta")) g.beta.push_back(as_double_list(b));
        } else if (g.dgp == DgpKind::dgp2) {
            g.beta = {{0.0, 0.0, 0.0}};
        }
        if (j.contains("phi1")) g.phi1 = j.at("phi1").get<std::vector<double>>();
        if (j.contains("error_modes")) {
            g.error_modes.clear();
            for (const auto& s : j.at("error_modes")) g.error_modes.push_back(error_mode_from_string(s.get<std::string>()));
        }
        if (j.contains("lrv")) {
            g.lrv.clear();
            for (const auto& s : j.at("lrv")) g.lrv.push_back(lrv::method_from_string(s.get<std::string>()));
        }
        if (!j.contains("variants")) throw ConfigError("grid: missing 'variants'");
        for (const auto& v : j.at("variants")) {
            VariantSpec base;
            base.variant = nesttest::variant_from_string(v.at("variant").get<std::string>());
            base.lambda1 = get_or<double>(v, "lambda1", 1.0);
            base.tau0 = get_or<double>(v, "tau0", 0.0);
            if (base.variant == nesttest::Variant::dm || base.variant == nesttest::Variant::cw) {
                base.lambda1 = 0.0;
                base.lambda2 = 0.0;
                base.tau0 = 0.0;
                g.variants.push_back(base);
                continue;
            }
            if (nesttest::is_point_variant(base.variant)) base.tau0 = 0.0;
            if (nesttest::is_average_variant(base.variant)) base.lambda1 = 0.0;
            const std::vector<double> l2 = v.contains("lambda2") ? as_double_list(v.at("lambda2")) : std::vector<double>{0.9};
            for (double l : l2) {
                VariantSpec s = base;
                s.lambda2 = l;
                g.variants.push_back(s);
            }
        }
        g.n_reps = get_or<std::size_t>(j, "n_reps", g.n_reps);
        g.seed = get_or<std::uint64_t>(j, "seed", g.seed);
        g.workers = get_or<std::size_t>(j, "workers", g.workers);
        g.pi0 = get_or<double>(j, "pi0", g.pi0);
        g.alpha = get_or<double>(j, "alpha", g.alpha);
        if (j.contains("nw_bandwidth") && !j.at("nw_bandwidth").is_null()) {
            g.nw_bandwidth = j.at("nw_bandwidth").get<std::size_t>();
        }
        g.dgp1_intercept = get_or<bool>(j, "dgp1_intercept", false);
        g.validate();
        return g;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("grid: ") + e.what());
    }
}

std::string grid_to_json(const ExperimentGrid& g) {
    json j;
    j["dgp"] = to_string(g.dgp);
    j["T"] = g.T;
    j["beta"] = g.beta;
    j["phi1"] = g.phi1;
    json modes = json::array();
    for (auto m : g.error_modes) modes.push_back(to_string(m));
    j["error_modes"] = modes;
    json methods = json::array();
    for (auto m : g.lrv) methods.push_back(lrv::to_string(m));
    j["lrv"] = methods;
    json vars = json::array();
    for (const auto& v : g.variants) {
        json e;
        e["variant"] = nesttest::to_string(v.variant);
        if (nesttest::is_point_variant(v.variant)) e["lambda1"] = v.lambda1;
        if (nesttest::is_average_variant(v.variant)) e["tau0"] = v.tau0;
        if (v.variant != nesttest::Variant::dm && v.variant != nesttest::Variant::cw) e["lambda2"] = v.lambda2;
        vars.push_back(e);
    }
    j["variants"] = vars;
    j["n_reps"] = g.n_reps;
    j["seed"] = g.seed;
    j["workers"] = g.workers;
    j["pi0"] = g.pi0;
    j["alpha"] = g.alpha;
    j["nw_bandwidth"] = g.nw_bandwidth ? json(*g.nw_bandwidth) : json(nullptr);
    j["dgp1_intercept"] = g.dgp1_intercept;
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// Experiment

double CellResult::frequency() const noexcept {
    return n_valid ? static_cast<double>(rejections) / static_cast<double>(n_valid) : std::nan("");
}

double CellResult::mc_se() const noexcept {
    if (!n_valid) return std::nan("");
    const double p = frequency();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(n_valid));
}

namespace {

bool close(double a, double b) { return std::abs(a - b) <= 1e-9; }

bool same_key(const CellKey& a, const CellKey& b) {
    if (a.dgp != b.dgp || a.T != b.T || a.error_mode != b.error_mode || a.lrv != b.lrv) return false;
    if (a.variant.variant != b.variant.variant) return false;
    if (!close(a.variant.lambda1, b.variant.lambda1) || !close(a.variant.lambda2, b.variant.lambda2) ||
        !close(a.variant.tau0, b.variant.tau0) || !close(a.phi1, b.phi1)) {
        return false;
    }
    if (a.beta.size() != b.beta.size()) return false;
    for (std::size_t i = 0; i < a.beta.size(); ++i)
        if (!close(a.beta[i], b.beta[i])) return false;
    return true;
}

// One simulated design point; all variants and lrv methods reuse its draws.
struct DataCell {
    DgpSpec dgp;
    std::size_t T_index, beta_index, phi_index, mode_index;
};

std::vector<DataCell> data_cells(const ExperimentGrid& g) {
    std::vector<DataCell> out;
    const std::size_t n_phi = g.dgp == DgpKind::dgp1 ? g.phi1.size() : 1;
    for (std::size_t ti = 0; ti < g.T.size(); ++ti)
        for (std::size_t bi = 0; bi < g.beta.size(); ++bi)
            for (std::size_t pi = 0; pi < n_phi; ++pi)
                for (std::size_t mi = 0; mi < g.error_modes.size(); ++mi) {
                    DgpSpec s;
                    s.kind = g.dgp;
                    s.T = g.T[ti];
                    if (g.dgp == DgpKind::dgp1) {
                        s.beta = g.beta[bi][0];
                        s.phi1 = g.phi1[pi];
                    } else {
                        s.beta_vec = {g.beta[bi][0], g.beta[bi][1], g.beta[bi][2]};
                    }
                    s.error_mode = g.error_modes[mi];
                    s.seed = g.seed;
                    s.pi0 = g.pi0;
                    s.dgp1_intercept = g.dgp1_intercept;
                    out.push_back({s, ti, bi, pi, mi});
                }
    return out;
}

// Outcome codes per (statistic, replication).
constexpr std::int8_t kExcluded = -1;

// Runs every statistic of one replication of one data cell and writes the
// outcome codes into out[0 .. n_lrv * n_var).  Returns false and fills
// `error` when a non-numerical failure occurs.
bool run_replication(const ExperimentGrid& g, const DataCell& cell, std::size_t rep, std::int8_t* out,
                     std::string& error) {
    const std::size_t n_var = g.variants.size();
    const std::size_t n_stat = g.lrv.size() * n_var;
    try {
        const forecast::TimeSeriesDataset data = generate(cell.dgp, rep);
        const forecast::NestedModelSpec spec = model_spec(cell.dgp);
        forecast::ForecastErrorPair pair;
        try {
            pair = forecast::generate_errors(data, spec);
        } catch (const SingularityError&) {
            std::fill(out, out + n_stat, kExcluded);
            return true;
        }
        std::optional<lrv::Vector> eta;
        for (std::size_t li = 0; li < g.lrv.size(); ++li) {
            std::optional<lrv::LrvEstimate> sigma;
            bool sigma_failed = false;
            for (std::size_t vi = 0; vi < n_var; ++vi) {
                const VariantSpec& v = g.variants[vi];
                nesttest::SpreadConfig cfg;
                cfg.variant = v.variant;
                cfg.lambda1 = v.lambda1;
                cfg.lambda2 = v.lambda2;
                cfg.tau0 = v.tau0;
                cfg.lrv_method = g.lrv[li];
                cfg.nw_bandwidth = g.nw_bandwidth;
                cfg.alpha = g.alpha;
                std::int8_t& slot = out[li * n_var + vi];
                const bool differential = v.variant == nesttest::Variant::dm || v.variant == nesttest::Variant::cw;
                try {
                    if (differential) {
                        slot = nesttest::evaluate(pair, cfg, lrv::LrvEstimate{}).reject ? 1 : 0;
                        continue;
                    }
                    if (sigma_failed) {
                        slot = kExcluded;
                        continue;
                    }
                    if (!sigma) {
                        if (!eta) eta = lrv::eta_series(data, spec);
                        try {
                            sigma = lrv::estimate(*eta, g.lrv[li], g.nw_bandwidth);
                        } catch (const DegeneracyError&) {
                            sigma_failed = true;
                            slot = kExcluded;
                            continue;
                        }
                    }
                    slot = nesttest::evaluate(pair, cfg, *sigma).reject ? 1 : 0;
                } catch (const DegeneracyError&) {
                    slot = kExcluded;
                } catch (const SingularityError&) {
                    slot = kExcluded;
                }
            }
        }
        return true;
    } catch (const std::exception& e) {
        error = e.what();
        return false;
    }
}

ExperimentReport reduce(const ExperimentGrid& g, const std::vector<DataCell>& cells,
                        const std::vector<std::int8_t>& outcomes) {
    const std::size_t n_var = g.variants.size();
    const std::size_t n_stat = g.lrv.size() * n_var;
    ExperimentReport rep;
    rep.dgp = g.dgp;
    rep.n_reps = g.n_reps;
    rep.seed = g.seed;
    rep.pi0 = g.pi0;
    rep.alpha = g.alpha;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        for (std::size_t li = 0; li < g.lrv.size(); ++li) {
            for (std::size_t vi = 0; vi < n_var; ++vi) {
                CellResult r;
                r.key.dgp = g.dgp;
                r.key.variant = g.variants[vi];
                r.key.T = cells[c].dgp.T;
                r.key.phi1 = g.dgp == DgpKind::dgp1 ? cells[c].dgp.phi1 : 0.0;
                r.key.beta = g.beta[cells[c].beta_index];
                r.key.error_mode = cells[c].dgp.error_mode;
                r.key.lrv = g.lrv[li];
                const std::size_t stat = li * n_var + vi;
                for (std::size_t k = 0; k < g.n_reps; ++k) {
                    const std::int8_t o = outcomes[(c * g.n_reps + k) * n_stat + stat];
                    if (o == kExcluded) {
                        ++r.n_excluded;
                    } else {
                        ++r.n_valid;
                        r.rejections += static_cast<std::size_t>(o);
                    }
                }
                r.flagged = static_cast<double>(r.n_excluded) >= 0.005 * static_cast<double>(g.n_reps);
                rep.cells.push_back(std::move(r));
            }
        }
    }
    return rep;
}

ExperimentReport run_impl(const ExperimentGrid& grid, bool parallel) {
    grid.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<DataCell> cells = data_cells(grid);
    const std::size_t n_stat = grid.lrv.size() * grid.variants.size();
    const std::size_t n_tasks = cells.size() * grid.n_reps;
    std::vector<std::int8_t> outcomes(n_tasks * n_stat, 0);
    std::string first_error;
    bool failed = false;

    auto task = [&](std::size_t idx, std::string& err) {
        const std::size_t c = idx / grid.n_reps;
        const std::size_t r = idx % grid.n_reps;
        return run_replication(grid, cells[c], r, outcomes.data() + idx * n_stat, err);
    };

    if (parallel) {
        const long long n = static_cast<long long>(n_tasks);
        const int threads = grid.workers > 0 ? static_cast<int>(grid.workers) : 0;
        auto body = [&](long long i) {
            std::string err;
            if (!task(static_cast<std::size_t>(i), err)) {
#pragma omp critical(nestcast_mcsim_error)
                {
                    if (!failed) {
                        failed = true;
                        first_error = err;
                    }
                }
            }
        };
        if (threads > 0) {
#pragma omp parallel for schedule(dynamic, 16) num_threads(threads)
            for (long long i = 0; i < n; ++i) body(i);
        } else {
#pragma omp parallel for schedule(dynamic, 16)
            for (long long i = 0; i < n; ++i) body(i);
        }
    } else {
        for (std::size_t i = 0; i < n_tasks && !failed; ++i) {
            std::string err;
            if (!task(i, err)) {
                failed = true;
                first_error = err;
            }
        }
    }
    if (failed) throw Error("experiment: replication failed: " + first_error);

    ExperimentReport rep = reduce(grid, cells, outcomes);
    rep.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

}  // namespace

const CellResult* ExperimentReport::find(const CellKey& key) const {
    for (const auto& c : cells)
        if (same_key(c.key, key)) return &c;
    return nullptr;
}

ExperimentReport run_experiment(const ExperimentGrid& grid) { return run_impl(grid, true); }

ExperimentReport run_experiment_serial(const ExperimentGrid& grid) { return run_impl(grid, false); }

}  // namespace nestcast::mcsim

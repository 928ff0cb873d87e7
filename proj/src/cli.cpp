#include "nestcast/cli.hpp"

#include <chrono>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nestcast/csv.hpp"
#include "nestcast/errors.hpp"
#include "nestcast/forecast.hpp"
#include "nestcast/lrv.hpp"
#include "nestcast/mcsim.hpp"
#include "nestcast/nesttest.hpp"
#include "nestcast/power.hpp"

namespace nestcast::cli {

namespace {

using nlohmann::json;

std::string num(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream o(path, std::ios::binary);
    if (!o) throw ConfigError(path + ": cannot open file for writing");
    o << content;
    if (!o) throw ConfigError(path + ": write failed");
}

/// Text destined for --output (if given) or the result stream.
void deliver(const std::string& text, const std::string& output, std::ostream& out) {
    if (output.empty() || output == "-") {
        out << text;
    } else {
        write_file(output, text);
    }
}

/// Seed from NESTCAST_SEED when set, which takes precedence over --seed.
std::optional<std::uint64_t> env_seed() {
    const char* s = std::getenv("NESTCAST_SEED");
    if (!s || !*s) return std::nullopt;
    std::string_view v(s);
    std::uint64_t seed = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), seed);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw ConfigError("NESTCAST_SEED is not an unsigned integer: '" + std::string(v) + "'");
    }
    return seed;
}

/// "a,b,c" or "start:stop:n" (n evenly spaced points, endpoints included).
std::vector<double> parse_grid_values(const std::string& spec, const char* flag) {
    std::vector<double> values;
    auto bad = [&](const std::string& why) {
        return ConfigError(std::string(flag) + ": " + why + " in '" + spec + "'");
    };
    if (spec.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(spec);
        std::string part;
        while (std::getline(ss, part, ':')) parts.push_back(part);
        double a = 0, b = 0, n = 0;
        if (parts.size() != 3 || !csv::parse_double(parts[0], a) || !csv::parse_double(parts[1], b) ||
            !csv::parse_double(parts[2], n)) {
            throw bad("expected start:stop:count");
        }
        if (n < 1 || n != std::floor(n) || n > 1e6) throw bad("count must be a positive integer");
        const auto count = static_cast<std::size_t>(n);
        for (std::size_t i = 0; i < count; ++i) {
            values.push_back(count == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
        }
        return values;
    }
    std::stringstream ss(spec);
    std::string part;
    while (std::getline(ss, part, ',')) {
        double v = 0;
        if (!csv::parse_double(part, v)) throw bad("not a number: '" + part + "'");
        values.push_back(v);
    }
    if (values.empty()) throw bad("no values");
    return values;
}

// ---------------------------------------------------------------------------
// test

struct TestOptions {
    std::string input;
    std::string target;
    std::vector<std::string> model1;
    std::vector<std::string> model2;
    bool no_intercept = false;
    std::string variant = "sbar_adj";
    double lambda1 = 1.0;
    double lambda2 = 0.9;
    double tau0 = 0.8;
    double pi0 = 0.25;
    double alpha = 0.10;
    std::string lrv = "nw";
    std::optional<std::size_t> nw_bandwidth;
    std::string eta_source = "full";
    std::string output;
    std::string format = "json";
};

int cmd_test(const TestOptions& o, std::ostream& out) {
    nesttest::SpreadConfig cfg;
    cfg.variant = nesttest::variant_from_string(o.variant);
    cfg.lambda1 = o.lambda1;
    cfg.lambda2 = o.lambda2;
    cfg.tau0 = o.tau0;
    cfg.alpha = o.alpha;
    cfg.lrv_method = lrv::method_from_string(o.lrv);
    cfg.nw_bandwidth = o.nw_bandwidth;
    cfg.validate();

    lrv::EtaSource source;
    if (o.eta_source == "full") {
        source = lrv::EtaSource::full_sample_fit;
    } else if (o.eta_source == "recursive") {
        source = lrv::EtaSource::recursive;
    } else {
        throw ConfigError("--eta-source must be 'full' or 'recursive'");
    }
    if (o.format != "json" && o.format != "text") throw ConfigError("--format must be json or text for test");
    if (o.model2.empty()) throw ConfigError("--model2 needs at least one column");
    for (const auto& a : o.model1) {
        for (const auto& b : o.model2) {
            if (a == b) throw ConfigError("collinearity: column '" + a + "' is in both --model1 and --model2");
        }
        if (a == o.target) throw ConfigError("column '" + a + "' is both target and predictor");
    }

    const csv::Table table = csv::read_file(o.input);
    forecast::TimeSeriesDataset data;
    data.y = table.numeric(o.target);
    std::vector<std::string> cols = o.model1;
    cols.insert(cols.end(), o.model2.begin(), o.model2.end());
    data.X = num::Matrix(data.y.size(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
        const auto col = table.numeric(cols[j]);
        for (std::size_t i = 0; i < col.size(); ++i) data.X(i, j) = col[i];
    }
    data.names = cols;

    forecast::NestedModelSpec spec;
    for (std::size_t j = 0; j < o.model1.size(); ++j) spec.idx1.push_back(j);
    for (std::size_t j = 0; j < o.model2.size(); ++j) spec.idx2_extra.push_back(o.model1.size() + j);
    spec.include_intercept = !o.no_intercept;
    spec.pi0 = o.pi0;

    const nesttest::TestResult r = nesttest::run_test(data, spec, cfg, source);

    json j;
    j["statistic"] = r.statistic;
    j["p_value"] = r.p_value;
    j["reject"] = r.reject;
    j["variant"] = std::string(nesttest::to_string(cfg.variant));
    j["lambda1"] = cfg.lambda1;
    j["lambda2"] = cfg.lambda2;
    j["tau0"] = cfg.tau0;
    j["pi0"] = o.pi0;
    j["alpha"] = cfg.alpha;
    j["sigma2"] = r.sigma2;
    j["lrv"] = std::string(lrv::to_string(cfg.lrv_method));
    j["bandwidth"] = r.bandwidth;
    j["T"] = data.T();
    j["k0"] = r.k0;
    j["P"] = r.P;

    std::string text;
    if (o.format == "json") {
        text = j.dump(2) + "\n";
    } else {
        for (auto it = j.begin(); it != j.end(); ++it) {
            text += it.key() + " " + (it->is_string() ? it->get<std::string>() : it->dump()) + "\n";
        }
    }
    deliver(text, o.output, out);
    return kOk;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
    std::string config;
    int table = 0;
    std::optional<std::size_t> reps;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::string out_prefix = "nestcast_report";
    std::string layout;
    bool serial = false;
};

int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
    if (o.config.empty() == (o.table == 0)) throw ConfigError("simulate needs exactly one of --config or --table");
    mcsim::ExperimentGrid grid =
        o.table ? mcsim::grid_for_layout(o.table) : mcsim::parse_grid(slurp(o.config));
    if (o.reps) grid.n_reps = *o.reps;
    if (o.seed) grid.seed = *o.seed;
    if (const auto s = env_seed()) grid.seed = *s;
    if (o.workers) grid.workers = *o.workers;
    grid.validate();

    mcsim::Layout layout = o.table ? mcsim::Layout::paper_table(o.table) : mcsim::Layout::generic();
    if (!o.layout.empty()) layout = mcsim::layout_from_string(o.layout);

    err << "simulate: " << grid.cell_count() << " cells x " << grid.n_reps << " replications, seed "
        << grid.seed << "\n";
    const auto t0 = std::chrono::steady_clock::now();
    const mcsim::ExperimentReport report =
        o.serial ? mcsim::run_experiment_serial(grid) : mcsim::run_experiment(grid);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::size_t flagged = 0;
    for (const auto& c : report.cells) flagged += c.flagged ? 1 : 0;
    err << "simulate: finished in " << num(secs, 4) << " s";
    if (flagged) err << "; " << flagged << " cells flagged for exclusions >= 0.5%";
    err << "\n";

    const std::string csv_path = o.out_prefix + ".csv";
    const std::string json_path = o.out_prefix + ".json";
    write_file(csv_path, mcsim::emit_table(report, layout, mcsim::Format::csv));
    write_file(json_path, mcsim::emit_table(report, mcsim::Layout::generic(), mcsim::Format::json));
    out << mcsim::emit_table(report, layout, mcsim::Format::text);
    err << "simulate: wrote " << csv_path << " and " << json_path << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// power

struct PowerOptions {
    std::string psi;
    std::string gamma;
    double alpha = 0.10;
    std::string variant = "s0";
    double lambda1 = 1.0;
    double lambda2 = 0.9;
    double tau0 = 0.8;
    double pi0 = 0.25;
    double sigma = 1.0;
    double q = 1.0;
    std::string output;
};

int cmd_power(const PowerOptions& o, std::ostream& out) {
    if (o.psi.empty() == o.gamma.empty()) throw ConfigError("power needs exactly one of --psi or --gamma");
    if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw ConfigError("--alpha must lie in (0,1)");
    std::ostringstream s;
    if (!o.psi.empty()) {
        s << "psi,alpf,alpf_adj\n";
        for (double p : parse_grid_values(o.psi, "--psi")) {
            s << num(p, 10) << ',' << num(power::alpf(p, o.alpha, false), 10) << ','
              << num(power::alpf(p, o.alpha, true), 10) << '\n';
        }
    } else {
        const nesttest::Variant v = nesttest::variant_from_string(o.variant);
        if (!nesttest::is_point_variant(v) && !nesttest::is_average_variant(v)) {
            throw ConfigError("--variant must be a segment statistic (s0, sbar, s0_adj, sbar_adj)");
        }
        if (!(o.q > 0.0)) throw ConfigError("--q must be positive");
        s << "gamma,psi,alpf,alpf_adj\n";
        for (double g : parse_grid_values(o.gamma, "--gamma")) {
            power::StationaryPowerInputs in;
            in.gamma = {g};
            in.Q = num::Matrix{{o.q}};
            in.p1 = 0;
            in.sigma = o.sigma;
            in.pi0 = o.pi0;
            const double psi = nesttest::is_point_variant(v) ? power::noncentrality_psi0(in, o.lambda1, o.lambda2)
                                                             : power::noncentrality_psibar(in, o.tau0, o.lambda2);
            s << num(g, 10) << ',' << num(psi, 10) << ',' << num(power::alpf(psi, o.alpha, false), 10) << ','
              << num(power::alpf(psi, o.alpha, true), 10) << '\n';
        }
    }
    deliver(s.str(), o.output, out);
    return kOk;
}

// ---------------------------------------------------------------------------
// vcalc

struct VcalcOptions {
    double tau0 = 0.8;
    double lambda1 = 1.0;
    double lambda2 = 0.9;
    std::optional<double> are_threshold;
    std::string format = "text";
};

int cmd_vcalc(const VcalcOptions& o, bool only_threshold, std::ostream& out) {
    if (o.format != "text" && o.format != "json") throw ConfigError("--format must be text or json for vcalc");
    std::vector<std::pair<std::string, double>> rows;
    if (o.are_threshold) rows.emplace_back("are_threshold", power::are_threshold(*o.are_threshold));
    if (!only_threshold) {
        if (o.lambda1 == o.lambda2) throw ConfigError("variance degeneracy: lambda1 == lambda2");
        rows.emplace_back("v0", nesttest::v0(o.lambda1, o.lambda2));
        rows.emplace_back("vbar", nesttest::vbar(o.tau0, o.lambda2));
        rows.emplace_back("optimal_lambda2", power::optimal_lambda2(o.tau0));
        rows.emplace_back("are", power::are(o.lambda1, o.lambda2, o.tau0));
        if (!o.are_threshold && o.tau0 > 0.0) rows.emplace_back("are_threshold", power::are_threshold(o.tau0));
    }
    if (o.format == "json") {
        json j;
        if (!only_threshold) {
            j["lambda1"] = o.lambda1;
            j["lambda2"] = o.lambda2;
            j["tau0"] = o.tau0;
        }
        for (const auto& [k, v] : rows) j[k] = v;
        out << j.dump(2) << "\n";
    } else {
        for (const auto& [k, v] : rows) out << k << " " << num(v) << "\n";
    }
    return kOk;
}

int fail(std::ostream& err, const char* kind, const std::string& what, int code) {
    std::string msg = what;
    for (char& c : msg) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    err << "error: " << kind << ": " << msg << "\n";
    return code;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Out-of-sample predictive accuracy tests for nested forecasting models", "nestcast"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Print help for every subcommand");

    // test
    TestOptions to;
    auto* test = app.add_subcommand(
        "test",
        "Test a nested model pair on a CSV time series.  Row t holds y_t and the predictors x_t; "
        "y_t is forecast from x_{t-1} with recursively re-estimated OLS.  Prints a JSON report.");
    test->add_option("-i,--input", to.input, "CSV file with a header row")->required();
    test->add_option("--target", to.target, "Column holding the forecast target")->required();
    test->add_option("--model1", to.model1, "Comma-separated predictor columns of the small model (may be empty)")
        ->delimiter(',');
    test->add_option("--model2", to.model2, "Comma-separated extra predictor columns of the large model")
        ->delimiter(',')
        ->required();
    test->add_flag("--no-intercept", to.no_intercept, "Fit both models without a constant");
    test->add_option("--variant", to.variant, "Statistic: s0, sbar, s0_adj, sbar_adj, dm or cw");
    test->add_option("--lambda1", to.lambda1, "Small-model segment fraction (point statistics)");
    test->add_option("--lambda2", to.lambda2, "Large-model segment fraction");
    test->add_option("--tau0", to.tau0, "Lower end of the averaging range (average statistics)");
    test->add_option("--pi0", to.pi0, "Fraction of the sample before the first forecast origin");
    test->add_option("--alpha", to.alpha, "Nominal level of the one-sided test");
    test->add_option("--lrv", to.lrv, "Long-run variance estimator: hom or nw");
    test->add_option("--nw-bandwidth", to.nw_bandwidth,
                     "Bartlett bandwidth (default: floor(4 (n/100)^(2/9)))");
    test->add_option("--eta-source", to.eta_source,
                     "Residuals feeding the variance estimate: full (one full-sample fit) or recursive");
    test->add_option("-o,--output", to.output, "Write the report here instead of standard output");
    test->add_option("--format", to.format, "json or text");

    // simulate
    SimulateOptions so;
    auto* sim = app.add_subcommand(
        "simulate",
        "Run a Monte Carlo size/power experiment.  Writes <out>.csv and <out>.json and prints a table.  "
        "NESTCAST_SEED, when set, overrides --seed and the config seed.");
    sim->add_option("-c,--config", so.config, "Experiment grid (JSON)");
    sim->add_option("--table", so.table, "Use the grid and layout of published table N (1..26)")
        ->check(CLI::Range(1, 26));
    sim->add_option("--reps", so.reps, "Replications per cell (overrides the config)");
    sim->add_option("--seed", so.seed, "Master seed (overrides the config)");
    sim->add_option("--workers", so.workers, "OpenMP threads (0 = runtime default)");
    sim->add_option("--out", so.out_prefix, "Output path prefix");
    sim->add_option("--layout", so.layout, "generic or paper_table_N (default: generic, or the --table layout)");
    sim->add_flag("--serial", so.serial, "Use the single-threaded reference implementation");

    // power
    PowerOptions po;
    auto* pow = app.add_subcommand(
        "power",
        "Print asymptotic local power curves as CSV, either over noncentralities (--psi) or over local "
        "coefficients of one extra stationary predictor (--gamma).  Grids are 'a,b,c' or 'start:stop:count'.");
    pow->add_option("--psi", po.psi, "Noncentrality grid");
    pow->add_option("--gamma", po.gamma, "Local coefficient grid");
    pow->add_option("--alpha", po.alpha, "Nominal level");
    pow->add_option("--variant", po.variant, "Statistic family for --gamma: s0 or sbar (adjusted forms accepted)");
    pow->add_option("--lambda1", po.lambda1, "Small-model segment fraction (point statistics)");
    pow->add_option("--lambda2", po.lambda2, "Large-model segment fraction");
    pow->add_option("--tau0", po.tau0, "Lower end of the averaging range (average statistics)");
    pow->add_option("--pi0", po.pi0, "Fraction of the sample before the first forecast origin");
    pow->add_option("--sigma", po.sigma, "Long-run standard deviation of the squared errors");
    pow->add_option("--q", po.q, "Second moment of the extra predictor");
    pow->add_option("-o,--output", po.output, "Write the CSV here instead of standard output");

    // vcalc
    VcalcOptions vo;
    auto* vcalc = app.add_subcommand(
        "vcalc", "Print null variances v0 and vbar, the efficiency ratio, and the break-even lambda2.");
    auto* opt_tau = vcalc->add_option("--tau0", vo.tau0, "Lower end of the averaging range");
    auto* opt_l1 = vcalc->add_option("--lambda1", vo.lambda1, "Small-model segment fraction");
    auto* opt_l2 = vcalc->add_option("--lambda2", vo.lambda2, "Large-model segment fraction");
    vcalc->add_option("--are-threshold", vo.are_threshold,
                      "Print only the lambda2 at which the point and average statistics are equally efficient "
                      "for this tau0 (unless other flags are also given)");
    vcalc->add_option("--format", vo.format, "text or json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        return fail(err, "usage", e.what(), kUserError);
    }

    try {
        if (test->parsed()) return cmd_test(to, out);
        if (sim->parsed()) return cmd_simulate(so, out, err);
        if (pow->parsed()) return cmd_power(po, out);
        if (vcalc->parsed()) {
            const bool only = vo.are_threshold && opt_tau->count() == 0 && opt_l1->count() == 0 &&
                              opt_l2->count() == 0;
            return cmd_vcalc(vo, only, out);
        }
        return fail(err, "usage", "no subcommand", kUserError);
    } catch (const DegeneracyError& e) {
        return fail(err, "degeneracy", e.what(), kDegenerate);
    } catch (const SingularityError& e) {
        return fail(err, "collinearity", e.what(), kUserError);
    } catch (const ConfigError& e) {
        return fail(err, "config", e.what(), kUserError);
    } catch (const DomainError& e) {
        return fail(err, "domain", e.what(), kUserError);
    } catch (const IndexError& e) {
        return fail(err, "index", e.what(), kUserError);
    } catch (const Error& e) {
        return fail(err, "internal", e.what(), kInternal);
    } catch (const std::exception& e) {
        return fail(err, "internal", e.what(), kInternal);
    }
}

}  // namespace nestcast::cli

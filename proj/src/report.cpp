#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nestcast/errors.hpp"
#include "nestcast/mcsim.hpp"

namespace nestcast::mcsim {

using nlohmann::json;
using nesttest::Variant;

namespace {

const std::vector<double> kL7{0.5, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95};
const std::vector<double> kL8{0.5, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0};
const std::vector<double> kL8b{0.5, 0.7, 0.75, 0.8, 0.85, 0.9, 0.925, 0.95};
const std::vector<double> kL9{0.5, 0.7, 0.75, 0.8, 0.85, 0.9, 0.925, 0.95, 1.0};
const std::vector<double> kPowerRows4{0.8, 0.85, 0.9, 0.95};
const std::vector<double> kPowerRows5{0.8, 0.85, 0.9, 0.95, 1.0};
const std::vector<double> kDgp1Beta{0.0, -1.5, -1.75, -2.0, -2.25, -2.5, -3.0, -3.5};
const std::vector<double> kPhi{0.75, 0.95, 0.98};
const std::vector<std::size_t> kTRows{250, 500, 1000};
const std::vector<double> kDgp2PowerBeta{0.15, 0.15, -0.15};

struct Mode {
    ErrorMode error;
    lrv::Method lrv;
    const char* label;
};

const Mode kHom{ErrorMode::gaussian, lrv::Method::homoskedastic, "Conditional homoskedasticity"};
const Mode kArchRaw{ErrorMode::arch, lrv::Method::homoskedastic, "Conditional heteroskedasticity (uncorrected)"};
const Mode kArchNw{ErrorMode::arch, lrv::Method::newey_west, "Conditional heteroskedasticity (Newey-West)"};

// Structure of one published table.
struct TableDef {
    int number = 0;
    DgpKind dgp = DgpKind::dgp1;
    bool power = false;
    bool point = true;  // s0 family, else sbar family
    double tau0 = 0.0;
    std::vector<double> lambda2;  // columns (size/dgp2) or rows (dgp1 power)
    std::vector<Mode> modes;
};

TableDef table_def(int n) {
    TableDef d;
    d.number = n;
    if (n >= 1 && n <= 12) {
        d.dgp = DgpKind::dgp1;
        const int family = (n - 1) / 3;  // 0: s0, 1: tau0=0, 2: tau0=0.5, 3: tau0=0.8
        const int mode = (n - 1) % 3;
        d.point = family == 0;
        d.tau0 = family == 2 ? 0.5 : (family == 3 ? 0.8 : 0.0);
        d.lambda2 = family == 0 ? kL7 : kL8;
        d.modes = {mode == 0 ? kHom : (mode == 1 ? kArchRaw : kArchNw)};
    } else if (n >= 13 && n <= 18) {
        d.dgp = DgpKind::dgp1;
        d.power = true;
        const int family = (n - 13) / 2;  // 0: s0, 1: tau0=0.5, 2: tau0=0.8
        d.point = family == 0;
        d.tau0 = family == 1 ? 0.5 : (family == 2 ? 0.8 : 0.0);
        d.lambda2 = family == 0 ? kPowerRows4 : kPowerRows5;
        d.modes = {(n - 13) % 2 == 0 ? kHom : kArchNw};
    } else if (n >= 19 && n <= 26) {
        d.dgp = DgpKind::dgp2;
        d.power = n >= 23;
        const int family = (n - 19) % 4;  // 0: s0, 1: tau0=0, 2: tau0=0.5, 3: tau0=0.8
        d.point = family == 0;
        d.tau0 = family == 2 ? 0.5 : (family == 3 ? 0.8 : 0.0);
        static const std::vector<double>* size_cols[] = {&kL8b, &kL8, &kL8, &kL9};
        static const std::vector<double>* power_cols[] = {&kL7, &kL9, &kL8, &kL8};
        d.lambda2 = d.power ? *power_cols[family] : *size_cols[family];
        d.modes = {kHom, kArchRaw, kArchNw};
    } else {
        throw ConfigError("unknown table layout " + std::to_string(n) + " (expected 1..26)");
    }
    return d;
}

VariantSpec segment_variant(const TableDef& d, bool adjusted, double lambda2) {
    VariantSpec v;
    if (d.point) {
        v.variant = adjusted ? Variant::s0_adj : Variant::s0;
        v.lambda1 = 1.0;
        v.tau0 = 0.0;
    } else {
        v.variant = adjusted ? Variant::sbar_adj : Variant::sbar;
        v.lambda1 = 0.0;
        v.tau0 = d.tau0;
    }
    v.lambda2 = lambda2;
    return v;
}

VariantSpec baseline_variant(bool adjusted) {
    VariantSpec v;
    v.variant = adjusted ? Variant::cw : Variant::dm;
    v.lambda1 = 0.0;
    v.lambda2 = 0.0;
    v.tau0 = 0.0;
    return v;
}

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

std::string statistic_label(const TableDef& d, bool adjusted) {
    std::string s = d.point ? "S0" : "Sbar";
    if (adjusted) s += "_adj";
    s += d.point ? "(lambda1=1)" : "(tau0=" + fmt("%.1f", d.tau0) + ")";
    return s;
}

struct TableDoc {
    std::string title;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

std::string lookup(const ExperimentReport& rep, const CellKey& key) {
    const CellResult* c = rep.find(key);
    if (!c || c->n_valid == 0) return "NA";
    return fmt("%.3f", c->frequency());
}

TableDoc build_table(const ExperimentReport& rep, const TableDef& d) {
    TableDoc doc;
    doc.title = "Table " + std::to_string(d.number) + ": " + std::string(to_string(d.dgp)) +
                (d.power ? " empirical power" : " empirical size");
    CellKey key;
    key.dgp = d.dgp;

    if (d.dgp == DgpKind::dgp1 && d.power) {
        doc.header = {"block", "statistic", "row"};
        for (double b : kDgp1Beta) doc.header.push_back("beta=" + fmt("%.3f", b));
        key.T = 500;
        key.error_mode = d.modes[0].error;
        key.lrv = d.modes[0].lrv;
        for (bool adjusted : {false, true}) {
            for (double phi : kPhi) {
                key.phi1 = phi;
                const std::string block = "phi1=" + fmt("%.2f", phi);
                for (double l2 : d.lambda2) {
                    std::vector<std::string> row{block, statistic_label(d, adjusted), "lambda2=" + fmt("%.3f", l2)};
                    key.variant = segment_variant(d, adjusted, l2);
                    for (double b : kDgp1Beta) {
                        key.beta = {b};
                        row.push_back(lookup(rep, key));
                    }
                    doc.rows.push_back(std::move(row));
                }
                std::vector<std::string> row{block, adjusted ? "CW" : "DM", adjusted ? "CW" : "DM"};
                key.variant = baseline_variant(adjusted);
                for (double b : kDgp1Beta) {
                    key.beta = {b};
                    row.push_back(lookup(rep, key));
                }
                doc.rows.push_back(std::move(row));
            }
        }
        return doc;
    }

    doc.header = {"block", "statistic", "row"};
    for (double l2 : d.lambda2) doc.header.push_back("lambda2=" + fmt("%.3f", l2));
    doc.header.push_back("baseline");
    doc.header.push_back("baseline_value");

    struct Block {
        std::string label;
        double phi;
        Mode mode;
    };
    std::vector<Block> blocks;
    if (d.dgp == DgpKind::dgp1) {
        for (double phi : kPhi) blocks.push_back({"phi1=" + fmt("%.2f", phi), phi, d.modes[0]});
        key.beta = {0.0};
    } else {
        for (const Mode& m : d.modes) blocks.push_back({m.label, 0.0, m});
        key.beta = d.power ? kDgp2PowerBeta : std::vector<double>{0.0, 0.0, 0.0};
    }
    for (const Block& b : blocks) {
        key.phi1 = b.phi;
        key.error_mode = b.mode.error;
        key.lrv = b.mode.lrv;
        for (bool adjusted : {false, true}) {
            for (std::size_t T : kTRows) {
                key.T = T;
                std::vector<std::string> row{b.label, statistic_label(d, adjusted), "T=" + std::to_string(T)};
                for (double l2 : d.lambda2) {
                    key.variant = segment_variant(d, adjusted, l2);
                    row.push_back(lookup(rep, key));
                }
                key.variant = baseline_variant(adjusted);
                row.push_back(adjusted ? "CW" : "DM");
                row.push_back(lookup(rep, key));
                doc.rows.push_back(std::move(row));
            }
        }
    }
    return doc;
}

std::string na_or(bool applicable, const std::string& s) { return applicable ? s : "-"; }

std::string beta_string(const std::vector<double>& b) {
    std::string s;
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (i) s += ";";
        s += fmt("%.6g", b[i]);
    }
    return s;
}

TableDoc build_generic(const ExperimentReport& rep) {
    TableDoc doc;
    doc.title = "Experiment report";
    doc.header = {"dgp", "variant", "lambda1", "lambda2", "tau0", "T", "phi1", "beta", "error_mode", "lrv",
                  "n_valid", "n_excluded", "rejections", "frequency", "mc_se", "flagged"};
    for (const auto& c : rep.cells) {
        const Variant v = c.key.variant.variant;
        const bool seg = v != Variant::dm && v != Variant::cw;
        doc.rows.push_back({std::string(to_string(c.key.dgp)),
                            std::string(nesttest::to_string(v)),
                            na_or(nesttest::is_point_variant(v), fmt("%.3f", c.key.variant.lambda1)),
                            na_or(seg, fmt("%.3f", c.key.variant.lambda2)),
                            na_or(nesttest::is_average_variant(v), fmt("%.3f", c.key.variant.tau0)),
                            std::to_string(c.key.T),
                            na_or(c.key.dgp == DgpKind::dgp1, fmt("%.3f", c.key.phi1)),
                            beta_string(c.key.beta),
                            std::string(to_string(c.key.error_mode)),
                            std::string(lrv::to_string(c.key.lrv)),
                            std::to_string(c.n_valid),
                            std::to_string(c.n_excluded),
                            std::to_string(c.rejections),
                            c.n_valid ? fmt("%.6f", c.frequency()) : "NA",
                            c.n_valid ? fmt("%.6f", c.mc_se()) : "NA",
                            c.flagged ? "1" : "0"});
    }
    return doc;
}

std::string render_csv(const TableDoc& doc) {
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << ',';
            const bool quote = cells[i].find_first_of(",\"") != std::string::npos;
            if (quote) {
                out << '"';
                for (char ch : cells[i]) out << (ch == '"' ? "\"\"" : std::string(1, ch));
                out << '"';
            } else {
                out << cells[i];
            }
        }
        out << '\n';
    };
    line(doc.header);
    for (const auto& r : doc.rows) line(r);
    return out.str();
}

std::string render_text(const TableDoc& doc) {
    std::vector<std::size_t> width(doc.header.size(), 0);
    for (std::size_t i = 0; i < doc.header.size(); ++i) width[i] = doc.header[i].size();
    for (const auto& r : doc.rows)
        for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) width[i] = std::max(width[i], r[i].size());
    std::ostringstream out;
    out << doc.title << '\n';
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << "  ";
            out << cells[i] << std::string(width[i] - cells[i].size(), ' ');
        }
        out << '\n';
    };
    line(doc.header);
    std::size_t total = 0;
    for (std::size_t w : width) total += w + 2;
    out << std::string(total > 2 ? total - 2 : 0, '-') << '\n';
    for (const auto& r : doc.rows) line(r);
    return out.str();
}

json cell_to_json(const CellResult& c) {
    json j;
    j["dgp"] = to_string(c.key.dgp);
    j["variant"] = nesttest::to_string(c.key.variant.variant);
    j["lambda1"] = c.key.variant.lambda1;
    j["lambda2"] = c.key.variant.lambda2;
    j["tau0"] = c.key.variant.tau0;
    j["T"] = c.key.T;
    j["phi1"] = c.key.phi1;
    j["beta"] = c.key.beta;
    j["error_mode"] = to_string(c.key.error_mode);
    j["lrv"] = lrv::to_string(c.key.lrv);
    j["rejections"] = c.rejections;
    j["n_valid"] = c.n_valid;
    j["n_excluded"] = c.n_excluded;
    j["flagged"] = c.flagged;
    j["frequency"] = c.n_valid ? json(c.frequency()) : json(nullptr);
    j["mc_se"] = c.n_valid ? json(c.mc_se()) : json(nullptr);
    return j;
}

std::string report_json(const ExperimentReport& rep) {
    json j;
    j["dgp"] = to_string(rep.dgp);
    j["n_reps"] = rep.n_reps;
    j["seed"] = rep.seed;
    j["pi0"] = rep.pi0;
    j["alpha"] = rep.alpha;
    j["elapsed_seconds"] = rep.elapsed_seconds;
    json cells = json::array();
    for (const auto& c : rep.cells) cells.push_back(cell_to_json(c));
    j["cells"] = cells;
    return j.dump(2) + "\n";
}

std::string table_json(const TableDoc& doc, int number) {
    json j;
    j["table"] = number;
    j["title"] = doc.title;
    j["header"] = doc.header;
    j["rows"] = doc.rows;
    return j.dump(2) + "\n";
}

}  // namespace

Format format_from_string(std::string_view s) {
    if (s == "csv") return Format::csv;
    if (s == "json") return Format::json;
    if (s == "text" || s == "txt") return Format::text;
    throw ConfigError("unknown format '" + std::string(s) + "' (expected csv, json or text)");
}

Layout Layout::paper_table(int n) {
    table_def(n);  // validates
    return {n};
}

Layout layout_from_string(std::string_view s) {
    if (s == "generic") return Layout::generic();
    std::string_view digits = s;
    for (std::string_view prefix : {"paper_table_", "table_", "table"}) {
        if (digits.substr(0, prefix.size()) == prefix) {
            digits.remove_prefix(prefix.size());
            break;
        }
    }
    int n = 0;
    if (digits.empty() || digits.size() > 2 ||
        !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        throw ConfigError("unknown layout '" + std::string(s) + "' (expected generic or paper_table_N)");
    }
    for (char c : digits) n = n * 10 + (c - '0');
    return Layout::paper_table(n);
}

std::string emit_table(const ExperimentReport& report, Layout layout, Format format) {
    if (layout.table == 0) {
        if (format == Format::json) return report_json(report);
        const TableDoc doc = build_generic(report);
        return format == Format::csv ? render_csv(doc) : render_text(doc);
    }
    const TableDoc doc = build_table(report, table_def(layout.table));
    switch (format) {
        case Format::csv: return render_csv(doc);
        case Format::json: return table_json(doc, layout.table);
        case Format::text: return render_text(doc);
    }
    return {};
}

ExperimentReport parse_report(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text.begin(), json_text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("report: invalid JSON: ") + e.what());
    }
    try {
        ExperimentReport rep;
        rep.dgp = dgp_from_string(j.at("dgp").get<std::string>());
        rep.n_reps = j.at("n_reps").get<std::size_t>();
        rep.seed = j.at("seed").get<std::uint64_t>();
        rep.pi0 = j.at("pi0").get<double>();
        rep.alpha = j.at("alpha").get<double>();
        rep.elapsed_seconds = j.value("elapsed_seconds", 0.0);
        for (const auto& c : j.at("cells")) {
            CellResult r;
            r.key.dgp = dgp_from_string(c.at("dgp").get<std::string>());
            r.key.variant.variant = nesttest::variant_from_string(c.at("variant").get<std::string>());
            r.key.variant.lambda1 = c.at("lambda1").get<double>();
            r.key.variant.lambda2 = c.at("lambda2").get<double>();
            r.key.variant.tau0 = c.at("tau0").get<double>();
            r.key.T = c.at("T").get<std::size_t>();
            r.key.phi1 = c.at("phi1").get<double>();
            r.key.beta = c.at("beta").get<std::vector<double>>();
            r.key.error_mode = error_mode_from_string(c.at("error_mode").get<std::string>());
            r.key.lrv = lrv::method_from_string(c.at("lrv").get<std::string>());
            r.rejections = c.at("rejections").get<std::size_t>();
            r.n_valid = c.at("n_valid").get<std::size_t>();
            r.n_excluded = c.at("n_excluded").get<std::size_t>();
            r.flagged = c.at("flagged").get<bool>();
            rep.cells.push_back(std::move(r));
        }
        return rep;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("report: ") + e.what());
    }
}

ExperimentGrid grid_for_layout(int table, std::size_t n_reps, std::uint64_t seed) {
    const TableDef d = table_def(table);
    ExperimentGrid g;
    g.dgp = d.dgp;
    g.n_reps = n_reps;
    g.seed = seed;
    g.error_modes.clear();
    g.lrv.clear();
    for (const Mode& m : d.modes) {
        if (std::find(g.error_modes.begin(), g.error_modes.end(), m.error) == g.error_modes.end()) {
            g.error_modes.push_back(m.error);
        }
        if (std::find(g.lrv.begin(), g.lrv.end(), m.lrv) == g.lrv.end()) g.lrv.push_back(m.lrv);
    }
    if (d.dgp == DgpKind::dgp1) {
        g.phi1 = kPhi;
        if (d.power) {
            g.T = {500};
            g.beta.clear();
            for (double b : kDgp1Beta) g.beta.push_back({b});
        } else {
            g.T = kTRows;
            g.beta = {{0.0}};
        }
    } else {
        g.T = kTRows;
        g.beta = {d.power ? kDgp2PowerBeta : std::vector<double>{0.0, 0.0, 0.0}};
    }
    g.variants.clear();
    for (bool adjusted : {false, true}) {
        for (double l2 : d.lambda2) g.variants.push_back(segment_variant(d, adjusted, l2));
        g.variants.push_back(baseline_variant(adjusted));
    }
    return g;
}

}  // namespace nestcast::mcsim

#include "nestcast/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nestcast/errors.hpp"

namespace nestcast::csv {

namespace {

std::string where(const std::string& source, std::size_t line, std::size_t col) {
    return source + ":" + std::to_string(line) + ":" + std::to_string(col);
}

}  // namespace

bool parse_double(std::string_view field, double& out) noexcept {
    // Surrounding blanks are tolerated; a leading '+' is not accepted by
    // from_chars, so skip it by hand.
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    if (field.empty()) return false;
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size()) return false;
    if (!std::isfinite(v)) return false;
    out = v;
    return true;
}

Table parse(std::string_view text, std::string source) {
    Table t;
    t.source = std::move(source);
    if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

    std::vector<std::string> record;
    std::string field;
    std::size_t line = 1;
    std::size_t record_line = 1;
    bool in_quotes = false;
    bool field_started = false;
    bool have_header = false;

    auto finish_record = [&]() {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
        const bool blank = record.size() == 1 && record[0].empty();
        if (!blank) {
            if (!have_header) {
                t.header = std::move(record);
                have_header = true;
                for (std::size_t i = 0; i < t.header.size(); ++i) {
                    if (t.header[i].empty()) {
                        throw ConfigError(where(t.source, record_line, i + 1) + ": empty header name");
                    }
                    for (std::size_t j = 0; j < i; ++j) {
                        if (t.header[j] == t.header[i]) {
                            throw ConfigError(where(t.source, record_line, i + 1) + ": duplicate header name '" +
                                              t.header[i] + "'");
                        }
                    }
                }
            } else {
                if (record.size() != t.header.size()) {
                    throw ConfigError(where(t.source, record_line, 1) + ": expected " +
                                      std::to_string(t.header.size()) + " fields, found " +
                                      std::to_string(record.size()));
                }
                t.rows.push_back(std::move(record));
                t.line_of_row.push_back(record_line);
            }
        }
        record.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (field_started) {
                    throw ConfigError(where(t.source, line, record.size() + 1) + ": stray quote inside field");
                }
                in_quotes = true;
                field_started = true;
                break;
            case ',':
                record.push_back(std::move(field));
                field.clear();
                field_started = false;
                break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') break;
                [[fallthrough]];
            case '\n':
                finish_record();
                ++line;
                record_line = line;
                break;
            default:
                field += c;
                field_started = true;
        }
    }
    if (in_quotes) throw ConfigError(where(t.source, record_line, record.size() + 1) + ": unterminated quote");
    if (!record.empty() || !field.empty()) finish_record();
    if (!have_header) throw ConfigError(t.source + ":1:1: missing header row");
    return t;
}

Table read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw ConfigError(path + ": read error");
    return parse(buf.str(), path);
}

std::size_t Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw ConfigError(source + ": no column named '" + std::string(name) + "'");
}

std::vector<double> Table::numeric(std::string_view name) const {
    const std::size_t col = column(name);
    std::vector<double> out(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::string& cell = rows[r][col];
        if (!parse_double(cell, out[r])) {
            const std::string what = cell.empty() ? "missing value" : "non-numeric value '" + cell + "'";
            throw ConfigError(where(source, line_of_row[r], col + 1) + ": " + what + " in column '" +
                              std::string(name) + "'");
        }
    }
    return out;
}

}  // namespace nestcast::csv

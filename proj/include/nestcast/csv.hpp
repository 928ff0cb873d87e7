#ifndef NESTCAST_CSV_HPP
#define NESTCAST_CSV_HPP

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace nestcast::csv {

/// Raw comma-separated table: a header row followed by data rows, all kept as
/// text.  Fields may be double-quoted; quotes inside quoted fields are
/// doubled.  A UTF-8 byte-order mark and CRLF line endings are accepted.
struct Table {
    std::string source;  ///< file name used in diagnostics
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_of_row;  ///< 1-based physical line of each row

    /// Position of a header name; throws ConfigError if absent.
    std::size_t column(std::string_view name) const;

    /// Strictly parsed numeric column.  Empty, non-numeric, NaN and infinite
    /// cells raise ConfigError with a file:line:column diagnostic.
    std::vector<double> numeric(std::string_view name) const;
};

/// Throws ConfigError on structural problems (missing header, ragged rows,
/// unterminated quotes, duplicate header names).
Table parse(std::string_view text, std::string source = "<input>");

/// Reads and parses a file; an unreadable file raises ConfigError.
Table read_file(const std::string& path);

/// Parses one decimal number with the C locale.  Returns false if the whole
/// field is not consumed or the value is not finite.
bool parse_double(std::string_view field, double& out) noexcept;

}  // namespace nestcast::csv

#endif  // NESTCAST_CSV_HPP

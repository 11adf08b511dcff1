#pragma once

#include <string>
#include <vector>

namespace spfkit::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index for a header name, or -1.
    int column(const std::string& name) const;
};

/// Reads a comma-separated UTF-8 file with a header row. Handles quoted
/// fields, embedded quotes (""), CRLF line endings, and a leading BOM.
Table read_file(const std::string& path);

/// Parses CSV text (same dialect as read_file).
Table parse(const std::string& text);

/// Quotes a field if it contains a comma, quote, or newline.
std::string escape(const std::string& field);

}  // namespace spfkit::csv

#pragma once

#include <string>
#include <vector>

namespace equicert {

// Doubles are serialized with 17 significant digits so a write/read
// round-trip is bit-exact.
std::string fmt_double(double v);

double parse_double(const std::string& s);
long parse_long(const std::string& s);

// Write-then-rename so a crashed run never leaves a half-written file
// behind.  Throws IoError.
void write_text_atomic(const std::string& path, const std::string& content);

// Minimal CSV: fields never contain commas, quotes or newlines here, so no
// quoting layer.  Rows are built in memory and flushed atomically.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    void add_row(std::vector<std::string> row);  // must match header width
    const std::vector<std::string>& header() const { return header_; }
    const std::vector<std::vector<std::string>>& rows() const { return rows_; }

    std::string to_text() const;
    void write(const std::string& path) const;

    static CsvTable read(const std::string& path);

private:
    CsvTable() = default;
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

}  // namespace equicert

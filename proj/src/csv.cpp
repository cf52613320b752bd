#include "equicert/csv.hpp"

#include "equicert/common.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

namespace equicert {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& s) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    // ERANGE with a huge result is a genuine overflow; ERANGE on subnormal
    // underflow still yields the nearest representable value, keep it.
    if (end == s.c_str() || *end != '\0' ||
        (errno == ERANGE && (v == HUGE_VAL || v == -HUGE_VAL)))
        throw IoError("bad numeric field: '" + s + "'");
    return v;
}

long parse_long(const std::string& s) {
    errno = 0;
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE)
        throw IoError("bad integer field: '" + s + "'");
    return v;
}

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for write: " + tmp);
        out << content;
        out.flush();
        if (!out) throw IoError("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw IoError("rename failed: " + tmp + " -> " + path + " (" + std::strerror(errno) + ")");
    }
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
    if (header_.empty()) throw IoError("csv: empty header");
}

void CsvTable::add_row(std::vector<std::string> row) {
    if (row.size() != header_.size())
        throw IoError("csv: row width " + std::to_string(row.size()) + " != header width " +
                      std::to_string(header_.size()));
    rows_.push_back(std::move(row));
}

std::string CsvTable::to_text() const {
    std::ostringstream out;
    auto emit = [&out](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out << ',';
            out << fields[i];
        }
        out << '\n';
    };
    emit(header_);
    for (const auto& r : rows_) emit(r);
    return out.str();
}

void CsvTable::write(const std::string& path) const {
    write_text_atomic(path, to_text());
}

static std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

CsvTable CsvTable::read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    CsvTable t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_line(line);
        if (first) {
            t.header_ = std::move(fields);
            first = false;
        } else {
            if (fields.size() != t.header_.size())
                throw IoError("csv: ragged row in " + path);
            t.rows_.push_back(std::move(fields));
        }
    }
    if (first) throw IoError("csv: empty file: " + path);
    return t;
}

}  // namespace equicert

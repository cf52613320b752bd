#pragma once

#include <map>
#include <string>
#include <vector>

namespace equicert {

// Flat key=value run configuration.  Keys live in a fixed schema (unknown
// keys are rejected so typos fail loudly); every command emits the resolved
// view — all schema keys with their effective values — next to its outputs,
// and that file parses back into an identical configuration.
class RunConfig {
public:
    RunConfig();  // schema defaults

    static RunConfig parse_file(const std::string& path);
    static RunConfig parse_text(const std::string& text, const std::string& origin = "<text>");

    bool is_set(const std::string& key) const;  // explicitly set (not a default)

    const std::string& get_raw(const std::string& key) const;
    std::string get_str(const std::string& key) const;
    double get_double(const std::string& key) const;
    long get_long(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::uint64_t get_seed(const std::string& key) const;
    // Comma-separated list; empty value -> empty list.
    std::vector<double> get_list(const std::string& key) const;
    std::vector<long> get_long_list(const std::string& key) const;

    void set(const std::string& key, const std::string& value);  // schema-checked

    std::string resolved_text() const;

private:
    void check_key(const std::string& key) const;
    std::map<std::string, std::string> values_;  // full schema, defaults overlaid
    std::map<std::string, bool> explicit_;
};

}  // namespace equicert

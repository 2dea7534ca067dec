#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace percept {

/// Ordered key=value text, one pair per line. Used for manifests, sample
/// metadata and the model header.
class KeyValues {
public:
    static KeyValues parse(std::string_view text);

    void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }
    void set(const std::string& key, const char* value) { entries_[key] = value; }
    void set(const std::string& key, double value);
    void set(const std::string& key, std::int64_t value);
    void set(const std::string& key, std::uint64_t value);
    void set(const std::string& key, int value) { set(key, static_cast<std::int64_t>(value)); }

    bool has(const std::string& key) const { return entries_.contains(key); }
    const std::string& get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    std::int64_t get_int(const std::string& key) const;
    std::uint64_t get_uint(const std::string& key) const;

    std::string to_string() const;
    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
};

/// Shortest text that round-trips to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);

std::string join_doubles(const std::vector<double>& values, char sep = ',');
std::vector<double> split_doubles(std::string_view text, char sep = ',');
std::string join_uints(const std::vector<std::uint64_t>& values, char sep = ',');
std::vector<std::uint64_t> split_uints(std::string_view text, char sep = ',');

}  // namespace percept

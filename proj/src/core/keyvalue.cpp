#include "percept/core/keyvalue.hpp"

#include <charconv>
#include <stdexcept>
#include <system_error>

namespace percept {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename T>
T parse_integer(std::string_view s, const char* what) {
    s = trim(s);
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw std::invalid_argument(std::string("not ") + what + ": '" + std::string(s) + "'");
    return v;
}

template <typename T, typename Parse>
std::vector<T> split(std::string_view text, char sep, Parse parse) {
    std::vector<T> out;
    if (trim(text).empty()) return out;
    std::size_t start = 0;
    while (true) {
        const std::size_t end = text.find(sep, start);
        out.push_back(parse(text.substr(start, end == std::string_view::npos ? end : end - start)));
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return out;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw std::runtime_error("format_double failed");
    return std::string(buf, ptr);
}

double parse_double(std::string_view s) {
    s = trim(s);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw std::invalid_argument("not a number: '" + std::string(s) + "'");
    return v;
}

KeyValues KeyValues::parse(std::string_view text) {
    KeyValues kv;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const std::size_t nl = text.find('\n');
        std::string_view line = trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos || eq == 0)
            throw std::invalid_argument("line " + std::to_string(line_no) + ": expected key=value");
        kv.entries_[std::string(trim(line.substr(0, eq)))] = std::string(trim(line.substr(eq + 1)));
    }
    return kv;
}

void KeyValues::set(const std::string& key, double value) { entries_[key] = format_double(value); }
void KeyValues::set(const std::string& key, std::int64_t value) { entries_[key] = std::to_string(value); }
void KeyValues::set(const std::string& key, std::uint64_t value) { entries_[key] = std::to_string(value); }

const std::string& KeyValues::get(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw std::invalid_argument("missing key '" + key + "'");
    return it->second;
}

std::string KeyValues::get_or(const std::string& key, const std::string& fallback) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

double KeyValues::get_double(const std::string& key) const { return parse_double(get(key)); }
std::int64_t KeyValues::get_int(const std::string& key) const {
    return parse_integer<std::int64_t>(get(key), "an integer");
}
std::uint64_t KeyValues::get_uint(const std::string& key) const {
    return parse_integer<std::uint64_t>(get(key), "an unsigned integer");
}

std::string KeyValues::to_string() const {
    std::string out;
    for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
    return out;
}

std::string join_doubles(const std::vector<double>& values, char sep) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += sep;
        out += format_double(values[i]);
    }
    return out;
}

std::vector<double> split_doubles(std::string_view text, char sep) {
    return split<double>(text, sep, parse_double);
}

std::string join_uints(const std::vector<std::uint64_t>& values, char sep) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += sep;
        out += std::to_string(values[i]);
    }
    return out;
}

std::vector<std::uint64_t> split_uints(std::string_view text, char sep) {
    return split<std::uint64_t>(text, sep, [](std::string_view s) {
        return parse_integer<std::uint64_t>(s, "an unsigned integer");
    });
}

}  // namespace percept

#pragma once

/// \file config.hpp
/// Flat key = value configuration with [section] blocks:
///
///     D = 0.1
///     [bc]
///     beta1 = 1
///     [mu]
///     kind = bump
///     h = 1, -2, 0.5
///
/// '#' starts a comment. Numbers may be written as p/q (e.g. x0 = 2/3).
/// Every error carries the line it refers to.

#include "fkpp/error.hpp"

#include <cmath>
#include <cstdlib>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace fkpp {

class Config {
public:
    struct Entry {
        std::string value;
        int line = 0;
    };

    static Config parse(std::istream& is, std::string source = "<config>") {
        Config cfg;
        cfg.source_ = std::move(source);
        std::string raw;
        std::string section;
        int line = 0;
        while (std::getline(is, raw)) {
            ++line;
            std::string_view s = raw;
            if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
            s = trim(s);
            if (s.empty()) continue;
            if (s.front() == '[') {
                if (s.back() != ']' || s.size() < 3) throw cfg.error(line, "malformed section header");
                section = std::string(trim(s.substr(1, s.size() - 2)));
                continue;
            }
            const auto eq = s.find('=');
            if (eq == std::string_view::npos) throw cfg.error(line, "expected 'key = value'");
            const auto key = trim(s.substr(0, eq));
            if (key.empty()) throw cfg.error(line, "empty key");
            const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
            if (cfg.entries_.count(full)) throw cfg.error(line, "duplicate key '" + full + "'");
            cfg.entries_[full] = Entry{std::string(trim(s.substr(eq + 1))), line};
        }
        return cfg;
    }

    static Config parse_string(const std::string& text, std::string source = "<config>") {
        std::istringstream is(text);
        return parse(is, std::move(source));
    }

    static Config load(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw ConfigError(path + ": cannot open config file");
        return parse(is, path);
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    bool has_section(const std::string& section) const {
        const auto prefix = section + ".";
        for (const auto& [k, _] : entries_)
            if (k.rfind(prefix, 0) == 0) return true;
        return false;
    }
    const std::map<std::string, Entry>& entries() const noexcept { return entries_; }
    const std::string& source() const noexcept { return source_; }

    /// Overrides or adds a value (command-line flags); line 0 marks it.
    void set(const std::string& key, std::string value) { entries_[key] = Entry{std::move(value), 0}; }

    std::optional<std::string> get_string(const std::string& key) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        return it->second.value;
    }
    std::string require_string(const std::string& key) const {
        auto v = get_string(key);
        if (!v) throw missing(key);
        return *v;
    }

    std::optional<double> get_double(const std::string& key) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        const auto v = to_number(it->second.value);
        if (!v) throw error(it->second.line, "'" + key + "' is not a number: '" + it->second.value + "'");
        return v;
    }
    double get_double(const std::string& key, double fallback) const { return get_double(key).value_or(fallback); }
    double require_double(const std::string& key) const {
        auto v = get_double(key);
        if (!v) throw missing(key);
        return *v;
    }

    std::optional<std::int64_t> get_int(const std::string& key) const {
        const auto d = get_double(key);
        if (!d) return std::nullopt;
        if (std::floor(*d) != *d || std::abs(*d) > 9.0e15)
            throw error(line_of(key), "'" + key + "' must be an integer");
        return static_cast<std::int64_t>(*d);
    }
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const { return get_int(key).value_or(fallback); }

    std::optional<std::vector<double>> get_list(const std::string& key) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        std::vector<double> out;
        std::string_view rest = it->second.value;
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            const auto item = trim(rest.substr(0, comma));
            const auto v = to_number(item);
            if (!v) throw error(it->second.line, "'" + key + "' has a malformed entry '" + std::string(item) + "'");
            out.push_back(*v);
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
        return out;
    }

    int line_of(const std::string& key) const {
        const auto it = entries_.find(key);
        return it == entries_.end() ? 0 : it->second.line;
    }

    /// "source:line: message", or "source: message" for flag overrides.
    ConfigError error(int line, const std::string& message) const {
        if (line > 0) return ConfigError(source_ + ":" + std::to_string(line) + ": " + message);
        return ConfigError(source_ + ": " + message);
    }
    ConfigError error_at(const std::string& key, const std::string& message) const {
        return error(line_of(key), message);
    }

private:
    static std::string_view trim(std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
        return s;
    }

    static std::optional<double> to_number(std::string_view s) {
        s = trim(s);
        if (s.empty()) return std::nullopt;
        if (const auto slash = s.find('/'); slash != std::string_view::npos) {
            const auto num = to_number(s.substr(0, slash));
            const auto den = to_number(s.substr(slash + 1));
            if (!num || !den || *den == 0.0) return std::nullopt;
            return *num / *den;
        }
        // strtod needs a terminated buffer; std::from_chars for double is
        // available too but accepts a narrower syntax than users expect.
        const std::string buf(s);
        char* end = nullptr;
        const double v = std::strtod(buf.c_str(), &end);
        if (end != buf.c_str() + buf.size() || !std::isfinite(v)) return std::nullopt;
        return v;
    }

    ConfigError missing(const std::string& key) const {
        return ConfigError(source_ + ": missing required field '" + key + "'");
    }

    std::string source_;
    std::map<std::string, Entry> entries_;
};

} // namespace fkpp

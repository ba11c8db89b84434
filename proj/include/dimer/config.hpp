#pragma once

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dimer/errors.hpp"

namespace dimer {

// Flat `key = value` experiment configs. One assignment per line, `#` starts
// a comment, blank lines ignored. Every parse failure carries the 1-based
// line number so the CLI can point at the offending line.
class Config {
public:
    Config() = default;

    static Config parse_string(const std::string& text, const std::string& origin = "<string>") {
        Config cfg;
        cfg.origin_ = origin;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            cfg.parse_line(line, lineno);
        }
        return cfg;
    }

    static Config parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in)
            throw ConfigError(0, "cannot open config file '" + path + "'");
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse_string(buf.str(), path);
    }

    // Command-line overrides land here; they silently replace file values.
    void set(const std::string& key, const std::string& value) {
        entries_[key] = Entry{value, 0, false};
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    int line_of(const std::string& key) const {
        auto it = entries_.find(key);
        return it == entries_.end() ? 0 : it->second.line;
    }

    std::string get_string(const std::string& key) const {
        return lookup(key).value;
    }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        it->second.used = true;
        return it->second.value;
    }

    double get_double(const std::string& key) const {
        const Entry& e = lookup(key);
        return to_double(key, e);
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        it->second.used = true;
        return to_double(key, it->second);
    }

    long long get_int(const std::string& key) const {
        const Entry& e = lookup(key);
        return to_int(key, e);
    }

    long long get_int(const std::string& key, long long fallback) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        it->second.used = true;
        return to_int(key, it->second);
    }

    unsigned long long get_u64(const std::string& key, unsigned long long fallback) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        it->second.used = true;
        const Entry& e = it->second;
        const char* s = e.value.c_str();
        if (*s == '-')
            throw ConfigError(e.line, "key '" + key + "': expected unsigned integer, got '" + e.value + "'");
        char* end = nullptr;
        unsigned long long v = std::strtoull(s, &end, 10);
        if (end == s || *end != '\0')
            throw ConfigError(e.line, "key '" + key + "': expected unsigned integer, got '" + e.value + "'");
        return v;
    }

    bool get_bool(const std::string& key, bool fallback) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        it->second.used = true;
        const Entry& e = it->second;
        std::string v = lower(e.value);
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        throw ConfigError(e.line, "key '" + key + "': expected boolean, got '" + e.value + "'");
    }

    // Restricts a string key to a fixed vocabulary (mode names, noise kinds).
    std::string get_choice(const std::string& key, const std::string& fallback,
                           const std::vector<std::string>& allowed) const {
        auto it = entries_.find(key);
        std::string v = fallback;
        int line = 0;
        if (it != entries_.end()) {
            it->second.used = true;
            v = it->second.value;
            line = it->second.line;
        }
        for (const auto& a : allowed)
            if (v == a) return v;
        std::string msg = "key '" + key + "': expected one of {";
        for (size_t i = 0; i < allowed.size(); ++i)
            msg += (i ? ", " : "") + allowed[i];
        msg += "}, got '" + v + "'";
        throw ConfigError(line, msg);
    }

    // Keys that were parsed but never read by any getter; the CLI turns the
    // first one into a line-numbered error so typos do not pass silently.
    std::vector<std::pair<std::string, int>> unused_keys() const {
        std::vector<std::pair<std::string, int>> out;
        for (const auto& [key, e] : entries_)
            if (!e.used) out.emplace_back(key, e.line);
        // Report in file order, overrides (line 0) last.
        std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
            const int la = a.second == 0 ? 1 << 30 : a.second;
            const int lb = b.second == 0 ? 1 << 30 : b.second;
            return la < lb;
        });
        return out;
    }

    const std::string& origin() const { return origin_; }

private:
    struct Entry {
        std::string value;
        int line = 0;
        mutable bool used = false;
    };

    static std::string trim(const std::string& s) {
        size_t b = 0, e = s.size();
        while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
        return s.substr(b, e - b);
    }

    static std::string lower(std::string s) {
        for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return s;
    }

    void parse_line(const std::string& raw, int lineno) {
        std::string line = raw;
        if (size_t hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty()) return;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(lineno, "expected 'key = value', got '" + trim(raw) + "'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(lineno, "missing key before '='");
        for (char c : key)
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'))
                throw ConfigError(lineno, "invalid key '" + key + "'");
        if (value.empty())
            throw ConfigError(lineno, "key '" + key + "' has no value");
        auto [it, inserted] = entries_.emplace(key, Entry{value, lineno, false});
        if (!inserted)
            throw ConfigError(lineno, "duplicate key '" + key + "' (first set on line " +
                                          std::to_string(it->second.line) + ")");
    }

    const Entry& lookup(const std::string& key) const {
        auto it = entries_.find(key);
        if (it == entries_.end())
            throw ConfigError(0, "missing required key '" + key + "'");
        it->second.used = true;
        return it->second;
    }

    static double to_double(const std::string& key, const Entry& e) {
        char* end = nullptr;
        double v = std::strtod(e.value.c_str(), &end);
        if (end == e.value.c_str() || *end != '\0')
            throw ConfigError(e.line, "key '" + key + "': expected number, got '" + e.value + "'");
        return v;
    }

    static long long to_int(const std::string& key, const Entry& e) {
        char* end = nullptr;
        long long v = std::strtoll(e.value.c_str(), &end, 10);
        if (end == e.value.c_str() || *end != '\0')
            throw ConfigError(e.line, "key '" + key + "': expected integer, got '" + e.value + "'");
        return v;
    }

    std::map<std::string, Entry> entries_;
    std::string origin_;
};

} // namespace dimer

#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ionmem/core.hpp"

namespace ionmem::config {

// ---------------------------------------------------------------------------
// Flat sectioned key-value configs:
//   [section]
//   key = value        # comment
// Repeated keys are allowed (noise component lists). Every key must be
// consumed by the scenario reader; leftovers are hard errors with file:line
// diagnostics.
// ---------------------------------------------------------------------------

struct Entry {
    std::string section;
    std::string key;
    std::string value;
    int line = 0;
    mutable bool consumed = false;
};

class ConfigFile {
  public:
    static ConfigFile parse_text(const std::string& text, const std::string& origin) {
        ConfigFile cfg;
        cfg.origin_ = origin;
        std::istringstream in(text);
        std::string line;
        std::string section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string stripped = trim(line);
            if (stripped.empty()) continue;
            if (stripped.front() == '[') {
                if (stripped.back() != ']')
                    throw ConfigError(origin + ":" + std::to_string(lineno) +
                                      ": malformed section header");
                section = trim(stripped.substr(1, stripped.size() - 2));
                if (section.empty())
                    throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
                continue;
            }
            const auto eq = stripped.find('=');
            if (eq == std::string::npos)
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
            Entry e;
            e.section = section;
            e.key = trim(stripped.substr(0, eq));
            e.value = trim(stripped.substr(eq + 1));
            e.line = lineno;
            if (e.key.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
            if (e.section.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": key '" + e.key + "' outside any [section]");
            cfg.entries_.push_back(e);
        }
        return cfg;
    }

    static ConfigFile parse_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ConfigError("cannot open config file '" + path + "'");
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse_text(buf.str(), path);
    }

    const std::string& origin() const { return origin_; }

    bool has(const std::string& section, const std::string& key) const {
        return find_one(section, key) != nullptr;
    }

    std::string require(const std::string& section, const std::string& key) const {
        const Entry* e = find_one(section, key);
        if (!e)
            throw ConfigError(origin_ + ": missing key '" + key + "' in section [" + section +
                              "]");
        e->consumed = true;
        return e->value;
    }

    std::string optional(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
        const Entry* e = find_one(section, key);
        if (!e) return fallback;
        e->consumed = true;
        return e->value;
    }

    std::vector<std::string> repeated(const std::string& section, const std::string& key) const {
        std::vector<std::string> out;
        for (const auto& e : entries_)
            if (e.section == section && e.key == key) {
                e.consumed = true;
                out.push_back(e.value);
            }
        return out;
    }

    double require_number(const std::string& section, const std::string& key) const {
        return to_number(require(section, key), section, key);
    }

    double optional_number(const std::string& section, const std::string& key,
                           double fallback) const {
        const Entry* e = find_one(section, key);
        if (!e) return fallback;
        e->consumed = true;
        return to_number(e->value, section, key);
    }

    long optional_integer(const std::string& section, const std::string& key,
                          long fallback) const {
        const double v = optional_number(section, key, static_cast<double>(fallback));
        if (v != std::nearbyint(v))
            throw ConfigError(origin_ + ": key '" + key + "' in [" + section +
                              "] must be an integer");
        return static_cast<long>(v);
    }

    std::vector<double> number_list(const std::string& section, const std::string& key,
                                    bool required) const {
        const Entry* e = find_one(section, key);
        if (!e) {
            if (required)
                throw ConfigError(origin_ + ": missing key '" + key + "' in section [" + section +
                                  "]");
            return {};
        }
        e->consumed = true;
        std::vector<double> out;
        std::stringstream ss(e->value);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const std::string t = trim(item);
            if (t.empty()) continue;
            out.push_back(to_number(t, section, key));
        }
        return out;
    }

    /// Every key must have been consumed; anything left is unknown.
    void reject_unconsumed() const {
        std::string complaints;
        for (const auto& e : entries_)
            if (!e.consumed)
                complaints += (complaints.empty() ? "" : "; ") + origin_ + ":" +
                              std::to_string(e.line) + ": unknown key '" + e.key +
                              "' in section [" + e.section + "]";
        if (!complaints.empty()) throw ConfigError(complaints);
    }

    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    }

  private:
    const Entry* find_one(const std::string& section, const std::string& key) const {
        const Entry* found = nullptr;
        for (const auto& e : entries_)
            if (e.section == section && e.key == key) {
                if (found)
                    throw ConfigError(origin_ + ":" + std::to_string(e.line) +
                                      ": duplicate key '" + key + "' in section [" + section +
                                      "]");
                found = &e;
            }
        return found;
    }

    double to_number(const std::string& value, const std::string& section,
                     const std::string& key) const {
        char* end = nullptr;
        const double v = std::strtod(value.c_str(), &end);
        if (value.empty() || end != value.c_str() + value.size())
            throw ConfigError(origin_ + ": bad number '" + value + "' for key '" + key +
                              "' in [" + section + "]");
        return v;
    }

    std::string origin_;
    std::vector<Entry> entries_;
};

} // namespace ionmem::config

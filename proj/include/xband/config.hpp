// SPDX-License-Identifier: Apache-2.0
//
// xband - cross-band radio channel prediction toolkit
// Copyright (C) 2026 the xband contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "common.hpp"

namespace xband {

// Structured-text run configuration:
//
//   [section]
//   key = value        # comment
//
// Consumers validate their sections against explicit key lists; unknown
// sections or keys are configuration errors.
class Config {
  public:
    static Config parse(const std::string &text)
    {
        Config c;
        std::istringstream is(text);
        std::string line, section;
        int line_no = 0;
        while (std::getline(is, line)) {
            ++line_no;
            auto hash = line.find('#');
            if (hash != std::string::npos)
                line.erase(hash);
            auto trim = [](std::string s) {
                size_t a = s.find_first_not_of(" \t\r");
                size_t b = s.find_last_not_of(" \t\r");
                return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
            };
            line = trim(line);
            if (line.empty())
                continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw ConfigError(strf("config line %d: malformed section header", line_no));
                section = trim(line.substr(1, line.size() - 2));
                c.sections_[section];
                continue;
            }
            auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(strf("config line %d: expected key = value", line_no));
            std::string key = trim(line.substr(0, eq));
            std::string val = trim(line.substr(eq + 1));
            if (key.empty())
                throw ConfigError(strf("config line %d: empty key", line_no));
            if (section.empty())
                throw ConfigError(strf("config line %d: key outside any [section]", line_no));
            c.sections_[section][key] = val;
        }
        return c;
    }

    static Config parse_file(const std::string &path)
    {
        std::ifstream is(path);
        if (!is)
            throw ConfigError(strf("cannot open config '%s'", path.c_str()));
        std::string text((std::istreambuf_iterator<char>(is)),
                         std::istreambuf_iterator<char>());
        return parse(text);
    }

    // Dotted override "section.key=value".
    void set_dotted(const std::string &expr)
    {
        auto eq = expr.find('=');
        if (eq == std::string::npos)
            throw ConfigError(strf("override '%s' is not section.key=value", expr.c_str()));
        std::string path = expr.substr(0, eq);
        auto dot = path.find('.');
        if (dot == std::string::npos)
            throw ConfigError(strf("override '%s' is missing the section", expr.c_str()));
        sections_[path.substr(0, dot)][path.substr(dot + 1)] = expr.substr(eq + 1);
    }

    bool has(const std::string &sec, const std::string &key) const
    {
        auto s = sections_.find(sec);
        return s != sections_.end() && s->second.count(key) > 0;
    }

    std::string get_str(const std::string &sec, const std::string &key,
                        const std::string &def) const
    {
        auto s = sections_.find(sec);
        if (s == sections_.end())
            return def;
        auto k = s->second.find(key);
        return k == s->second.end() ? def : k->second;
    }

    double get_num(const std::string &sec, const std::string &key, double def) const
    {
        if (!has(sec, key))
            return def;
        const std::string &v = sections_.at(sec).at(key);
        size_t pos = 0;
        double d;
        try {
            d = std::stod(v, &pos);
        } catch (const std::exception &) {
            throw ConfigError(strf("config %s.%s: '%s' is not a number", sec.c_str(), key.c_str(),
                                   v.c_str()));
        }
        if (pos != v.size())
            throw ConfigError(strf("config %s.%s: trailing characters in '%s'", sec.c_str(),
                                   key.c_str(), v.c_str()));
        return d;
    }

    int get_int(const std::string &sec, const std::string &key, int def) const
    {
        double d = get_num(sec, key, double(def));
        if (d != std::floor(d))
            throw ConfigError(strf("config %s.%s must be an integer", sec.c_str(), key.c_str()));
        return int(d);
    }

    uint64_t get_u64(const std::string &sec, const std::string &key, uint64_t def) const
    {
        if (!has(sec, key))
            return def;
        const std::string &v = sections_.at(sec).at(key);
        try {
            return std::stoull(v);
        } catch (const std::exception &) {
            throw ConfigError(strf("config %s.%s: '%s' is not an unsigned integer", sec.c_str(),
                                   key.c_str(), v.c_str()));
        }
    }

    bool get_bool(const std::string &sec, const std::string &key, bool def) const
    {
        if (!has(sec, key))
            return def;
        std::string v = sections_.at(sec).at(key);
        if (v == "true" || v == "1" || v == "on")
            return true;
        if (v == "false" || v == "0" || v == "off")
            return false;
        throw ConfigError(strf("config %s.%s: '%s' is not a boolean", sec.c_str(), key.c_str(),
                               v.c_str()));
    }

    // Strict schema validation.
    void validate(const std::map<std::string, std::vector<std::string>> &schema) const
    {
        for (const auto &[sec, keys] : sections_) {
            auto it = schema.find(sec);
            if (it == schema.end())
                throw ConfigError(strf("unknown config section [%s]", sec.c_str()));
            for (const auto &[key, val] : keys) {
                (void)val;
                if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
                    throw ConfigError(strf("unknown config key %s.%s", sec.c_str(), key.c_str()));
            }
        }
    }

    std::string serialize() const
    {
        std::ostringstream os;
        for (const auto &[sec, keys] : sections_) {
            os << "[" << sec << "]\n";
            for (const auto &[k, v] : keys)
                os << k << " = " << v << "\n";
        }
        return os.str();
    }

    uint64_t digest() const { return fnv1a64(serialize()); }

  private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

} // namespace xband

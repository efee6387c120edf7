#pragma once

#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hashchain {

// Scenario and parameter files are flat `key = value` text. Lines that
// are empty or start with '#' are ignored; list values are
// comma-separated.
class KvFile {
public:
    static KvFile parse(const std::string& text) {
        KvFile kv;
        std::istringstream in(text);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const std::string stripped = strip(line);
            if (stripped.empty() || stripped[0] == '#') continue;
            const std::size_t eq = stripped.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error("config line " + std::to_string(line_no) +
                                         ": expected key = value");
            const std::string key = strip(stripped.substr(0, eq));
            const std::string value = strip(stripped.substr(eq + 1));
            if (key.empty())
                throw std::runtime_error("config line " + std::to_string(line_no) + ": empty key");
            kv.values_[key] = value;
        }
        return kv;
    }

    bool has(const std::string& key) const { return values_.contains(key); }

    const std::string& get(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw std::runtime_error("config: missing key: " + key);
        return it->second;
    }

    std::string get_or(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key) const { return to_double(key, get(key)); }
    double get_double_or(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }

    std::uint64_t get_u64(const std::string& key) const { return to_u64(key, get(key)); }
    std::uint64_t get_u64_or(const std::string& key, std::uint64_t fallback) const {
        return has(key) ? get_u64(key) : fallback;
    }

    std::vector<double> get_doubles(const std::string& key) const {
        std::vector<double> out;
        for (const std::string& item : split_list(get(key))) out.push_back(to_double(key, item));
        return out;
    }

    std::vector<std::uint64_t> get_u64s(const std::string& key) const {
        std::vector<std::uint64_t> out;
        for (const std::string& item : split_list(get(key))) out.push_back(to_u64(key, item));
        return out;
    }

    const std::map<std::string, std::string>& entries() const { return values_; }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    std::string serialize() const {
        std::ostringstream out;
        for (const auto& [key, value] : values_) out << key << " = " << value << "\n";
        return out.str();
    }

private:
    static std::string strip(const std::string& s) {
        std::size_t begin = s.find_first_not_of(" \t\r\n");
        if (begin == std::string::npos) return "";
        std::size_t end = s.find_last_not_of(" \t\r\n");
        return s.substr(begin, end - begin + 1);
    }

    static std::vector<std::string> split_list(const std::string& s) {
        std::vector<std::string> items;
        std::string current;
        std::istringstream in(s);
        while (std::getline(in, current, ',')) {
            const std::string stripped = strip(current);
            if (!stripped.empty()) items.push_back(stripped);
        }
        return items;
    }

    static double to_double(const std::string& key, const std::string& value) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(value, &pos);
            if (pos != value.size()) throw std::invalid_argument("trailing characters");
            return v;
        } catch (const std::exception&) {
            throw std::runtime_error("config: key '" + key + "' is not a number: " + value);
        }
    }

    static std::uint64_t to_u64(const std::string& key, const std::string& value) {
        try {
            std::size_t pos = 0;
            const unsigned long long v = std::stoull(value, &pos);
            if (pos != value.size()) throw std::invalid_argument("trailing characters");
            return v;
        } catch (const std::exception&) {
            throw std::runtime_error("config: key '" + key + "' is not an unsigned integer: " +
                                     value);
        }
    }

    std::map<std::string, std::string> values_;
};

}  // namespace hashchain

#include "towerforge/kvconfig.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "towerforge/errors.hpp"

namespace towerforge {

namespace {
std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}
}  // namespace

std::map<std::string, std::string> parse_kv(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream ss(text);
    std::size_t line_no = 0;
    for (std::string line; std::getline(ss, line);) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError(
                fmt::format("config line {}: expected 'key = value', got '{}'",
                            line_no, line));
        }
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

std::map<std::string, std::string> load_kv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure(fmt::format("cannot open config {}", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_kv(ss.str());
}

double kv_double(const std::map<std::string, std::string>& kv,
                 const std::string& key, double fallback) {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw ValidationError(
            fmt::format("config key '{}': '{}' is not a number", key, it->second));
    }
}

long long kv_int(const std::map<std::string, std::string>& kv,
                 const std::string& key, long long fallback) {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        return std::stoll(it->second);
    } catch (const std::exception&) {
        throw ValidationError(
            fmt::format("config key '{}': '{}' is not an integer", key, it->second));
    }
}

std::string kv_string(const std::map<std::string, std::string>& kv,
                      const std::string& key, const std::string& fallback) {
    const auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
}

}  // namespace towerforge

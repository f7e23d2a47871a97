#pragma once

#include <map>
#include <string>

namespace towerforge {

// `key = value` lines; '#' starts a comment; blank lines ignored.
// Duplicate keys keep the last value.
std::map<std::string, std::string> parse_kv(const std::string& text);
std::map<std::string, std::string> load_kv(const std::string& path);

double kv_double(const std::map<std::string, std::string>& kv,
                 const std::string& key, double fallback);
long long kv_int(const std::map<std::string, std::string>& kv,
                 const std::string& key, long long fallback);
std::string kv_string(const std::map<std::string, std::string>& kv,
                      const std::string& key, const std::string& fallback);

}  // namespace towerforge

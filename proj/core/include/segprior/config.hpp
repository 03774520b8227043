#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace segprior {

/// Line-oriented `key = value` file with `[section]` headers. Blank lines and
/// lines starting with '#' are skipped; anything else must parse. Consumers
/// reject unknown sections and keys.
struct ConfigSection {
  std::string name;
  std::vector<std::pair<std::string, std::string>> entries;
};

using ConfigData = std::vector<ConfigSection>;

ConfigData parse_config_text(const std::string& text, const std::string& origin = "<string>");
ConfigData parse_config_file(const std::filesystem::path& path);

// Strict value parsers shared by the plan loaders.
int config_int(const std::string& key, const std::string& value);
double config_double(const std::string& key, const std::string& value);
bool config_bool(const std::string& key, const std::string& value);
unsigned long long config_u64(const std::string& key, const std::string& value);

}  // namespace segprior

#include "segprior/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "segprior/error.hpp"

namespace segprior {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

ConfigData parse_config_text(const std::string& text, const std::string& origin) {
  ConfigData sections;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ValidationError(origin + ":" + std::to_string(lineno) + ": malformed section header");
      ConfigSection s;
      s.name = trim(line.substr(1, line.size() - 2));
      if (s.name.empty())
        throw ValidationError(origin + ":" + std::to_string(lineno) + ": empty section name");
      sections.push_back(std::move(s));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    if (sections.empty())
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": entry before any [section]");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": empty key");
    sections.back().entries.emplace_back(key, value);
  }
  return sections;
}

ConfigData parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

int config_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "': '" + value + "' is not an integer");
  }
}

double config_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "': '" + value + "' is not a number");
  }
}

bool config_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  throw ValidationError("config key '" + key + "': '" + value + "' is not a boolean");
}

unsigned long long config_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "': '" + value + "' is not an unsigned integer");
  }
}

}  // namespace segprior

#include "clcnet/config.h"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "clcnet/common.h"

namespace clcnet {
namespace {

std::string Trim(const std::string& s) {
  const size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> parts;
  if (Trim(text).empty()) return parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(Trim(item));
  return parts;
}

template <typename T>
std::string JoinList(const std::vector<T>& values) {
  std::string out;
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_floating_point_v<T>) {
      out += FormatDouble(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

size_t ParseSize(const std::string& text, const std::string& what) {
  const int64_t v = ParseInt(text, what);
  if (v < 0) throw ConfigError(what + ": expected a non-negative integer, got '" + text + "'");
  return static_cast<size_t>(v);
}

}  // namespace

double ParseDouble(const std::string& text, const std::string& what) {
  const std::string t = Trim(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(v)) {
    throw ConfigError(what + ": expected a finite number, got '" + text + "'");
  }
  return v;
}

int64_t ParseInt(const std::string& text, const std::string& what) {
  const std::string t = Trim(text);
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (t.empty() || *end != '\0' || errno == ERANGE) {
    throw ConfigError(what + ": expected an integer, got '" + text + "'");
  }
  return v;
}

Settings ParseSettings(const std::string& text, const std::string& origin) {
  Settings out;
  std::stringstream ss(text);
  std::string line;
  std::string section;
  int number = 0;
  while (std::getline(ss, line)) {
    ++number;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(number);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = Trim(line.substr(1, line.size() - 2));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    std::string key = Trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (!section.empty()) key = section + "." + key;
    out.emplace_back(key, Trim(line.substr(eq + 1)));
  }
  return out;
}

Settings ReadSettingsFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseSettings(ss.str(), path);
}

void ApplySettings(const Settings& settings, std::vector<ConfigField>& fields) {
  for (const auto& [key, value] : settings) {
    bool found = false;
    for (ConfigField& f : fields) {
      if (f.key == key) {
        f.set(value);
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError("unknown config key '" + key + "'");
  }
}

std::string FormatFields(const std::vector<ConfigField>& fields) {
  std::string out;
  for (const ConfigField& f : fields) out += f.key + " = " + f.get() + "\n";
  return out;
}

ConfigField DoubleField(std::string key, double* v, std::string help) {
  return {key, std::move(help), [v] { return FormatDouble(*v); },
          [v, key](const std::string& s) { *v = ParseDouble(s, key); }};
}

ConfigField SizeField(std::string key, size_t* v, std::string help) {
  return {key, std::move(help), [v] { return std::to_string(*v); },
          [v, key](const std::string& s) { *v = ParseSize(s, key); }};
}

ConfigField IntField(std::string key, int* v, std::string help) {
  return {key, std::move(help), [v] { return std::to_string(*v); },
          [v, key](const std::string& s) { *v = static_cast<int>(ParseInt(s, key)); }};
}

ConfigField U64Field(std::string key, uint64_t* v, std::string help) {
  return {key, std::move(help), [v] { return std::to_string(*v); },
          [v, key](const std::string& s) {
            const std::string t = Trim(s);
            char* end = nullptr;
            errno = 0;
            const unsigned long long x = std::strtoull(t.c_str(), &end, 10);
            if (t.empty() || t[0] == '-' || *end != '\0' || errno == ERANGE) {
              throw ConfigError(key + ": expected an unsigned integer, got '" + s + "'");
            }
            *v = x;
          }};
}

ConfigField StringField(std::string key, std::string* v, std::string help) {
  return {key, std::move(help), [v] { return *v; },
          [v](const std::string& s) { *v = Trim(s); }};
}

ConfigField DoubleListField(std::string key, std::vector<double>* v,
                            std::string help) {
  return {key, std::move(help), [v] { return JoinList(*v); },
          [v, key](const std::string& s) {
            std::vector<double> out;
            for (const std::string& p : SplitList(s)) out.push_back(ParseDouble(p, key));
            *v = std::move(out);
          }};
}

ConfigField SizeListField(std::string key, std::vector<size_t>* v,
                          std::string help) {
  return {key, std::move(help), [v] { return JoinList(*v); },
          [v, key](const std::string& s) {
            std::vector<size_t> out;
            for (const std::string& p : SplitList(s)) out.push_back(ParseSize(p, key));
            *v = std::move(out);
          }};
}

}  // namespace clcnet

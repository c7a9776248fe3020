// Plain-text `key = value` settings bound to typed struct fields.
//
// Text form: one `key = value` per line, `#` starts a comment, and a
// `[section]` line prefixes the following keys with `section.`. The same
// dotted keys are used in config files, in command-line overrides and in the
// config block of checkpoints.

#ifndef CLCNET_CONFIG_H_
#define CLCNET_CONFIG_H_

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace clcnet {

struct ConfigField {
  std::string key;
  std::string help;
  std::function<std::string()> get;
  std::function<void(const std::string&)> set;
};

using Settings = std::vector<std::pair<std::string, std::string>>;

// Throws ConfigError (naming `origin` and the line) on malformed lines.
Settings ParseSettings(const std::string& text, const std::string& origin);
Settings ReadSettingsFile(const std::string& path);

// Assigns every setting to its field. Unknown keys and unparsable values
// throw ConfigError.
void ApplySettings(const Settings& settings, std::vector<ConfigField>& fields);

// `key = value` lines in field order.
std::string FormatFields(const std::vector<ConfigField>& fields);

// Field factories. Parsers reject trailing garbage and non-finite numbers.
ConfigField DoubleField(std::string key, double* v, std::string help = "");
ConfigField SizeField(std::string key, size_t* v, std::string help = "");
ConfigField IntField(std::string key, int* v, std::string help = "");
ConfigField U64Field(std::string key, uint64_t* v, std::string help = "");
ConfigField StringField(std::string key, std::string* v, std::string help = "");
// Comma-separated lists.
ConfigField DoubleListField(std::string key, std::vector<double>* v,
                            std::string help = "");
ConfigField SizeListField(std::string key, std::vector<size_t>* v,
                          std::string help = "");

double ParseDouble(const std::string& text, const std::string& what);
int64_t ParseInt(const std::string& text, const std::string& what);

}  // namespace clcnet

#endif  // CLCNET_CONFIG_H_

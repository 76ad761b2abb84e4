#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace esn {

/// Flat view of a TOML-style document: `[section]` headers and
/// `key = value` lines, where a value is a number, a quoted string, a
/// boolean or a single-line array of those. Keys are addressed as
/// "section.key". Getters record which keys were read so leftovers can be
/// reported as unknown.
class ConfigDocument {
 public:
  struct Value {
    using Scalar = std::variant<double, std::int64_t, bool, std::string>;
    std::variant<Scalar, std::vector<Scalar>> data;
    int line = 0;
  };

  static ConfigDocument parse(std::string_view text, std::string source = "<config>");
  static ConfigDocument load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  double number(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::string string(const std::string& key, const std::string& fallback) const;
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<std::int64_t> integers(const std::string& key, const std::vector<std::int64_t>& fallback) const;

  /// Keys present in the document that no getter asked for.
  std::vector<std::string> unused_keys() const;
  /// "file:line" of a key, or the file name alone.
  std::string where(const std::string& key) const;

 private:
  const Value* find(const std::string& key) const;
  [[noreturn]] void type_error(const std::string& key, const char* expected) const;

  std::string source_;
  std::map<std::string, Value> values_;
  mutable std::set<std::string> used_;
};

}  // namespace esn

#include "esn/config.hpp"

#include "esn/errors.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace esn {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Drops a trailing comment that is not inside a string.
std::string_view strip_comment(std::string_view s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

bool valid_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  return true;
}

struct Parser {
  std::string_view text;
  std::size_t pos = 0;
  const std::string& source;
  int line;

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::InvalidConfig, source + ":" + std::to_string(line) + ": " + what);
  }

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  ConfigDocument::Value::Scalar scalar() {
    skip_ws();
    if (pos >= text.size()) fail("missing value");
    if (text[pos] == '"') {
      std::string out;
      for (++pos; pos < text.size() && text[pos] != '"'; ++pos) {
        if (text[pos] == '\\' && pos + 1 < text.size()) {
          const char e = text[++pos];
          out += e == 'n' ? '\n' : e == 't' ? '\t' : e;
        } else {
          out += text[pos];
        }
      }
      if (pos >= text.size()) fail("unterminated string");
      ++pos;
      return out;
    }
    std::size_t end = pos;
    while (end < text.size() && text[end] != ',' && text[end] != ']' &&
           !std::isspace(static_cast<unsigned char>(text[end])))
      ++end;
    std::string token(text.substr(pos, end - pos));
    pos = end;
    if (token == "true") return true;
    if (token == "false") return false;
    std::string digits;
    for (char c : token)
      if (c != '_') digits += c;
    const bool is_float = digits.find_first_of(".eE") != std::string::npos || digits == "inf" || digits == "nan";
    if (!is_float) {
      std::int64_t v = 0;
      const auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
      if (ec == std::errc() && p == digits.data() + digits.size()) return v;
    }
    char* stop = nullptr;
    const double d = std::strtod(digits.c_str(), &stop);
    if (digits.empty() || stop != digits.c_str() + digits.size()) fail("cannot parse value '" + token + "'");
    return d;
  }

  ConfigDocument::Value value() {
    skip_ws();
    ConfigDocument::Value v;
    v.line = line;
    if (pos < text.size() && text[pos] == '[') {
      ++pos;
      std::vector<ConfigDocument::Value::Scalar> items;
      for (;;) {
        skip_ws();
        if (pos >= text.size()) fail("unterminated array");
        if (text[pos] == ']') {
          ++pos;
          break;
        }
        items.push_back(scalar());
        skip_ws();
        if (pos < text.size() && text[pos] == ',') ++pos;
      }
      v.data = std::move(items);
    } else {
      v.data = scalar();
    }
    skip_ws();
    if (pos != text.size()) fail("unexpected trailing characters");
    return v;
  }
};

}  // namespace

ConfigDocument ConfigDocument::parse(std::string_view text, std::string source) {
  ConfigDocument doc;
  doc.source_ = std::move(source);
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto body = trim(strip_comment(raw));
    if (body.empty()) continue;
    const auto fail = [&](const std::string& what) {
      throw Error(ErrorKind::InvalidConfig, doc.source_ + ":" + std::to_string(line) + ": " + what);
    };
    if (body.front() == '[') {
      if (body.back() != ']') fail("malformed section header");
      section = std::string(trim(body.substr(1, body.size() - 2)));
      if (!valid_key(section)) fail("invalid section name '" + section + "'");
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) fail("expected 'key = value'");
    const auto key = std::string(trim(body.substr(0, eq)));
    if (!valid_key(key)) fail("invalid key '" + key + "'");
    const std::string full = section.empty() ? key : section + "." + key;
    if (doc.values_.count(full)) fail("duplicate key '" + full + "'");
    Parser p{trim(body.substr(eq + 1)), 0, doc.source_, line};
    doc.values_[full] = p.value();
  }
  return doc;
}

ConfigDocument ConfigDocument::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "config file not found: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

const ConfigDocument::Value* ConfigDocument::find(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

std::string ConfigDocument::where(const std::string& key) const {
  const auto it = values_.find(key);
  return it == values_.end() ? source_ : source_ + ":" + std::to_string(it->second.line);
}

void ConfigDocument::type_error(const std::string& key, const char* expected) const {
  throw Error(ErrorKind::InvalidConfig, where(key) + ": field '" + key + "' must be " + expected);
}

namespace {

bool as_number(const ConfigDocument::Value::Scalar& s, double& out) {
  if (const auto* d = std::get_if<double>(&s)) {
    out = *d;
    return true;
  }
  if (const auto* i = std::get_if<std::int64_t>(&s)) {
    out = static_cast<double>(*i);
    return true;
  }
  return false;
}

}  // namespace

double ConfigDocument::number(const std::string& key, double fallback) const {
  const Value* v = find(key);
  if (!v) return fallback;
  double out = 0.0;
  const auto* s = std::get_if<Value::Scalar>(&v->data);
  if (!s || !as_number(*s, out)) type_error(key, "a number");
  return out;
}

std::int64_t ConfigDocument::integer(const std::string& key, std::int64_t fallback) const {
  const Value* v = find(key);
  if (!v) return fallback;
  const auto* s = std::get_if<Value::Scalar>(&v->data);
  if (!s || !std::holds_alternative<std::int64_t>(*s)) type_error(key, "an integer");
  return std::get<std::int64_t>(*s);
}

bool ConfigDocument::boolean(const std::string& key, bool fallback) const {
  const Value* v = find(key);
  if (!v) return fallback;
  const auto* s = std::get_if<Value::Scalar>(&v->data);
  if (!s || !std::holds_alternative<bool>(*s)) type_error(key, "true or false");
  return std::get<bool>(*s);
}

std::string ConfigDocument::string(const std::string& key, const std::string& fallback) const {
  const Value* v = find(key);
  if (!v) return fallback;
  const auto* s = std::get_if<Value::Scalar>(&v->data);
  if (!s || !std::holds_alternative<std::string>(*s)) type_error(key, "a quoted string");
  return std::get<std::string>(*s);
}

std::vector<double> ConfigDocument::numbers(const std::string& key, const std::vector<double>& fallback) const {
  const Value* v = find(key);
  if (!v) return fallback;
  const auto* a = std::get_if<std::vector<Value::Scalar>>(&v->data);
  if (!a) type_error(key, "an array of numbers");
  std::vector<double> out;
  for (const auto& s : *a) {
    double d = 0.0;
    if (!as_number(s, d)) type_error(key, "an array of numbers");
    out.push_back(d);
  }
  return out;
}

std::vector<std::int64_t> ConfigDocument::integers(const std::string& key,
                                                   const std::vector<std::int64_t>& fallback) const {
  const Value* v = find(key);
  if (!v) return fallback;
  const auto* a = std::get_if<std::vector<Value::Scalar>>(&v->data);
  if (!a) type_error(key, "an array of integers");
  std::vector<std::int64_t> out;
  for (const auto& s : *a) {
    if (!std::holds_alternative<std::int64_t>(s)) type_error(key, "an array of integers");
    out.push_back(std::get<std::int64_t>(s));
  }
  return out;
}

std::vector<std::string> ConfigDocument::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_)
    if (!used_.count(k)) out.push_back(k);
  return out;
}

}  // namespace esn

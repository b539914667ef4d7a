// SPDX-License-Identifier: Apache-2.0
#include <roughfrob/config.hpp>

#include <fstream>
#include <sstream>

namespace roughfrob {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Drops a trailing comment that is not inside a string literal.
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

json parse_value(const std::string& raw, int line) {
  if (raw.empty()) throw Error(ErrorKind::Config, "empty value on line " + std::to_string(line));
  const char c = raw.front();
  const bool literal = c == '"' || c == '[' || c == '{' || c == '-' || c == '+' || c == '.' ||
                       std::isdigit(static_cast<unsigned char>(c)) || raw == "true" || raw == "false" ||
                       raw == "null";
  if (literal) {
    try {
      return json::parse(raw);
    } catch (const json::parse_error&) {
      if (c == '"' || c == '[' || c == '{')
        throw Error(ErrorKind::Config, "malformed value on line " + std::to_string(line) + ": " + raw);
    }
  }
  return raw;
}

std::vector<std::string> split_dots(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, '.')) {
    part = trim(part);
    if (part.empty()) throw Error(ErrorKind::Config, "empty component in section name '" + s + "'");
    out.push_back(part);
  }
  return out;
}

}  // namespace

json parse_config(const std::string& text) {
  json root = json::object();
  json* table = &root;
  std::stringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
      table = &root;
      for (const auto& part : split_dots(line.substr(1, line.size() - 2))) {
        json& next = (*table)[part];
        if (next.is_null()) next = json::object();
        if (!next.is_object()) throw Error(ErrorKind::Config, "section '" + part + "' clashes with a value");
        table = &next;
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::Config, "expected 'key = value' on line " + std::to_string(n));
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw Error(ErrorKind::Config, "missing key on line " + std::to_string(n));
    if (table->contains(key)) throw Error(ErrorKind::Config, "duplicate key '" + key + "' on line " + std::to_string(n));
    (*table)[key] = parse_value(trim(line.substr(eq + 1)), n);
  }
  return root;
}

json load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::Config, "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

namespace {

void format_table(const json& t, const std::string& prefix, std::ostream& os) {
  for (auto it = t.begin(); it != t.end(); ++it)
    if (!it.value().is_object()) os << it.key() << " = " << it.value().dump() << "\n";
  for (auto it = t.begin(); it != t.end(); ++it)
    if (it.value().is_object()) {
      const std::string name = prefix.empty() ? it.key() : prefix + "." + it.key();
      os << "\n[" << name << "]\n";
      format_table(it.value(), name, os);
    }
}

}  // namespace

std::string format_config(const json& cfg) {
  std::ostringstream os;
  format_table(cfg, "", os);
  return os.str();
}

}  // namespace roughfrob

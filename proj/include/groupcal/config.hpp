#pragma once

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "groupcal/error.hpp"

namespace groupcal::config {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

inline nlohmann::json parse_value(const std::string& text, const std::string& where) {
  if (text.empty()) throw Error(ErrorCode::BadConfig, where + ": missing value");
  if (text == "true") return true;
  if (text == "false") return false;
  if (text.front() == '"' || text.front() == '[') {
    // strings and arrays share JSON syntax for the subset we accept
    try {
      return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
      throw Error(ErrorCode::BadConfig, where + ": cannot parse '" + text + "'");
    }
  }
  try {
    std::size_t used = 0;
    if (text.find_first_of(".eE") == std::string::npos) {
      const long long v = std::stoll(text, &used);
      if (used == text.size()) return v;
    } else {
      const double v = std::stod(text, &used);
      if (used == text.size()) return v;
    }
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::BadConfig, where + ": cannot parse '" + text + "'");
}

}  // namespace detail

/// Reads a small TOML subset into a JSON object: `key = value` pairs, `[table]`
/// headers and `[[array]]` table arrays. Values are integers, floats, booleans,
/// double-quoted strings and single-line arrays of those.
inline nlohmann::json parse_toml(std::istream& in, const std::string& source = "<config>") {
  nlohmann::json root = nlohmann::json::object();
  nlohmann::json* current = &root;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto where = source + ":" + std::to_string(lineno);
    line = detail::trim(detail::strip_comment(line));
    if (line.empty()) continue;
    if (line.rfind("[[", 0) == 0) {
      if (line.size() < 5 || line.substr(line.size() - 2) != "]]") throw Error(ErrorCode::BadConfig, where + ": bad header");
      const auto name = detail::trim(line.substr(2, line.size() - 4));
      auto& arr = root[name];
      if (arr.is_null()) arr = nlohmann::json::array();
      if (!arr.is_array()) throw Error(ErrorCode::BadConfig, where + ": '" + name + "' is not a table array");
      arr.push_back(nlohmann::json::object());
      current = &arr.back();
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorCode::BadConfig, where + ": bad header");
      const auto name = detail::trim(line.substr(1, line.size() - 2));
      auto& table = root[name];
      if (table.is_null()) table = nlohmann::json::object();
      current = &table;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::BadConfig, where + ": expected key = value");
    auto key = detail::trim(line.substr(0, eq));
    if (key.size() >= 2 && key.front() == '"' && key.back() == '"') key = key.substr(1, key.size() - 2);
    if (key.empty()) throw Error(ErrorCode::BadConfig, where + ": empty key");
    (*current)[key] = detail::parse_value(detail::trim(line.substr(eq + 1)), where);
  }
  return root;
}

/// Loads a config file; JSON documents are accepted as well as the TOML subset.
inline nlohmann::json load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const auto text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::BadConfig, path + ": " + e.what());
    }
  }
  std::istringstream again(text);
  return parse_toml(again, path);
}

}  // namespace groupcal::config

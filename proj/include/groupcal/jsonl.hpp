#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "groupcal/data_model.hpp"
#include "groupcal/error.hpp"

namespace groupcal::jsonl {

using json = nlohmann::json;

/// Reads one JSON object per line; blank lines are skipped.
inline std::vector<json> read_lines(std::istream& in, const std::string& source = "<stream>") {
  std::vector<json> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::FormatError, source + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!rows.back().is_object()) {
      throw Error(ErrorCode::FormatError, source + ":" + std::to_string(lineno) + ": expected an object");
    }
  }
  return rows;
}

inline std::vector<json> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  return read_lines(in, path);
}

inline void write_lines(std::ostream& out, const std::vector<json>& rows) {
  for (const auto& row : rows) out << row.dump() << '\n';
}

inline void write_file(const std::string& path, const std::vector<json>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  write_lines(out, rows);
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path + "'");
}

inline LabeledSample sample_from_json(const json& j, bool require_label = true) {
  LabeledSample s;
  try {
    s.id = j.at("id").get<std::string>();
    if (j.contains("score")) s.score = j.at("score").get<double>();
    if (j.contains("label")) {
      const auto& l = j.at("label");
      if (l.is_boolean()) {
        s.label = l.get<bool>() ? 1 : 0;
      } else if (l.is_number_integer()) {
        s.label = l.get<int>();
      } else if (l.is_number_float()) {
        const double v = l.get<double>();
        s.label = (v == 0.0 || v == 1.0) ? static_cast<int>(v) : -1;
      } else {
        throw Error(ErrorCode::FormatError, "record '" + s.id + "': label must be 0 or 1");
      }
    } else if (require_label) {
      throw Error(ErrorCode::FormatError, "record '" + s.id + "' has no label");
    }
    if (j.contains("embedding")) s.embedding = j.at("embedding").get<std::vector<double>>();
    if (j.contains("features") && j.at("features").is_object()) {
      for (const auto& [key, value] : j.at("features").items()) {
        if (value.is_string()) {
          s.features.emplace(key, value.get<std::string>());
        } else if (value.is_number_integer()) {
          s.features.emplace(key, value.get<std::int64_t>());
        } else {
          throw Error(ErrorCode::FormatError, "record '" + s.id + "': feature '" + key + "' must be str or int");
        }
      }
    }
    if (j.contains("relation") && j.at("relation").is_string()) s.relation = j.at("relation").get<std::string>();
    if (j.contains("q_true")) s.q_true = j.at("q_true").get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("bad record: ") + e.what());
  }
  return s;
}

inline json sample_to_json(const LabeledSample& s) {
  json j;
  j["id"] = s.id;
  j["score"] = s.score;
  j["label"] = s.label;
  j["embedding"] = s.embedding;
  if (!s.features.empty()) {
    json f = json::object();
    for (const auto& [key, value] : s.features) {
      std::visit([&](const auto& v) { f[key] = v; }, value);
    }
    j["features"] = std::move(f);
  }
  if (s.relation) j["relation"] = *s.relation;
  if (s.q_true) j["q_true"] = *s.q_true;
  return j;
}

inline std::vector<LabeledSample> read_samples(const std::string& path) {
  std::vector<LabeledSample> out;
  for (const auto& row : read_file(path)) out.push_back(sample_from_json(row));
  return out;
}

inline void write_samples(const std::string& path, std::span<const LabeledSample> samples) {
  std::vector<json> rows;
  rows.reserve(samples.size());
  for (const auto& s : samples) rows.push_back(sample_to_json(s));
  write_file(path, rows);
}

}  // namespace groupcal::jsonl

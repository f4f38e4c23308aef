#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "iacq/category.hpp"
#include "iacq/error.hpp"
#include "iacq/extractor.hpp"
#include "iacq/scoring.hpp"
#include "iacq/trends.hpp"

// JSON artifact schemas. nlohmann::json objects are std::map-backed, so every
// emitted object has lexicographically sorted keys.

namespace iacq {

inline constexpr const char* kSchemaVersion = "1";
inline constexpr int kDefaultRounding = 6;

inline double round_to(double v, int places) {
  const double scale = std::pow(10.0, places);
  const double r = std::round(v * scale) / scale;
  return r == 0.0 ? 0.0 : r;
}

/// 64-bit FNV-1a of `bytes`, as 16 hex digits. Used to reference the baseline
/// and weights a score was computed against.
inline std::string content_ref(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// -- counts -----------------------------------------------------------------

inline nlohmann::json counts_to_json(const AttributeCounts& c, int places = kDefaultRounding) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["repo_id"] = c.repo_id;
  j["loc"] = c.loc;
  j["values"] = nlohmann::json::object();
  for (const auto& [id, v] : c.values) j["values"][id] = round_to(v, places);
  j["warnings"] = c.warnings;
  return j;
}

inline AttributeCounts counts_from_json(const nlohmann::json& j) {
  try {
    AttributeCounts c;
    c.repo_id = j.at("repo_id").get<std::string>();
    c.loc = j.at("loc").get<std::int64_t>();
    if (c.loc < 0) throw IngestError(IngestError::Kind::parse, "negative loc");
    for (const auto& [id, v] : j.at("values").items()) {
      const double d = v.get<double>();
      if (!(d >= 0.0)) throw IngestError(IngestError::Kind::parse, "negative value for " + id);
      c.values[id] = d;
    }
    if (j.contains("warnings")) c.warnings = j["warnings"].get<std::vector<std::string>>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(IngestError::Kind::parse, std::string("malformed counts: ") + e.what());
  }
}

// -- baseline ---------------------------------------------------------------

// Maxima are written at full round-trip precision: rounding them would let a
// corpus member's own rate exceed its baseline maximum.
inline nlohmann::json baseline_to_json(const NormalizationBaseline& b) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["corpus_size"] = b.corpus_size;
  j["created_at"] = format_iso8601(b.created_at);
  j["maxima"] = nlohmann::json::object();
  for (const auto& [id, m] : b.maxima) j["maxima"][id] = m;
  return j;
}

inline NormalizationBaseline baseline_from_json(const nlohmann::json& j) {
  try {
    NormalizationBaseline b;
    b.corpus_size = j.at("corpus_size").get<std::int64_t>();
    auto t = parse_iso8601(j.at("created_at").get<std::string>());
    if (!t) throw ConfigError("baseline created_at is not an ISO-8601 time");
    b.created_at = *t;
    for (const auto& [id, m] : j.at("maxima").items()) {
      const double d = m.get<double>();
      if (!(d >= 0.0)) throw ConfigError("baseline maximum for " + id + " is negative");
      b.maxima[id] = d;
    }
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed baseline: ") + e.what());
  }
}

// -- weights ----------------------------------------------------------------

/// Parses `weights.yaml` ({default_weight, weights: {id: w}}) and checks the
/// range of every weight.
inline WeightConfig load_weights(std::string_view text) {
  WeightConfig w;
  try {
    const YAML::Node root = YAML::Load(std::string(text));
    if (root && !root.IsNull()) {
      if (!root.IsMap()) throw ConfigError("weights file must be a mapping");
      if (root["default_weight"]) w.default_weight = root["default_weight"].as<double>();
      if (const auto ws = root["weights"]; ws && !ws.IsNull()) {
        if (!ws.IsMap()) throw ConfigError("weights.weights must be a mapping");
        for (const auto& kv : ws) w.weights[kv.first.as<std::string>()] = kv.second.as<double>();
      }
    }
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("malformed weights file: ") + e.what());
  }
  w.check();
  return w;
}

// -- scores -----------------------------------------------------------------

inline nlohmann::json score_to_json(const RepoScore& s, int places = kDefaultRounding) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["repo_id"] = s.repo_id;
  j["normalized"] = nlohmann::json::object();
  for (const auto& [id, v] : s.normalized) j["normalized"][id] = round_to(v, places);
  j["category_scores"] = nlohmann::json::object();
  for (const auto& [c, v] : s.category_scores) j["category_scores"][std::string(to_string(c))] = round_to(v, places);
  j["total_score"] = round_to(s.total_score, places);
  j["baseline_ref"] = s.baseline_ref;
  j["weights_ref"] = s.weights_ref;
  return j;
}

inline RepoScore score_from_json(const nlohmann::json& j) {
  try {
    RepoScore s;
    s.repo_id = j.at("repo_id").get<std::string>();
    for (const auto& [id, v] : j.at("normalized").items()) s.normalized[id] = v.get<double>();
    for (const auto& [name, v] : j.at("category_scores").items()) {
      auto c = parse_category(name);
      if (!c) throw IngestError(IngestError::Kind::parse, "unknown category " + name);
      s.category_scores[*c] = v.get<double>();
    }
    s.total_score = j.at("total_score").get<double>();
    s.baseline_ref = j.value("baseline_ref", "");
    s.weights_ref = j.value("weights_ref", "");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(IngestError::Kind::parse, std::string("malformed score line: ") + e.what());
  }
}

// -- trends -----------------------------------------------------------------

inline nlohmann::json trends_to_json(const std::vector<TrendPoint>& points, const std::vector<TrendFit>& fits,
                                     int places = kDefaultRounding) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["buckets"] = nlohmann::json::array();
  for (const auto& p : points) {
    nlohmann::json b;
    b["label"] = p.bucket_label;
    b["index"] = p.bucket_index;
    b["repo_count"] = p.repo_count;
    b["means"] = nlohmann::json::object();
    for (const auto& [series, m] : p.mean_scores) b["means"][series] = round_to(m, places);
    j["buckets"].push_back(std::move(b));
  }
  j["fits"] = nlohmann::json::object();
  for (const auto& f : fits) {
    j["fits"][f.series] = {{"slope", round_to(f.slope, places)},
                           {"intercept", round_to(f.intercept, places)},
                           {"r_squared", round_to(f.r_squared, places)},
                           {"n_points", f.n_points}};
  }
  return j;
}

/// One row per bucket: label,index,repo_count,<series...>. Empty buckets
/// leave the mean columns blank.
inline std::string trends_to_csv(const std::vector<TrendPoint>& points, int places = kDefaultRounding) {
  const auto series = trend_series();
  std::string out = "label,index,repo_count";
  for (const auto& s : series) out += "," + s;
  out += "\n";
  for (const auto& p : points) {
    out += p.bucket_label + "," + std::to_string(p.bucket_index) + "," + std::to_string(p.repo_count);
    for (const auto& s : series) {
      out += ",";
      auto it = p.mean_scores.find(s);
      if (it != p.mean_scores.end()) out += nlohmann::json(round_to(it->second, places)).dump();
    }
    out += "\n";
  }
  return out;
}

}  // namespace iacq

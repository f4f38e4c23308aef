#pragma once

#include <algorithm>
#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "iacq/category.hpp"
#include "iacq/error.hpp"

#ifndef IACQ_DEFAULT_CATALOG_PATH
#define IACQ_DEFAULT_CATALOG_PATH "share/iacq/catalog.yaml"
#endif

namespace iacq {

enum class Polarity { positive, negative };
enum class Scaling { per_100_loc, raw };
enum class RuleKind { key_occurrence, module_usage, regex_match, file_fact, metadata_field, derived };

inline constexpr std::string_view to_string(Polarity p) {
  return p == Polarity::positive ? "positive" : "negative";
}
inline constexpr std::string_view to_string(Scaling s) {
  return s == Scaling::per_100_loc ? "per_100_loc" : "raw";
}
inline constexpr std::string_view to_string(RuleKind k) {
  switch (k) {
    case RuleKind::key_occurrence: return "key_occurrence";
    case RuleKind::module_usage: return "module_usage";
    case RuleKind::regex_match: return "regex_match";
    case RuleKind::file_fact: return "file_fact";
    case RuleKind::metadata_field: return "metadata_field";
    case RuleKind::derived: return "derived";
  }
  return "";
}

// Names the extractor understands. Catalog validation checks rules against
// these; the extractor must implement every one.
inline constexpr std::array<std::string_view, 15> kDerivedMeasures = {
    "entropy",          "avg_play_size",    "avg_task_size",
    "length_of_tasks",  "unique_names",     "blank_space_between_words",
    "avg_update_time",  "task_count",       "play_count",
    "name_count",       "names_with_variables", "key_count",
    "external_modules", "distinct_modules", "error_handling_blocks",
};

inline constexpr std::array<std::string_view, 12> kFileFacts = {
    "readme_count",     "readme_word_count",   "license_present",     "directory_count",
    "file_count",       "template_file_count", "yaml_file_count",     "yaml_line_count",
    "loc",              "blank_line_count",    "source_line_count",   "comment_count",
};

inline constexpr std::array<std::string_view, 11> kMetadataFields = {
    "download_count", "tag_count",   "total_versions",           "dependency_count",
    "supported_platform_count", "stars", "forks",              "open_issues",
    "min_ansible_version", "version_release_span_days", "avg_update_time_days",
};

inline constexpr std::array<std::string_view, 5> kRegexStreams = {
    "source", "comments", "scalars", "conditions", "jinja",
};

inline constexpr std::array<std::string_view, 4> kDefaultNegativeIds = {
    "suspicious_comments", "passwd_usage", "deprecated_keywords", "deprecated_modules",
};

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& names, std::string_view s) {
  return std::find(names.begin(), names.end(), s) != names.end();
}

inline bool is_known_derived_measure(std::string_view s) {
  return contains(kDerivedMeasures, s);
}

struct ExtractionRule {
  RuleKind kind = RuleKind::key_occurrence;
  std::vector<std::string> payload;

  bool operator==(const ExtractionRule&) const = default;
};

struct AttributeDefinition {
  std::string id;
  std::string display_name;
  CategoryId category = CategoryId::metadata;
  // Extra categories this measurement also scores under.
  std::vector<CategoryId> memberships;
  Polarity polarity = Polarity::positive;
  Scaling scaling = Scaling::per_100_loc;
  ExtractionRule rule;

  bool member_of(CategoryId c) const {
    return category == c || std::find(memberships.begin(), memberships.end(), c) != memberships.end();
  }

  bool operator==(const AttributeDefinition&) const = default;
};

/// An immutable, loaded attribute catalog.
struct Catalog {
  std::vector<AttributeDefinition> attributes;
  // Task keys that are never module names.
  std::vector<std::string> task_keywords;

  const AttributeDefinition* find(std::string_view id) const {
    for (const auto& a : attributes) {
      if (a.id == id) return &a;
    }
    return nullptr;
  }

  std::vector<const AttributeDefinition*> members(CategoryId c) const {
    std::vector<const AttributeDefinition*> out;
    for (const auto& a : attributes) {
      if (a.member_of(c)) out.push_back(&a);
    }
    return out;
  }

  bool operator==(const Catalog&) const = default;
};

/// Splits an optional leading `(?i)` off a catalog regex pattern.
inline std::pair<std::string, bool> split_regex_flags(std::string_view pattern) {
  if (pattern.substr(0, 4) == "(?i)") return {std::string(pattern.substr(4)), true};
  return {std::string(pattern), false};
}

inline std::regex compile_catalog_regex(std::string_view pattern) {
  auto [body, icase] = split_regex_flags(pattern);
  auto flags = std::regex::ECMAScript | std::regex::optimize;
  if (icase) flags |= std::regex::icase;
  return std::regex(body, flags);
}

namespace detail {

inline std::vector<std::string> read_string_list(const YAML::Node& node, const std::string& where) {
  std::vector<std::string> out;
  if (!node || node.IsNull()) return out;
  if (node.IsScalar()) {
    out.push_back(node.as<std::string>());
    return out;
  }
  if (!node.IsSequence()) {
    throw CatalogError(CatalogError::Kind::bad_rule, where + ": expected a list of strings");
  }
  for (const auto& item : node) {
    if (!item.IsScalar()) {
      throw CatalogError(CatalogError::Kind::bad_rule, where + ": expected a list of strings");
    }
    out.push_back(item.as<std::string>());
  }
  return out;
}

inline RuleKind parse_rule_kind(const std::string& s, const std::string& where) {
  for (auto k : {RuleKind::key_occurrence, RuleKind::module_usage, RuleKind::regex_match,
                 RuleKind::file_fact, RuleKind::metadata_field, RuleKind::derived}) {
    if (to_string(k) == s) return k;
  }
  throw CatalogError(CatalogError::Kind::bad_rule, where + ": unknown rule kind '" + s + "'");
}

inline void check_rule(const ExtractionRule& rule, const std::string& where) {
  if (rule.payload.empty()) {
    throw CatalogError(CatalogError::Kind::bad_rule, where + ": empty rule payload");
  }
  for (const auto& p : rule.payload) {
    if (p.empty()) throw CatalogError(CatalogError::Kind::bad_rule, where + ": empty payload entry");
  }
  switch (rule.kind) {
    case RuleKind::regex_match:
      if (rule.payload.size() > 2 ||
          (rule.payload.size() == 2 && !contains(kRegexStreams, rule.payload[1]))) {
        throw CatalogError(CatalogError::Kind::bad_rule,
                           where + ": regex payload must be [pattern, stream]");
      }
      try {
        compile_catalog_regex(rule.payload[0]);
      } catch (const std::regex_error& e) {
        throw CatalogError(CatalogError::Kind::bad_rule,
                           where + ": invalid regex: " + std::string(e.what()));
      }
      break;
    case RuleKind::file_fact:
    case RuleKind::metadata_field:
    case RuleKind::derived:
      if (rule.payload.size() != 1) {
        throw CatalogError(CatalogError::Kind::bad_rule, where + ": payload must name one field");
      }
      break;
    default:
      break;
  }
}

}  // namespace detail

/// Parses catalog file bytes. Throws CatalogError on duplicate ids, unknown
/// categories or malformed rules (an empty document counts as malformed).
inline Catalog load_catalog(std::string_view source) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(source));
  } catch (const YAML::Exception& e) {
    throw CatalogError(CatalogError::Kind::bad_rule, std::string("catalog is not valid YAML: ") + e.what());
  }
  if (!root || !root.IsMap() || !root["attributes"] || !root["attributes"].IsSequence()) {
    throw CatalogError(CatalogError::Kind::bad_rule, "catalog has no 'attributes' list");
  }

  Catalog catalog;
  catalog.task_keywords = detail::read_string_list(root["task_keywords"], "task_keywords");

  std::set<std::string> seen;
  std::size_t index = 0;
  for (const auto& entry : root["attributes"]) {
    const std::string where = "attributes[" + std::to_string(index++) + "]";
    if (!entry.IsMap()) throw CatalogError(CatalogError::Kind::bad_rule, where + ": not a mapping");

    AttributeDefinition def;
    try {
      if (!entry["id"] || !entry["id"].IsScalar() || entry["id"].as<std::string>().empty()) {
        throw CatalogError(CatalogError::Kind::bad_rule, where + ": missing id");
      }
      def.id = entry["id"].as<std::string>();
      const std::string at = where + " (" + def.id + ")";
      def.display_name = entry["display_name"] ? entry["display_name"].as<std::string>() : def.id;

      const std::string cat = entry["category"] ? entry["category"].as<std::string>() : "";
      auto parsed = parse_category(cat);
      if (!parsed) {
        throw CatalogError(CatalogError::Kind::bad_category, at + ": unknown category '" + cat + "'");
      }
      def.category = *parsed;
      for (const auto& m : detail::read_string_list(entry["memberships"], at + ".memberships")) {
        auto mc = parse_category(m);
        if (!mc) throw CatalogError(CatalogError::Kind::bad_category, at + ": unknown category '" + m + "'");
        if (def.member_of(*mc)) {
          throw CatalogError(CatalogError::Kind::bad_category, at + ": repeated category '" + m + "'");
        }
        def.memberships.push_back(*mc);
      }

      const std::string pol = entry["polarity"] ? entry["polarity"].as<std::string>() : "positive";
      if (pol == "positive") {
        def.polarity = Polarity::positive;
      } else if (pol == "negative") {
        def.polarity = Polarity::negative;
      } else {
        throw CatalogError(CatalogError::Kind::bad_rule, at + ": polarity must be positive or negative");
      }

      const std::string sc = entry["scaling"] ? entry["scaling"].as<std::string>() : "per_100_loc";
      if (sc == "per_100_loc") {
        def.scaling = Scaling::per_100_loc;
      } else if (sc == "raw") {
        def.scaling = Scaling::raw;
      } else {
        throw CatalogError(CatalogError::Kind::bad_rule, at + ": scaling must be per_100_loc or raw");
      }

      const auto rule = entry["rule"];
      if (!rule || !rule.IsMap() || !rule["kind"]) {
        throw CatalogError(CatalogError::Kind::bad_rule, at + ": missing rule");
      }
      def.rule.kind = detail::parse_rule_kind(rule["kind"].as<std::string>(), at);
      def.rule.payload = detail::read_string_list(rule["payload"], at + ".rule.payload");
      detail::check_rule(def.rule, at);
    } catch (const YAML::Exception& e) {
      throw CatalogError(CatalogError::Kind::bad_rule, where + ": " + e.what());
    }

    if (!seen.insert(def.id).second) {
      throw CatalogError(CatalogError::Kind::duplicate, "duplicate attribute id '" + def.id + "'");
    }
    catalog.attributes.push_back(std::move(def));
  }
  if (catalog.attributes.empty()) {
    throw CatalogError(CatalogError::Kind::bad_rule, "catalog defines no attributes");
  }
  return catalog;
}

inline Catalog load_catalog_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read catalog file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_catalog(ss.str());
}

/// Catalog path resolution: IACQ_CATALOG, then the bundled default.
inline std::filesystem::path default_catalog_path() {
  if (const char* env = std::getenv("IACQ_CATALOG"); env != nullptr && *env != '\0') return env;
  return IACQ_DEFAULT_CATALOG_PATH;
}

inline Catalog load_default_catalog() { return load_catalog_file(default_catalog_path()); }

/// Emits a catalog in the same file format load_catalog reads.
inline std::string serialize_catalog(const Catalog& catalog) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "task_keywords" << YAML::Value << YAML::BeginSeq;
  for (const auto& k : catalog.task_keywords) out << k;
  out << YAML::EndSeq;
  out << YAML::Key << "attributes" << YAML::Value << YAML::BeginSeq;
  for (const auto& a : catalog.attributes) {
    out << YAML::BeginMap;
    out << YAML::Key << "id" << YAML::Value << a.id;
    out << YAML::Key << "display_name" << YAML::Value << a.display_name;
    out << YAML::Key << "category" << YAML::Value << std::string(to_string(a.category));
    if (!a.memberships.empty()) {
      out << YAML::Key << "memberships" << YAML::Value << YAML::Flow << YAML::BeginSeq;
      for (auto m : a.memberships) out << std::string(to_string(m));
      out << YAML::EndSeq;
    }
    out << YAML::Key << "polarity" << YAML::Value << std::string(to_string(a.polarity));
    out << YAML::Key << "scaling" << YAML::Value << std::string(to_string(a.scaling));
    out << YAML::Key << "rule" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << std::string(to_string(a.rule.kind));
    out << YAML::Key << "payload" << YAML::Value << YAML::BeginSeq;
    for (const auto& p : a.rule.payload) out << YAML::SingleQuoted << p;
    out << YAML::EndSeq << YAML::EndMap;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;

  bool ok() const { return errors.empty(); }
};

/// Checks a catalog for problems that loading alone does not catch.
inline ValidationReport validate_catalog(const Catalog& catalog) {
  ValidationReport report;
  for (auto c : kAllCategories) {
    if (catalog.members(c).empty()) {
      report.warnings.push_back("category " + std::string(to_string(c)) + " empty");
    }
  }
  for (const auto& a : catalog.attributes) {
    if (a.polarity == Polarity::negative && !contains(kDefaultNegativeIds, a.id)) {
      report.warnings.push_back("attribute " + a.id + " is negative but outside the default negative set");
    }
    if (a.rule.payload.empty() && a.rule.kind != RuleKind::derived) {
      report.errors.push_back("attribute " + a.id + ": empty rule payload");
      continue;
    }
    const std::string name = a.rule.payload.empty() ? std::string() : a.rule.payload.front();
    switch (a.rule.kind) {
      case RuleKind::derived:
        if (!is_known_derived_measure(name)) {
          report.errors.push_back("attribute " + a.id + ": unknown derived measure '" + name + "'");
        }
        break;
      case RuleKind::file_fact:
        if (!contains(kFileFacts, name)) {
          report.errors.push_back("attribute " + a.id + ": unknown file fact '" + name + "'");
        }
        break;
      case RuleKind::metadata_field:
        if (!contains(kMetadataFields, name)) {
          report.errors.push_back("attribute " + a.id + ": unknown metadata field '" + name + "'");
        }
        break;
      case RuleKind::regex_match:
        try {
          compile_catalog_regex(name);
        } catch (const std::regex_error&) {
          report.errors.push_back("attribute " + a.id + ": invalid regex");
        }
        break;
      default:
        break;
    }
  }
  return report;
}

}  // namespace iacq

#pragma once

#include <fnmatch.h>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "iacq/error.hpp"
#include "iacq/timeutil.hpp"
#include "iacq/yaml_doc.hpp"

namespace iacq {

struct FileFacts {
  std::int64_t readme_count = 0;
  std::int64_t readme_word_count = 0;
  bool license_present = false;
  std::int64_t directory_count = 0;
  std::int64_t file_count = 0;
  std::int64_t template_file_count = 0;
  std::int64_t yaml_file_count = 0;

  bool operator==(const FileFacts&) const = default;
};

/// Registry-side facts about a role, normally read from a `galaxy_meta.json`
/// sidecar next to the repository.
struct GalaxyMetadata {
  std::int64_t download_count = 0;
  std::int64_t tag_count = 0;
  std::int64_t total_versions = 0;
  double avg_update_time_days = 0.0;
  std::int64_t dependency_count = 0;
  std::int64_t supported_platform_count = 0;
  std::int64_t stars = 0;
  std::int64_t forks = 0;
  std::int64_t open_issues = 0;
  std::string min_ansible_version;
  std::vector<Timestamp> version_release_times;  // ascending
  std::optional<Timestamp> observed_at;
  std::optional<Timestamp> reference_time;
  // Fields the source did not provide (filled by the registry client).
  std::vector<std::string> missing_fields;

  bool operator==(const GalaxyMetadata&) const = default;
};

enum class TimeField { latest_release, observed_at };

inline std::optional<TimeField> parse_time_field(std::string_view s) {
  if (s == "latest_release") return TimeField::latest_release;
  if (s == "observed_at") return TimeField::observed_at;
  return std::nullopt;
}

/// The timestamp that places a repository on the trend timeline. Falls back
/// to the other source when the preferred one is absent.
inline std::optional<Timestamp> resolve_time(const GalaxyMetadata& meta, TimeField field) {
  std::optional<Timestamp> latest;
  if (!meta.version_release_times.empty()) latest = meta.version_release_times.back();
  if (field == TimeField::latest_release) return latest ? latest : meta.observed_at;
  return meta.observed_at ? meta.observed_at : latest;
}

/// Encodes "major.minor[.patch]" as major*100 + minor so that 2.10 > 2.9.
inline double encode_ansible_version(std::string_view v) {
  int major = 0, minor = 0;
  std::size_t i = 0;
  bool any = false;
  while (i < v.size() && std::isdigit(static_cast<unsigned char>(v[i]))) {
    major = major * 10 + (v[i++] - '0');
    any = true;
  }
  if (i < v.size() && v[i] == '.') {
    ++i;
    while (i < v.size() && std::isdigit(static_cast<unsigned char>(v[i]))) minor = minor * 10 + (v[i++] - '0');
  }
  return any ? major * 100.0 + minor : 0.0;
}

inline double release_span_days(const GalaxyMetadata& meta) {
  if (meta.version_release_times.size() < 2) return 0.0;
  const auto span = meta.version_release_times.back() - meta.version_release_times.front();
  return static_cast<double>(span.count()) / 86400.0;
}

/// Sorts release times and recomputes the derived fields.
inline void finalize_metadata(GalaxyMetadata& meta) {
  auto& times = meta.version_release_times;
  std::sort(times.begin(), times.end());
  meta.avg_update_time_days = 0.0;
  if (times.size() >= 2) {
    meta.avg_update_time_days = release_span_days(meta) / static_cast<double>(times.size() - 1);
  }
  meta.reference_time = resolve_time(meta, TimeField::latest_release);
}

namespace detail {

inline std::int64_t json_int(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return 0;
  if (!j[key].is_number()) throw IngestError(IngestError::Kind::parse, std::string("field ") + key + " is not a number");
  const double v = j[key].get<double>();
  if (v < 0) throw IngestError(IngestError::Kind::parse, std::string("field ") + key + " is negative");
  return static_cast<std::int64_t>(v);
}

inline Timestamp json_time(const nlohmann::json& j, const std::string& what) {
  if (!j.is_string()) throw IngestError(IngestError::Kind::parse, what + " is not a string");
  auto t = parse_iso8601(j.get<std::string>());
  if (!t) throw IngestError(IngestError::Kind::parse, what + " is not an ISO-8601 time: " + j.get<std::string>());
  return *t;
}

}  // namespace detail

/// Parses the `galaxy_meta.json` sidecar format.
inline GalaxyMetadata parse_metadata_json(const nlohmann::json& j) {
  if (!j.is_object()) throw IngestError(IngestError::Kind::parse, "metadata is not a JSON object");
  GalaxyMetadata m;
  m.download_count = detail::json_int(j, "download_count");
  m.tag_count = detail::json_int(j, "tag_count");
  m.total_versions = detail::json_int(j, "total_versions");
  m.dependency_count = detail::json_int(j, "dependency_count");
  m.supported_platform_count = detail::json_int(j, "supported_platform_count");
  m.stars = detail::json_int(j, "stars");
  m.forks = detail::json_int(j, "forks");
  m.open_issues = detail::json_int(j, "open_issues");
  if (j.contains("min_ansible_version") && !j["min_ansible_version"].is_null()) {
    const auto& v = j["min_ansible_version"];
    m.min_ansible_version = v.is_string() ? v.get<std::string>() : v.dump();
  }
  if (j.contains("version_release_times") && !j["version_release_times"].is_null()) {
    if (!j["version_release_times"].is_array()) {
      throw IngestError(IngestError::Kind::parse, "version_release_times is not a list");
    }
    for (const auto& t : j["version_release_times"]) {
      m.version_release_times.push_back(detail::json_time(t, "version_release_times entry"));
    }
  }
  if (j.contains("observed_at") && !j["observed_at"].is_null()) {
    m.observed_at = detail::json_time(j["observed_at"], "observed_at");
  }
  if (j.contains("missing_fields") && j["missing_fields"].is_array()) {
    for (const auto& f : j["missing_fields"]) m.missing_fields.push_back(f.get<std::string>());
  }
  finalize_metadata(m);
  return m;
}

inline GalaxyMetadata parse_metadata_sidecar(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IngestError(IngestError::Kind::parse, std::string("metadata sidecar: ") + e.what());
  }
  return parse_metadata_json(j);
}

/// Serializes metadata in sidecar form; parse_metadata_sidecar reads it back.
inline nlohmann::json metadata_to_json(const GalaxyMetadata& m) {
  nlohmann::json j;
  j["download_count"] = m.download_count;
  j["tag_count"] = m.tag_count;
  j["total_versions"] = m.total_versions;
  j["dependency_count"] = m.dependency_count;
  j["supported_platform_count"] = m.supported_platform_count;
  j["stars"] = m.stars;
  j["forks"] = m.forks;
  j["open_issues"] = m.open_issues;
  j["min_ansible_version"] = m.min_ansible_version;
  j["version_release_times"] = nlohmann::json::array();
  for (auto t : m.version_release_times) j["version_release_times"].push_back(format_iso8601(t));
  j["observed_at"] = m.observed_at ? nlohmann::json(format_iso8601(*m.observed_at)) : nlohmann::json();
  if (!m.missing_fields.empty()) j["missing_fields"] = m.missing_fields;
  return j;
}

struct RepoSnapshot {
  std::string repo_id;
  std::string root_path;
  std::vector<YamlDoc> yaml_docs;  // sorted by path
  FileFacts file_facts;
  std::int64_t loc = 0;
  std::optional<GalaxyMetadata> metadata;
  std::vector<std::string> warnings;

  bool operator==(const RepoSnapshot&) const = default;
};

/// Non-blank, non-comment YAML lines summed over `docs`.
inline std::int64_t count_loc(const std::vector<YamlDoc>& docs) {
  std::int64_t total = 0;
  for (const auto& d : docs) total += static_cast<std::int64_t>(d.code_line_count());
  return total;
}

struct ScanOptions {
  // A pattern ending in '/' matches a directory name at any depth; other
  // patterns are matched against the relative path and the file name.
  std::vector<std::string> ignore_globs = {".git/", ".github/", "molecule/"};
  std::string metadata_file = "galaxy_meta.json";
};

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline bool glob_match(const std::string& pattern, const std::string& s) {
  return fnmatch(pattern.c_str(), s.c_str(), 0) == 0;
}

inline bool is_ignored(const std::filesystem::path& rel, bool is_dir, const std::vector<std::string>& globs) {
  const std::string rel_s = rel.generic_string();
  const std::string name = rel.filename().string();
  for (const auto& g : globs) {
    if (g.empty()) continue;
    if (g.back() == '/') {
      const std::string dir_pattern = g.substr(0, g.size() - 1);
      std::filesystem::path parent = is_dir ? rel : rel.parent_path();
      for (const auto& part : parent) {
        if (glob_match(dir_pattern, part.string())) return true;
      }
    } else if (glob_match(g, rel_s) || glob_match(g, name)) {
      return true;
    }
  }
  return false;
}

inline bool has_yaml_extension(const std::filesystem::path& p) {
  const auto ext = lower(p.extension().string());
  return ext == ".yml" || ext == ".yaml";
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IngestError(IngestError::Kind::io, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::int64_t count_words(std::string_view text) {
  std::int64_t words = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return words;
}

}  // namespace detail

inline std::int64_t count_words(std::string_view text) { return detail::count_words(text); }

/// Builds a snapshot from in-memory YAML sources. File facts other than the
/// YAML file count are taken from `facts` as given.
inline RepoSnapshot make_snapshot(std::string repo_id, const std::vector<std::pair<std::string, std::string>>& yaml_sources,
                                  FileFacts facts = {}, std::optional<GalaxyMetadata> metadata = std::nullopt) {
  RepoSnapshot snap;
  snap.repo_id = std::move(repo_id);
  for (const auto& [path, text] : yaml_sources) {
    snap.yaml_docs.push_back(parse_yaml_doc(path, text));
  }
  std::sort(snap.yaml_docs.begin(), snap.yaml_docs.end(),
            [](const YamlDoc& a, const YamlDoc& b) { return a.path < b.path; });
  for (const auto& d : snap.yaml_docs) {
    if (!d.parsed) snap.warnings.push_back(d.path + ": YAML parse error: " + d.parse_error);
  }
  facts.yaml_file_count = static_cast<std::int64_t>(snap.yaml_docs.size());
  snap.file_facts = facts;
  snap.loc = count_loc(snap.yaml_docs);
  snap.metadata = std::move(metadata);
  return snap;
}

/// Reads a repository tree. Malformed YAML files are kept (line counts only)
/// and reported in `warnings`; an unreadable root throws IngestError(io).
inline RepoSnapshot scan_repo(const std::filesystem::path& root,
                              const std::optional<std::filesystem::path>& metadata_sidecar = std::nullopt,
                              const ScanOptions& options = {}) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw IngestError(IngestError::Kind::io, "not a readable directory: " + root.string());
  }

  RepoSnapshot snap;
  snap.repo_id = fs::absolute(root).lexically_normal().filename().string();
  if (snap.repo_id.empty()) snap.repo_id = fs::absolute(root).lexically_normal().parent_path().filename().string();
  snap.root_path = root.string();

  std::vector<fs::path> files;
  fs::recursive_directory_iterator it(root, fs::directory_options::none, ec);
  if (ec) throw IngestError(IngestError::Kind::io, "cannot list " + root.string() + ": " + ec.message());
  for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) throw IngestError(IngestError::Kind::io, "cannot list " + root.string() + ": " + ec.message());
    const fs::path rel = it->path().lexically_relative(root);
    const bool is_dir = it->is_directory(ec);
    if (detail::is_ignored(rel, is_dir, options.ignore_globs)) {
      if (is_dir) it.disable_recursion_pending();
      continue;
    }
    if (is_dir) {
      ++snap.file_facts.directory_count;
    } else if (it->is_regular_file(ec)) {
      files.push_back(rel);
    }
  }
  std::sort(files.begin(), files.end());

  for (const auto& rel : files) {
    const std::string name = rel.filename().string();
    const std::string lname = detail::lower(name);
    if (rel == fs::path(options.metadata_file)) continue;
    ++snap.file_facts.file_count;

    if (lname.rfind("readme", 0) == 0) {
      ++snap.file_facts.readme_count;
      snap.file_facts.readme_word_count += detail::count_words(detail::read_file(root / rel));
    }
    if (lname.rfind("license", 0) == 0 || lname.rfind("licence", 0) == 0 || lname.rfind("copying", 0) == 0) {
      snap.file_facts.license_present = true;
    }
    bool in_templates = false;
    for (const auto& part : rel.parent_path()) {
      if (part == "templates") in_templates = true;
    }
    if (in_templates || detail::lower(rel.extension().string()) == ".j2") ++snap.file_facts.template_file_count;

    if (detail::has_yaml_extension(rel)) {
      ++snap.file_facts.yaml_file_count;
      YamlDoc doc = parse_yaml_doc(rel.generic_string(), detail::read_file(root / rel));
      if (!doc.parsed) snap.warnings.push_back(doc.path + ": YAML parse error: " + doc.parse_error);
      snap.yaml_docs.push_back(std::move(doc));
    }
  }
  std::sort(snap.yaml_docs.begin(), snap.yaml_docs.end(),
            [](const YamlDoc& a, const YamlDoc& b) { return a.path < b.path; });
  snap.loc = count_loc(snap.yaml_docs);

  if (metadata_sidecar) {
    snap.metadata = parse_metadata_sidecar(detail::read_file(*metadata_sidecar));
  }
  return snap;
}

}  // namespace iacq

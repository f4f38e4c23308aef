#pragma once

#include <cstdlib>
#include <string>
#include <utility>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "iacq/error.hpp"
#include "iacq/ingest.hpp"

namespace iacq {

/// Maps one role object of a Galaxy v1 `roles` response onto GalaxyMetadata.
/// Absent fields stay 0/empty and are named in `missing_fields`.
inline GalaxyMetadata parse_registry_role(const nlohmann::json& role) {
  if (!role.is_object()) throw IngestError(IngestError::Kind::registry, "registry role is not an object");
  GalaxyMetadata m;
  auto count = [&](const char* key, const char* field, std::int64_t& out) {
    if (role.contains(key) && role[key].is_number()) {
      out = role[key].get<std::int64_t>();
    } else {
      m.missing_fields.push_back(std::string(field) + " missing");
    }
  };
  count("download_count", "download_count", m.download_count);
  count("stargazers_count", "stars", m.stars);
  count("forks_count", "forks", m.forks);
  count("open_issues_count", "open_issues", m.open_issues);

  if (role.contains("min_ansible_version") && role["min_ansible_version"].is_string()) {
    m.min_ansible_version = role["min_ansible_version"].get<std::string>();
  } else {
    m.missing_fields.push_back("min_ansible_version missing");
  }

  const nlohmann::json summary = role.value("summary_fields", nlohmann::json::object());
  auto list_size = [&](const char* key, const char* field, std::int64_t& out) {
    if (summary.contains(key) && summary[key].is_array()) {
      out = static_cast<std::int64_t>(summary[key].size());
    } else {
      m.missing_fields.push_back(std::string(field) + " missing");
    }
  };
  list_size("tags", "tag_count", m.tag_count);
  list_size("platforms", "supported_platform_count", m.supported_platform_count);
  list_size("dependencies", "dependency_count", m.dependency_count);

  if (summary.contains("versions") && summary["versions"].is_array()) {
    m.total_versions = static_cast<std::int64_t>(summary["versions"].size());
    for (const auto& v : summary["versions"]) {
      const std::string date = v.is_object() ? v.value("release_date", "") : "";
      if (auto t = parse_iso8601(date)) m.version_release_times.push_back(*t);
    }
  } else {
    m.missing_fields.push_back("total_versions missing");
  }
  if (role.contains("modified") && role["modified"].is_string()) {
    m.observed_at = parse_iso8601(role["modified"].get<std::string>());
  }
  finalize_metadata(m);
  return m;
}

namespace detail {

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;  // no trailing slash
};

inline Endpoint split_endpoint(const std::string& url) {
  if (url.rfind("https://", 0) == 0) {
    throw IngestError(IngestError::Kind::registry, "https endpoints are not supported by this build: " + url);
  }
  if (url.rfind("http://", 0) != 0) throw IngestError(IngestError::Kind::registry, "endpoint must be an http:// URL: " + url);
  const auto slash = url.find('/', 7);
  Endpoint e;
  e.base = slash == std::string::npos ? url : url.substr(0, slash);
  e.path = slash == std::string::npos ? "" : url.substr(slash);
  while (!e.path.empty() && e.path.back() == '/') e.path.pop_back();
  return e;
}

}  // namespace detail

/// Fetches one role ("owner.name") from a Galaxy-compatible v1 API rooted at
/// `endpoint`. Any transport, HTTP or decoding failure throws
/// IngestError(registry); nothing is filled in from guesses.
inline GalaxyMetadata fetch_registry_metadata(const std::string& repo_name, const std::string& endpoint,
                                              int timeout_s = 10) {
  const auto dot = repo_name.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == repo_name.size()) {
    throw IngestError(IngestError::Kind::registry, "role name must be owner.name: " + repo_name);
  }
  const std::string owner = repo_name.substr(0, dot);
  const std::string name = repo_name.substr(dot + 1);
  const auto ep = detail::split_endpoint(endpoint);

  httplib::Client client(ep.base);
  client.set_connection_timeout(timeout_s, 0);
  client.set_read_timeout(timeout_s, 0);
  const httplib::Params params{{"owner__username", owner}, {"name", name}};
  auto res = client.Get(ep.path + "/api/v1/roles/", params, httplib::Headers{});
  if (!res) {
    throw IngestError(IngestError::Kind::registry,
                      "registry request failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    int retry_after = -1;
    if (res->has_header("Retry-After")) retry_after = std::atoi(res->get_header_value("Retry-After").c_str());
    throw IngestError(IngestError::Kind::registry,
                      "registry returned HTTP " + std::to_string(res->status) + " for " + repo_name, retry_after);
  }
  nlohmann::json body;
  try {
    body = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error& e) {
    throw IngestError(IngestError::Kind::registry, std::string("registry response is not JSON: ") + e.what());
  }
  const nlohmann::json results = body.is_object() ? body.value("results", nlohmann::json::array()) : nlohmann::json();
  if (!results.is_array() || results.empty()) {
    throw IngestError(IngestError::Kind::registry, "role not found in registry: " + repo_name);
  }
  return parse_registry_role(results.front());
}

}  // namespace iacq

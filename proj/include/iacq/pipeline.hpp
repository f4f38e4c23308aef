#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "iacq/catalog.hpp"
#include "iacq/error.hpp"
#include "iacq/extractor.hpp"
#include "iacq/ingest.hpp"
#include "iacq/registry.hpp"
#include "iacq/report.hpp"
#include "iacq/scoring.hpp"
#include "iacq/trends.hpp"

namespace iacq {

// Process exit codes of the pipeline commands.
enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 2,
  kExitConfig = 3,
  kExitStaleBaseline = 4,
  kExitUnderdetermined = 5,
};

struct RunConfig {
  std::optional<std::filesystem::path> catalog_path;
  std::optional<std::filesystem::path> weights_path;
  std::vector<std::string> ignore_globs = ScanOptions{}.ignore_globs;
  TimeField time_field = TimeField::latest_release;
  std::filesystem::path output_dir = ".";
  int rounding = kDefaultRounding;
  unsigned jobs = 1;
  // Baseline timestamp; defaults to SOURCE_DATE_EPOCH, else the Unix epoch,
  // so that reruns produce identical bytes.
  std::optional<Timestamp> created_at;
  std::optional<std::filesystem::path> csv_path;
  bool single_repo = false;
};

struct Streams {
  std::ostream& out = std::cout;
  std::ostream& err = std::cerr;
};

namespace detail {

inline Catalog load_run_catalog(const RunConfig& cfg) {
  Catalog catalog = cfg.catalog_path ? load_catalog_file(*cfg.catalog_path) : load_default_catalog();
  const auto report = validate_catalog(catalog);
  if (!report.ok()) throw ConfigError("catalog invalid: " + report.errors.front());
  return catalog;
}

inline Timestamp resolve_created_at(const RunConfig& cfg) {
  if (cfg.created_at) return *cfg.created_at;
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH"); sde != nullptr && *sde != '\0') {
    return Timestamp{std::chrono::seconds{std::strtoll(sde, nullptr, 10)}};
  }
  return Timestamp{};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("cannot write " + path.string());
}

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw ConfigError("cannot create output directory " + dir.string());
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
inline void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

inline std::vector<std::filesystem::path> sorted_json_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  for (std::filesystem::directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec)) {
    if (it->is_regular_file() && it->path().extension() == ".json") files.push_back(it->path());
  }
  if (ec) throw IngestError(IngestError::Kind::io, "cannot list " + dir.string());
  std::sort(files.begin(), files.end());
  return files;
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError(IngestError::Kind::io, "cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IngestError(IngestError::Kind::parse, path.string() + ": " + e.what());
  }
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError(IngestError::Kind::io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

/// A directory is one repository when it has YAML files, a metadata sidecar
/// or role directories at its top level; otherwise each subdirectory is one.
inline std::vector<std::filesystem::path> discover_repos(const std::filesystem::path& root, const RunConfig& cfg) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw IngestError(IngestError::Kind::io, "not a readable directory: " + root.string());
  if (cfg.single_repo) return {root};

  std::vector<fs::path> subdirs;
  bool looks_like_repo = false;
  for (fs::directory_iterator it(root, ec), end; !ec && it != end; it.increment(ec)) {
    const auto name = it->path().filename().string();
    if (it->is_directory()) {
      if (name == "tasks" || name == "meta" || name == "handlers" || name == "roles") looks_like_repo = true;
      if (!detail::is_ignored(fs::path(name), true, cfg.ignore_globs)) subdirs.push_back(it->path());
    } else if (detail::has_yaml_extension(it->path()) || name == ScanOptions{}.metadata_file) {
      looks_like_repo = true;
    }
  }
  if (ec) throw IngestError(IngestError::Kind::io, "cannot list " + root.string());
  if (looks_like_repo) return {root};
  std::sort(subdirs.begin(), subdirs.end());
  return subdirs;
}

/// scan: repository tree(s) -> counts/<repo_id>.json
inline int cmd_scan(const std::filesystem::path& root, const RunConfig& cfg, Streams io = {}) {
  Catalog catalog;
  try {
    catalog = detail::load_run_catalog(cfg);
  } catch (const Error& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  std::vector<std::filesystem::path> repos;
  try {
    repos = discover_repos(root, cfg);
  } catch (const IngestError& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  if (repos.empty()) {
    io.err << "error: no repositories found in " << root.string() << "\n";
    return kExitInput;
  }

  const auto counts_dir = cfg.output_dir / "counts";
  try {
    detail::ensure_dir(counts_dir);
  } catch (const ConfigError& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  const Extractor extractor(catalog);
  ScanOptions options;
  options.ignore_globs = cfg.ignore_globs;
  std::vector<std::optional<AttributeCounts>> results(repos.size());
  std::vector<std::string> failures(repos.size());
  detail::parallel_for(repos.size(), cfg.jobs, [&](std::size_t i) {
    try {
      std::optional<std::filesystem::path> sidecar;
      const auto candidate = repos[i] / options.metadata_file;
      if (std::filesystem::is_regular_file(candidate)) sidecar = candidate;
      results[i] = extractor.extract(scan_repo(repos[i], sidecar, options));
    } catch (const Error& e) {
      failures[i] = e.what();
    }
  });

  int status = kExitOk;
  std::size_t written = 0, warnings = 0;
  for (std::size_t i = 0; i < repos.size(); ++i) {
    if (!results[i]) {
      io.err << "error: " << repos[i].string() << ": " << failures[i] << "\n";
      status = kExitInput;
      continue;
    }
    for (const auto& w : results[i]->warnings) io.err << "warning: " << results[i]->repo_id << ": " << w << "\n";
    warnings += results[i]->warnings.size();
    try {
      detail::write_text(counts_dir / (results[i]->repo_id + ".json"),
                         counts_to_json(*results[i], cfg.rounding).dump(2) + "\n");
    } catch (const ConfigError& e) {
      io.err << "error: " << e.what() << "\n";
      return kExitConfig;
    }
    ++written;
  }
  io.out << "scanned " << written << " of " << repos.size() << " repositories, " << warnings << " warnings\n";
  return status;
}

namespace detail {

// Reads every counts file in `dir`; returns false (after reporting) on the
// first unreadable one.
inline bool read_counts_dir(const std::filesystem::path& dir, std::vector<AttributeCounts>& out, Streams io) {
  std::vector<std::filesystem::path> files;
  try {
    files = sorted_json_files(dir);
  } catch (const Error& e) {
    io.err << "error: " << e.what() << "\n";
    return false;
  }
  for (const auto& f : files) {
    try {
      out.push_back(counts_from_json(read_json_file(f)));
    } catch (const Error& e) {
      io.err << "error: corrupted counts file " << f.string() << ": " << e.what() << "\n";
      return false;
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.repo_id < b.repo_id; });
  return true;
}

}  // namespace detail

/// baseline: counts/ -> baseline.json
inline int cmd_baseline(const std::filesystem::path& counts_dir, const RunConfig& cfg, Streams io = {}) {
  Catalog catalog;
  try {
    catalog = detail::load_run_catalog(cfg);
  } catch (const Error& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  std::vector<AttributeCounts> counts;
  if (!detail::read_counts_dir(counts_dir, counts, io)) return kExitInput;
  if (counts.empty()) {
    io.err << "error: no counts files in " << counts_dir.string() << "\n";
    return kExitInput;
  }

  std::vector<RateVector> rates;
  for (const auto& c : counts) {
    try {
      rates.push_back(compute_rates(c, catalog));
    } catch (const ScoringError& e) {
      io.err << "error: " << e.what() << "\n";
      return kExitInput;
    }
  }
  const auto baseline = build_baseline(rates, catalog, detail::resolve_created_at(cfg));
  try {
    detail::ensure_dir(cfg.output_dir);
    detail::write_text(cfg.output_dir / "baseline.json", baseline_to_json(baseline).dump(2) + "\n");
  } catch (const ConfigError& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  io.out << "corpus_size " << baseline.corpus_size << "\n";
  return kExitOk;
}

/// score: counts/ + baseline.json (+ weights.yaml) -> scores.jsonl
inline int cmd_score(const std::filesystem::path& counts_dir, const std::filesystem::path& baseline_path,
                     const RunConfig& cfg, Streams io = {}) {
  Catalog catalog;
  WeightConfig weights;
  std::string weights_ref = "equal";
  NormalizationBaseline baseline;
  std::string baseline_ref;
  try {
    catalog = detail::load_run_catalog(cfg);
    if (cfg.weights_path) {
      const std::string text = detail::slurp(*cfg.weights_path);
      weights = load_weights(text);
      weights_ref = content_ref(text);
    }
    const std::string btext = detail::slurp(baseline_path);
    nlohmann::json bj;
    try {
      bj = nlohmann::json::parse(btext);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(baseline_path.string() + ": " + e.what());
    }
    baseline = baseline_from_json(bj);
    baseline_ref = content_ref(btext);
    for (const auto& a : catalog.attributes) {
      if (!baseline.maxima.count(a.id)) throw ConfigError("baseline has no maximum for attribute " + a.id);
    }
  } catch (const Error& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  for (const auto& w : weight_lint(catalog, weights)) io.err << "warning: " << w << "\n";
  for (const auto& [id, _] : weights.weights) {
    if (!catalog.find(id)) io.err << "warning: weight for unknown attribute " << id << "\n";
  }

  std::vector<AttributeCounts> counts;
  if (!detail::read_counts_dir(counts_dir, counts, io)) return kExitInput;
  if (counts.empty()) {
    io.err << "error: no counts files in " << counts_dir.string() << "\n";
    return kExitInput;
  }

  std::vector<std::optional<RepoScore>> scores(counts.size());
  std::vector<std::string> errors(counts.size());
  std::vector<bool> stale(counts.size(), false);
  detail::parallel_for(counts.size(), cfg.jobs, [&](std::size_t i) {
    try {
      RepoScore s = score_repo(counts[i], catalog, baseline, weights);
      s.baseline_ref = baseline_ref;
      s.weights_ref = weights_ref;
      scores[i] = std::move(s);
    } catch (const ScoringError& e) {
      errors[i] = e.what();
      stale[i] = e.kind() == ScoringError::Kind::baseline_stale;
    }
  });

  bool any_stale = false, any_error = false;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (scores[i]) continue;
    io.err << "error: " << errors[i] << "\n";
    (stale[i] ? any_stale : any_error) = true;
  }
  if (any_stale) {
    io.err << "error: baseline is stale for the repositories above; rebuild it over the full corpus\n";
    return kExitStaleBaseline;
  }
  if (any_error) return kExitInput;

  std::string lines;
  for (const auto& s : scores) lines += score_to_json(*s, cfg.rounding).dump() + "\n";
  try {
    detail::ensure_dir(cfg.output_dir);
    detail::write_text(cfg.output_dir / "scores.jsonl", lines);
  } catch (const ConfigError& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  io.out << "scored " << scores.size() << " repositories\n";
  return kExitOk;
}

/// Finds the metadata sidecar for `repo_id` under `source`: either
/// <source>/<repo_id>/galaxy_meta.json, <source>/<repo_id>.json, or
/// <source>/galaxy_meta.json when `source` is that repository itself.
inline std::optional<std::filesystem::path> find_metadata(const std::filesystem::path& source,
                                                          const std::string& repo_id) {
  namespace fs = std::filesystem;
  const std::string sidecar = ScanOptions{}.metadata_file;
  for (const auto& p : {source / repo_id / sidecar, source / (repo_id + ".json")}) {
    if (fs::is_regular_file(p)) return p;
  }
  if (fs::absolute(source).lexically_normal().filename() == repo_id && fs::is_regular_file(source / sidecar)) {
    return source / sidecar;
  }
  return std::nullopt;
}

/// trends: scores.jsonl + metadata source -> trends.json (+ CSV)
inline int cmd_trends(const std::filesystem::path& scores_path, const std::filesystem::path& metadata_source,
                      const RunConfig& cfg, Streams io = {}) {
  std::vector<RepoScore> scores;
  {
    std::ifstream in(scores_path, std::ios::binary);
    if (!in) {
      io.err << "error: cannot read " << scores_path.string() << "\n";
      return kExitInput;
    }
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      try {
        scores.push_back(score_from_json(nlohmann::json::parse(line)));
      } catch (const std::exception& e) {
        io.err << "error: " << scores_path.string() << ":" << n << ": " << e.what() << "\n";
        return kExitInput;
      }
    }
  }

  std::vector<std::pair<RepoScore, Timestamp>> timed;
  for (auto& s : scores) {
    const auto meta_path = find_metadata(metadata_source, s.repo_id);
    std::optional<Timestamp> t;
    if (meta_path) {
      try {
        t = resolve_time(parse_metadata_sidecar(detail::slurp(*meta_path)), cfg.time_field);
      } catch (const Error& e) {
        io.err << "warning: " << s.repo_id << ": " << e.what() << "\n";
      }
    }
    if (!t) {
      io.err << "warning: " << s.repo_id << ": no timestamp; excluded from trends\n";
      continue;
    }
    timed.emplace_back(std::move(s), *t);
  }
  if (timed.empty()) {
    io.err << "error: no repository has a resolvable timestamp\n";
    return kExitInput;
  }

  const auto points = bucketize(timed);
  std::vector<TrendFit> fits;
  int status = kExitOk;
  for (const auto& series : trend_series()) {
    try {
      fits.push_back(ols_fit(points, series));
    } catch (const TrendError& e) {
      io.err << "error: " << e.what() << "\n";
      status = kExitUnderdetermined;
      fits.clear();
      break;
    }
  }

  try {
    detail::ensure_dir(cfg.output_dir);
    detail::write_text(cfg.output_dir / "trends.json", trends_to_json(points, fits, cfg.rounding).dump(2) + "\n");
    if (cfg.csv_path) detail::write_text(*cfg.csv_path, trends_to_csv(points, cfg.rounding));
  } catch (const ConfigError& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  io.out << points.size() << " buckets, " << timed.size() << " repositories";
  if (!fits.empty()) io.out << ", total slope " << round_to(fits.front().slope, cfg.rounding);
  io.out << "\n";
  return status;
}

/// catalog validate: prints the report; exit 3 when it has errors.
inline int cmd_catalog_validate(const RunConfig& cfg, Streams io = {}) {
  Catalog catalog;
  try {
    catalog = cfg.catalog_path ? load_catalog_file(*cfg.catalog_path) : load_default_catalog();
  } catch (const Error& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  const auto report = validate_catalog(catalog);
  for (const auto& w : report.warnings) io.out << "warning: " << w << "\n";
  for (const auto& e : report.errors) io.out << "error: " << e << "\n";
  io.out << catalog.attributes.size() << " attributes, " << report.errors.size() << " errors, "
         << report.warnings.size() << " warnings\n";
  return report.ok() ? kExitOk : kExitConfig;
}

/// fetch-meta: registry role -> galaxy_meta.json sidecar.
inline int cmd_fetch_meta(const std::string& role, const std::string& endpoint, const std::filesystem::path& out_path,
                          Streams io = {}) {
  try {
    const auto meta = fetch_registry_metadata(role, endpoint);
    for (const auto& f : meta.missing_fields) io.err << "warning: " << role << ": " << f << "\n";
    detail::write_text(out_path, metadata_to_json(meta).dump(2) + "\n");
  } catch (const IngestError& e) {
    io.err << "error: " << e.what();
    if (e.retry_after() >= 0) io.err << " (retry after " << e.retry_after() << "s)";
    io.err << "\n";
    return kExitInput;
  } catch (const ConfigError& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}

}  // namespace iacq

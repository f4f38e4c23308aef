#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <fnmatch.h>
#include <yaml-cpp/yaml.h>

#include "iacq/catalog.hpp"
#include "iacq/ingest.hpp"
#include "iacq/yaml_doc.hpp"

namespace iacq {

/// Raw measurement vector for one repository.
struct AttributeCounts {
  std::string repo_id;
  std::int64_t loc = 0;
  std::map<std::string, double> values;
  std::vector<std::string> warnings;

  double at(const std::string& id) const {
    auto it = values.find(id);
    return it == values.end() ? 0.0 : it->second;
  }

  bool operator==(const AttributeCounts&) const = default;
};

struct PlayTaskShape {
  double avg_play_size = 0.0;    // code lines per play
  double avg_task_size = 0.0;    // code lines per task
  double length_of_tasks = 0.0;  // non-indentation characters per task
  std::int64_t task_count = 0;
  std::int64_t play_count = 0;
  std::int64_t name_count = 0;  // plays and tasks carrying a `name`
  std::int64_t unique_names = 0;
  std::int64_t names_with_variables = 0;

  bool operator==(const PlayTaskShape&) const = default;
};

namespace detail {

inline const std::vector<std::string>& builtin_task_keywords() {
  static const std::vector<std::string> kw = {
      "action", "always", "any_errors_fatal", "args", "async", "become", "become_exe",
      "become_flags", "become_method", "become_user", "block", "changed_when", "check_mode",
      "collections", "connection", "debugger", "delay", "delegate_facts", "delegate_to", "diff",
      "environment", "failed_when", "ignore_errors", "ignore_unreachable", "listen",
      "local_action", "loop", "loop_control", "module_defaults", "name", "no_log", "notify",
      "poll", "port", "register", "remote_user", "rescue", "retries", "run_once", "sudo",
      "sudo_user", "tags", "throttle", "timeout", "until", "vars", "when", "always_run"};
  return kw;
}

inline std::string last_segment(const std::string& module) {
  const auto dot = module.rfind('.');
  return dot == std::string::npos ? module : module.substr(dot + 1);
}

inline bool is_external_module(const std::string& module) {
  if (module.find('.') == std::string::npos) return false;
  return module.rfind("ansible.builtin.", 0) != 0 && module.rfind("ansible.legacy.", 0) != 0;
}

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline bool has_interpolation(std::string_view s) {
  const auto open = s.find("{{");
  return open != std::string_view::npos && s.find("}}", open + 2) != std::string_view::npos;
}

inline bool scalar_key(const YAML::Node& key, std::string& out) {
  if (!key.IsScalar()) return false;
  out = key.Scalar();
  return true;
}

/// Everything the rules need from one repository's YAML, gathered in a
/// single pass over the node trees.
struct StructureSummary {
  std::map<std::string, std::int64_t> key_histogram;
  std::int64_t key_total = 0;
  std::map<std::string, std::int64_t> token_histogram;
  std::map<std::string, std::int64_t> module_histogram;  // as written (may be FQCN)
  std::vector<std::string> scalars;
  std::vector<std::string> conditions;
  std::vector<std::string> jinja;
  std::vector<std::string> comments;
  std::vector<std::string> source;
  std::set<std::string> all_name_values;
  PlayTaskShape shape;
  std::int64_t error_handling_blocks = 0;
  std::int64_t yaml_line_count = 0;
  std::int64_t blank_line_count = 0;
  std::int64_t source_line_count = 0;
  double blank_space_between_words = 0.0;
};

class StructureWalker {
public:
  StructureWalker(const std::vector<std::string>& task_keywords, StructureSummary& out)
      : keywords_(task_keywords.begin(), task_keywords.end()), out_(out) {}

  void walk_doc(const YamlDoc& doc) {
    doc_ = &doc;
    for (const auto& root : doc.nodes) walk_values(root, "");
    for (const auto& root : doc.nodes) classify_root(root);
  }

  void finish() {
    auto& s = out_.shape;
    s.task_count = static_cast<std::int64_t>(task_lines_.size());
    s.play_count = static_cast<std::int64_t>(play_lines_.size());
    s.avg_task_size = mean(task_lines_);
    s.avg_play_size = mean(play_lines_);
    s.length_of_tasks = mean(task_chars_);
    s.unique_names = static_cast<std::int64_t>(out_.all_name_values.size());
  }

private:
  static double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double sum = 0.0;
    for (double x : v) sum += x;
    return sum / static_cast<double>(v.size());
  }

  static bool is_condition_key(const std::string& k) {
    return k == "when" || k == "failed_when" || k == "changed_when" || k == "until";
  }

  void add_tokens(std::string_view s) {
    for (auto& t : split_ws(s)) ++out_.token_histogram[t];
  }

  void add_scalar(const std::string& value, bool in_condition) {
    out_.scalars.push_back(value);
    if (in_condition) out_.conditions.push_back(value);
    add_tokens(value);
    std::size_t pos = 0;
    while (pos < value.size()) {
      const auto a = value.find("{{", pos);
      const auto b = value.find("{%", pos);
      const auto open = std::min(a, b);
      if (open == std::string::npos) break;
      const std::string close = open == a ? "}}" : "%}";
      const auto end = value.find(close, open + 2);
      if (end == std::string::npos) break;
      out_.jinja.push_back(value.substr(open + 2, end - open - 2));
      pos = end + 2;
    }
  }

  // Key histogram, token histogram and scalar streams over every node.
  void walk_values(const YAML::Node& node, const std::string& parent_key) {
    const bool in_condition = is_condition_key(parent_key);
    switch (node.Type()) {
      case YAML::NodeType::Scalar:
        add_scalar(node.Scalar(), in_condition);
        break;
      case YAML::NodeType::Sequence:
        for (const auto& item : node) walk_values(item, in_condition ? parent_key : std::string());
        break;
      case YAML::NodeType::Map:
        for (const auto& kv : node) {
          std::string key;
          if (scalar_key(kv.first, key)) {
            ++out_.key_histogram[key];
            ++out_.key_total;
            add_tokens(key);
            if (key == "name" && kv.second.IsScalar()) out_.all_name_values.insert(kv.second.Scalar());
          } else {
            walk_values(kv.first, "");
          }
          walk_values(kv.second, key);
        }
        break;
      default:
        break;
    }
  }

  static bool under_dir(const std::string& path, std::string_view dir) {
    std::string needle = std::string(dir) + "/";
    return path.rfind(needle, 0) == 0 || path.find("/" + needle) != std::string::npos;
  }

  bool is_task_file() const {
    const std::string& p = doc_->path;
    const auto slash = p.rfind('/');
    const std::string base = slash == std::string::npos ? p : p.substr(slash + 1);
    if (base == "requirements.yml" || base == "requirements.yaml") return false;
    return !(under_dir(p, "vars") || under_dir(p, "defaults") || under_dir(p, "meta"));
  }

  void classify_root(const YAML::Node& root) {
    if (!root.IsSequence()) return;
    bool playbook = false;
    for (const auto& item : root) {
      if (item.IsMap() && item["hosts"]) playbook = true;
    }
    if (playbook) {
      for (const auto& item : root) {
        if (!item.IsMap()) continue;
        if (item["hosts"]) {
          visit_play(item);
        } else {
          // import_playbook and friends: module-bearing, but not tasks.
          record_module(item);
        }
      }
    } else if (is_task_file()) {
      for (const auto& item : root) {
        if (item.IsMap()) visit_task(item);
      }
    }
  }

  void visit_play(const YAML::Node& play) {
    const auto [first, last] = span(play);
    play_lines_.push_back(static_cast<double>(doc_->code_lines_between(first, last)));
    record_name(play);
    for (const char* list : {"pre_tasks", "tasks", "post_tasks", "handlers"}) {
      const auto tasks = play[list];
      if (tasks && tasks.IsSequence()) {
        for (const auto& t : tasks) {
          if (t.IsMap()) visit_task(t);
        }
      }
    }
  }

  void visit_task(const YAML::Node& task) {
    const auto [first, last] = span(task);
    task_lines_.push_back(static_cast<double>(doc_->code_lines_between(first, last)));
    std::size_t chars = 0;
    for (std::size_t i = first; i <= last && i < doc_->code_lines.size(); ++i) {
      const std::string& line = doc_->code_lines[i];
      chars += line.size() - std::min(line.size(), line.find_first_not_of(" \t"));
    }
    task_chars_.push_back(static_cast<double>(chars));
    record_name(task);
    record_module(task);

    bool has_block = false;
    bool has_handler = false;
    for (const char* list : {"block", "rescue", "always"}) {
      const auto children = task[list];
      if (!children || !children.IsSequence()) continue;
      if (std::string_view(list) == "block") {
        has_block = true;
      } else {
        has_handler = true;
      }
      for (const auto& c : children) {
        if (c.IsMap()) visit_task(c);
      }
    }
    if (has_block && has_handler) ++out_.error_handling_blocks;
  }

  void record_name(const YAML::Node& entry) {
    const auto name = entry["name"];
    if (!name || !name.IsScalar()) return;
    ++out_.shape.name_count;
    if (has_interpolation(name.Scalar())) ++out_.shape.names_with_variables;
  }

  void record_module(const YAML::Node& entry) {
    for (const auto& kv : entry) {
      std::string key;
      if (!scalar_key(kv.first, key)) continue;
      if (keywords_.count(key) != 0 || key.rfind("with_", 0) == 0) continue;
      ++out_.module_histogram[key];
      return;
    }
  }

  // Inclusive 0-based line range covered by a node and its descendants.
  std::pair<std::size_t, std::size_t> span(const YAML::Node& node) const {
    const auto mark = node.Mark();
    std::size_t first = mark.line < 0 ? 0 : static_cast<std::size_t>(mark.line);
    std::size_t last = first;
    extend(node, last);
    if (doc_->raw_line_count > 0) last = std::min(last, doc_->raw_line_count - 1);
    return {first, last};
  }

  static void extend(const YAML::Node& node, std::size_t& last) {
    const auto mark = node.Mark();
    if (mark.line >= 0) {
      std::size_t end = static_cast<std::size_t>(mark.line);
      if (node.IsScalar()) end += static_cast<std::size_t>(std::count(node.Scalar().begin(), node.Scalar().end(), '\n'));
      last = std::max(last, end);
    }
    if (node.IsSequence()) {
      for (const auto& item : node) extend(item, last);
    } else if (node.IsMap()) {
      for (const auto& kv : node) {
        extend(kv.first, last);
        extend(kv.second, last);
      }
    }
  }

  std::unordered_set<std::string> keywords_;
  StructureSummary& out_;
  const YamlDoc* doc_ = nullptr;
  std::vector<double> play_lines_;
  std::vector<double> task_lines_;
  std::vector<double> task_chars_;
};

inline double blank_space_between_words(const std::vector<YamlDoc>& docs) {
  std::int64_t gaps = 0;
  std::int64_t lines = 0;
  for (const auto& d : docs) {
    for (std::size_t i = 0; i < d.code_lines.size(); ++i) {
      if (d.line_kinds[i] != LineKind::code) continue;
      ++lines;
      const auto words = split_ws(d.code_lines[i]);
      if (words.size() > 1) gaps += static_cast<std::int64_t>(words.size() - 1);
    }
  }
  return lines == 0 ? 0.0 : static_cast<double>(gaps) / static_cast<double>(lines);
}

inline StructureSummary summarize(const std::vector<YamlDoc>& docs, const std::vector<std::string>& task_keywords) {
  StructureSummary out;
  StructureWalker walker(task_keywords.empty() ? builtin_task_keywords() : task_keywords, out);
  for (const auto& d : docs) {
    out.yaml_line_count += static_cast<std::int64_t>(d.raw_line_count);
    out.blank_line_count += static_cast<std::int64_t>(d.blank_line_count);
    out.source_line_count += static_cast<std::int64_t>(d.raw_line_count - d.blank_line_count);
    if (!d.parsed) continue;
    walker.walk_doc(d);
    for (const auto& c : d.comments) out.comments.push_back(c.text);
    for (std::size_t i = 0; i < d.code_lines.size(); ++i) {
      if (d.line_kinds[i] == LineKind::code) out.source.push_back(d.code_lines[i]);
    }
  }
  walker.finish();
  out.blank_space_between_words = blank_space_between_words(docs);
  return out;
}

inline double shannon_entropy(const std::map<std::string, std::int64_t>& histogram) {
  std::int64_t total = 0;
  for (const auto& [_, n] : histogram) total += n;
  if (total == 0) return 0.0;
  double h = 0.0;
  for (const auto& [_, n] : histogram) {
    if (n == 0) continue;
    const double p = static_cast<double>(n) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  // A single-token distribution yields -0.0.
  return h <= 0.0 ? 0.0 : h;
}

inline std::int64_t count_regex(const std::regex& re, const std::vector<std::string>& items) {
  std::int64_t n = 0;
  for (const auto& s : items) {
    n += std::distance(std::sregex_iterator(s.begin(), s.end(), re), std::sregex_iterator());
  }
  return n;
}

inline bool module_matches(const std::string& module, const std::vector<std::string>& patterns) {
  const std::string seg = last_segment(module);
  for (const auto& p : patterns) {
    if (p.find_first_of("*?[") != std::string::npos) {
      if (fnmatch(p.c_str(), seg.c_str(), 0) == 0) return true;
    } else if (p == seg) {
      return true;
    }
  }
  return false;
}

}  // namespace detail

/// Shannon entropy (bits) of the key and scalar-value tokens across `docs`.
inline double measure_entropy(const std::vector<YamlDoc>& docs) {
  return detail::shannon_entropy(detail::summarize(docs, {}).token_histogram);
}

inline PlayTaskShape measure_play_task_shape(const std::vector<YamlDoc>& docs,
                                             const std::vector<std::string>& task_keywords = {}) {
  return detail::summarize(docs, task_keywords).shape;
}

/// Module usage per module name as written (FQCNs are not shortened).
inline std::map<std::string, std::int64_t> module_usage(const std::vector<YamlDoc>& docs,
                                                        const std::vector<std::string>& task_keywords = {}) {
  return detail::summarize(docs, task_keywords).module_histogram;
}

/// Occurrences of a mapping key at any depth.
inline std::int64_t count_key(const std::vector<YamlDoc>& docs, const std::string& key) {
  const auto h = detail::summarize(docs, {}).key_histogram;
  auto it = h.find(key);
  return it == h.end() ? 0 : it->second;
}

/// Applies a catalog to snapshots. Regexes are compiled once at construction,
/// so one Extractor can serve a whole corpus; extract() is const and safe to
/// call concurrently.
class Extractor {
public:
  explicit Extractor(const Catalog& catalog) : catalog_(catalog) {
    for (const auto& a : catalog_.attributes) {
      if (a.rule.kind == RuleKind::regex_match) regexes_.emplace(a.id, compile_catalog_regex(a.rule.payload.at(0)));
    }
  }

  AttributeCounts extract(const RepoSnapshot& snap) const {
    AttributeCounts counts;
    counts.repo_id = snap.repo_id;
    counts.loc = snap.loc;
    counts.warnings = snap.warnings;

    const auto summary = detail::summarize(snap.yaml_docs, catalog_.task_keywords);
    bool metadata_warned = false;
    auto metadata_missing = [&] {
      if (!metadata_warned) counts.warnings.push_back("no registry metadata; metadata attributes set to 0");
      metadata_warned = true;
      return 0.0;
    };

    for (const auto& a : catalog_.attributes) {
      double v = 0.0;
      const std::string& p0 = a.rule.payload.empty() ? empty_ : a.rule.payload.front();
      switch (a.rule.kind) {
        case RuleKind::key_occurrence:
          for (const auto& k : a.rule.payload) {
            auto it = summary.key_histogram.find(k);
            if (it != summary.key_histogram.end()) v += static_cast<double>(it->second);
          }
          break;
        case RuleKind::module_usage:
          for (const auto& [module, n] : summary.module_histogram) {
            if (detail::module_matches(module, a.rule.payload)) v += static_cast<double>(n);
          }
          break;
        case RuleKind::regex_match: {
          const std::string stream = a.rule.payload.size() > 1 ? a.rule.payload[1] : "source";
          v = static_cast<double>(detail::count_regex(regexes_.at(a.id), stream_for(summary, stream)));
          break;
        }
        case RuleKind::file_fact:
          v = file_fact(snap, summary, p0);
          break;
        case RuleKind::metadata_field:
          v = snap.metadata ? metadata_field(*snap.metadata, p0) : metadata_missing();
          break;
        case RuleKind::derived:
          if (p0 == "avg_update_time") {
            v = snap.metadata ? snap.metadata->avg_update_time_days : metadata_missing();
          } else {
            v = derived(summary, p0);
          }
          break;
      }
      counts.values[a.id] = v < 0.0 ? 0.0 : v;
    }
    return counts;
  }

private:
  static const std::vector<std::string>& stream_for(const detail::StructureSummary& s, const std::string& name) {
    if (name == "comments") return s.comments;
    if (name == "scalars") return s.scalars;
    if (name == "conditions") return s.conditions;
    if (name == "jinja") return s.jinja;
    return s.source;
  }

  static double file_fact(const RepoSnapshot& snap, const detail::StructureSummary& s, const std::string& fact) {
    const auto& f = snap.file_facts;
    if (fact == "readme_count") return static_cast<double>(f.readme_count);
    if (fact == "readme_word_count") return static_cast<double>(f.readme_word_count);
    if (fact == "license_present") return f.license_present ? 1.0 : 0.0;
    if (fact == "directory_count") return static_cast<double>(f.directory_count);
    if (fact == "file_count") return static_cast<double>(f.file_count);
    if (fact == "template_file_count") return static_cast<double>(f.template_file_count);
    if (fact == "yaml_file_count") return static_cast<double>(f.yaml_file_count);
    if (fact == "yaml_line_count") return static_cast<double>(s.yaml_line_count);
    if (fact == "loc") return static_cast<double>(snap.loc);
    if (fact == "blank_line_count") return static_cast<double>(s.blank_line_count);
    if (fact == "source_line_count") return static_cast<double>(s.source_line_count);
    if (fact == "comment_count") return static_cast<double>(s.comments.size());
    return 0.0;
  }

  static double metadata_field(const GalaxyMetadata& m, const std::string& field) {
    if (field == "download_count") return static_cast<double>(m.download_count);
    if (field == "tag_count") return static_cast<double>(m.tag_count);
    if (field == "total_versions") return static_cast<double>(m.total_versions);
    if (field == "dependency_count") return static_cast<double>(m.dependency_count);
    if (field == "supported_platform_count") return static_cast<double>(m.supported_platform_count);
    if (field == "stars") return static_cast<double>(m.stars);
    if (field == "forks") return static_cast<double>(m.forks);
    if (field == "open_issues") return static_cast<double>(m.open_issues);
    if (field == "min_ansible_version") return encode_ansible_version(m.min_ansible_version);
    if (field == "version_release_span_days") return release_span_days(m);
    if (field == "avg_update_time_days") return m.avg_update_time_days;
    return 0.0;
  }

  static double derived(const detail::StructureSummary& s, const std::string& measure) {
    const auto& shape = s.shape;
    if (measure == "entropy") return detail::shannon_entropy(s.token_histogram);
    if (measure == "avg_play_size") return shape.avg_play_size;
    if (measure == "avg_task_size") return shape.avg_task_size;
    if (measure == "length_of_tasks") return shape.length_of_tasks;
    if (measure == "unique_names") return static_cast<double>(shape.unique_names);
    if (measure == "blank_space_between_words") return s.blank_space_between_words;
    if (measure == "task_count") return static_cast<double>(shape.task_count);
    if (measure == "play_count") return static_cast<double>(shape.play_count);
    if (measure == "name_count") return static_cast<double>(shape.name_count);
    if (measure == "names_with_variables") return static_cast<double>(shape.names_with_variables);
    if (measure == "key_count") return static_cast<double>(s.key_total);
    if (measure == "error_handling_blocks") return static_cast<double>(s.error_handling_blocks);
    if (measure == "external_modules" || measure == "distinct_modules") {
      std::int64_t external = 0;
      std::set<std::string> distinct;
      for (const auto& [module, n] : s.module_histogram) {
        if (detail::is_external_module(module)) external += n;
        distinct.insert(detail::last_segment(module));
      }
      return measure == "external_modules" ? static_cast<double>(external) : static_cast<double>(distinct.size());
    }
    return 0.0;
  }

  Catalog catalog_;
  std::map<std::string, std::regex> regexes_;
  std::string empty_;
};

inline AttributeCounts extract(const RepoSnapshot& snapshot, const Catalog& catalog) {
  return Extractor(catalog).extract(snapshot);
}

}  // namespace iacq

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <yaml-cpp/yaml.h>

namespace iacq {

enum class LineKind { blank, comment, code };

struct Comment {
  std::size_t line = 0;  // 0-based
  std::string text;      // without the leading '#'

  bool operator==(const Comment&) const = default;
};

/// One parsed YAML file. `nodes` holds every document of a multi-document
/// stream; it is empty when the file failed to parse.
struct YamlDoc {
  std::string path;  // repo-relative, '/'-separated
  std::string text;
  std::vector<YAML::Node> nodes;
  std::vector<Comment> comments;
  std::vector<LineKind> line_kinds;
  // Code part of each line with any trailing comment removed; empty for
  // blank and comment-only lines.
  std::vector<std::string> code_lines;
  std::size_t raw_line_count = 0;
  std::size_t blank_line_count = 0;
  std::size_t comment_line_count = 0;
  bool parsed = true;
  std::string parse_error;

  std::size_t code_line_count() const { return raw_line_count - blank_line_count - comment_line_count; }

  /// Number of code lines in the inclusive 0-based range [first, last].
  std::size_t code_lines_between(std::size_t first, std::size_t last) const {
    std::size_t n = 0;
    for (std::size_t i = first; i <= last && i < line_kinds.size(); ++i) {
      if (line_kinds[i] == LineKind::code) ++n;
    }
    return n;
  }

  // Node trees are compared through the source text they were parsed from.
  bool operator==(const YamlDoc& o) const {
    return path == o.path && text == o.text && comments == o.comments && line_kinds == o.line_kinds &&
           raw_line_count == o.raw_line_count && blank_line_count == o.blank_line_count &&
           comment_line_count == o.comment_line_count && parsed == o.parsed;
  }
};

namespace detail {

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

inline std::size_t indent_of(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  return i;
}

inline std::string_view rtrim(std::string_view s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

// Position of a trailing comment's '#' on a code line, or npos. A '#' starts
// a comment only outside quotes and after whitespace.
inline std::size_t find_inline_comment(std::string_view line) {
  char quote = 0;
  char prev_sig = ' ';  // last non-space character seen outside quotes
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote == '"') {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        quote = 0;
      }
      continue;
    }
    if (quote == '\'') {
      if (c == '\'') {
        if (i + 1 < line.size() && line[i + 1] == '\'') {
          ++i;
        } else {
          quote = 0;
        }
      }
      continue;
    }
    if ((c == '"' || c == '\'') &&
        (prev_sig == ' ' || prev_sig == ':' || prev_sig == '-' || prev_sig == ',' ||
         prev_sig == '[' || prev_sig == '{')) {
      bool at_token_start = i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t' ||
                            line[i - 1] == '[' || line[i - 1] == '{' || line[i - 1] == ',';
      if (at_token_start) {
        quote = c;
        continue;
      }
    }
    if (c == '#' && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) return i;
    if (c != ' ' && c != '\t') prev_sig = c;
  }
  return std::string_view::npos;
}

// True when the code part of a line opens a block scalar (`key: |`, `- >-`).
inline bool opens_block_scalar(std::string_view code) {
  code = rtrim(code);
  if (code.empty()) return false;
  std::size_t i = code.size();
  while (i > 0 && (code[i - 1] == '-' || code[i - 1] == '+' ||
                   (code[i - 1] >= '1' && code[i - 1] <= '9'))) {
    --i;
  }
  if (i == 0 || (code[i - 1] != '|' && code[i - 1] != '>')) return false;
  --i;
  if (i == 0) return true;
  const char before = code[i - 1];
  return before == ' ' || before == '\t';
}

}  // namespace detail

/// Classifies every line of `text` and parses it as a YAML stream. Parse
/// failures leave `nodes` empty and set `parsed = false`; the line facts are
/// always filled in.
inline YamlDoc parse_yaml_doc(std::string path, std::string text) {
  YamlDoc doc;
  doc.path = std::move(path);
  doc.text = std::move(text);

  const auto lines = detail::split_lines(doc.text);
  doc.raw_line_count = lines.size();
  doc.line_kinds.reserve(lines.size());
  doc.code_lines.reserve(lines.size());

  bool in_block = false;
  std::size_t block_parent_indent = 0;
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::string_view line = lines[n];
    const std::size_t ind = detail::indent_of(line);
    const bool blank = ind == line.size();

    if (in_block) {
      if (blank) {
        doc.line_kinds.push_back(LineKind::blank);
        doc.code_lines.emplace_back();
        ++doc.blank_line_count;
        continue;
      }
      if (ind > block_parent_indent) {
        doc.line_kinds.push_back(LineKind::code);
        doc.code_lines.emplace_back(detail::rtrim(line));
        continue;
      }
      in_block = false;
    }

    if (blank) {
      doc.line_kinds.push_back(LineKind::blank);
      doc.code_lines.emplace_back();
      ++doc.blank_line_count;
    } else if (line[ind] == '#') {
      doc.line_kinds.push_back(LineKind::comment);
      doc.code_lines.emplace_back();
      doc.comments.push_back({n, std::string(line.substr(ind + 1))});
      ++doc.comment_line_count;
    } else {
      std::string_view code = line;
      const std::size_t hash = detail::find_inline_comment(line);
      if (hash != std::string_view::npos) {
        doc.comments.push_back({n, std::string(line.substr(hash + 1))});
        code = line.substr(0, hash);
      }
      code = detail::rtrim(code);
      doc.line_kinds.push_back(LineKind::code);
      doc.code_lines.emplace_back(code);
      if (detail::opens_block_scalar(code)) {
        in_block = true;
        block_parent_indent = ind;
      }
    }
  }

  try {
    doc.nodes = YAML::LoadAll(doc.text);
  } catch (const YAML::Exception& e) {
    doc.nodes.clear();
    doc.parsed = false;
    doc.parse_error = e.what();
    // Unparseable files keep their line counts but contribute no comments.
    doc.comments.clear();
  }
  return doc;
}

}  // namespace iacq

#pragma once

#include <stdexcept>
#include <string>

namespace iacq {

/// Base of every exception the library throws.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class CatalogError : public Error {
public:
  enum class Kind { duplicate, bad_category, bad_rule };

  CatalogError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

class IngestError : public Error {
public:
  enum class Kind { io, registry, parse };

  IngestError(Kind kind, const std::string& what, int retry_after_s = -1)
      : Error(what), kind_(kind), retry_after_s_(retry_after_s) {}
  Kind kind() const noexcept { return kind_; }
  // Seconds suggested by the registry before retrying; -1 when unknown.
  int retry_after() const noexcept { return retry_after_s_; }

private:
  Kind kind_;
  int retry_after_s_;
};

class ScoringError : public Error {
public:
  enum class Kind { inconsistent_counts, empty_corpus, baseline_stale, incomplete_categories };

  ScoringError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

class TrendError : public Error {
public:
  enum class Kind { empty, underdetermined };

  TrendError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

/// Invalid user configuration (weights, flags, unreadable config files).
class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace iacq

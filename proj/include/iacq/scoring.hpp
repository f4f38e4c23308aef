#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "iacq/catalog.hpp"
#include "iacq/category.hpp"
#include "iacq/error.hpp"
#include "iacq/extractor.hpp"
#include "iacq/timeutil.hpp"

namespace iacq {

/// Per-attribute rates: occurrences per 100 lines of code for per_100_loc
/// attributes, the raw value otherwise.
struct RateVector {
  std::string repo_id;
  std::map<std::string, double> rates;
  std::vector<std::string> warnings;

  double at(const std::string& id) const {
    auto it = rates.find(id);
    return it == rates.end() ? 0.0 : it->second;
  }
};

/// Corpus-wide maximum rate per attribute.
struct NormalizationBaseline {
  std::map<std::string, double> maxima;
  std::int64_t corpus_size = 0;
  Timestamp created_at{};

  bool operator==(const NormalizationBaseline&) const = default;
};

struct WeightConfig {
  double default_weight = 1.0;
  std::map<std::string, double> weights;

  double weight(const std::string& id) const {
    auto it = weights.find(id);
    return it == weights.end() ? default_weight : it->second;
  }

  /// Throws ConfigError when any weight lies outside [0,1].
  void check() const {
    auto bad = [](double w) { return !(w >= 0.0 && w <= 1.0); };
    if (bad(default_weight)) throw ConfigError("weight out of range: default_weight");
    for (const auto& [id, w] : weights) {
      if (bad(w)) throw ConfigError("weight out of range: " + id);
    }
  }
};

struct RepoScore {
  std::string repo_id;
  std::map<std::string, double> normalized;
  std::map<CategoryId, double> category_scores;
  double total_score = 0.0;
  std::string baseline_ref;
  std::string weights_ref;
  std::vector<std::string> warnings;
};

/// Occurrence counts to rates. A zero-LOC repository with nonzero
/// occurrence counts is inconsistent and rejected.
inline RateVector compute_rates(const AttributeCounts& counts, const Catalog& catalog) {
  RateVector out;
  out.repo_id = counts.repo_id;
  bool zero_loc_warned = false;
  for (const auto& a : catalog.attributes) {
    const double raw = counts.at(a.id);
    if (a.scaling == Scaling::raw) {
      out.rates[a.id] = raw;
      continue;
    }
    if (counts.loc <= 0) {
      if (raw != 0.0) {
        throw ScoringError(ScoringError::Kind::inconsistent_counts,
                           counts.repo_id + ": attribute " + a.id + " is nonzero but loc is 0");
      }
      if (!zero_loc_warned) out.warnings.push_back(counts.repo_id + ": loc is 0; per-100-LOC rates set to 0");
      zero_loc_warned = true;
      out.rates[a.id] = 0.0;
      continue;
    }
    out.rates[a.id] = raw * 100.0 / static_cast<double>(counts.loc);
  }
  return out;
}

inline NormalizationBaseline build_baseline(const std::vector<RateVector>& corpus_rates, const Catalog& catalog,
                                            Timestamp created_at = Timestamp{}) {
  if (corpus_rates.empty()) throw ScoringError(ScoringError::Kind::empty_corpus, "cannot build a baseline from an empty corpus");
  NormalizationBaseline b;
  b.corpus_size = static_cast<std::int64_t>(corpus_rates.size());
  b.created_at = created_at;
  for (const auto& a : catalog.attributes) b.maxima[a.id] = 0.0;
  for (const auto& rv : corpus_rates) {
    for (const auto& [id, r] : rv.rates) {
      auto& m = b.maxima[id];
      m = std::max(m, r);
    }
  }
  return b;
}

/// Merges two baselines by taking the per-attribute maximum.
inline NormalizationBaseline merge_baselines(const NormalizationBaseline& a, const NormalizationBaseline& b) {
  NormalizationBaseline out = a;
  out.corpus_size = a.corpus_size + b.corpus_size;
  out.created_at = std::max(a.created_at, b.created_at);
  for (const auto& [id, m] : b.maxima) {
    auto& slot = out.maxima[id];
    slot = std::max(slot, m);
  }
  return out;
}

/// Maps a rate into [0,1] against the corpus maximum. Negative attributes are
/// inverted: 1 - rate/max. A zero maximum means nobody in the corpus shows
/// the attribute: positive -> 0, negative -> 1.
///
/// `tolerance` absorbs rates that exceed the maximum only by serialization
/// rounding; anything larger throws ScoringError(baseline_stale).
inline double normalize(double rate, double max, Polarity polarity, double tolerance = 0.0) {
  if (rate > max) {
    if (rate - max > tolerance) {
      throw ScoringError(ScoringError::Kind::baseline_stale, "rate exceeds baseline maximum");
    }
    rate = max;
  }
  if (max <= 0.0) return polarity == Polarity::positive ? 0.0 : 1.0;
  const double ratio = std::clamp(rate / max, 0.0, 1.0);
  return polarity == Polarity::positive ? ratio : 1.0 - ratio;
}

/// Weighted sum of a category's normalized members divided by the member
/// count. Sub-unit weights therefore cap the category below 1.
inline double category_score(const std::map<std::string, double>& normalized, const Catalog& catalog,
                             const WeightConfig& weights, CategoryId category,
                             std::vector<std::string>* warnings = nullptr) {
  const auto members = catalog.members(category);
  if (members.empty()) {
    if (warnings) warnings->push_back("category " + std::string(to_string(category)) + " has no attributes; scored 0");
    return 0.0;
  }
  double positive_sum = 0.0;
  double negative_sum = 0.0;
  for (const auto* a : members) {
    auto it = normalized.find(a->id);
    const double nm = it == normalized.end() ? 0.0 : it->second;
    const double term = nm * weights.weight(a->id);
    (a->polarity == Polarity::positive ? positive_sum : negative_sum) += term;
  }
  return (positive_sum + negative_sum) / static_cast<double>(members.size());
}

inline double total_score(const std::map<CategoryId, double>& category_scores) {
  double total = 0.0;
  for (auto c : kAllCategories) {
    auto it = category_scores.find(c);
    if (it == category_scores.end()) {
      throw ScoringError(ScoringError::Kind::incomplete_categories,
                         "missing category score: " + std::string(to_string(c)));
    }
    total += it->second;
  }
  return total;
}

/// Categories whose weight sum is below their member count, i.e. whose
/// attainable maximum is below 1.
inline std::vector<std::string> weight_lint(const Catalog& catalog, const WeightConfig& weights) {
  std::vector<std::string> out;
  for (auto c : kAllCategories) {
    const auto members = catalog.members(c);
    double sum = 0.0;
    for (const auto* a : members) sum += weights.weight(a->id);
    if (!members.empty() && sum < static_cast<double>(members.size())) {
      out.push_back("category " + std::string(to_string(c)) + ": weights sum to " + std::to_string(sum) +
                    " over " + std::to_string(members.size()) + " members; maximum attainable score is below 1");
    }
  }
  return out;
}

inline RepoScore score_rates(const RateVector& rates, const Catalog& catalog, const NormalizationBaseline& baseline,
                             const WeightConfig& weights, double stale_tolerance = 0.0) {
  RepoScore score;
  score.repo_id = rates.repo_id;
  score.warnings = rates.warnings;
  for (const auto& a : catalog.attributes) {
    auto it = baseline.maxima.find(a.id);
    const double max = it == baseline.maxima.end() ? 0.0 : it->second;
    try {
      score.normalized[a.id] = normalize(rates.at(a.id), max, a.polarity, stale_tolerance);
    } catch (const ScoringError& e) {
      throw ScoringError(e.kind(), rates.repo_id + ": attribute " + a.id + " rate exceeds baseline maximum");
    }
  }
  for (auto c : kAllCategories) {
    score.category_scores[c] = category_score(score.normalized, catalog, weights, c, &score.warnings);
  }
  score.total_score = total_score(score.category_scores);
  return score;
}

/// counts -> rates -> normalized values -> category scores -> total.
inline RepoScore score_repo(const AttributeCounts& counts, const Catalog& catalog, const NormalizationBaseline& baseline,
                            const WeightConfig& weights, double stale_tolerance = 0.0) {
  return score_rates(compute_rates(counts, catalog), catalog, baseline, weights, stale_tolerance);
}

}  // namespace iacq

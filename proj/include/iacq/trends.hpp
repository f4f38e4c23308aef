#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "iacq/category.hpp"
#include "iacq/error.hpp"
#include "iacq/scoring.hpp"
#include "iacq/timeutil.hpp"

namespace iacq {

inline constexpr std::string_view kTotalSeries = "total";

/// Series ids in report order: total first, then the nine categories.
inline std::vector<std::string> trend_series() {
  std::vector<std::string> out{std::string(kTotalSeries)};
  for (auto c : kAllCategories) out.emplace_back(to_string(c));
  return out;
}

struct TrendPoint {
  std::int64_t bucket_index = 0;
  std::string bucket_label;  // "YYYY-H1" | "YYYY-H2"
  std::int64_t repo_count = 0;
  std::map<std::string, double> mean_scores;  // empty when repo_count == 0
};

struct TrendFit {
  std::string series;
  double slope = 0.0;  // per six-month bucket
  double intercept = 0.0;
  std::int64_t n_points = 0;
  double r_squared = 0.0;
};

/// Half-year key: year * 2 + (0 for Jan-Jun, 1 for Jul-Dec).
inline std::int64_t half_year_key(Timestamp t) {
  const std::tm tm = to_utc_tm(t);
  return static_cast<std::int64_t>(tm.tm_year + 1900) * 2 + (tm.tm_mon >= 6 ? 1 : 0);
}

inline std::string half_year_label(std::int64_t key) {
  const std::int64_t year = key >= 0 ? key / 2 : (key - 1) / 2;
  return std::to_string(year) + (key - year * 2 == 0 ? "-H1" : "-H2");
}

/// Groups scored repositories into contiguous six-month buckets spanning the
/// earliest to the latest timestamp. Means are unweighted over repositories.
inline std::vector<TrendPoint> bucketize(const std::vector<std::pair<RepoScore, Timestamp>>& scored) {
  if (scored.empty()) throw TrendError(TrendError::Kind::empty, "no scored repositories to bucket");

  std::int64_t lo = half_year_key(scored.front().second);
  std::int64_t hi = lo;
  for (const auto& [_, t] : scored) {
    const auto k = half_year_key(t);
    lo = std::min(lo, k);
    hi = std::max(hi, k);
  }

  std::vector<TrendPoint> points(static_cast<std::size_t>(hi - lo + 1));
  std::vector<std::map<std::string, double>> sums(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    points[i].bucket_index = static_cast<std::int64_t>(i);
    points[i].bucket_label = half_year_label(lo + static_cast<std::int64_t>(i));
  }
  for (const auto& [score, t] : scored) {
    const auto i = static_cast<std::size_t>(half_year_key(t) - lo);
    ++points[i].repo_count;
    sums[i][std::string(kTotalSeries)] += score.total_score;
    for (auto c : kAllCategories) {
      auto it = score.category_scores.find(c);
      sums[i][std::string(to_string(c))] += it == score.category_scores.end() ? 0.0 : it->second;
    }
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].repo_count == 0) continue;
    for (const auto& [series, sum] : sums[i]) {
      points[i].mean_scores[series] = sum / static_cast<double>(points[i].repo_count);
    }
  }
  return points;
}

/// Ordinary least squares of bucket mean on bucket index, skipping empty
/// buckets.
inline TrendFit ols_fit(const std::vector<TrendPoint>& points, const std::string& series) {
  std::vector<std::pair<double, double>> xy;
  for (const auto& p : points) {
    if (p.repo_count <= 0) continue;
    auto it = p.mean_scores.find(series);
    if (it == p.mean_scores.end()) continue;
    xy.emplace_back(static_cast<double>(p.bucket_index), it->second);
  }
  if (xy.size() < 2) {
    throw TrendError(TrendError::Kind::underdetermined,
                     "series " + series + ": need at least 2 non-empty buckets, have " + std::to_string(xy.size()));
  }

  const double n = static_cast<double>(xy.size());
  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& [x, y] : xy) {
    mean_x += x;
    mean_y += y;
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : xy) {
    sxx += (x - mean_x) * (x - mean_x);
    sxy += (x - mean_x) * (y - mean_y);
    syy += (y - mean_y) * (y - mean_y);
  }
  if (sxx == 0.0) {
    throw TrendError(TrendError::Kind::underdetermined, "series " + series + ": all points share one bucket");
  }

  TrendFit fit;
  fit.series = series;
  fit.n_points = static_cast<std::int64_t>(xy.size());
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  double ss_res = 0.0;
  for (const auto& [x, y] : xy) {
    const double r = y - (fit.intercept + fit.slope * x);
    ss_res += r * r;
  }
  // A flat series is fitted exactly by a flat line.
  fit.r_squared = syy == 0.0 ? 1.0 : std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  return fit;
}

}  // namespace iacq

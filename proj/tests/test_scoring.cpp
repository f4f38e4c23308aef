#include <gtest/gtest.h>

#include <numeric>

#include "iacq/catalog.hpp"
#include "iacq/extractor.hpp"
#include "iacq/scoring.hpp"
#include "support/synthetic.hpp"

namespace iacq {
namespace {

const Catalog& catalog() {
  static const Catalog c = load_default_catalog();
  return c;
}

std::string attr(const std::string& id, const std::string& category, const std::string& polarity = "positive",
                 const std::string& scaling = "per_100_loc") {
  return "  - id: " + id + "\n    category: " + category + "\n    polarity: " + polarity + "\n    scaling: " + scaling +
         "\n    rule: {kind: key_occurrence, payload: [" + id + "]}\n";
}

// Three automation members: a, b positive and c negative.
Catalog three_member_catalog() {
  return load_catalog("attributes:\n" + attr("a", "automation") + attr("b", "automation") +
                      attr("c", "automation", "negative"));
}

AttributeCounts counts(std::int64_t loc, std::map<std::string, double> values) {
  AttributeCounts c;
  c.repo_id = "r";
  c.loc = loc;
  c.values = std::move(values);
  return c;
}

// -- compute_rates ----------------------------------------------------------

TEST(Rates, PerHundredLoc) {
  const auto r = compute_rates(counts(250, {{"loops", 5}}), catalog());
  EXPECT_DOUBLE_EQ(r.at("loops"), 2.0);
}

TEST(Rates, ZeroCount) {
  EXPECT_EQ(compute_rates(counts(250, {}), catalog()).at("loops"), 0.0);
  EXPECT_EQ(compute_rates(counts(1, {}), catalog()).at("loops"), 0.0);
}

TEST(Rates, RawPassthrough) {
  EXPECT_EQ(compute_rates(counts(250, {{"stars", 7}}), catalog()).at("stars"), 7.0);
}

TEST(Rates, ZeroLocWithOccurrencesIsInconsistent) {
  try {
    compute_rates(counts(0, {{"loops", 1}}), catalog());
    FAIL();
  } catch (const ScoringError& e) {
    EXPECT_EQ(e.kind(), ScoringError::Kind::inconsistent_counts);
  }
}

TEST(Rates, ZeroLocWithOnlyRawValuesIsFine) {
  const auto r = compute_rates(counts(0, {{"stars", 3}}), catalog());
  EXPECT_EQ(r.at("stars"), 3.0);
  EXPECT_EQ(r.at("loops"), 0.0);
  EXPECT_EQ(r.warnings.size(), 1u);
}

// -- baseline ---------------------------------------------------------------

RateVector rates(std::map<std::string, double> r) {
  RateVector v;
  v.rates = std::move(r);
  return v;
}

TEST(Baseline, ColumnMax) {
  const auto b = build_baseline({rates({{"loops", 1.0}}), rates({{"loops", 3.0}}), rates({{"loops", 2.0}})}, catalog());
  EXPECT_EQ(b.maxima.at("loops"), 3.0);
  EXPECT_EQ(b.corpus_size, 3);
}

TEST(Baseline, SingletonEqualsRates) {
  const auto rv = compute_rates(extract(make_snapshot("n", {{"site.yml", testing::kNginxPlaybook}}, {}, std::nullopt),
                                        catalog()),
                                catalog());
  const auto b = build_baseline({rv}, catalog());
  EXPECT_EQ(b.maxima, rv.rates);
}

TEST(Baseline, AllZeroColumn) {
  const auto b = build_baseline({rates({}), rates({})}, catalog());
  EXPECT_EQ(b.maxima.at("vault"), 0.0);
  EXPECT_EQ(b.maxima.size(), catalog().attributes.size());
}

TEST(Baseline, EmptyCorpus) {
  try {
    build_baseline({}, catalog());
    FAIL();
  } catch (const ScoringError& e) {
    EXPECT_EQ(e.kind(), ScoringError::Kind::empty_corpus);
  }
}

TEST(Baseline, MergeIsColumnMaxOfUnion) {
  const auto a = build_baseline({rates({{"loops", 1.0}, {"vault", 4.0}})}, catalog());
  const auto b = build_baseline({rates({{"loops", 3.0}}), rates({{"vault", 2.0}})}, catalog());
  const auto m = merge_baselines(a, b);
  EXPECT_EQ(m.maxima.at("loops"), 3.0);
  EXPECT_EQ(m.maxima.at("vault"), 4.0);
  EXPECT_EQ(m.corpus_size, 3);
  EXPECT_EQ(m, merge_baselines(b, a));
}

// -- normalize --------------------------------------------------------------

TEST(Normalize, NegativeZeroRate) { EXPECT_EQ(normalize(0, 5, Polarity::negative), 1.0); }
TEST(Normalize, NegativeFullInversion) { EXPECT_EQ(normalize(5, 5, Polarity::negative), 0.0); }
TEST(Normalize, NegativePartial) { EXPECT_DOUBLE_EQ(normalize(2, 5, Polarity::negative), 0.6); }
TEST(Normalize, PositivePartial) { EXPECT_DOUBLE_EQ(normalize(2, 5, Polarity::positive), 0.4); }

TEST(Normalize, ZeroMaximum) {
  EXPECT_EQ(normalize(0, 0, Polarity::positive), 0.0);
  EXPECT_EQ(normalize(0, 0, Polarity::negative), 1.0);
}

TEST(Normalize, StaleBaseline) {
  try {
    normalize(6, 5, Polarity::positive);
    FAIL();
  } catch (const ScoringError& e) {
    EXPECT_EQ(e.kind(), ScoringError::Kind::baseline_stale);
  }
  EXPECT_THROW(normalize(1, 0, Polarity::negative), ScoringError);
  EXPECT_EQ(normalize(5 + 1e-9, 5, Polarity::positive, 1e-6), 1.0);
}

// -- category / total -------------------------------------------------------

TEST(CategoryScore, PerfectScore) {
  const auto cat = three_member_catalog();
  EXPECT_DOUBLE_EQ(category_score({{"a", 1.0}, {"b", 1.0}, {"c", 1.0}}, cat, {}, CategoryId::automation), 1.0);
}

TEST(CategoryScore, MixedPolarity) {
  const auto cat = three_member_catalog();
  EXPECT_DOUBLE_EQ(category_score({{"a", 0.5}, {"b", 1.0}, {"c", 0.25}}, cat, {}, CategoryId::automation),
                   (0.5 + 1.0 + 0.25) / 3.0);
}

TEST(CategoryScore, ZeroWeightsAnnihilate) {
  const auto cat = three_member_catalog();
  WeightConfig w;
  w.default_weight = 0.0;
  EXPECT_EQ(category_score({{"a", 0.5}, {"b", 1.0}, {"c", 0.25}}, cat, w, CategoryId::automation), 0.0);
}

TEST(CategoryScore, DividesByMemberCountNotWeightSum) {
  const auto cat = three_member_catalog();
  WeightConfig w;
  w.weights = {{"a", 0.5}};
  EXPECT_DOUBLE_EQ(category_score({{"a", 1.0}, {"b", 1.0}, {"c", 1.0}}, cat, w, CategoryId::automation), 2.5 / 3.0);
  const auto lint = weight_lint(cat, w);
  ASSERT_EQ(lint.size(), 1u);
  EXPECT_NE(lint[0].find("automation"), std::string::npos);
}

TEST(CategoryScore, EmptyCategoryWarns) {
  const auto cat = three_member_catalog();
  std::vector<std::string> warnings;
  EXPECT_EQ(category_score({}, cat, {}, CategoryId::metadata, &warnings), 0.0);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("metadata"), std::string::npos);
}

TEST(CategoryScore, MembershipsContributeTheSameValue) {
  const auto cat = load_catalog("attributes:\n" + attr("a", "automation") +
                                "  - id: shared\n    category: code_integration\n    memberships: [automation]\n"
                                "    rule: {kind: key_occurrence, payload: [x]}\n");
  const std::map<std::string, double> nm = {{"a", 0.2}, {"shared", 0.6}};
  EXPECT_DOUBLE_EQ(category_score(nm, cat, {}, CategoryId::automation), 0.4);
  EXPECT_DOUBLE_EQ(category_score(nm, cat, {}, CategoryId::code_integration), 0.6);
}

std::map<CategoryId, double> nine(std::vector<double> v) {
  std::map<CategoryId, double> m;
  for (std::size_t i = 0; i < kCategoryCount; ++i) m[kAllCategories[i]] = v[i];
  return m;
}

TEST(TotalScore, UpperEnd) { EXPECT_EQ(total_score(nine(std::vector<double>(9, 1.0))), 9.0); }
TEST(TotalScore, LowerEnd) { EXPECT_EQ(total_score(nine(std::vector<double>(9, 0.0))), 0.0); }
TEST(TotalScore, Summation) { EXPECT_EQ(total_score(nine({1.0, 0.5, 0.25, 0, 0, 0, 0, 0, 0})), 1.75); }

TEST(TotalScore, MissingCategory) {
  auto m = nine(std::vector<double>(9, 1.0));
  m.erase(CategoryId::automation);
  try {
    total_score(m);
    FAIL();
  } catch (const ScoringError& e) {
    EXPECT_EQ(e.kind(), ScoringError::Kind::incomplete_categories);
  }
}

TEST(Weights, OutOfRangeIsConfigError) {
  WeightConfig w;
  w.weights = {{"loops", 1.5}};
  EXPECT_THROW(w.check(), ConfigError);
  w.weights = {{"loops", -0.1}};
  EXPECT_THROW(w.check(), ConfigError);
  w.weights = {{"loops", 0.0}, {"vault", 1.0}};
  EXPECT_NO_THROW(w.check());
}

// -- score_repo -------------------------------------------------------------

TEST(ScoreRepo, NginxAgainstItself) {
  const auto c = extract(make_snapshot("nginx", {{"site.yml", testing::kNginxPlaybook}}, {}, std::nullopt), catalog());
  const auto baseline = build_baseline({compute_rates(c, catalog())}, catalog());
  const auto s = score_repo(c, catalog(), baseline, {});
  for (const auto& a : catalog().attributes) {
    const double nm = s.normalized.at(a.id);
    if (a.polarity == Polarity::negative) {
      EXPECT_EQ(nm, 1.0) << a.id;
    } else if (c.at(a.id) > 0.0) {
      EXPECT_EQ(nm, 1.0) << a.id;
    } else {
      EXPECT_EQ(nm, 0.0) << a.id;
    }
  }
}

TEST(ScoreRepo, AllWeightsZero) {
  testing::RepoGenerator gen(1);
  const auto c = extract(gen.snapshot("r"), catalog());
  WeightConfig w;
  w.default_weight = 0.0;
  const auto s = score_repo(c, catalog(), build_baseline({compute_rates(c, catalog())}, catalog()), w);
  for (const auto& [_, v] : s.category_scores) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(s.total_score, 0.0);
}

TEST(ScoreRepo, IdenticalReposScoreIdentically) {
  testing::RepoGenerator gen(2);
  auto snap = gen.snapshot("a");
  auto twin = snap;
  twin.repo_id = "b";
  const auto ca = extract(snap, catalog());
  const auto cb = extract(twin, catalog());
  const auto base = build_baseline({compute_rates(ca, catalog()), compute_rates(cb, catalog())}, catalog());
  const auto sa = score_repo(ca, catalog(), base, {});
  const auto sb = score_repo(cb, catalog(), base, {});
  EXPECT_EQ(sa.normalized, sb.normalized);
  EXPECT_EQ(sa.category_scores, sb.category_scores);
  EXPECT_EQ(sa.total_score, sb.total_score);
}

// -- properties -------------------------------------------------------------

struct Corpus {
  std::vector<AttributeCounts> counts;
  NormalizationBaseline baseline;
};

Corpus random_corpus(std::uint64_t seed, int n) {
  testing::RepoGenerator gen(seed);
  Corpus c;
  std::vector<RateVector> rv;
  for (int i = 0; i < n; ++i) {
    c.counts.push_back(extract(gen.snapshot("r" + std::to_string(i)), catalog()));
    rv.push_back(compute_rates(c.counts.back(), catalog()));
  }
  c.baseline = build_baseline(rv, catalog());
  return c;
}

TEST(ScoringProperty, BoundsAndBaselineDominance) {
  const auto corpus = random_corpus(31, 60);
  for (const auto& c : corpus.counts) {
    RepoScore s;
    ASSERT_NO_THROW(s = score_repo(c, catalog(), corpus.baseline, {}));
    for (const auto& [id, v] : s.normalized) {
      EXPECT_GE(v, 0.0) << id;
      EXPECT_LE(v, 1.0) << id;
    }
    for (const auto& [cat, v] : s.category_scores) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_GE(s.total_score, 0.0);
    EXPECT_LE(s.total_score, 9.0);
  }
}

TEST(ScoringProperty, EqualWeightsGiveArithmeticMean) {
  const auto corpus = random_corpus(37, 30);
  for (const auto& c : corpus.counts) {
    const auto s = score_repo(c, catalog(), corpus.baseline, {});
    for (auto cat : kAllCategories) {
      const auto members = catalog().members(cat);
      double sum = 0.0;
      for (const auto* a : members) sum += s.normalized.at(a->id);
      EXPECT_NEAR(s.category_scores.at(cat), sum / static_cast<double>(members.size()), 1e-12);
    }
  }
}

TEST(ScoringProperty, DoublingLocAndCountsIsBitIdentical) {
  const auto corpus = random_corpus(41, 30);
  for (const auto& c : corpus.counts) {
    auto doubled = c;
    doubled.loc *= 2;
    for (const auto& a : catalog().attributes) {
      if (a.scaling == Scaling::per_100_loc) doubled.values[a.id] *= 2;
    }
    EXPECT_EQ(compute_rates(c, catalog()).rates, compute_rates(doubled, catalog()).rates);
    const auto s1 = score_repo(c, catalog(), corpus.baseline, {});
    const auto s2 = score_repo(doubled, catalog(), corpus.baseline, {});
    EXPECT_EQ(s1.normalized, s2.normalized);
    EXPECT_EQ(s1.category_scores, s2.category_scores);
    EXPECT_EQ(s1.total_score, s2.total_score);
  }
}

TEST(ScoringProperty, NegativeRateStrictlyLowersCategory) {
  const auto corpus = random_corpus(43, 20);
  auto baseline = corpus.baseline;
  for (const auto& id : {"deprecated_keywords", "deprecated_modules", "suspicious_comments", "passwd_usage"}) {
    baseline.maxima[id] = std::max(baseline.maxima[id], 10.0);
  }
  for (const auto& c : corpus.counts) {
    if (c.loc == 0) continue;
    for (const auto& id : {"deprecated_keywords", "deprecated_modules", "suspicious_comments", "passwd_usage"}) {
      auto worse = c;
      const double rate = compute_rates(c, catalog()).at(id);
      if (rate + 1.0 > 10.0) continue;
      worse.values[id] += static_cast<double>(worse.loc) / 100.0;  // +1 per 100 LOC
      const auto a = score_repo(c, catalog(), baseline, {});
      const auto b = score_repo(worse, catalog(), baseline, {});
      EXPECT_LT(b.category_scores.at(CategoryId::code_security), a.category_scores.at(CategoryId::code_security)) << id;
    }
  }
}

TEST(ScoringProperty, PositiveRateWeaklyRaisesCategory) {
  const auto corpus = random_corpus(47, 20);
  auto baseline = corpus.baseline;
  baseline.maxima["loops"] = 1000.0;
  for (const auto& c : corpus.counts) {
    if (c.loc == 0) continue;
    auto better = c;
    better.values["loops"] += 1;
    const auto a = score_repo(c, catalog(), baseline, {});
    const auto b = score_repo(better, catalog(), baseline, {});
    EXPECT_GE(b.category_scores.at(CategoryId::code_sophistication),
              a.category_scores.at(CategoryId::code_sophistication));
  }
}

}  // namespace
}  // namespace iacq

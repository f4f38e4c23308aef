#include <gtest/gtest.h>

#include <sys/wait.h>

#include "iacq/pipeline.hpp"
#include "support/synthetic.hpp"

namespace iacq {
namespace {

namespace fs = std::filesystem;
using testing::read_file;
using testing::TempDir;
using testing::write_file;

struct Capture {
  std::ostringstream out, err;
  Streams streams() { return {out, err}; }
};

fs::path copy_corpus(const TempDir& dir) {
  const auto dst = dir / "corpus";
  fs::copy(testing::fixture_dir() + "/corpus", dst, fs::copy_options::recursive);
  return dst;
}

RunConfig config_for(const fs::path& out) {
  RunConfig cfg;
  cfg.output_dir = out;
  return cfg;
}

std::map<std::string, std::string> dir_bytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_file(e.path());
  }
  return out;
}

// Runs scan, baseline, score and trends over `corpus` into `out`.
void run_all(const fs::path& corpus, const fs::path& out) {
  Capture cap;
  auto cfg = config_for(out);
  cfg.csv_path = out / "trends.csv";
  ASSERT_EQ(cmd_scan(corpus, cfg, cap.streams()), kExitOk) << cap.err.str();
  ASSERT_EQ(cmd_baseline(out / "counts", cfg, cap.streams()), kExitOk) << cap.err.str();
  ASSERT_EQ(cmd_score(out / "counts", out / "baseline.json", cfg, cap.streams()), kExitOk) << cap.err.str();
  ASSERT_EQ(cmd_trends(out / "scores.jsonl", corpus, cfg, cap.streams()), kExitOk) << cap.err.str();
}

TEST(Pipeline, ScanCorpusWritesOneCountsFilePerRepo) {
  TempDir dir;
  const auto corpus = copy_corpus(dir);
  Capture cap;
  ASSERT_EQ(cmd_scan(corpus, config_for(dir / "out"), cap.streams()), kExitOk);
  const auto files = dir_bytes(dir / "out" / "counts");
  ASSERT_EQ(files.size(), 3u);
  EXPECT_TRUE(files.count("role_alpha.json"));
  EXPECT_NE(cap.out.str().find("scanned 3 of 3"), std::string::npos);
}

TEST(Pipeline, ScanSingleNginxMatchesExtractor) {
  TempDir dir;
  Capture cap;
  ASSERT_EQ(cmd_scan(testing::fixture_dir() + "/nginx", config_for(dir.path()), cap.streams()), kExitOk);
  const auto c = counts_from_json(nlohmann::json::parse(read_file(dir / "counts/nginx.json")));
  const auto direct = extract(scan_repo(testing::fixture_dir() + "/nginx"), load_default_catalog());
  EXPECT_EQ(c.loc, 8);
  for (const auto& [id, v] : direct.values) EXPECT_NEAR(c.at(id), v, 5e-7) << id;
}

TEST(Pipeline, EmptyCorpusIsInputError) {
  TempDir dir;
  fs::create_directories(dir / "empty");
  Capture cap;
  EXPECT_EQ(cmd_scan(dir / "empty", config_for(dir / "out"), cap.streams()), kExitInput);
  EXPECT_NE(cap.err.str().find("no repositories found"), std::string::npos);
  EXPECT_EQ(cmd_scan(dir / "missing", config_for(dir / "out"), cap.streams()), kExitInput);
}

TEST(Pipeline, UnwritableOutputIsConfigError) {
  TempDir dir;
  write_file(dir / "blocker", "x");
  Capture cap;
  EXPECT_EQ(cmd_scan(testing::fixture_dir() + "/nginx", config_for(dir / "blocker" / "out"), cap.streams()),
            kExitConfig);
}

TEST(Pipeline, ScanRerunIsByteIdentical) {
  TempDir dir;
  const auto corpus = copy_corpus(dir);
  Capture cap;
  auto cfg = config_for(dir / "a");
  ASSERT_EQ(cmd_scan(corpus, cfg, cap.streams()), kExitOk);
  cfg.output_dir = dir / "b";
  cfg.jobs = 4;
  ASSERT_EQ(cmd_scan(corpus, cfg, cap.streams()), kExitOk);
  EXPECT_EQ(dir_bytes(dir / "a"), dir_bytes(dir / "b"));
}

TEST(Pipeline, BaselineCorpusSize) {
  TempDir dir;
  const auto corpus = copy_corpus(dir);
  Capture cap;
  const auto cfg = config_for(dir / "out");
  ASSERT_EQ(cmd_scan(corpus, cfg, cap.streams()), kExitOk);
  ASSERT_EQ(cmd_baseline(dir / "out/counts", cfg, cap.streams()), kExitOk);
  EXPECT_NE(cap.out.str().find("corpus_size 3"), std::string::npos);
  const auto b = baseline_from_json(nlohmann::json::parse(read_file(dir / "out/baseline.json")));
  EXPECT_EQ(b.corpus_size, 3);
  EXPECT_EQ(b.maxima.size(), load_default_catalog().attributes.size());
}

TEST(Pipeline, SingletonBaselineEqualsRates) {
  TempDir dir;
  Capture cap;
  const auto cfg = config_for(dir.path());
  ASSERT_EQ(cmd_scan(testing::fixture_dir() + "/nginx", cfg, cap.streams()), kExitOk);
  ASSERT_EQ(cmd_baseline(dir / "counts", cfg, cap.streams()), kExitOk);
  const auto catalog = load_default_catalog();
  const auto counts = counts_from_json(nlohmann::json::parse(read_file(dir / "counts/nginx.json")));
  const auto b = baseline_from_json(nlohmann::json::parse(read_file(dir / "baseline.json")));
  EXPECT_EQ(b.maxima, compute_rates(counts, catalog).rates);
}

TEST(Pipeline, BaselineErrors) {
  TempDir dir;
  Capture cap;
  fs::create_directories(dir / "counts");
  EXPECT_EQ(cmd_baseline(dir / "counts", config_for(dir.path()), cap.streams()), kExitInput);
  write_file(dir / "counts/broken.json", "{\"repo_id\": ");
  EXPECT_EQ(cmd_baseline(dir / "counts", config_for(dir.path()), cap.streams()), kExitInput);
  EXPECT_NE(cap.err.str().find("broken.json"), std::string::npos);
}

TEST(Pipeline, ScoresMatchInProcessComposition) {
  TempDir dir;
  const auto corpus = copy_corpus(dir);
  const auto out = dir / "out";
  run_all(corpus, out);
  const auto catalog = load_default_catalog();
  std::vector<AttributeCounts> counts;
  std::vector<RateVector> rates;
  for (const char* repo : {"role_alpha", "role_beta", "role_gamma"}) {
    const auto root = corpus / repo;
    counts.push_back(extract(scan_repo(root, root / "galaxy_meta.json"), catalog));
    rates.push_back(compute_rates(counts.back(), catalog));
  }
  const auto baseline = build_baseline(rates, catalog);

  std::istringstream lines(read_file(out / "scores.jsonl"));
  std::size_t i = 0;
  for (std::string line; std::getline(lines, line); ++i) {
    const auto s = score_from_json(nlohmann::json::parse(line));
    const auto direct = score_repo(counts.at(i), catalog, baseline, {});
    EXPECT_EQ(s.repo_id, direct.repo_id);
    EXPECT_EQ(s.weights_ref, "equal");
    EXPECT_EQ(s.baseline_ref, content_ref(read_file(out / "baseline.json")));
    // Counts files carry 6 decimals, so allow drift just above that.
    EXPECT_NEAR(s.total_score, direct.total_score, 1e-5);
    double sum = 0.0;
    for (const auto& [c, v] : s.category_scores) {
      EXPECT_NEAR(v, direct.category_scores.at(c), 1e-5);
      sum += v;
    }
    EXPECT_NEAR(s.total_score, sum, 1e-5);
  }
  EXPECT_EQ(i, 3u);
}

TEST(Pipeline, WeightsOutOfRangeIsConfigError) {
  TempDir dir;
  Capture cap;
  auto cfg = config_for(dir.path());
  ASSERT_EQ(cmd_scan(testing::fixture_dir() + "/nginx", cfg, cap.streams()), kExitOk);
  ASSERT_EQ(cmd_baseline(dir / "counts", cfg, cap.streams()), kExitOk);
  write_file(dir / "weights.yaml", "weights:\n  loops: 1.5\n");
  cfg.weights_path = dir / "weights.yaml";
  EXPECT_EQ(cmd_score(dir / "counts", dir / "baseline.json", cfg, cap.streams()), kExitConfig);
  EXPECT_NE(cap.err.str().find("weight out of range"), std::string::npos);
}

TEST(Pipeline, WeightsChangeScoresAndRef) {
  TempDir dir;
  const auto corpus = copy_corpus(dir);
  Capture cap;
  auto cfg = config_for(dir.path());
  ASSERT_EQ(cmd_scan(corpus, cfg, cap.streams()), kExitOk);
  ASSERT_EQ(cmd_baseline(dir / "counts", cfg, cap.streams()), kExitOk);
  write_file(dir / "weights.yaml", "default_weight: 0\n");
  cfg.weights_path = dir / "weights.yaml";
  ASSERT_EQ(cmd_score(dir / "counts", dir / "baseline.json", cfg, cap.streams()), kExitOk);
  std::istringstream lines(read_file(dir / "scores.jsonl"));
  for (std::string line; std::getline(lines, line);) {
    const auto s = score_from_json(nlohmann::json::parse(line));
    EXPECT_EQ(s.total_score, 0.0);
    EXPECT_EQ(s.weights_ref, content_ref("default_weight: 0\n"));
  }
  EXPECT_NE(cap.err.str().find("maximum attainable score is below 1"), std::string::npos);
}

TEST(Pipeline, StaleBaselineListsRepos) {
  TempDir dir;
  const auto corpus = copy_corpus(dir);
  Capture cap;
  auto cfg = config_for(dir / "full");
  ASSERT_EQ(cmd_scan(corpus, cfg, cap.streams()), kExitOk);
  // Baseline from role_alpha alone cannot dominate the others.
  fs::create_directories(dir / "alpha_only");
  fs::copy(dir / "full/counts/role_alpha.json", dir / "alpha_only/role_alpha.json");
  cfg.output_dir = dir / "stale";
  ASSERT_EQ(cmd_baseline(dir / "alpha_only", cfg, cap.streams()), kExitOk);
  EXPECT_EQ(cmd_score(dir / "full/counts", dir / "stale/baseline.json", cfg, cap.streams()), kExitStaleBaseline);
  EXPECT_NE(cap.err.str().find("role_beta"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "stale/scores.jsonl"));
}

TEST(Pipeline, BaselineMissingAttributesIsConfigError) {
  TempDir dir;
  Capture cap;
  const auto cfg = config_for(dir.path());
  ASSERT_EQ(cmd_scan(testing::fixture_dir() + "/nginx", cfg, cap.streams()), kExitOk);
  write_file(dir / "baseline.json", R"({"corpus_size": 1, "created_at": "1970-01-01T00:00:00Z", "maxima": {}})");
  EXPECT_EQ(cmd_score(dir / "counts", dir / "baseline.json", cfg, cap.streams()), kExitConfig);
  write_file(dir / "baseline.json", "not json");
  EXPECT_EQ(cmd_score(dir / "counts", dir / "baseline.json", cfg, cap.streams()), kExitConfig);
}

TEST(Pipeline, TrendsOverFixtureCorpus) {
  TempDir dir;
  const auto corpus = copy_corpus(dir);
  run_all(corpus, dir / "out");
  const auto j = nlohmann::json::parse(read_file(dir / "out/trends.json"));
  // role_beta 2018-H1, role_alpha 2020-H1, role_gamma 2021-H1.
  ASSERT_EQ(j["buckets"].size(), 7u);
  EXPECT_EQ(j["buckets"][0]["label"], "2018-H1");
  EXPECT_EQ(j["buckets"][1]["repo_count"], 0);
  EXPECT_EQ(j["fits"].size(), 10u);
  EXPECT_EQ(j["fits"]["total"]["n_points"], 3);
  const auto csv = read_file(dir / "out/trends.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 8);
}

// Writes scores.jsonl plus <repo>.json sidecars forcing the given totals and dates.
void write_forced(const fs::path& dir, const std::vector<std::pair<std::string, double>>& dated_totals) {
  std::string lines;
  int i = 0;
  for (const auto& [date, total] : dated_totals) {
    RepoScore s;
    s.repo_id = "repo" + std::to_string(i++);
    for (auto c : kAllCategories) s.category_scores[c] = total / 9.0;
    s.total_score = total;
    lines += score_to_json(s).dump() + "\n";
    write_file(dir / "meta" / (s.repo_id + ".json"),
               nlohmann::json{{"version_release_times", {date}}}.dump());
  }
  write_file(dir / "scores.jsonl", lines);
}

TEST(Pipeline, TrendsLinearInjectedTotals) {
  TempDir dir;
  write_forced(dir.path(), {{"2019-02-01", 3.0}, {"2019-08-01", 3.5}, {"2020-02-01", 4.0}, {"2020-08-01", 4.5}});
  Capture cap;
  ASSERT_EQ(cmd_trends(dir / "scores.jsonl", dir / "meta", config_for(dir / "out"), cap.streams()), kExitOk);
  const auto j = nlohmann::json::parse(read_file(dir / "out/trends.json"));
  EXPECT_EQ(j["fits"]["total"]["slope"], 0.5);
  EXPECT_EQ(j["fits"]["total"]["intercept"], 3.0);
  EXPECT_EQ(j["fits"]["total"]["r_squared"], 1.0);
}

TEST(Pipeline, TrendsInteriorGap) {
  TempDir dir;
  write_forced(dir.path(), {{"2019-02-01", 3.0}, {"2020-02-01", 4.0}});
  Capture cap;
  ASSERT_EQ(cmd_trends(dir / "scores.jsonl", dir / "meta", config_for(dir / "out"), cap.streams()), kExitOk);
  const auto j = nlohmann::json::parse(read_file(dir / "out/trends.json"));
  ASSERT_EQ(j["buckets"].size(), 3u);
  EXPECT_EQ(j["buckets"][1]["label"], "2019-H2");
  EXPECT_EQ(j["buckets"][1]["repo_count"], 0);
}

TEST(Pipeline, TrendsOneBucketIsUnderdetermined) {
  TempDir dir;
  write_forced(dir.path(), {{"2019-02-01", 3.0}, {"2019-03-01", 4.0}});
  Capture cap;
  EXPECT_EQ(cmd_trends(dir / "scores.jsonl", dir / "meta", config_for(dir / "out"), cap.streams()),
            kExitUnderdetermined);
  const auto j = nlohmann::json::parse(read_file(dir / "out/trends.json"));
  EXPECT_TRUE(j["fits"].empty());
  EXPECT_EQ(j["buckets"][0]["repo_count"], 2);
}

TEST(Pipeline, TrendsWithoutTimestampsIsInputError) {
  TempDir dir;
  write_forced(dir.path(), {{"2019-02-01", 3.0}});
  Capture cap;
  fs::create_directories(dir / "nometa");
  EXPECT_EQ(cmd_trends(dir / "scores.jsonl", dir / "nometa", config_for(dir / "out"), cap.streams()), kExitInput);
  EXPECT_EQ(cmd_trends(dir / "absent.jsonl", dir / "meta", config_for(dir / "out"), cap.streams()), kExitInput);
}

TEST(Pipeline, FullRunIsByteIdentical) {
  TempDir dir;
  const auto corpus = copy_corpus(dir);
  run_all(corpus, dir / "a");
  run_all(corpus, dir / "b");
  const auto a = dir_bytes(dir / "a");
  EXPECT_EQ(a.size(), 7u);  // 3 counts, baseline, scores, trends json + csv
  EXPECT_EQ(a, dir_bytes(dir / "b"));
}

TEST(Pipeline, CatalogValidate) {
  Capture cap;
  EXPECT_EQ(cmd_catalog_validate({}, cap.streams()), kExitOk);
  EXPECT_NE(cap.out.str().find("0 errors"), std::string::npos);
  TempDir dir;
  write_file(dir / "bad.yaml", "attributes:\n  - id: x\n    category: automation\n    rule: {kind: derived, payload: [frobnicate]}\n");
  RunConfig cfg;
  cfg.catalog_path = dir / "bad.yaml";
  EXPECT_EQ(cmd_catalog_validate(cfg, cap.streams()), kExitConfig);
  EXPECT_NE(cap.out.str().find("unknown derived measure"), std::string::npos);
}

// -- the binary -------------------------------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + IACQ_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, EndToEndExitCodes) {
  TempDir dir;
  const auto corpus = copy_corpus(dir);
  const std::string out = (dir / "out").string();
  EXPECT_EQ(run_cli("scan " + corpus.string() + " -o " + out + " -j 2"), 0);
  EXPECT_EQ(run_cli("baseline " + out + "/counts -o " + out), 0);
  EXPECT_EQ(run_cli("score " + out + "/counts --baseline " + out + "/baseline.json -o " + out), 0);
  EXPECT_EQ(run_cli("trends " + out + "/scores.jsonl --metadata " + corpus.string() + " -o " + out), 0);
  EXPECT_TRUE(fs::exists(dir / "out/trends.json"));
  EXPECT_EQ(run_cli("catalog validate"), 0);
  EXPECT_EQ(run_cli("--bogus"), 3);
  EXPECT_EQ(run_cli("trends x --metadata y --time-field whenever"), 3);
  fs::create_directories(dir / "empty");
  EXPECT_EQ(run_cli("scan " + (dir / "empty").string() + " -o " + out), 2);
}

TEST(Cli, CatalogEnvOverride) {
  TempDir dir;
  write_file(dir / "c.yaml", "attributes:\n  - id: x\n    category: automation\n    rule: {kind: derived, payload: [frobnicate]}\n");
  EXPECT_EQ(run_cli("catalog validate --catalog " + (dir / "c.yaml").string()), 3);
  const std::string env = "IACQ_CATALOG=" + (dir / "c.yaml").string() + " ";
  const std::string cmd = env + "\"" + IACQ_CLI_PATH + "\" catalog validate >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  EXPECT_EQ(WEXITSTATUS(status), 3);
}

}  // namespace
}  // namespace iacq

// iacq: Ansible repository quality scoring pipeline.
//
//   iacq scan <root> -o out/              counts/<repo_id>.json
//   iacq baseline out/counts -o out/      baseline.json
//   iacq score out/counts --baseline out/baseline.json -o out/
//   iacq trends out/scores.jsonl --metadata <corpus> -o out/ [--csv f.csv]
//   iacq catalog validate
//   iacq fetch-meta owner.role --endpoint http://... -o galaxy_meta.json

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "iacq/pipeline.hpp"

int main(int argc, char** argv) {
  using namespace iacq;

  CLI::App app{"Score the code quality of Ansible repositories"};
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig cfg;
  std::string catalog_path;
  std::string weights_path;
  std::string output_dir = ".";
  std::string time_field = "latest_release";
  std::string created_at;
  std::string csv_path;
  std::vector<std::string> ignores;

  app.add_option("--catalog", catalog_path, "Attribute catalog file (default: $IACQ_CATALOG or bundled)");
  app.add_option("-o,--out", output_dir, "Output directory");
  app.add_option("--rounding", cfg.rounding, "Decimal places in emitted values")->check(CLI::Range(0, 15));
  app.add_option("-j,--jobs", cfg.jobs, "Worker threads")->check(CLI::Range(1u, 256u));

  std::string scan_root;
  auto* scan = app.add_subcommand("scan", "Extract attribute counts from a repository or a directory of repositories");
  scan->add_option("root", scan_root, "Repository or corpus directory")->required();
  scan->add_option("--ignore", ignores, "Ignore glob (repeatable; replaces the defaults)");
  scan->add_flag("--single", cfg.single_repo, "Treat root as one repository");

  std::string counts_dir;
  auto* baseline = app.add_subcommand("baseline", "Build the normalization baseline from counts files");
  baseline->add_option("counts_dir", counts_dir, "Directory of counts files")->required();
  baseline->add_option("--created-at", created_at, "Baseline timestamp (ISO-8601)");

  std::string baseline_path;
  auto* score = app.add_subcommand("score", "Score repositories against a baseline");
  score->add_option("counts_dir", counts_dir, "Directory of counts files")->required();
  score->add_option("--baseline", baseline_path, "baseline.json")->required();
  score->add_option("--weights", weights_path, "weights.yaml");

  std::string scores_path;
  std::string metadata_source;
  auto* trends = app.add_subcommand("trends", "Six-month trend analysis of scores");
  trends->add_option("scores", scores_path, "scores.jsonl")->required();
  trends->add_option("--metadata", metadata_source, "Corpus or sidecar directory holding galaxy_meta.json files")
      ->required();
  trends->add_option("--time-field", time_field, "latest_release | observed_at");
  trends->add_option("--csv", csv_path, "Also write one CSV row per bucket");

  auto* catalog_cmd = app.add_subcommand("catalog", "Catalog tools");
  catalog_cmd->require_subcommand(1);
  auto* validate = catalog_cmd->add_subcommand("validate", "Check the attribute catalog");

  std::string role, endpoint, meta_out = "galaxy_meta.json";
  auto* fetch = app.add_subcommand("fetch-meta", "Fetch registry metadata for one role into a sidecar file");
  fetch->add_option("role", role, "owner.name")->required();
  fetch->add_option("--endpoint", endpoint, "Galaxy API root (http://host[:port])")->required();
  fetch->add_option("--meta-out", meta_out, "Sidecar path to write");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (!catalog_path.empty()) cfg.catalog_path = catalog_path;
  if (!weights_path.empty()) cfg.weights_path = weights_path;
  if (!ignores.empty()) cfg.ignore_globs = ignores;
  if (!csv_path.empty()) cfg.csv_path = csv_path;
  cfg.output_dir = output_dir;
  if (auto tf = parse_time_field(time_field)) {
    cfg.time_field = *tf;
  } else {
    std::cerr << "error: unknown --time-field " << time_field << "\n";
    return kExitConfig;
  }
  if (!created_at.empty()) {
    cfg.created_at = parse_iso8601(created_at);
    if (!cfg.created_at) {
      std::cerr << "error: --created-at is not an ISO-8601 time\n";
      return kExitConfig;
    }
  }

  if (*scan) return cmd_scan(scan_root, cfg);
  if (*baseline) return cmd_baseline(counts_dir, cfg);
  if (*score) return cmd_score(counts_dir, baseline_path, cfg);
  if (*trends) return cmd_trends(scores_path, metadata_source, cfg);
  if (*validate) return cmd_catalog_validate(cfg);
  if (*fetch) return cmd_fetch_meta(role, endpoint, meta_out);
  return kExitConfig;
}

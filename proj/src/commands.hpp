#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "cbi/pipeline.hpp"

// In-process command implementations behind the CLI, kept apart from flag
// parsing so tests can drive them directly. Commands that fan out over bug
// cases report per-case failures on stderr and return the failure count;
// hard errors (bad manifest, bad config) throw.
namespace cbi::commands {

struct IngestArgs {
  std::vector<std::filesystem::path> failing;  // gcov file or directory each
  std::vector<std::filesystem::path> passing;
  std::filesystem::path out;
};

/// Converts gcov reports into the portable coverage manifest. Each --failing
/// or --passing path is one execution; a directory contributes every *.gcov
/// inside it to that execution.
void cmd_ingest(const IngestArgs& args);

struct RankArgs {
  std::filesystem::path manifest;
  Formula formula = Formula::Ochiai;
  Granularity granularity = Granularity::TestCoverage;
  std::filesystem::path out_dir;
};

/// Writes <out>/<bug_id>/ranking.json for every case in the manifest.
int cmd_rank(const RankArgs& args);

struct SummarizeArgs {
  std::filesystem::path links;
  std::filesystem::path store;
  bool refresh = false;
  SummarizeConfig config;
};

/// Fills the summary store from a doc-link map, reusing cached entries
/// unless refresh is set.
void cmd_summarize(const SummarizeArgs& args, LlmClient& client);

struct IsolateArgs {
  std::filesystem::path manifest;
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> store_path;
  std::optional<std::filesystem::path> dump_prompt_dir;
};

/// Runs the full per-bug pipeline on a worker pool and writes the per-bug
/// artifact directory (prompt.txt, response.txt, ranking.json,
/// parse_report.json).
int cmd_isolate(const IsolateArgs& args, const PipelineConfig& config,
                LlmClient& client);

struct EvaluateArgs {
  std::filesystem::path rankings_dir;
  std::filesystem::path manifest;
  std::filesystem::path out_dir;
  bool per_compiler = false;
};

/// Scores <rankings_dir>/<bug_id>/ranking.json against the manifest's ground
/// truth and writes report.json + report.txt.
void cmd_evaluate(const EvaluateArgs& args);

using ClientFactory =
    std::function<std::unique_ptr<LlmClient>(const ClientConfig&)>;

struct AblateArgs {
  std::filesystem::path manifest;
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> store_path;
};

/// Runs the full configuration plus the six single-source-disabled variants
/// and writes one report row per variant (ablation.json + ablation.txt).
/// Each variant gets a fresh client from the factory so calls are
/// attributable per variant.
int cmd_ablate(const AblateArgs& args, const PipelineConfig& config,
               const ClientFactory& make_client);

/// Directory name for an ablation variant: "full" stays "full",
/// "-summary" becomes "no-summary".
std::string variant_dir_name(const std::string& subject);

/// Rewrites a JSONL transcript with its lines sorted so reruns are
/// byte-identical regardless of worker scheduling.
void sort_transcript_lines(const std::filesystem::path& path);

}  // namespace cbi::commands

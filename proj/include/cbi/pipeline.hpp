#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "cbi/eval.hpp"
#include "cbi/llm_client.hpp"
#include "cbi/prompt.hpp"
#include "cbi/rerank.hpp"
#include "cbi/summarize.hpp"

namespace cbi {

/// Pipeline-wide configuration. Defaults follow the tool's standard setup:
/// Ochiai over test coverage, Wong2 over execution coverage, all prompt
/// sections enabled, one model call per bug.
struct PipelineConfig {
  Formula testcov_formula = Formula::Ochiai;
  Formula execov_formula = Formula::Wong2;
  InfoToggles toggles;
  bool use_llm = true;  // the -llm ablation turns the model call off
  int list_cap = 50;
  std::string model_id = "gpt-4o";
  ClientConfig client;
  int repeats = 1;
  int worker_limit = 4;
  std::size_t summary_char_cap = 1200;
  std::size_t prompt_budget_chars = 200000;
};

/// Loads a JSON config file; missing file yields defaults. CLI flags
/// override config-file values which override these defaults.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// The six information sources a run can drop, in the order ablation
/// reports them.
inline constexpr std::string_view kAblationSources[] = {
    "summary", "compile", "execov", "testcov", "llm", "failtest"};

/// Applies one --disable value (a kAblationSources name) to the config;
/// unknown names raise ConfigError.
void apply_disable(PipelineConfig& config, std::string_view source);

struct IsolationResult {
  RankedList final_list;
  ParseReport report;
  std::string prompt;    // empty when the model call is disabled
  std::string response;  // raw model text, kept for audit
  RankedList testcov_list;
  RankedList execov_list;
};

/// Runs the single-bug pipeline: SBFL rankings at both granularities,
/// prompt assembly, one model call (honoring repeats) and response parsing.
/// With use_llm off the execution-coverage ranking is returned directly.
/// Missing summaries are generated through the client when the bug case
/// provides doc links; otherwise files without summaries are skipped.
IsolationResult isolate_bug(const BugCase& bug_case,
                            const PipelineConfig& config, LlmClient& client,
                            SummaryStore& summaries);

}  // namespace cbi

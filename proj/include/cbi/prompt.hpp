#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "cbi/sbfl.hpp"
#include "cbi/summarize.hpp"

namespace cbi {

/// Per-section ablation switches for the isolation prompt. All sections are
/// on by default; at least one of the two ranked lists must stay enabled or
/// there is nothing for the model to re-rank.
struct InfoToggles {
  bool summary = true;
  bool failtest = true;
  bool testcov_list = true;
  bool compile = true;
  bool execov_list = true;

  void validate() const;
};

struct CompileResult {
  std::string config;  // e.g. "-O2"
  std::string output;
};

/// Everything that goes into one isolation prompt, before assembly.
struct PromptBundle {
  std::vector<FileSummary> summaries;
  std::string failing_source;
  RankedList testcov_list;
  std::vector<CompileResult> compile_results;
  RankedList execov_list;
  InfoToggles toggles;
  int list_cap = 50;  // max entries shown per ranked list
};

inline constexpr std::size_t kFailingSourceCharCap = 20000;

/// Assembles the five-section isolation prompt in the fixed order (file
/// summaries, failing program, test-coverage list, compilation results,
/// execution-coverage list) followed by the task description. Disabled
/// sections are omitted entirely, markers included. Byte-deterministic.
std::string assemble_isolation_prompt(const PromptBundle& bundle);

/// Character count of a prompt, compared against a configurable budget by
/// callers; exceeding the budget warns, never fails.
std::size_t prompt_budget(std::string_view text);

}  // namespace cbi

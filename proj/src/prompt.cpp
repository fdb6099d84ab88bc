#include "cbi/prompt.hpp"

#include <set>

#include "cbi/prompt_templates.hpp"

namespace cbi {

namespace tpl = templates;

void InfoToggles::validate() const {
  if (!testcov_list && !execov_list) {
    throw Error(ErrorCode::InvalidToggles,
                "at least one suspicious file list must stay enabled");
  }
}

namespace {

void append_line(std::string& out, std::string_view text) {
  out += text;
  out += '\n';
}

void append_ranked_section(std::string& out, std::string_view start_marker,
                           std::string_view end_marker, const RankedList& list,
                           int list_cap, const char* section) {
  if (list.entries.empty()) {
    throw Error(ErrorCode::MissingSection, section);
  }
  append_line(out, start_marker);
  const std::size_t cap =
      list_cap <= 0 ? list.entries.size()
                    : std::min(list.entries.size(),
                               static_cast<std::size_t>(list_cap));
  for (std::size_t i = 0; i < cap; ++i) {
    out += std::to_string(list.entries[i].rank);
    out += ". ";
    append_line(out, list.entries[i].file.path());
  }
  append_line(out, end_marker);
  out += '\n';
}

}  // namespace

std::string assemble_isolation_prompt(const PromptBundle& bundle) {
  bundle.toggles.validate();
  {
    std::set<std::string> configs;
    for (const auto& result : bundle.compile_results) {
      if (!configs.insert(result.config).second) {
        throw Error(ErrorCode::ConfigError,
                    "duplicate compile config '" + result.config + "'");
      }
    }
  }

  std::string out;

  if (bundle.toggles.summary) {
    if (bundle.summaries.empty()) {
      throw Error(ErrorCode::MissingSection, "summary");
    }
    append_line(out, tpl::kSummaryStart);
    for (const auto& summary : bundle.summaries) {
      out += summary.file.path();
      out += ": ";
      append_line(out, summary.summary);
    }
    append_line(out, tpl::kSummaryEnd);
    append_line(out, tpl::kSummaryLearningInstruction);
    out += '\n';
  }

  if (bundle.toggles.failtest) {
    if (bundle.failing_source.empty()) {
      throw Error(ErrorCode::MissingSection, "failtest");
    }
    append_line(out, tpl::kSourceCodeStart);
    if (bundle.failing_source.size() > kFailingSourceCharCap) {
      out += bundle.failing_source.substr(0, kFailingSourceCharCap);
      out += '\n';
      append_line(out, tpl::kTruncationNote);
    } else {
      out += bundle.failing_source;
      if (out.back() != '\n') {
        out += '\n';
      }
    }
    append_line(out, tpl::kSourceCodeEnd);
    out += '\n';
  }

  if (bundle.toggles.testcov_list) {
    append_ranked_section(out, tpl::kRankFileStart, tpl::kRankFileEnd,
                          bundle.testcov_list, bundle.list_cap, "testcov");
  }

  if (bundle.toggles.compile) {
    if (bundle.compile_results.empty()) {
      throw Error(ErrorCode::MissingSection, "compile");
    }
    append_line(out, tpl::kResultStart);
    for (std::size_t i = 0; i < bundle.compile_results.size(); ++i) {
      if (i != 0) {
        out += '\n';
      }
      out += "Compilation with ";
      out += bundle.compile_results[i].config;
      append_line(out, ":");
      const std::string& text = bundle.compile_results[i].output;
      out += text;
      if (text.empty() || text.back() != '\n') {
        out += '\n';
      }
    }
    append_line(out, tpl::kResultEnd);
    out += '\n';
  }

  if (bundle.toggles.execov_list) {
    append_ranked_section(out, tpl::kExecutedFileStart, tpl::kExecutedFileEnd,
                          bundle.execov_list, bundle.list_cap, "execov");
  }

  append_line(out, tpl::kTaskHeader);
  if (bundle.toggles.summary) {
    append_line(out, tpl::kTaskExplainSummary);
  }
  if (bundle.toggles.failtest) {
    append_line(out, tpl::kTaskExplainFailingSource);
  }
  if (bundle.toggles.testcov_list) {
    append_line(out, tpl::kTaskExplainTestCov);
  }
  if (bundle.toggles.compile) {
    append_line(out, tpl::kTaskExplainCompile);
  }
  if (bundle.toggles.execov_list) {
    append_line(out, tpl::kTaskExplainExecCov);
  }
  append_line(out, tpl::kTaskAnswerFormat);
  return out;
}

std::size_t prompt_budget(std::string_view text) { return text.size(); }

}  // namespace cbi

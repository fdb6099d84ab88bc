#pragma once

#include <array>
#include <string_view>

// Pinned prompt text. Golden tests assert on assembled output byte-for-byte,
// so any edit here must update the fixtures under tests/fixtures as well.

namespace cbi::templates {

inline constexpr std::string_view kSummaryStart = "[summary-start]";
inline constexpr std::string_view kSummaryEnd = "[summary-end]";
inline constexpr std::string_view kSourceCodeStart = "[source-code-start]";
inline constexpr std::string_view kSourceCodeEnd = "[source-code-end]";
inline constexpr std::string_view kRankFileStart = "[rankfile-start]";
inline constexpr std::string_view kRankFileEnd = "[rankfile-end]";
inline constexpr std::string_view kResultStart = "[result-start]";
inline constexpr std::string_view kResultEnd = "[result-end]";
inline constexpr std::string_view kExecutedFileStart = "[executed-file-start]";
inline constexpr std::string_view kExecutedFileEnd = "[executed-file-end]";

/// All ten sentinel markers in the fixed global section order.
inline constexpr std::array<std::string_view, 10> kAllSentinels = {
    kSummaryStart,      kSummaryEnd,      kSourceCodeStart, kSourceCodeEnd,
    kRankFileStart,     kRankFileEnd,     kResultStart,     kResultEnd,
    kExecutedFileStart, kExecutedFileEnd,
};

/// Follows the summary section; deliberately avoids repeating the literal
/// markers so each sentinel appears exactly once in the assembled prompt.
inline constexpr std::string_view kSummaryLearningInstruction =
    "The functional descriptions above are related to the source code files "
    "of the compiler under debugging. Learn the functions of these files and "
    "complete the following tasks based on the functions of these files.";

/// Appended to the failing test program when it exceeds the source cap.
inline constexpr std::string_view kTruncationNote = "[truncated]";

// Document-summarization prompt. {path} and the document body vary per file.
inline constexpr std::string_view kSummaryPromptHeader =
    "You are helping to document a compiler code base. Summarize the core "
    "function of the source file \"";
inline constexpr std::string_view kSummaryPromptLocalText =
    "\" in concise natural language. Focus on what the file does within the "
    "compiler. Omit code definitions such as header inclusions, data "
    "structures, macros, and method signatures.\n\nDocument content:\n";
inline constexpr std::string_view kSummaryPromptUrl =
    "\" in concise natural language. Read the document at the link below, "
    "focus on what the file does within the compiler, and omit code "
    "definitions such as header inclusions, data structures, macros, and "
    "method signatures.\n\nDocument link: ";

// Task description block, always the last prompt section.
inline constexpr std::string_view kTaskHeader =
    "Task: the compiler described above fails to compile the failing test "
    "program correctly. Re-rank the candidate source files from most to "
    "least likely to contain the fault, using all of the information "
    "provided above.";
inline constexpr std::string_view kTaskExplainSummary =
    "- The functional descriptions listed first explain the role of each "
    "source file inside the compiler; correlate the failure with these "
    "functions.";
inline constexpr std::string_view kTaskExplainFailingSource =
    "- The failing test program is the program whose compilation triggers "
    "the bug; its code features point at the responsible compiler stages.";
inline constexpr std::string_view kTaskExplainTestCov =
    "- The first suspicious file list was ranked by spectrum-based fault "
    "localization over test coverage of failing and passing compilations.";
inline constexpr std::string_view kTaskExplainCompile =
    "- The compilation results show the compiler output for the failing test "
    "program under different compilation configurations; differences between "
    "configurations narrow down the faulty optimization stages.";
inline constexpr std::string_view kTaskExplainExecCov =
    "- The second suspicious file list was ranked by finer-grained execution "
    "coverage, i.e. how many times each file was executed in failing and "
    "passing compilations; heavily re-executed files may relate to the bug.";
inline constexpr std::string_view kTaskAnswerFormat =
    "Answer with a re-ranked numbered list of file paths, one path per line, "
    "most suspicious first. Use only file paths that appear in the lists "
    "above; do not invent new paths and do not add commentary.";

}  // namespace cbi::templates

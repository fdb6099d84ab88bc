#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cbi/prompt.hpp"
#include "cbi/sbfl.hpp"

namespace cbi {

struct Compiler {
  enum class Kind { GCC, LLVM, Other };

  Kind kind = Kind::Other;
  std::string other_name;  // set when kind == Other

  std::string display_name() const;
  static Compiler from_string(std::string_view name);

  friend bool operator==(const Compiler&, const Compiler&) = default;
  friend auto operator<=>(const Compiler&, const Compiler&) = default;
};

/// One benchmark entry: the failing program, its compilation outputs, the
/// coverage manifest and the ground-truth faulty files.
struct BugCase {
  std::string bug_id;
  Compiler compiler;
  std::filesystem::path failing_source_path;
  std::vector<CompileResult> compile_results;
  std::filesystem::path coverage_manifest_path;
  std::set<FileId> ground_truth;
  std::optional<std::filesystem::path> doc_links_path;
};

struct PerBugResult {
  std::string bug_id;
  int first_rank = 0;
  std::vector<int> all_ranks;  // ascending, one per ground-truth file
  bool fallback_used = false;
};

struct EvaluationReport {
  std::vector<PerBugResult> per_bug;
  std::map<int, int> top_n;  // N in {1, 5, 10, 20} -> bugs with first_rank <= N
  double mfr = 0.0;
  double mar = 0.0;
};

inline constexpr int kTopNValues[] = {1, 5, 10, 20};

/// Ranks every ground-truth file in the final list; files absent from the
/// list count as len(list)+1 so the metrics stay defined.
PerBugResult score_bug(const RankedList& final_list,
                       const std::set<FileId>& truth,
                       const std::string& bug_id = "",
                       bool fallback_used = false);

/// Top-N counts a bug when any ground-truth file ranks within N; MFR is the
/// mean first rank and MAR the mean over bugs of the mean rank of all
/// ground-truth files.
EvaluationReport aggregate(const std::vector<PerBugResult>& results);

/// Benchmark manifest: JSON array of bug cases with paths relative to the
/// manifest's directory. Referenced files must exist and the coverage
/// manifests must validate.
std::vector<BugCase> load_manifest(const std::filesystem::path& path);

enum class ReportFormat { Json, Table };

/// Renders a report as JSON or as an aligned text table with one row per
/// subject (Top-1, Top-5, Top-10, Top-20, MFR, MAR columns).
std::string emit_report(const EvaluationReport& report, ReportFormat format);

/// Multi-subject rendering used by --per-compiler evaluation and ablation
/// tables; rows keep the given order.
std::string emit_report_rows(
    const std::vector<std::pair<std::string, EvaluationReport>>& rows,
    ReportFormat format);

}  // namespace cbi

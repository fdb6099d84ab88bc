#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cbi/errors.hpp"

namespace cbi {

/// Normalized relative source-file path. Normalization strips leading "./",
/// collapses repeated separators and drops trailing ones; ".." segments and
/// empty results are rejected. Comparison is byte-wise on the normalized
/// path, which is also the tie-break order used everywhere downstream.
class FileId {
 public:
  explicit FileId(std::string_view raw);

  const std::string& path() const noexcept { return path_; }

  auto operator<=>(const FileId&) const = default;

 private:
  std::string path_;
};

enum class Outcome { Failing, Passing };

/// One instrumented run of a test program: per-file execution counts plus
/// the pass/fail outcome. A file is covered by the run iff its count > 0.
struct ExecutionRecord {
  std::string execution_id;
  Outcome outcome = Outcome::Passing;
  std::map<FileId, std::int64_t> hits;

  bool covers(const FileId& file) const;
  std::int64_t hit_count(const FileId& file) const;
};

/// The seven per-file statistics every suspiciousness formula is defined
/// over. cp_bar is the mean hit count over passing executions that cover the
/// file (0 when none do); all other fields are exact integers.
struct CountVector {
  std::int64_t failed_f = 0;
  std::int64_t passed_f = 0;
  std::int64_t total_failed = 0;
  std::int64_t total_passed = 0;
  std::int64_t cf = 0;
  std::int64_t cp = 0;
  double cp_bar = 0.0;
};

/// Immutable per-file coverage of a set of test executions. Validated on
/// construction: at least one failing execution, unique execution ids, and a
/// non-empty candidate set (files covered by some failing execution).
class CoverageMatrix {
 public:
  static CoverageMatrix build(std::vector<ExecutionRecord> records);

  const std::vector<ExecutionRecord>& executions() const noexcept {
    return executions_;
  }
  /// Union of files covered by any execution, sorted by path.
  const std::vector<FileId>& files() const noexcept { return files_; }
  /// Files covered by at least one failing execution, sorted by path.
  const std::vector<FileId>& candidate_files() const noexcept {
    return candidates_;
  }

  bool contains(const FileId& file) const;

  /// Computes the full CountVector for a file in the matrix universe.
  CountVector counts(const FileId& file) const;

 private:
  CoverageMatrix() = default;

  std::vector<ExecutionRecord> executions_;
  std::vector<FileId> files_;
  std::vector<FileId> candidates_;
};

/// Parses one classic gcov report ("count: lineno: source" lines) and
/// returns the file's execution count, i.e. the sum of all numeric line
/// counts. The "-", "#####" and "=====" markers contribute 0. Malformed
/// lines raise MalformedGcovLine with the 1-based line number.
std::int64_t ingest_gcov(std::string_view text, const FileId& file);

/// Extracts the source path from a gcov report header ("-: 0:Source:path"),
/// empty string when the header is absent.
std::string gcov_source_path(std::string_view text);

/// Deterministic synthetic matrix: one failing execution covering all
/// n_files files, plus n_passing passing executions with pseudo-random
/// partial coverage. Identical seeds yield identical matrices.
CoverageMatrix synth_matrix(std::uint64_t seed, int n_files, int n_passing,
                            std::int64_t max_hits);

/// Portable coverage manifest (the canonical interchange format):
///   { "executions": [ { "id", "outcome", "hits": { "<path>": int } } ] }
CoverageMatrix load_coverage_manifest(const std::filesystem::path& path);
CoverageMatrix parse_coverage_manifest(std::string_view text,
                                       std::string_view origin);
std::string coverage_manifest_to_json(const CoverageMatrix& matrix);
void save_coverage_manifest(const CoverageMatrix& matrix,
                            const std::filesystem::path& path);

}  // namespace cbi

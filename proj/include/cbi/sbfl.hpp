#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cbi/coverage.hpp"

namespace cbi {

enum class Formula { Wong2, Ochiai, DStar2, Barinel, Tarantula };
enum class Granularity { TestCoverage, ExecutionCoverage };

std::string_view formula_name(Formula formula);
std::string_view granularity_name(Granularity granularity);
std::optional<Formula> formula_from_name(std::string_view name);
std::optional<Granularity> granularity_from_name(std::string_view name);

/// Extended-real suspiciousness value: finite double or +infinity, never NaN.
/// Infinity sorts above every finite value.
struct Score {
  double value = 0.0;

  static Score infinity();
  bool is_infinite() const;

  friend bool operator==(const Score&, const Score&) = default;
};

struct Provenance {
  enum class Kind { Sbfl, LlmRefined, Fallback };

  Kind kind = Kind::Sbfl;
  Formula formula = Formula::Ochiai;          // meaningful for Sbfl only
  Granularity granularity = Granularity::TestCoverage;

  static Provenance sbfl(Formula formula, Granularity granularity);
  static Provenance llm_refined();
  static Provenance fallback();

  std::string to_string() const;
  static Provenance from_string(std::string_view text);

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct RankedEntry {
  FileId file;
  Score score;
  int rank = 0;  // 1-based, no gaps; ties get distinct consecutive ranks
};

/// Ordered suspiciousness ranking over exactly the candidate set: sorted by
/// score descending, path ascending, ranks 1..n.
struct RankedList {
  std::vector<RankedEntry> entries;
  Provenance provenance;

  std::vector<FileId> files_in_order() const;
};

/// Evaluates one cell of the formula table on a count vector. Degenerate
/// denominators never raise: zero-over-zero is 0 and positive-over-zero is
/// +infinity (DStar2 with test coverage is the only cell that can hit it).
Score suspiciousness(Formula formula, Granularity granularity,
                     const CountVector& c);

/// Ranks the candidate files of a matrix under one formula and granularity.
RankedList rank(const CoverageMatrix& matrix, Formula formula,
                Granularity granularity);

/// Minimum rank among targets present in the list; len(list)+1 when absent.
int first_rank_of(const RankedList& list, const std::set<FileId>& targets);

/// JSON form: { "provenance": str,
///              "entries": [ { "rank": int, "file": str, "score": number|"inf" } ] }
std::string ranked_list_to_json(const RankedList& list);
RankedList ranked_list_from_json(std::string_view text, std::string_view origin);
RankedList load_ranked_list(const std::filesystem::path& path);
void save_ranked_list(const RankedList& list, const std::filesystem::path& path);

}  // namespace cbi

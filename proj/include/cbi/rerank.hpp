#pragma once

#include <set>
#include <string>
#include <vector>

#include "cbi/sbfl.hpp"

namespace cbi {

/// What the response parser did: how many candidates it matched, the
/// path-like tokens it could not map to candidates, and how many candidates
/// were appended from the fallback order because the model never mentioned
/// them. When nothing matched at all the fallback list is used wholesale.
struct ParseReport {
  int matched = 0;
  std::vector<std::string> unmatched_mentions;
  int appended_tail = 0;
  bool fallback_used = false;
};

/// Turns a free-text model response into a ranking over exactly the
/// candidate set. Scans lines top to bottom; a candidate matches when its
/// full path or its unique basename occurs in a line at a token boundary
/// (ambiguous basenames require the full path). First mention wins,
/// duplicates are ignored, unmentioned candidates keep their fallback
/// order at the tail. Zero matches return the fallback list unchanged.
/// Parsing is total: the result is always a valid 1..n permutation.
std::pair<RankedList, ParseReport> parse_ranking(
    const std::string& response, const std::set<FileId>& candidates,
    const RankedList& fallback);

std::string parse_report_to_json(const ParseReport& report,
                                 const std::string& prompt_digest);

}  // namespace cbi

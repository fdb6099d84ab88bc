#include "cbi/rerank.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace cbi {

namespace {

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

bool path_char(char c) {
  return ident_char(c) || c == '.' || c == '/' || c == '+' || c == '-';
}

// A needle occurrence counts only at a token boundary: the preceding char
// must not extend a path (so a basename never matches inside a longer
// path), the following char must not extend an identifier.
std::size_t find_token(const std::string& line, const std::string& needle) {
  std::size_t pos = 0;
  while ((pos = line.find(needle, pos)) != std::string::npos) {
    const bool open = pos == 0 || !path_char(line[pos - 1]);
    const std::size_t end = pos + needle.size();
    const bool close = end >= line.size() || !ident_char(line[end]);
    if (open && close) {
      return pos;
    }
    ++pos;
  }
  return std::string::npos;
}

bool looks_like_path(const std::string& token) {
  if (token.find('/') != std::string::npos) {
    return true;
  }
  static const char* kSuffixes[] = {".c",  ".cc", ".cpp", ".cxx",
                                    ".h",  ".hh", ".hpp", ".hxx"};
  for (const char* suffix : kSuffixes) {
    const std::size_t n = std::char_traits<char>::length(suffix);
    if (token.size() > n && token.compare(token.size() - n, n, suffix) == 0) {
      return true;
    }
  }
  return false;
}

std::string basename_of(const std::string& path) {
  const auto slash = path.find_last_of('/');
  return slash == std::string::npos ? path : path.substr(slash + 1);
}

}  // namespace

std::pair<RankedList, ParseReport> parse_ranking(
    const std::string& response, const std::set<FileId>& candidates,
    const RankedList& fallback) {
  // Basenames shared by several candidates are ambiguous and only the full
  // path can name those files.
  std::map<std::string, int> basename_count;
  for (const FileId& file : candidates) {
    ++basename_count[basename_of(file.path())];
  }

  std::vector<FileId> mentioned;
  std::set<FileId> seen;
  ParseReport report;

  std::istringstream lines(response);
  std::string line;
  while (std::getline(lines, line)) {
    std::vector<std::pair<std::size_t, FileId>> hits;
    for (const FileId& file : candidates) {
      if (seen.count(file)) {
        continue;
      }
      std::size_t pos = find_token(line, file.path());
      const std::string base = basename_of(file.path());
      if (base != file.path() && basename_count[base] == 1) {
        pos = std::min(pos, find_token(line, base));
      }
      if (pos != std::string::npos) {
        hits.emplace_back(pos, file);
      }
    }
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first < b.first
                                : a.second.path() < b.second.path();
    });
    for (auto& [pos, file] : hits) {
      seen.insert(file);
      mentioned.push_back(std::move(file));
    }

    // Record path-like tokens that name no candidate, for the parse report.
    std::size_t i = 0;
    while (i < line.size()) {
      if (!path_char(line[i])) {
        ++i;
        continue;
      }
      std::size_t start = i;
      while (i < line.size() && path_char(line[i])) {
        ++i;
      }
      std::string token = line.substr(start, i - start);
      while (!token.empty() && !ident_char(token.back())) {
        token.pop_back();
      }
      if (token.empty() || !looks_like_path(token)) {
        continue;
      }
      bool known = false;
      for (const FileId& file : candidates) {
        if (token == file.path() || token == basename_of(file.path())) {
          known = true;
          break;
        }
      }
      if (!known && std::find(report.unmatched_mentions.begin(),
                              report.unmatched_mentions.end(),
                              token) == report.unmatched_mentions.end()) {
        report.unmatched_mentions.push_back(std::move(token));
      }
    }
  }

  report.matched = static_cast<int>(mentioned.size());
  report.fallback_used = mentioned.empty();

  RankedList result;
  if (report.fallback_used) {
    result = fallback;
    result.provenance = Provenance::fallback();
    return {std::move(result), std::move(report)};
  }

  std::map<FileId, double> fallback_score;
  for (const RankedEntry& entry : fallback.entries) {
    fallback_score.emplace(entry.file, entry.score.value);
  }
  auto score_of = [&](const FileId& file) {
    auto it = fallback_score.find(file);
    return Score{it == fallback_score.end() ? 0.0 : it->second};
  };

  result.provenance = Provenance::llm_refined();
  int next_rank = 1;
  for (const FileId& file : mentioned) {
    result.entries.push_back(RankedEntry{file, score_of(file), next_rank++});
  }
  for (const RankedEntry& entry : fallback.entries) {
    if (!seen.count(entry.file) && candidates.count(entry.file)) {
      seen.insert(entry.file);
      ++report.appended_tail;
      result.entries.push_back(
          RankedEntry{entry.file, entry.score, next_rank++});
    }
  }
  // Candidates absent from the fallback list (not expected, but parsing is
  // total) go last in path order.
  for (const FileId& file : candidates) {
    if (!seen.count(file)) {
      ++report.appended_tail;
      result.entries.push_back(RankedEntry{file, Score{0.0}, next_rank++});
    }
  }
  return {std::move(result), std::move(report)};
}

std::string parse_report_to_json(const ParseReport& report,
                                 const std::string& prompt_digest) {
  nlohmann::json doc = {{"prompt_digest", prompt_digest},
                        {"matched", report.matched},
                        {"unmatched_mentions", report.unmatched_mentions},
                        {"appended_tail", report.appended_tail},
                        {"fallback_used", report.fallback_used}};
  return doc.dump(2) + "\n";
}

}  // namespace cbi

#include "cbi/coverage.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace cbi {

namespace {

using json = nlohmann::json;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

FileId::FileId(std::string_view raw) {
  std::string normalized;
  normalized.reserve(raw.size());
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    std::size_t sep = raw.find('/', pos);
    if (sep == std::string_view::npos) {
      sep = raw.size();
    }
    std::string_view segment = raw.substr(pos, sep - pos);
    if (segment == "..") {
      throw Error(ErrorCode::InvalidPath,
                  "'..' segment in path '" + std::string(raw) + "'");
    }
    if (!segment.empty() && segment != ".") {
      if (!normalized.empty()) {
        normalized += '/';
      }
      normalized += segment;
    }
    pos = sep + 1;
  }
  if (normalized.empty()) {
    throw Error(ErrorCode::InvalidPath,
                "path '" + std::string(raw) + "' normalizes to nothing");
  }
  path_ = std::move(normalized);
}

bool ExecutionRecord::covers(const FileId& file) const {
  return hit_count(file) > 0;
}

std::int64_t ExecutionRecord::hit_count(const FileId& file) const {
  auto it = hits.find(file);
  return it == hits.end() ? 0 : it->second;
}

CoverageMatrix CoverageMatrix::build(std::vector<ExecutionRecord> records) {
  std::set<std::string> ids;
  std::set<FileId> universe;
  std::set<FileId> candidates;
  bool has_failing = false;
  for (const auto& record : records) {
    if (!ids.insert(record.execution_id).second) {
      throw Error(ErrorCode::DuplicateExecutionId, record.execution_id);
    }
    if (record.outcome == Outcome::Failing) {
      has_failing = true;
    }
    for (const auto& [file, count] : record.hits) {
      if (count < 0) {
        throw Error(ErrorCode::InvalidPath,
                    "negative hit count for " + file.path() + " in " +
                        record.execution_id);
      }
      if (count > 0) {
        universe.insert(file);
        if (record.outcome == Outcome::Failing) {
          candidates.insert(file);
        }
      }
    }
  }
  if (!has_failing) {
    throw Error(ErrorCode::NoFailingExecution,
                "matrix needs at least one failing execution");
  }
  if (candidates.empty()) {
    throw Error(ErrorCode::EmptyCandidateSet,
                "no file is covered by a failing execution");
  }
  CoverageMatrix matrix;
  matrix.executions_ = std::move(records);
  matrix.files_.assign(universe.begin(), universe.end());
  matrix.candidates_.assign(candidates.begin(), candidates.end());
  return matrix;
}

bool CoverageMatrix::contains(const FileId& file) const {
  return std::binary_search(files_.begin(), files_.end(), file);
}

CountVector CoverageMatrix::counts(const FileId& file) const {
  if (!contains(file)) {
    throw Error(ErrorCode::UnknownFile, file.path());
  }
  CountVector c;
  std::int64_t covering_passing = 0;
  std::int64_t covering_passing_hits = 0;
  for (const auto& record : executions_) {
    const std::int64_t hits = record.hit_count(file);
    if (record.outcome == Outcome::Failing) {
      ++c.total_failed;
      c.cf += hits;
      if (hits > 0) {
        ++c.failed_f;
      }
    } else {
      ++c.total_passed;
      c.cp += hits;
      if (hits > 0) {
        ++c.passed_f;
        ++covering_passing;
        covering_passing_hits += hits;
      }
    }
  }
  c.cp_bar = covering_passing == 0
                 ? 0.0
                 : static_cast<double>(covering_passing_hits) /
                       static_cast<double>(covering_passing);
  return c;
}

std::int64_t ingest_gcov(std::string_view text, const FileId& file) {
  std::int64_t total = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) {
      eol = text.size();
    }
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    const auto fail = [&](const char* what) -> Error {
      return Error(ErrorCode::MalformedGcovLine,
                   file.path() + " line " + std::to_string(line_no) + ": " +
                       what);
    };
    std::size_t colon = line.find(':');
    if (colon == std::string_view::npos) {
      throw fail("missing count field");
    }
    std::string_view count_field = trim(line.substr(0, colon));
    std::string_view rest = line.substr(colon + 1);
    std::size_t colon2 = rest.find(':');
    if (colon2 == std::string_view::npos) {
      throw fail("missing line number field");
    }
    std::string_view lineno_field = trim(rest.substr(0, colon2));
    int parsed_lineno = 0;
    auto [lp, lec] = std::from_chars(
        lineno_field.data(), lineno_field.data() + lineno_field.size(),
        parsed_lineno);
    if (lec != std::errc() || lp != lineno_field.data() + lineno_field.size()) {
      throw fail("line number is not an integer");
    }
    if (count_field == "-" || count_field == "#####" ||
        count_field == "=====") {
      continue;
    }
    // Modern gcov marks partially-executed lines with a trailing '*'.
    if (!count_field.empty() && count_field.back() == '*') {
      count_field.remove_suffix(1);
    }
    std::int64_t count = 0;
    auto [cp, cec] = std::from_chars(
        count_field.data(), count_field.data() + count_field.size(), count);
    if (count_field.empty() || cec != std::errc() ||
        cp != count_field.data() + count_field.size() || count < 0) {
      throw fail("count is not a non-negative integer");
    }
    total += count;
  }
  return total;
}

std::string gcov_source_path(std::string_view text) {
  constexpr std::string_view kTag = "Source:";
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) {
      eol = text.size();
    }
    std::string_view line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    if (line.empty()) {
      continue;
    }
    // Header lines look like "-: 0:Source:path/to/file.c".
    std::size_t colon = line.find(':');
    if (colon == std::string_view::npos ||
        trim(line.substr(0, colon)) != "-") {
      return "";
    }
    std::string_view rest = line.substr(colon + 1);
    std::size_t colon2 = rest.find(':');
    if (colon2 == std::string_view::npos ||
        trim(rest.substr(0, colon2)) != "0") {
      return "";
    }
    std::string_view body = rest.substr(colon2 + 1);
    if (body.substr(0, kTag.size()) == kTag) {
      return std::string(trim(body.substr(kTag.size())));
    }
  }
  return "";
}

CoverageMatrix synth_matrix(std::uint64_t seed, int n_files, int n_passing,
                            std::int64_t max_hits) {
  if (n_files < 1) {
    throw Error(ErrorCode::EmptyCandidateSet, "synth_matrix needs n_files >= 1");
  }
  if (max_hits < 1) {
    max_hits = 1;
  }
  std::mt19937_64 rng(seed);
  // Modulo reduction keeps the stream identical across standard libraries.
  const auto next = [&rng](std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(
                    rng() % static_cast<std::uint64_t>(hi - lo + 1));
  };

  std::vector<FileId> files;
  files.reserve(static_cast<std::size_t>(n_files));
  for (int i = 0; i < n_files; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "synth/f%04d.c", i);
    files.emplace_back(name);
  }

  std::vector<ExecutionRecord> records;
  ExecutionRecord failing;
  failing.execution_id = "failing-0";
  failing.outcome = Outcome::Failing;
  for (const auto& file : files) {
    failing.hits.emplace(file, next(1, max_hits));
  }
  records.push_back(std::move(failing));

  for (int p = 0; p < n_passing; ++p) {
    ExecutionRecord passing;
    passing.execution_id = "passing-" + std::to_string(p);
    passing.outcome = Outcome::Passing;
    for (const auto& file : files) {
      if (next(0, 1) == 1) {
        passing.hits.emplace(file, next(1, max_hits));
      }
    }
    records.push_back(std::move(passing));
  }
  return CoverageMatrix::build(std::move(records));
}

CoverageMatrix parse_coverage_manifest(std::string_view text,
                                       std::string_view origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ManifestError,
                std::string(origin) + ": " + e.what());
  }
  try {
    std::vector<ExecutionRecord> records;
    for (const auto& entry : doc.at("executions")) {
      ExecutionRecord record;
      record.execution_id = entry.at("id").get<std::string>();
      const auto outcome = entry.at("outcome").get<std::string>();
      if (outcome == "failing") {
        record.outcome = Outcome::Failing;
      } else if (outcome == "passing") {
        record.outcome = Outcome::Passing;
      } else {
        throw Error(ErrorCode::ManifestError,
                    std::string(origin) + ": execution '" +
                        record.execution_id + "' has unknown outcome '" +
                        outcome + "'");
      }
      for (const auto& [path, count] : entry.at("hits").items()) {
        record.hits.emplace(FileId(path), count.get<std::int64_t>());
      }
      records.push_back(std::move(record));
    }
    return CoverageMatrix::build(std::move(records));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ManifestError,
                std::string(origin) + ": " + e.what());
  }
}

CoverageMatrix load_coverage_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::ManifestError,
                "cannot open coverage manifest " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_coverage_manifest(buffer.str(), path.string());
}

std::string coverage_manifest_to_json(const CoverageMatrix& matrix) {
  json executions = json::array();
  for (const auto& record : matrix.executions()) {
    json hits = json::object();
    for (const auto& [file, count] : record.hits) {
      hits[file.path()] = count;
    }
    executions.push_back(
        {{"id", record.execution_id},
         {"outcome", record.outcome == Outcome::Failing ? "failing" : "passing"},
         {"hits", std::move(hits)}});
  }
  return json{{"executions", std::move(executions)}}.dump(2) + "\n";
}

void save_coverage_manifest(const CoverageMatrix& matrix,
                            const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write " + path.string());
  }
  out << coverage_manifest_to_json(matrix);
}

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidPath: return "invalid path";
    case ErrorCode::NoFailingExecution: return "no failing execution";
    case ErrorCode::DuplicateExecutionId: return "duplicate execution id";
    case ErrorCode::EmptyCandidateSet: return "empty candidate set";
    case ErrorCode::UnknownFile: return "unknown file";
    case ErrorCode::MalformedGcovLine: return "malformed gcov line";
    case ErrorCode::EmptyDocument: return "empty document";
    case ErrorCode::SummaryEmpty: return "empty summary";
    case ErrorCode::StoreCorrupt: return "corrupt summary store";
    case ErrorCode::IoError: return "io error";
    case ErrorCode::MissingSection: return "missing prompt section";
    case ErrorCode::InvalidToggles: return "invalid toggles";
    case ErrorCode::AuthError: return "auth error";
    case ErrorCode::TimeoutError: return "timeout";
    case ErrorCode::RateLimited: return "rate limited";
    case ErrorCode::ProtocolError: return "protocol error";
    case ErrorCode::ManifestError: return "manifest error";
    case ErrorCode::EmptyResults: return "empty results";
    case ErrorCode::ConfigError: return "config error";
  }
  return "unknown error";
}

}  // namespace cbi

#include "cbi/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace cbi {

namespace {

using json = nlohmann::json;

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

[[noreturn]] void manifest_error(const std::filesystem::path& path,
                                 const std::string& detail) {
  throw Error(ErrorCode::ManifestError, path.string() + ": " + detail);
}

std::string format_double(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.2f", value);
  return buffer;
}

json report_summary_json(const EvaluationReport& report) {
  json top_n = json::object();
  for (int n : kTopNValues) {
    auto it = report.top_n.find(n);
    top_n[std::to_string(n)] = it == report.top_n.end() ? 0 : it->second;
  }
  return {{"bugs", report.per_bug.size()},
          {"top_n", std::move(top_n)},
          {"mfr", report.mfr},
          {"mar", report.mar}};
}

std::string render_table(
    const std::vector<std::pair<std::string, EvaluationReport>>& rows) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back(
      {"subject", "bugs", "top-1", "top-5", "top-10", "top-20", "MFR", "MAR"});
  for (const auto& [subject, report] : rows) {
    std::vector<std::string> row{subject,
                                 std::to_string(report.per_bug.size())};
    for (int n : kTopNValues) {
      auto it = report.top_n.find(n);
      row.push_back(std::to_string(it == report.top_n.end() ? 0 : it->second));
    }
    row.push_back(format_double(report.mfr));
    row.push_back(format_double(report.mar));
    cells.push_back(std::move(row));
  }
  std::vector<std::size_t> widths(cells[0].size(), 0);
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      widths[i] = std::max(widths[i], row[i].size());
    }
  }
  std::ostringstream out;
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << row[i];
      if (i + 1 < row.size()) {
        out << std::string(widths[i] - row[i].size() + 2, ' ');
      }
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace

std::string Compiler::display_name() const {
  switch (kind) {
    case Kind::GCC:
      return "GCC";
    case Kind::LLVM:
      return "LLVM";
    case Kind::Other:
      return other_name;
  }
  return other_name;
}

Compiler Compiler::from_string(std::string_view name) {
  const std::string key = lower(name);
  if (key == "gcc") {
    return Compiler{Kind::GCC, {}};
  }
  if (key == "llvm") {
    return Compiler{Kind::LLVM, {}};
  }
  if (key.empty()) {
    throw Error(ErrorCode::ConfigError, "empty compiler name");
  }
  return Compiler{Kind::Other, std::string(name)};
}

PerBugResult score_bug(const RankedList& final_list,
                       const std::set<FileId>& truth,
                       const std::string& bug_id, bool fallback_used) {
  if (truth.empty()) {
    throw Error(ErrorCode::ManifestError,
                "bug " + bug_id + " has no ground-truth files");
  }
  const int absent_rank = static_cast<int>(final_list.entries.size()) + 1;
  PerBugResult result;
  result.bug_id = bug_id;
  result.fallback_used = fallback_used;
  for (const FileId& file : truth) {
    int rank = absent_rank;
    for (const RankedEntry& entry : final_list.entries) {
      if (entry.file == file) {
        rank = entry.rank;
        break;
      }
    }
    result.all_ranks.push_back(rank);
  }
  std::sort(result.all_ranks.begin(), result.all_ranks.end());
  result.first_rank = result.all_ranks.front();
  return result;
}

EvaluationReport aggregate(const std::vector<PerBugResult>& results) {
  if (results.empty()) {
    throw Error(ErrorCode::EmptyResults, "no per-bug results to aggregate");
  }
  EvaluationReport report;
  report.per_bug = results;
  for (int n : kTopNValues) {
    report.top_n[n] = 0;
  }
  double first_sum = 0.0;
  double mean_sum = 0.0;
  for (const PerBugResult& bug : results) {
    for (int n : kTopNValues) {
      if (bug.first_rank <= n) {
        ++report.top_n[n];
      }
    }
    first_sum += bug.first_rank;
    mean_sum += std::accumulate(bug.all_ranks.begin(), bug.all_ranks.end(),
                                0.0) /
                static_cast<double>(bug.all_ranks.size());
  }
  report.mfr = first_sum / static_cast<double>(results.size());
  report.mar = mean_sum / static_cast<double>(results.size());
  return report;
}

std::vector<BugCase> load_manifest(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    manifest_error(path, e.what());
  }
  if (!doc.is_array()) {
    manifest_error(path, "benchmark manifest must be a JSON array");
  }
  const std::filesystem::path base = path.parent_path();
  std::vector<BugCase> cases;
  std::set<std::string> seen_ids;
  for (const auto& item : doc) {
    BugCase bug;
    try {
      bug.bug_id = item.at("bug_id").get<std::string>();
      bug.compiler =
          Compiler::from_string(item.at("compiler").get<std::string>());
      bug.failing_source_path =
          base / item.at("failing_source").get<std::string>();
      bug.coverage_manifest_path =
          base / item.at("coverage_manifest").get<std::string>();
      if (item.contains("compile_results")) {
        for (const auto& cr : item.at("compile_results")) {
          bug.compile_results.push_back(
              CompileResult{cr.at("config").get<std::string>(),
                            cr.at("output").get<std::string>()});
        }
      }
      for (const auto& file : item.at("ground_truth")) {
        bug.ground_truth.insert(FileId(file.get<std::string>()));
      }
      if (item.contains("doc_links")) {
        bug.doc_links_path = base / item.at("doc_links").get<std::string>();
      }
    } catch (const json::exception& e) {
      manifest_error(path, std::string("bug record: ") + e.what());
    }
    if (bug.bug_id.empty()) {
      manifest_error(path, "bug_id must be non-empty");
    }
    if (!seen_ids.insert(bug.bug_id).second) {
      manifest_error(path, "duplicate bug_id " + bug.bug_id);
    }
    if (bug.ground_truth.empty()) {
      manifest_error(path, "bug " + bug.bug_id + ": ground_truth is empty");
    }
    if (!std::filesystem::exists(bug.failing_source_path)) {
      manifest_error(path, "bug " + bug.bug_id + ": failing_source " +
                               bug.failing_source_path.string() +
                               " does not exist");
    }
    if (bug.doc_links_path && !std::filesystem::exists(*bug.doc_links_path)) {
      manifest_error(path, "bug " + bug.bug_id + ": doc_links " +
                               bug.doc_links_path->string() +
                               " does not exist");
    }
    try {
      load_coverage_manifest(bug.coverage_manifest_path);
    } catch (const Error& e) {
      manifest_error(path, "bug " + bug.bug_id + ": coverage_manifest " +
                               bug.coverage_manifest_path.string() + ": " +
                               e.what());
    }
    cases.push_back(std::move(bug));
  }
  return cases;
}

std::string emit_report(const EvaluationReport& report, ReportFormat format) {
  if (format == ReportFormat::Table) {
    return render_table({{"all", report}});
  }
  json doc = report_summary_json(report);
  json per_bug = json::array();
  for (const PerBugResult& bug : report.per_bug) {
    per_bug.push_back({{"bug_id", bug.bug_id},
                       {"first_rank", bug.first_rank},
                       {"all_ranks", bug.all_ranks},
                       {"fallback_used", bug.fallback_used}});
  }
  doc["per_bug"] = std::move(per_bug);
  return doc.dump(2) + "\n";
}

std::string emit_report_rows(
    const std::vector<std::pair<std::string, EvaluationReport>>& rows,
    ReportFormat format) {
  if (format == ReportFormat::Table) {
    return render_table(rows);
  }
  json doc = json::array();
  for (const auto& [subject, report] : rows) {
    json row = report_summary_json(report);
    row["subject"] = subject;
    doc.push_back(std::move(row));
  }
  return doc.dump(2) + "\n";
}

}  // namespace cbi

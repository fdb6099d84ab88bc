#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace cbi::commands {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& content) {
  const fs::path parent = path.parent_path();
  if (!parent.empty()) {
    fs::create_directories(parent);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write " + path.string());
  }
  out << content;
}

// One execution's gcov reports: the path itself, or every *.gcov inside a
// directory, in sorted order.
std::vector<fs::path> gcov_files_of(const fs::path& path) {
  if (!fs::exists(path)) {
    throw Error(ErrorCode::IoError, path.string() + " does not exist");
  }
  if (!fs::is_directory(path)) {
    return {path};
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_regular_file() && entry.path().extension() == ".gcov") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw Error(ErrorCode::IoError,
                path.string() + " contains no .gcov files");
  }
  return files;
}

std::string execution_id_of(const fs::path& path) {
  std::string id = path.generic_string();
  const std::string ext = ".gcov";
  if (id.size() > ext.size() &&
      id.compare(id.size() - ext.size(), ext.size(), ext) == 0) {
    id.resize(id.size() - ext.size());
  }
  return id;
}

ExecutionRecord ingest_execution(const fs::path& path, Outcome outcome) {
  ExecutionRecord record;
  record.execution_id = execution_id_of(path);
  record.outcome = outcome;
  for (const fs::path& report : gcov_files_of(path)) {
    const std::string text = read_file(report);
    std::string source = gcov_source_path(text);
    if (source.empty()) {
      // "tree.c.gcov" names its source file when the header is absent.
      source = report.filename().string();
      const std::string ext = ".gcov";
      if (source.size() > ext.size() &&
          source.compare(source.size() - ext.size(), ext.size(), ext) == 0) {
        source.resize(source.size() - ext.size());
      }
    }
    const FileId file(source);
    record.hits[file] += ingest_gcov(text, FileId(report.generic_string()));
  }
  return record;
}

struct BugRun {
  IsolationResult result;
  std::string error;
};

// Bounded worker pool over the bug cases; per-case failures are captured,
// never thrown across threads.
std::vector<BugRun> run_isolation_pool(const std::vector<BugCase>& bugs,
                                       const PipelineConfig& config,
                                       LlmClient& client,
                                       SummaryStore& summaries) {
  std::vector<BugRun> runs(bugs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= bugs.size()) {
        return;
      }
      try {
        runs[i].result = isolate_bug(bugs[i], config, client, summaries);
      } catch (const std::exception& e) {
        runs[i].error = e.what();
      }
    }
  };
  const int n_workers = std::max(
      1, std::min<int>(config.worker_limit, static_cast<int>(bugs.size())));
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (int i = 0; i < n_workers; ++i) {
    pool.emplace_back(worker);
  }
  for (std::thread& t : pool) {
    t.join();
  }
  return runs;
}

void write_bug_artifacts(const fs::path& dir, const IsolationResult& run) {
  write_file(dir / "prompt.txt", run.prompt);
  write_file(dir / "response.txt", run.response);
  write_file(dir / "ranking.json", ranked_list_to_json(run.final_list));
  write_file(dir / "parse_report.json",
             parse_report_to_json(run.report, prompt_digest(run.prompt)));
}

// Runs every case and writes per-bug artifacts under out_dir; fills
// &results with scored bugs when requested. Returns the failure count.
int isolate_into(const std::vector<BugCase>& bugs,
                 const PipelineConfig& config, LlmClient& client,
                 SummaryStore& summaries, const fs::path& out_dir,
                 const std::optional<fs::path>& dump_prompt_dir,
                 std::vector<PerBugResult>* results) {
  const std::vector<BugRun> runs =
      run_isolation_pool(bugs, config, client, summaries);
  int failures = 0;
  for (std::size_t i = 0; i < bugs.size(); ++i) {
    const BugCase& bug = bugs[i];
    if (!runs[i].error.empty()) {
      std::cerr << bug.bug_id << ": " << runs[i].error << "\n";
      ++failures;
      continue;
    }
    write_bug_artifacts(out_dir / bug.bug_id, runs[i].result);
    if (dump_prompt_dir) {
      write_file(*dump_prompt_dir / (bug.bug_id + ".txt"),
                 runs[i].result.prompt);
    }
    if (results) {
      results->push_back(score_bug(runs[i].result.final_list,
                                   bug.ground_truth, bug.bug_id,
                                   runs[i].result.report.fallback_used));
    }
  }
  return failures;
}

SummaryStore open_store(const std::optional<fs::path>& path) {
  return path ? store_load(*path) : SummaryStore();
}

}  // namespace

void cmd_ingest(const IngestArgs& args) {
  std::vector<ExecutionRecord> records;
  for (const fs::path& path : args.failing) {
    records.push_back(ingest_execution(path, Outcome::Failing));
  }
  for (const fs::path& path : args.passing) {
    records.push_back(ingest_execution(path, Outcome::Passing));
  }
  const CoverageMatrix matrix = CoverageMatrix::build(std::move(records));
  save_coverage_manifest(matrix, args.out);
}

int cmd_rank(const RankArgs& args) {
  const std::vector<BugCase> bugs = load_manifest(args.manifest);
  int failures = 0;
  for (const BugCase& bug : bugs) {
    try {
      const CoverageMatrix matrix =
          load_coverage_manifest(bug.coverage_manifest_path);
      const RankedList list = rank(matrix, args.formula, args.granularity);
      save_ranked_list(list, args.out_dir / bug.bug_id / "ranking.json");
    } catch (const std::exception& e) {
      std::cerr << bug.bug_id << ": " << e.what() << "\n";
      ++failures;
    }
  }
  return failures;
}

void cmd_summarize(const SummarizeArgs& args, LlmClient& client) {
  SummaryStore store = store_load(args.store);
  for (const DocSource& source : load_doc_links(args.links)) {
    ensure_summary(store, client, source, args.config, args.refresh);
  }
  store_save(store);
}

int cmd_isolate(const IsolateArgs& args, const PipelineConfig& config,
                LlmClient& client) {
  const std::vector<BugCase> bugs = load_manifest(args.manifest);
  SummaryStore summaries = open_store(args.store_path);
  const int failures = isolate_into(bugs, config, client, summaries,
                                    args.out_dir, args.dump_prompt_dir,
                                    nullptr);
  if (args.store_path) {
    store_save(summaries);
  }
  return failures;
}

void cmd_evaluate(const EvaluateArgs& args) {
  const std::vector<BugCase> bugs = load_manifest(args.manifest);
  std::vector<PerBugResult> results;
  std::vector<const BugCase*> scored;
  for (const BugCase& bug : bugs) {
    const fs::path ranking_path =
        args.rankings_dir / bug.bug_id / "ranking.json";
    if (!fs::exists(ranking_path)) {
      throw Error(ErrorCode::ManifestError,
                  "no ranking for bug " + bug.bug_id + " (expected " +
                      ranking_path.string() + ")");
    }
    const RankedList list = load_ranked_list(ranking_path);
    bool fallback_used = false;
    const fs::path report_path =
        args.rankings_dir / bug.bug_id / "parse_report.json";
    if (fs::exists(report_path)) {
      try {
        fallback_used = json::parse(read_file(report_path))
                            .value("fallback_used", false);
      } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ManifestError,
                    report_path.string() + ": " + e.what());
      }
    }
    results.push_back(score_bug(list, bug.ground_truth, bug.bug_id,
                                fallback_used));
    scored.push_back(&bug);
  }
  const EvaluationReport overall = aggregate(results);
  write_file(args.out_dir / "report.json",
             emit_report(overall, ReportFormat::Json));
  std::vector<std::pair<std::string, EvaluationReport>> rows;
  rows.emplace_back("all", overall);
  if (args.per_compiler) {
    // One extra row per compiler, in first-appearance order.
    std::vector<std::string> order;
    std::map<std::string, std::vector<PerBugResult>> by_compiler;
    for (std::size_t i = 0; i < results.size(); ++i) {
      const std::string name = scored[i]->compiler.display_name();
      if (!by_compiler.count(name)) {
        order.push_back(name);
      }
      by_compiler[name].push_back(results[i]);
    }
    for (const std::string& name : order) {
      rows.emplace_back(name, aggregate(by_compiler[name]));
    }
  }
  write_file(args.out_dir / "report.txt",
             emit_report_rows(rows, ReportFormat::Table));
}

std::string variant_dir_name(const std::string& subject) {
  if (!subject.empty() && subject.front() == '-') {
    return "no-" + subject.substr(1);
  }
  return subject;
}

int cmd_ablate(const AblateArgs& args, const PipelineConfig& config,
               const ClientFactory& make_client) {
  const std::vector<BugCase> bugs = load_manifest(args.manifest);
  std::vector<std::string> subjects{"full"};
  for (std::string_view source : kAblationSources) {
    subjects.push_back("-" + std::string(source));
  }
  std::vector<std::pair<std::string, EvaluationReport>> rows;
  int failures = 0;
  for (const std::string& subject : subjects) {
    PipelineConfig variant = config;
    if (subject != "full") {
      apply_disable(variant, subject.substr(1));
    }
    std::unique_ptr<LlmClient> client = make_client(variant.client);
    SummaryStore summaries = open_store(args.store_path);
    std::vector<PerBugResult> results;
    failures += isolate_into(bugs, variant, *client, summaries,
                             args.out_dir / variant_dir_name(subject),
                             std::nullopt, &results);
    if (!results.empty()) {
      rows.emplace_back(subject, aggregate(results));
    }
  }
  write_file(args.out_dir / "ablation.json",
             emit_report_rows(rows, ReportFormat::Json));
  write_file(args.out_dir / "ablation.txt",
             emit_report_rows(rows, ReportFormat::Table));
  return failures;
}

void sort_transcript_lines(const fs::path& path) {
  if (!fs::exists(path)) {
    return;
  }
  std::istringstream in(read_file(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    lines.push_back(line);
  }
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const std::string& l : lines) {
    out += l;
    out += '\n';
  }
  write_file(path, out);
}

}  // namespace cbi::commands

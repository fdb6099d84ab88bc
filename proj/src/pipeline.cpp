#include "cbi/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace cbi {

namespace {

using json = nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Formula require_formula(const std::string& name, const std::string& context) {
  if (auto formula = formula_from_name(name)) {
    return *formula;
  }
  throw Error(ErrorCode::ConfigError,
              context + ": unknown formula \"" + name + "\"");
}

}  // namespace

void apply_disable(PipelineConfig& config, std::string_view source) {
  if (source == "summary") {
    config.toggles.summary = false;
  } else if (source == "compile") {
    config.toggles.compile = false;
  } else if (source == "execov") {
    config.toggles.execov_list = false;
  } else if (source == "testcov") {
    config.toggles.testcov_list = false;
  } else if (source == "failtest") {
    config.toggles.failtest = false;
  } else if (source == "llm") {
    config.use_llm = false;
  } else {
    std::string valid;
    for (std::string_view name : kAblationSources) {
      valid += valid.empty() ? "" : ", ";
      valid += name;
    }
    throw Error(ErrorCode::ConfigError, "unknown information source \"" +
                                            std::string(source) +
                                            "\" (expected one of " + valid +
                                            ")");
  }
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  PipelineConfig config;
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return config;
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
  if (!doc.is_object()) {
    throw Error(ErrorCode::ConfigError,
                path.string() + ": config must be a JSON object");
  }
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "testcov_formula") {
        config.testcov_formula =
            require_formula(value.get<std::string>(), path.string());
      } else if (key == "execov_formula") {
        config.execov_formula =
            require_formula(value.get<std::string>(), path.string());
      } else if (key == "disable") {
        for (const auto& source : value) {
          apply_disable(config, source.get<std::string>());
        }
      } else if (key == "list_cap") {
        config.list_cap = value.get<int>();
      } else if (key == "model_id") {
        config.model_id = value.get<std::string>();
      } else if (key == "repeats") {
        config.repeats = value.get<int>();
      } else if (key == "worker_limit") {
        config.worker_limit = value.get<int>();
      } else if (key == "summary_char_cap") {
        config.summary_char_cap = value.get<std::size_t>();
      } else if (key == "prompt_budget_chars") {
        config.prompt_budget_chars = value.get<std::size_t>();
      } else if (key == "endpoint") {
        config.client.endpoint_url = value.get<std::string>();
      } else if (key == "api_key_env") {
        config.client.api_key_env = value.get<std::string>();
      } else if (key == "timeout_seconds") {
        config.client.timeout = std::chrono::seconds(value.get<int>());
      } else if (key == "max_retries") {
        config.client.max_retries = value.get<int>();
      } else if (key == "max_in_flight") {
        config.client.max_in_flight = value.get<int>();
      } else if (key == "price_per_call") {
        for (const auto& [model, price] : value.items()) {
          config.client.price_per_call[model] = price.get<double>();
        }
      } else {
        throw Error(ErrorCode::ConfigError,
                    path.string() + ": unknown config key \"" + key + "\"");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
  if (config.repeats < 1) {
    throw Error(ErrorCode::ConfigError,
                path.string() + ": repeats must be >= 1");
  }
  if (config.worker_limit < 1) {
    throw Error(ErrorCode::ConfigError,
                path.string() + ": worker_limit must be >= 1");
  }
  if (config.list_cap < 1) {
    throw Error(ErrorCode::ConfigError,
                path.string() + ": list_cap must be >= 1");
  }
  return config;
}

IsolationResult isolate_bug(const BugCase& bug_case,
                            const PipelineConfig& config, LlmClient& client,
                            SummaryStore& summaries) {
  const CoverageMatrix matrix =
      load_coverage_manifest(bug_case.coverage_manifest_path);

  IsolationResult result;
  result.testcov_list =
      rank(matrix, config.testcov_formula, Granularity::TestCoverage);
  result.execov_list =
      rank(matrix, config.execov_formula, Granularity::ExecutionCoverage);

  if (!config.use_llm) {
    // "-llm": rely on the finer-grained execution-coverage ranking alone.
    result.final_list = result.execov_list;
    return result;
  }

  config.toggles.validate();

  PromptBundle bundle;
  bundle.toggles = config.toggles;
  bundle.list_cap = config.list_cap;
  bundle.testcov_list = result.testcov_list;
  bundle.execov_list = result.execov_list;
  bundle.compile_results = bug_case.compile_results;
  if (config.toggles.failtest) {
    bundle.failing_source = read_file(bug_case.failing_source_path);
  }
  if (config.toggles.summary) {
    if (bug_case.doc_links_path) {
      const SummarizeConfig summarize_config{
          config.model_id, 0.0, config.summary_char_cap};
      for (const DocSource& source : load_doc_links(*bug_case.doc_links_path)) {
        if (matrix.contains(source.file)) {
          ensure_summary(summaries, client, source, summarize_config);
        }
      }
    }
    for (const FileId& file : matrix.candidate_files()) {
      if (const FileSummary* summary = summaries.find(file)) {
        bundle.summaries.push_back(*summary);
      }
    }
  }

  result.prompt = assemble_isolation_prompt(bundle);
  if (prompt_budget(result.prompt) > config.prompt_budget_chars) {
    std::cerr << "warning: " << bug_case.bug_id << ": prompt is "
              << result.prompt.size() << " chars, over the "
              << config.prompt_budget_chars << "-char budget\n";
  }

  ChatRequest request;
  request.model_id = config.model_id;
  request.user = result.prompt;
  request.temperature = 0.0;

  const std::set<FileId> candidates(matrix.candidate_files().begin(),
                                    matrix.candidate_files().end());
  // The fallback order is the test-coverage SBFL list: the baseline the
  // model was asked to refine.
  bool have_best = false;
  for (int run = 0; run < std::max(1, config.repeats); ++run) {
    std::string response = client.complete(request);
    auto [list, report] = parse_ranking(response, candidates,
                                        result.testcov_list);
    if (!have_best || report.matched > result.report.matched) {
      have_best = true;
      result.final_list = std::move(list);
      result.report = std::move(report);
      result.response = std::move(response);
    }
  }
  return result;
}

}  // namespace cbi

#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"

namespace fs = std::filesystem;
using namespace cbi;

namespace {

std::vector<fs::path> to_paths(const std::vector<std::string>& values) {
  return {values.begin(), values.end()};
}

PipelineConfig build_config(const std::string& config_path,
                            const std::vector<std::string>& disable,
                            const CLI::App* sub, const std::string& model,
                            const std::string& endpoint, int repeats) {
  PipelineConfig config;
  if (!config_path.empty()) {
    if (!fs::exists(config_path)) {
      throw Error(ErrorCode::ConfigError,
                  "config file " + config_path + " does not exist");
    }
    config = load_pipeline_config(config_path);
  }
  for (const std::string& source : disable) {
    apply_disable(config, source);
  }
  if (sub->count("--model") > 0) {
    config.model_id = model;
  }
  if (sub->count("--endpoint") > 0) {
    config.client.endpoint_url = endpoint;
  }
  if (sub->count("--repeats") > 0) {
    if (repeats < 1) {
      throw Error(ErrorCode::ConfigError, "--repeats must be >= 1");
    }
    config.repeats = repeats;
  }
  return config;
}

std::unique_ptr<LlmClient> make_client(const ClientConfig& client_config,
                                       const std::string& mock_script) {
  if (!mock_script.empty()) {
    return std::make_unique<MockLlmClient>(load_mock_script(mock_script),
                                           client_config);
  }
  return std::make_unique<HttpLlmClient>(client_config);
}

Formula parse_formula(const std::string& name) {
  if (auto formula = formula_from_name(name)) {
    return *formula;
  }
  throw Error(ErrorCode::ConfigError, "unknown formula \"" + name +
                                          "\" (expected wong2, ochiai, "
                                          "dstar2, barinel or tarantula)");
}

Granularity parse_granularity(const std::string& name) {
  if (auto granularity = granularity_from_name(name)) {
    return *granularity;
  }
  throw Error(ErrorCode::ConfigError,
              "unknown granularity \"" + name + "\" (expected test or exec)");
}

int run(int argc, char** argv) {
  CLI::App app{"Compiler bug isolation: SBFL rankings over per-file "
               "coverage, LLM-refined with a five-section prompt."};
  app.require_subcommand(1);

  auto* ingest = app.add_subcommand(
      "ingest", "Convert gcov reports into a portable coverage manifest");
  std::vector<std::string> ingest_failing;
  std::vector<std::string> ingest_passing;
  std::string ingest_out;
  ingest->add_option("--failing", ingest_failing,
                     "gcov file or directory holding one failing execution "
                     "(repeatable)")
      ->required();
  ingest->add_option("--passing", ingest_passing,
                     "gcov file or directory holding one passing execution "
                     "(repeatable)");
  ingest->add_option("--out", ingest_out, "coverage manifest to write")
      ->required();

  auto* rank = app.add_subcommand(
      "rank", "Rank candidate files by suspiciousness for every bug case");
  std::string rank_manifest;
  std::string rank_out;
  std::string rank_formula = "ochiai";
  std::string rank_granularity = "test";
  rank->add_option("--manifest", rank_manifest, "benchmark manifest")
      ->required();
  rank->add_option("--out", rank_out, "output directory")->required();
  rank->add_option("--formula", rank_formula,
                   "wong2|ochiai|dstar2|barinel|tarantula (default ochiai)");
  rank->add_option("--granularity", rank_granularity,
                   "test|exec (default test)");

  auto* summarize = app.add_subcommand(
      "summarize", "Generate file summaries from a doc-link map");
  std::string sum_links;
  std::string sum_store;
  std::string sum_config;
  std::string sum_model;
  std::string sum_endpoint;
  std::string sum_mock;
  std::string sum_transcript;
  bool sum_refresh = false;
  summarize->add_option("--links", sum_links, "doc-link map (JSON)")
      ->required();
  summarize->add_option("--out", sum_store, "summary store to fill")
      ->required();
  summarize->add_option("--config", sum_config, "pipeline config file");
  summarize->add_option("--model", sum_model, "model id override");
  summarize->add_option("--endpoint", sum_endpoint, "chat endpoint override");
  summarize->add_option("--mock-script", sum_mock,
                        "scripted responses instead of the live endpoint");
  summarize->add_option("--transcript", sum_transcript,
                        "JSONL transcript of model calls");
  summarize->add_flag("--refresh", sum_refresh,
                      "regenerate summaries that are already cached");

  auto* isolate = app.add_subcommand(
      "isolate", "Run the full per-bug isolation pipeline");
  std::string iso_manifest;
  std::string iso_out;
  std::string iso_config;
  std::vector<std::string> iso_disable;
  std::string iso_mock;
  std::string iso_dump;
  std::string iso_transcript;
  std::string iso_store;
  std::string iso_model;
  std::string iso_endpoint;
  int iso_repeats = 1;
  isolate->add_option("--manifest", iso_manifest, "benchmark manifest")
      ->required();
  isolate->add_option("--out", iso_out, "output directory")->required();
  isolate->add_option("--config", iso_config, "pipeline config file");
  isolate->add_option("--disable", iso_disable,
                      "drop one information source: summary, compile, "
                      "execov, testcov, llm or failtest (repeatable)");
  isolate->add_option("--mock-script", iso_mock,
                      "scripted responses instead of the live endpoint");
  isolate->add_option("--dump-prompt", iso_dump,
                      "also write each assembled prompt to this directory");
  isolate->add_option("--transcript", iso_transcript,
                      "JSONL transcript of model calls");
  isolate->add_option("--store", iso_store, "summary store (read and updated)");
  isolate->add_option("--model", iso_model, "model id override");
  isolate->add_option("--endpoint", iso_endpoint, "chat endpoint override");
  isolate->add_option("--repeats", iso_repeats,
                      "model calls per bug, keeping the best-parsed run");

  auto* evaluate = app.add_subcommand(
      "evaluate", "Score rankings against ground truth (Top-N, MFR, MAR)");
  std::string eval_rankings;
  std::string eval_manifest;
  std::string eval_out;
  bool eval_per_compiler = false;
  evaluate->add_option("--rankings", eval_rankings,
                       "directory with <bug_id>/ranking.json")
      ->required();
  evaluate->add_option("--manifest", eval_manifest, "benchmark manifest")
      ->required();
  evaluate->add_option("--out", eval_out, "output directory")->required();
  evaluate->add_flag("--per-compiler", eval_per_compiler,
                     "add one report row per compiler");

  auto* ablate = app.add_subcommand(
      "ablate", "Run the full config plus every single-source-disabled "
                "variant");
  std::string abl_manifest;
  std::string abl_out;
  std::string abl_config;
  std::string abl_mock;
  std::string abl_transcript;
  std::string abl_store;
  std::string abl_model;
  std::string abl_endpoint;
  int abl_repeats = 1;
  ablate->add_option("--manifest", abl_manifest, "benchmark manifest")
      ->required();
  ablate->add_option("--out", abl_out, "output directory")->required();
  ablate->add_option("--config", abl_config, "pipeline config file");
  ablate->add_option("--mock-script", abl_mock,
                     "scripted responses instead of the live endpoint");
  ablate->add_option("--transcript", abl_transcript,
                     "JSONL transcript of model calls");
  ablate->add_option("--store", abl_store, "summary store (read only)");
  ablate->add_option("--model", abl_model, "model id override");
  ablate->add_option("--endpoint", abl_endpoint, "chat endpoint override");
  ablate->add_option("--repeats", abl_repeats,
                     "model calls per bug, keeping the best-parsed run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  if (app.got_subcommand(ingest)) {
    commands::IngestArgs args;
    args.failing = to_paths(ingest_failing);
    args.passing = to_paths(ingest_passing);
    args.out = ingest_out;
    commands::cmd_ingest(args);
    return 0;
  }

  if (app.got_subcommand(rank)) {
    commands::RankArgs args;
    args.manifest = rank_manifest;
    args.formula = parse_formula(rank_formula);
    args.granularity = parse_granularity(rank_granularity);
    args.out_dir = rank_out;
    return commands::cmd_rank(args) == 0 ? 0 : 1;
  }

  if (app.got_subcommand(summarize)) {
    const PipelineConfig config = build_config(sum_config, {}, summarize,
                                               sum_model, sum_endpoint, 1);
    commands::SummarizeArgs args;
    args.links = sum_links;
    args.store = sum_store;
    args.refresh = sum_refresh;
    args.config = SummarizeConfig{config.model_id, 0.0,
                                  config.summary_char_cap};
    auto client = make_client(config.client, sum_mock);
    if (!sum_transcript.empty()) {
      fs::remove(sum_transcript);
      client->set_transcript_path(sum_transcript);
    }
    commands::cmd_summarize(args, *client);
    if (!sum_transcript.empty()) {
      commands::sort_transcript_lines(sum_transcript);
    }
    return 0;
  }

  if (app.got_subcommand(isolate)) {
    const PipelineConfig config = build_config(
        iso_config, iso_disable, isolate, iso_model, iso_endpoint,
        iso_repeats);
    commands::IsolateArgs args;
    args.manifest = iso_manifest;
    args.out_dir = iso_out;
    if (!iso_store.empty()) {
      args.store_path = iso_store;
    }
    if (!iso_dump.empty()) {
      args.dump_prompt_dir = iso_dump;
    }
    auto client = make_client(config.client, iso_mock);
    if (!iso_transcript.empty()) {
      fs::remove(iso_transcript);
      client->set_transcript_path(iso_transcript);
    }
    const int failures = commands::cmd_isolate(args, config, *client);
    if (!iso_transcript.empty()) {
      commands::sort_transcript_lines(iso_transcript);
    }
    return failures == 0 ? 0 : 1;
  }

  if (app.got_subcommand(evaluate)) {
    commands::EvaluateArgs args;
    args.rankings_dir = eval_rankings;
    args.manifest = eval_manifest;
    args.out_dir = eval_out;
    args.per_compiler = eval_per_compiler;
    commands::cmd_evaluate(args);
    return 0;
  }

  if (app.got_subcommand(ablate)) {
    const PipelineConfig config = build_config(abl_config, {}, ablate,
                                               abl_model, abl_endpoint,
                                               abl_repeats);
    commands::AblateArgs args;
    args.manifest = abl_manifest;
    args.out_dir = abl_out;
    if (!abl_store.empty()) {
      args.store_path = abl_store;
    }
    if (!abl_transcript.empty()) {
      fs::remove(abl_transcript);
    }
    const int failures = commands::cmd_ablate(
        args, config, [&](const ClientConfig& client_config) {
          auto client = make_client(client_config, abl_mock);
          if (!abl_transcript.empty()) {
            client->set_transcript_path(abl_transcript);
          }
          return client;
        });
    if (!abl_transcript.empty()) {
      commands::sort_transcript_lines(abl_transcript);
    }
    return failures == 0 ? 0 : 1;
  }

  return 2;  // unreachable: a subcommand is required
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::ConfigError ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

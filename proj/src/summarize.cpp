#include "cbi/summarize.hpp"

#include <cctype>
#include <ctime>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cbi/llm_client.hpp"
#include "cbi/prompt_templates.hpp"

namespace cbi {

namespace {

using json = nlohmann::json;

std::string now_rfc3339() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
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

bool is_blank(std::string_view text) {
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) {
      return false;
    }
  }
  return true;
}

}  // namespace

bool SummaryStore::has(const FileId& file) const {
  std::lock_guard lock(mutex_);
  return entries_.count(file) != 0;
}

const FileSummary* SummaryStore::find(const FileId& file) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(file);
  return it == entries_.end() ? nullptr : &it->second;
}

void SummaryStore::insert(FileSummary summary) {
  std::lock_guard lock(mutex_);
  entries_.insert_or_assign(summary.file, std::move(summary));
}

std::size_t SummaryStore::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

SummaryStore store_load(const std::filesystem::path& path) {
  SummaryStore store(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return store;  // cold cache
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::StoreCorrupt,
                path.string() + " at byte " + std::to_string(e.byte) + ": " +
                    e.what());
  }
  try {
    for (const auto& [file, entry] : doc.items()) {
      store.insert(FileSummary{FileId(file),
                               entry.at("summary").get<std::string>(),
                               entry.at("generated_at").get<std::string>(),
                               entry.at("model_id").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::StoreCorrupt, path.string() + ": " + e.what());
  }
  return store;
}

void store_save(const SummaryStore& store) {
  if (store.backing_path().empty()) {
    throw Error(ErrorCode::IoError, "summary store has no backing path");
  }
  json doc = json::object();
  for (const auto& [file, summary] : store.entries()) {
    doc[file.path()] = {{"summary", summary.summary},
                        {"generated_at", summary.generated_at},
                        {"model_id", summary.model_id}};
  }
  const auto parent = store.backing_path().parent_path();
  if (!parent.empty()) {
    std::filesystem::create_directories(parent);
  }
  std::ofstream out(store.backing_path(), std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::IoError,
                "cannot write " + store.backing_path().string());
  }
  out << doc.dump(2) << "\n";
}

std::string build_summary_prompt(const DocSource& source) {
  std::string prompt(templates::kSummaryPromptHeader);
  prompt += source.file.path();
  if (const auto* local = std::get_if<DocSource::LocalText>(&source.origin)) {
    if (is_blank(local->value)) {
      throw Error(ErrorCode::EmptyDocument, source.file.path());
    }
    prompt += templates::kSummaryPromptLocalText;
    prompt += local->value;
    if (prompt.back() != '\n') {
      prompt += '\n';
    }
  } else {
    prompt += templates::kSummaryPromptUrl;
    prompt += std::get<DocSource::Url>(source.origin).value;
    prompt += '\n';
  }
  return prompt;
}

std::string strip_sentinels(std::string text) {
  // Removal can splice two fragments into a fresh marker; repeat to fixpoint.
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::string_view marker : templates::kAllSentinels) {
      std::size_t pos;
      while ((pos = text.find(marker)) != std::string::npos) {
        text.erase(pos, marker.size());
        changed = true;
      }
    }
  }
  return text;
}

std::string truncate_at_whitespace(std::string text, std::size_t cap) {
  if (text.size() <= cap) {
    return text;
  }
  std::size_t cut = cap;
  const std::size_t boundary = text.find_last_of(" \t\n\r", cap);
  if (boundary != std::string::npos && boundary > 0) {
    cut = boundary;
  }
  text.resize(cut);
  while (!text.empty() &&
         std::isspace(static_cast<unsigned char>(text.back()))) {
    text.pop_back();
  }
  return text;
}

FileSummary summarize_file(LlmClient& client, const DocSource& source,
                           const SummarizeConfig& config) {
  ChatRequest request;
  request.model_id = config.model_id;
  request.user = build_summary_prompt(source);
  request.temperature = config.temperature;
  std::string text = strip_sentinels(client.complete(request));
  if (is_blank(text)) {
    throw Error(ErrorCode::SummaryEmpty, source.file.path());
  }
  text = truncate_at_whitespace(std::move(text), config.summary_char_cap);
  return FileSummary{source.file, std::move(text), now_rfc3339(),
                     config.model_id};
}

const FileSummary& ensure_summary(SummaryStore& store, LlmClient& client,
                                  const DocSource& source,
                                  const SummarizeConfig& config,
                                  bool refresh) {
  if (!refresh) {
    if (const FileSummary* cached = store.find(source.file)) {
      return *cached;
    }
  }
  store.insert(summarize_file(client, source, config));
  return *store.find(source.file);
}

std::vector<DocSource> load_doc_links(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ManifestError, path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("mode")) {
    throw Error(ErrorCode::ManifestError,
                path.string() + ": doc-link map needs a \"mode\" field");
  }
  const auto mode = doc.at("mode").get<std::string>();
  if (mode != "url" && mode != "file") {
    throw Error(ErrorCode::ManifestError,
                path.string() + ": mode must be \"url\" or \"file\"");
  }
  std::vector<DocSource> sources;
  for (const auto& [file, value] : doc.items()) {
    if (file == "mode") {
      continue;
    }
    DocSource source{FileId(file), DocSource::Url{}};
    if (mode == "url") {
      source.origin = DocSource::Url{value.get<std::string>()};
    } else {
      const auto doc_path =
          path.parent_path() / std::filesystem::path(value.get<std::string>());
      source.origin = DocSource::LocalText{read_file(doc_path)};
    }
    sources.push_back(std::move(source));
  }
  return sources;
}

}  // namespace cbi

#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cbi/coverage.hpp"

namespace cbi {

class LlmClient;

/// Where a file's documentation comes from: a link for models that browse,
/// or the raw document text supplied locally. Exactly one of the two.
struct DocSource {
  struct Url {
    std::string value;
  };
  struct LocalText {
    std::string value;
  };

  FileId file;
  std::variant<Url, LocalText> origin;
};

struct FileSummary {
  FileId file;
  std::string summary;       // plain text, free of sentinel markers
  std::string generated_at;  // RFC 3339
  std::string model_id;

  friend bool operator==(const FileSummary&, const FileSummary&) = default;
};

/// File-backed summary cache. Summaries are generated once and reused until
/// the operator forces a refresh. Lookups and inserts are safe from
/// concurrent workers; returned pointers stay valid because map nodes are
/// stable. entries() requires the store to be quiescent.
class SummaryStore {
 public:
  SummaryStore() = default;
  explicit SummaryStore(std::filesystem::path backing) : backing_(std::move(backing)) {}
  SummaryStore(SummaryStore&& other) noexcept
      : backing_(std::move(other.backing_)),
        entries_(std::move(other.entries_)) {}
  SummaryStore& operator=(SummaryStore&& other) noexcept {
    backing_ = std::move(other.backing_);
    entries_ = std::move(other.entries_);
    return *this;
  }

  const std::filesystem::path& backing_path() const { return backing_; }
  bool has(const FileId& file) const;
  const FileSummary* find(const FileId& file) const;
  void insert(FileSummary summary);
  std::size_t size() const;
  const std::map<FileId, FileSummary>& entries() const { return entries_; }

 private:
  std::filesystem::path backing_;
  std::map<FileId, FileSummary> entries_;
  mutable std::mutex mutex_;
};

/// Loads a summary cache; a missing file is an empty store, not an error.
SummaryStore store_load(const std::filesystem::path& path);
void store_save(const SummaryStore& store);

struct SummarizeConfig {
  std::string model_id = "gpt-4o";
  double temperature = 0.0;
  std::size_t summary_char_cap = 1200;
};

/// Instantiates the pinned document-summarization prompt for one file.
std::string build_summary_prompt(const DocSource& source);

/// Asks the model for a file summary; the response is stripped of sentinel
/// markers and truncated to the char cap at a whitespace boundary.
FileSummary summarize_file(LlmClient& client, const DocSource& source,
                           const SummarizeConfig& config);

/// Cache-aware variant: returns the stored summary when present (zero model
/// calls) unless refresh is set.
const FileSummary& ensure_summary(SummaryStore& store, LlmClient& client,
                                  const DocSource& source,
                                  const SummarizeConfig& config,
                                  bool refresh = false);

/// Doc-link map file: JSON object with a "mode" field ("url" or "file");
/// every other key maps a source path to its link or local document path.
/// In file mode the mapped path is resolved relative to the map's directory.
std::vector<DocSource> load_doc_links(const std::filesystem::path& path);

/// Removes every sentinel marker substring from text.
std::string strip_sentinels(std::string text);

/// Truncates to at most cap characters, preferring a whitespace boundary.
std::string truncate_at_whitespace(std::string text, std::size_t cap);

}  // namespace cbi

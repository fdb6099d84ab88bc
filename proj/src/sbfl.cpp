#include "cbi/sbfl.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

namespace cbi {

namespace {

using json = nlohmann::json;

// Shared zero-denominator rule: 0/0 -> 0, x/0 -> +inf for x > 0.
Score ratio(double numerator, double denominator) {
  if (denominator == 0.0) {
    return numerator == 0.0 ? Score{0.0} : Score::infinity();
  }
  return Score{numerator / denominator};
}

Score test_coverage_score(Formula formula, const CountVector& c) {
  const double failed = static_cast<double>(c.failed_f);
  const double passed = static_cast<double>(c.passed_f);
  const double total_failed = static_cast<double>(c.total_failed);
  const double total_passed = static_cast<double>(c.total_passed);
  switch (formula) {
    case Formula::Wong2:
      return Score{failed - passed};
    case Formula::Ochiai:
      if (c.failed_f == 0) {
        return Score{0.0};
      }
      return ratio(failed, std::sqrt(total_failed * (failed + passed)));
    case Formula::DStar2:
      return ratio(failed * failed, passed + (total_failed - failed));
    case Formula::Barinel:
      if (c.failed_f + c.passed_f == 0) {
        return Score{0.0};
      }
      return Score{1.0 - passed / (passed + failed)};
    case Formula::Tarantula: {
      const double failed_frac =
          c.total_failed == 0 ? 0.0 : failed / total_failed;
      const double passed_frac =
          c.total_passed == 0 ? 0.0 : passed / total_passed;
      if (failed_frac + passed_frac == 0.0) {
        return Score{0.0};
      }
      return Score{failed_frac / (failed_frac + passed_frac)};
    }
  }
  return Score{0.0};
}

Score execution_coverage_score(Formula formula, const CountVector& c) {
  const double cf = static_cast<double>(c.cf);
  const double cp = static_cast<double>(c.cp);
  switch (formula) {
    case Formula::Wong2:
      return Score{cf - cp};
    case Formula::Ochiai:
      if (c.cf == 0) {
        return Score{0.0};
      }
      return ratio(cf, std::sqrt(cf * (cf + cp)));
    case Formula::DStar2:
      return ratio(cf * cf, cp + cf);
    case Formula::Barinel:
      if (c.cf + c.cp == 0) {
        return Score{0.0};
      }
      return Score{1.0 - cp / (cp + cf)};
    case Formula::Tarantula:
      return ratio(cf, c.cp_bar + cf);
  }
  return Score{0.0};
}

}  // namespace

std::string_view formula_name(Formula formula) {
  switch (formula) {
    case Formula::Wong2: return "wong2";
    case Formula::Ochiai: return "ochiai";
    case Formula::DStar2: return "dstar2";
    case Formula::Barinel: return "barinel";
    case Formula::Tarantula: return "tarantula";
  }
  return "?";
}

std::string_view granularity_name(Granularity granularity) {
  return granularity == Granularity::TestCoverage ? "test" : "exec";
}

std::optional<Formula> formula_from_name(std::string_view name) {
  for (Formula f : {Formula::Wong2, Formula::Ochiai, Formula::DStar2,
                    Formula::Barinel, Formula::Tarantula}) {
    if (name == formula_name(f)) {
      return f;
    }
  }
  return std::nullopt;
}

std::optional<Granularity> granularity_from_name(std::string_view name) {
  if (name == "test") {
    return Granularity::TestCoverage;
  }
  if (name == "exec") {
    return Granularity::ExecutionCoverage;
  }
  return std::nullopt;
}

Score Score::infinity() {
  return Score{std::numeric_limits<double>::infinity()};
}

bool Score::is_infinite() const { return std::isinf(value); }

Provenance Provenance::sbfl(Formula formula, Granularity granularity) {
  return Provenance{Kind::Sbfl, formula, granularity};
}

Provenance Provenance::llm_refined() {
  return Provenance{Kind::LlmRefined, Formula::Ochiai,
                    Granularity::TestCoverage};
}

Provenance Provenance::fallback() {
  return Provenance{Kind::Fallback, Formula::Ochiai,
                    Granularity::TestCoverage};
}

std::string Provenance::to_string() const {
  switch (kind) {
    case Kind::Sbfl:
      return "sbfl:" + std::string(formula_name(formula)) + ":" +
             std::string(granularity_name(granularity));
    case Kind::LlmRefined:
      return "llm-refined";
    case Kind::Fallback:
      return "fallback";
  }
  return "?";
}

Provenance Provenance::from_string(std::string_view text) {
  if (text == "llm-refined") {
    return llm_refined();
  }
  if (text == "fallback") {
    return fallback();
  }
  if (text.substr(0, 5) == "sbfl:") {
    std::string_view rest = text.substr(5);
    std::size_t colon = rest.find(':');
    if (colon != std::string_view::npos) {
      auto formula = formula_from_name(rest.substr(0, colon));
      auto granularity = granularity_from_name(rest.substr(colon + 1));
      if (formula && granularity) {
        return sbfl(*formula, *granularity);
      }
    }
  }
  throw Error(ErrorCode::ManifestError,
              "unknown provenance '" + std::string(text) + "'");
}

std::vector<FileId> RankedList::files_in_order() const {
  std::vector<FileId> files;
  files.reserve(entries.size());
  for (const auto& entry : entries) {
    files.push_back(entry.file);
  }
  return files;
}

Score suspiciousness(Formula formula, Granularity granularity,
                     const CountVector& c) {
  return granularity == Granularity::TestCoverage
             ? test_coverage_score(formula, c)
             : execution_coverage_score(formula, c);
}

RankedList rank(const CoverageMatrix& matrix, Formula formula,
                Granularity granularity) {
  RankedList list;
  list.provenance = Provenance::sbfl(formula, granularity);
  for (const auto& file : matrix.candidate_files()) {
    list.entries.push_back(
        {file, suspiciousness(formula, granularity, matrix.counts(file)), 0});
  }
  std::stable_sort(list.entries.begin(), list.entries.end(),
                   [](const RankedEntry& a, const RankedEntry& b) {
                     if (a.score.value != b.score.value) {
                       return a.score.value > b.score.value;
                     }
                     return a.file < b.file;
                   });
  for (std::size_t i = 0; i < list.entries.size(); ++i) {
    list.entries[i].rank = static_cast<int>(i + 1);
  }
  return list;
}

int first_rank_of(const RankedList& list, const std::set<FileId>& targets) {
  int best = static_cast<int>(list.entries.size()) + 1;
  for (const auto& entry : list.entries) {
    if (targets.count(entry.file) != 0) {
      best = std::min(best, entry.rank);
    }
  }
  return best;
}

std::string ranked_list_to_json(const RankedList& list) {
  json entries = json::array();
  for (const auto& entry : list.entries) {
    json score;
    if (entry.score.is_infinite()) {
      score = "inf";
    } else {
      score = entry.score.value;
    }
    entries.push_back({{"rank", entry.rank},
                       {"file", entry.file.path()},
                       {"score", std::move(score)}});
  }
  return json{{"provenance", list.provenance.to_string()},
              {"entries", std::move(entries)}}
             .dump(2) +
         "\n";
}

RankedList ranked_list_from_json(std::string_view text,
                                 std::string_view origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ManifestError, std::string(origin) + ": " + e.what());
  }
  try {
    RankedList list;
    list.provenance =
        Provenance::from_string(doc.at("provenance").get<std::string>());
    for (const auto& entry : doc.at("entries")) {
      RankedEntry parsed{FileId(entry.at("file").get<std::string>()), Score{},
                         entry.at("rank").get<int>()};
      const auto& score = entry.at("score");
      parsed.score =
          score.is_string() ? Score::infinity() : Score{score.get<double>()};
      list.entries.push_back(std::move(parsed));
    }
    return list;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ManifestError, std::string(origin) + ": " + e.what());
  }
}

RankedList load_ranked_list(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::ManifestError,
                "cannot open ranking " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ranked_list_from_json(buffer.str(), path.string());
}

void save_ranked_list(const RankedList& list,
                      const std::filesystem::path& path) {
  const std::filesystem::path parent = path.parent_path();
  if (!parent.empty()) {
    std::filesystem::create_directories(parent);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write " + path.string());
  }
  out << ranked_list_to_json(list);
}

}  // namespace cbi

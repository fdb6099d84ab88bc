#include <cmath>

#include <doctest.h>

#include "cbi/sbfl.hpp"
#include "testutil.hpp"

using namespace cbi;
using testutil::TempDir;

namespace {

CountVector cv(std::int64_t failed_f, std::int64_t passed_f,
               std::int64_t total_failed, std::int64_t total_passed,
               std::int64_t cf, std::int64_t cp, double cp_bar) {
  return CountVector{failed_f, passed_f, total_failed, total_passed,
                     cf, cp, cp_bar};
}

double sus(Formula f, Granularity g, const CountVector& c) {
  return suspiciousness(f, g, c).value;
}

}  // namespace

TEST_CASE("formula and granularity names round-trip") {
  for (Formula f : {Formula::Wong2, Formula::Ochiai, Formula::DStar2,
                    Formula::Barinel, Formula::Tarantula}) {
    CHECK(formula_from_name(formula_name(f)) == f);
  }
  CHECK(granularity_from_name("test") == Granularity::TestCoverage);
  CHECK(granularity_from_name("exec") == Granularity::ExecutionCoverage);
  CHECK(!formula_from_name("sbi"));
  CHECK(!granularity_from_name("line"));
}

TEST_CASE("worked example: one failing, three covering passing runs") {
  // 1 / sqrt(1 * (1 + 3)) = 0.5
  const CountVector c = cv(1, 3, 1, 3, 0, 0, 0.0);
  CHECK(sus(Formula::Ochiai, Granularity::TestCoverage, c) ==
        doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("test-coverage formulas on hand-computed vectors") {
  // a.c in the tiny fixture: failed=1 passed=2 totalfailed=1 totalpassed=2.
  const CountVector a = cv(1, 2, 1, 2, 4, 3, 1.5);
  CHECK(sus(Formula::Wong2, Granularity::TestCoverage, a) == -1.0);
  CHECK(sus(Formula::Ochiai, Granularity::TestCoverage, a) ==
        doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
  CHECK(sus(Formula::DStar2, Granularity::TestCoverage, a) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK(sus(Formula::Barinel, Granularity::TestCoverage, a) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(sus(Formula::Tarantula, Granularity::TestCoverage, a) ==
        doctest::Approx(0.5).epsilon(1e-12));

  // b.c: failed=1 passed=1.
  const CountVector b = cv(1, 1, 1, 2, 1, 3, 3.0);
  CHECK(sus(Formula::Wong2, Granularity::TestCoverage, b) == 0.0);
  CHECK(sus(Formula::Ochiai, Granularity::TestCoverage, b) ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(sus(Formula::DStar2, Granularity::TestCoverage, b) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sus(Formula::Barinel, Granularity::TestCoverage, b) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK(sus(Formula::Tarantula, Granularity::TestCoverage, b) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("execution-coverage formulas on hand-computed vectors") {
  // a.c: cf=4 cp=3 cp_bar=1.5.
  const CountVector a = cv(1, 2, 1, 2, 4, 3, 1.5);
  CHECK(sus(Formula::Wong2, Granularity::ExecutionCoverage, a) == 1.0);
  CHECK(sus(Formula::Ochiai, Granularity::ExecutionCoverage, a) ==
        doctest::Approx(4.0 / std::sqrt(28.0)).epsilon(1e-12));
  CHECK(sus(Formula::DStar2, Granularity::ExecutionCoverage, a) ==
        doctest::Approx(16.0 / 7.0).epsilon(1e-12));
  CHECK(sus(Formula::Barinel, Granularity::ExecutionCoverage, a) ==
        doctest::Approx(4.0 / 7.0).epsilon(1e-12));
  CHECK(sus(Formula::Tarantula, Granularity::ExecutionCoverage, a) ==
        doctest::Approx(4.0 / 5.5).epsilon(1e-12));

  // b.c: cf=1 cp=3 cp_bar=3.
  const CountVector b = cv(1, 1, 1, 2, 1, 3, 3.0);
  CHECK(sus(Formula::Wong2, Granularity::ExecutionCoverage, b) == -2.0);
  CHECK(sus(Formula::Ochiai, Granularity::ExecutionCoverage, b) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK(sus(Formula::DStar2, Granularity::ExecutionCoverage, b) ==
        doctest::Approx(0.25).epsilon(1e-12));
  CHECK(sus(Formula::Barinel, Granularity::ExecutionCoverage, b) ==
        doctest::Approx(0.25).epsilon(1e-12));
  CHECK(sus(Formula::Tarantula, Granularity::ExecutionCoverage, b) ==
        doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("degenerate denominators are total, never NaN") {
  // DStar2/test is the only cell that can reach x/0.
  const CountVector solo = cv(1, 0, 1, 0, 3, 0, 0.0);
  const Score dstar = suspiciousness(Formula::DStar2,
                                     Granularity::TestCoverage, solo);
  CHECK(dstar.is_infinite());
  CHECK(dstar.value > 0);

  // All-zero vector: every cell is 0.
  const CountVector zero = cv(0, 0, 1, 1, 0, 0, 0.0);
  for (Formula f : {Formula::Wong2, Formula::Ochiai, Formula::DStar2,
                    Formula::Barinel, Formula::Tarantula}) {
    for (Granularity g :
         {Granularity::TestCoverage, Granularity::ExecutionCoverage}) {
      const Score s = suspiciousness(f, g, zero);
      CHECK(!std::isnan(s.value));
      CHECK(s.value == 0.0);
    }
  }

  // Uncovered by failing runs: Ochiai is pinned to 0.
  const CountVector pass_only = cv(0, 2, 1, 2, 0, 9, 4.5);
  CHECK(sus(Formula::Ochiai, Granularity::TestCoverage, pass_only) == 0.0);
  CHECK(sus(Formula::Ochiai, Granularity::ExecutionCoverage, pass_only) ==
        0.0);
  CHECK(sus(Formula::Tarantula, Granularity::ExecutionCoverage, pass_only) ==
        0.0);

  // No passing executions at all: Tarantula's passed term is 0.
  const CountVector no_passing = cv(1, 0, 2, 0, 0, 0, 0.0);
  CHECK(sus(Formula::Tarantula, Granularity::TestCoverage, no_passing) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("faulty file sinks to 23rd under Ochiai/test and rises to 1st "
          "under Wong2/exec") {
  const CoverageMatrix m = testutil::gcc59221_matrix();
  const FileId faulty(testutil::kFaultyFile);
  REQUIRE(m.candidate_files().size() == 23);

  const RankedList by_test = rank(m, Formula::Ochiai,
                                  Granularity::TestCoverage);
  CHECK(first_rank_of(by_test, {faulty}) == 23);
  CHECK(by_test.entries.back().file == faulty);
  CHECK(by_test.entries.back().score.value ==
        doctest::Approx(0.5).epsilon(1e-12));

  const RankedList by_exec = rank(m, Formula::Wong2,
                                  Granularity::ExecutionCoverage);
  CHECK(first_rank_of(by_exec, {faulty}) == 1);
  CHECK(by_exec.entries.front().file == faulty);
  CHECK(by_exec.entries.front().score.value ==
        doctest::Approx(22.0).epsilon(1e-12));
}

TEST_CASE("ranking is sorted, gap-free and path-tie-broken") {
  const CoverageMatrix m = testutil::gcc59221_matrix();
  for (Formula f : {Formula::Wong2, Formula::Ochiai, Formula::DStar2,
                    Formula::Barinel, Formula::Tarantula}) {
    for (Granularity g :
         {Granularity::TestCoverage, Granularity::ExecutionCoverage}) {
      const RankedList list = rank(m, f, g);
      REQUIRE(list.entries.size() == m.candidate_files().size());
      for (std::size_t i = 0; i < list.entries.size(); ++i) {
        CHECK(list.entries[i].rank == static_cast<int>(i) + 1);
        if (i > 0) {
          const auto& prev = list.entries[i - 1];
          const auto& cur = list.entries[i];
          const bool ordered =
              prev.score.value > cur.score.value ||
              (prev.score.value == cur.score.value && prev.file < cur.file);
          CHECK(ordered);
        }
      }
    }
  }
}

TEST_CASE("first_rank_of returns len+1 for absent targets") {
  const RankedList list = rank(testutil::tiny_matrix(), Formula::Ochiai,
                               Granularity::TestCoverage);
  CHECK(first_rank_of(list, {FileId("not-there.c")}) ==
        static_cast<int>(list.entries.size()) + 1);
}

TEST_CASE("provenance strings round-trip") {
  const Provenance s =
      Provenance::sbfl(Formula::Ochiai, Granularity::TestCoverage);
  CHECK(s.to_string() == "sbfl:ochiai:test");
  CHECK(Provenance::from_string("sbfl:ochiai:test") == s);
  CHECK(Provenance::llm_refined().to_string() == "llm-refined");
  CHECK(Provenance::from_string("llm-refined") == Provenance::llm_refined());
  CHECK(Provenance::fallback().to_string() == "fallback");
  CHECK(Provenance::from_string("fallback") == Provenance::fallback());
  CHECK(Provenance::sbfl(Formula::Wong2, Granularity::ExecutionCoverage)
            .to_string() == "sbfl:wong2:exec");
  CHECK_THROWS_AS(Provenance::from_string("sbfl:bogus:test"), Error);
  CHECK_THROWS_AS(Provenance::from_string("guesswork"), Error);
}

TEST_CASE("ranked list json round-trips, including infinite scores") {
  TempDir dir;
  RankedList list;
  list.provenance = Provenance::sbfl(Formula::DStar2,
                                     Granularity::TestCoverage);
  list.entries.push_back({FileId("a.c"), Score::infinity(), 1});
  list.entries.push_back({FileId("b.c"), Score{0.25}, 2});

  const std::string json_text = ranked_list_to_json(list);
  CHECK(json_text.find("\"inf\"") != std::string::npos);

  const RankedList parsed = ranked_list_from_json(json_text, "inline");
  REQUIRE(parsed.entries.size() == 2);
  CHECK(parsed.provenance == list.provenance);
  CHECK(parsed.entries[0].file == FileId("a.c"));
  CHECK(parsed.entries[0].score.is_infinite());
  CHECK(parsed.entries[1].score.value == 0.25);
  CHECK(parsed.entries[1].rank == 2);

  const auto path = dir / "ranking.json";
  save_ranked_list(list, path);
  const RankedList loaded = load_ranked_list(path);
  CHECK(ranked_list_to_json(loaded) == json_text);

  CHECK_THROWS_AS(load_ranked_list(dir / "absent.json"), Error);
  CHECK_THROWS_AS(ranked_list_from_json("{", "inline"), Error);
}

#include <doctest.h>

#include "readlens/error.hpp"
#include "readlens/fixture.hpp"
#include "readlens/textmetrics.hpp"

using namespace readlens;

TEST_CASE("syllable heuristic") {
  CHECK(count_syllables("cat") == 1);
  CHECK(count_syllables("suffrage") == 2);
  CHECK(count_syllables("make") == 1);
  CHECK(count_syllables("table") == 2);
  CHECK(count_syllables("rhythm") == 1);
  CHECK(count_syllables("the") == 1);
  CHECK(count_syllables("amendment") == 3);
}

TEST_CASE("Flesch-Kincaid grade") {
  auto t = flesch_kincaid("The cat sat.");
  CHECK(t.word_count == 3);
  CHECK(t.sentence_count == 1);
  CHECK(t.syllable_count == 3);
  CHECK(t.flesch_kincaid_grade == doctest::Approx(-2.62));

  // Doubling a text keeps both ratios, hence the grade.
  const std::string p = fixture_assessment().passage_text;
  auto once = flesch_kincaid(p);
  auto twice = flesch_kincaid(p + " " + p);
  CHECK(twice.word_count == 2 * once.word_count);
  CHECK(twice.flesch_kincaid_grade == doctest::Approx(once.flesch_kincaid_grade));

  CHECK(flesch_kincaid("Stop!!! Go?").sentence_count == 2);
  CHECK_THROWS_AS(flesch_kincaid("  ... "), Error);
}

TEST_CASE("score distribution") {
  AssessmentContent a;
  a.questions = {{"Q1", "", {}, "A", {}}, {"Q2", "", {}, "B", {}}};
  std::vector<StudentResponse> r;
  for (int s = 0; s < 46; ++s) {
    const std::string id = std::to_string(s);
    r.push_back({id, "Q1", "A", s < 33, 1.0});
    r.push_back({id, "Q2", "B", s < 10, 1.0});
  }
  auto d = score_distribution(r, a);
  REQUIRE(d.questions.size() == 2);
  CHECK(d.questions[0].respondents == 46);
  CHECK(d.questions[0].correct == 33);
  CHECK(d.questions[0].accuracy == doctest::Approx(0.717).epsilon(1e-3));
  CHECK(d.histogram == std::vector<int>{13, 23, 10});
  CHECK(d.min == 0);
  CHECK(d.max == 2);
  CHECK(d.mean == doctest::Approx(43.0 / 46.0));

  r.push_back({"0", "Q9", "A", true, 1.0});
  try {
    score_distribution(r, a);
    FAIL("expected UnknownQuestion");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownQuestion);
  }
}

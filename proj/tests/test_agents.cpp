#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <regex>

#include "readlens/agents.hpp"
#include "readlens/error.hpp"
#include "readlens/features.hpp"
#include "readlens/fixture.hpp"
#include "support.hpp"

using namespace readlens;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a readlens::Error");
  return ErrorCode::IoError;
}

/// Four hand-made profiles over an eight-student roster.
PromptBundle sample_bundle() {
  AssessmentContent a = fixture_assessment();
  std::vector<std::string> roster = {"101", "102", "103", "104", "105", "106", "107", "108"};
  std::vector<StudentResponse> responses;
  for (std::size_t s = 0; s < roster.size(); ++s) {
    for (std::size_t q = 0; q < a.questions.size(); ++q) {
      const bool ok = (s + q) % 3 != 0;
      responses.push_back({roster[s], a.questions[q].id,
                           ok ? a.questions[q].correct_option : "Z", ok, 10.0});
    }
  }
  std::vector<std::string> features(kFeatureNames.begin(), kFeatureNames.end());
  std::vector<ClusterProfile> profiles;
  const double zs[4] = {1.2, -0.5, 0.1, -1.4};
  for (int c = 0; c < 4; ++c) {
    ClusterProfile p;
    p.cluster = c;
    p.members = {roster[2 * c], roster[2 * c + 1]};
    for (std::size_t f = 0; f < features.size(); ++f) {
      const double z = zs[c] * (f % 2 == 0 ? 1.0 : -0.5);
      p.centroid_z.push_back(z);
      p.tags.push_back(tag_for(z));
    }
    profiles.push_back(p);
  }
  QualityMetrics q{ClusterMethod::KMeans, 4, 0.512345, 0.301};
  return make_prompt_bundle(a, responses, features, profiles, q, {{"108", 3, 3.14159}},
                            roster);
}

std::string golden_path() { return std::string(READLENS_GOLDEN_DIR) + "/curator_prompt.txt"; }

}  // namespace

TEST_CASE("bundle JSON") {
  auto b = sample_bundle();
  auto j = bundle_to_json(b);
  CHECK(j["cluster_profiles"].size() == 4);
  CHECK(j["cluster_profiles"][0]["cluster"] == 1);
  CHECK(j["cluster_profiles"][0]["features"].size() == 10);
  CHECK(j["outliers"][0]["cluster"] == 4);
  CHECK(j["outliers"][0]["distance"] == 3.14);
  CHECK(j["cluster_quality"]["avg_within_cluster_variance"] == 0.512);
  CHECK(j["roster"].size() == 8);
  CHECK(j["feature_glossary"].size() == 10);
  for (const auto& q : j["question_performance"]) {
    CHECK(q["accuracy_pct"].is_number_integer());
    CHECK(q["question"].get<std::string>().size() <= 103);
  }
  // Fixed key order.
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  CHECK(keys.front() == "assessment_title");
  CHECK(keys.back() == "roster");
}

TEST_CASE("bundle validation") {
  auto b = sample_bundle();
  b.outliers.push_back({"999", 0, 1.0});
  CHECK(code_of([&] { validate_bundle(b); }) == ErrorCode::UnknownStudent);
  auto c = sample_bundle();
  c.question_performance[0].standard_codes.push_back("XX.1");
  CHECK(code_of([&] { validate_bundle(c); }) == ErrorCode::DanglingStandard);
}

TEST_CASE("curator prompt is deterministic and embeds the bundle") {
  auto b = sample_bundle();
  const auto p1 = build_curator_prompt(b);
  const auto p2 = build_curator_prompt(sample_bundle());
  CHECK(p1 == p2);
  CHECK(p1.rfind(std::string(kCuratorMarker), 0) == 0);
  for (auto s : kReportSections) CHECK(p1.find("## " + std::string(s)) != std::string::npos);
  auto embedded = extract_bundle_json(p1);
  REQUIRE(embedded.has_value());
  CHECK((*embedded)["cluster_profiles"].size() == 4);
  CHECK(p1.find("{{") == std::string::npos);
}

TEST_CASE("curator prompt matches the golden file") {
  const auto prompt = build_curator_prompt(sample_bundle());
  if (std::getenv("READLENS_UPDATE_GOLDEN")) {
    std::ofstream(golden_path(), std::ios::binary) << prompt;
  }
  const auto golden = testsupport::slurp(golden_path());
  REQUIRE_FALSE(golden.empty());
  CHECK(prompt == golden);
}

TEST_CASE("template placeholders") {
  auto b = sample_bundle();
  CHECK(code_of([&] { build_curator_prompt(b, "{{nope}}"); }) == ErrorCode::TemplateError);
  CHECK(code_of([&] { build_curator_prompt(b, "x {{bundle_json"); }) == ErrorCode::TemplateError);
  CHECK(build_curator_prompt(b, "title only") == "title only");
}

TEST_CASE("mock report parses and validates") {
  auto b = sample_bundle();
  const auto prompt = build_curator_prompt(b);
  MockBackend mock;
  auto report = generate_report(prompt, mock, b.roster);
  CHECK(mock.calls() == 1);
  CHECK(report.sections.size() == 7);
  CHECK(report.clusters.size() == 4);
  CHECK(report.outlier_ids == std::vector<std::string>{"108"});
  CHECK(report.clusters[0].students == std::vector<std::string>{"101", "102"});
  CHECK(check_report(report, b.roster).ok());
  // Fences are stripped before parsing.
  CHECK(report.raw_markdown.find("```") == std::string::npos);
}

TEST_CASE("report parser accepts bold headers") {
  const std::string md =
      "**Status**\nA - B\n**Summary**\ns\n**Content**\nc\n**Skills:** x\nk\n"
      "**Clusters**\n**Cluster 1: Steady Readers**\nStudents: 101, 102\n- Characteristics: calm\n"
      "**Outliers**\nStudent 103 is unusual.\n**Recommendations**\n1. r\n";
  auto r = parse_report(md);
  CHECK(r.sections.size() == 7);
  REQUIRE(r.clusters.size() == 1);
  CHECK(r.clusters[0].name == "Steady Readers");
  CHECK(r.outlier_ids == std::vector<std::string>{"103"});
}

TEST_CASE("report failures") {
  auto b = sample_bundle();
  const auto prompt = build_curator_prompt(b);

  MockScript no_outliers;
  no_outliers.omit_sections = {"Outliers"};
  MockBackend m1(no_outliers);
  CHECK(code_of([&] { generate_report(prompt, m1, b.roster, {2, 0.7, 4096}); }) ==
        ErrorCode::MalformedReport);
  CHECK(m1.calls() == 3);

  MockScript stranger;
  stranger.extra_students = {"999"};
  MockBackend m2(stranger);
  CHECK(code_of([&] { generate_report(prompt, m2, b.roster); }) == ErrorCode::UnknownStudent);

  MockScript fixable = stranger;
  fixable.honor_repair = true;
  MockBackend m3(fixable);
  auto ok = generate_report(prompt, m3, b.roster);
  CHECK(m3.calls() == 2);
  CHECK(check_report(ok, b.roster).ok());
}

TEST_CASE("evaluations") {
  auto b = sample_bundle();
  const auto prompt = build_curator_prompt(b);
  MockBackend mock;
  auto report = generate_report(prompt, mock, b.roster);

  auto eval_prompt = build_evaluator_prompt(prompt, report.raw_markdown);
  CHECK(eval_prompt.rfind(std::string(kEvaluatorMarker), 0) == 0);
  for (auto c : kEvaluationCriteria) CHECK(eval_prompt.find(c) != std::string::npos);

  auto set = evaluate_report(prompt, report, mock);
  CHECK(set.runs.size() == 5);
  CHECK(set.histogram == std::array<int, 5>{0, 0, 0, 45, 0});
  CHECK(set.overall_mean == 4.0);
  for (double m : set.means) CHECK(m == 4.0);
  auto j = evaluations_to_json(set);
  CHECK(j["aggregate"]["histogram"]["4"] == 45);
  CHECK(j["runs"].size() == 5);

  MockScript short_eval;
  short_eval.evaluation_criteria = 8;
  MockBackend bad(short_eval);
  CHECK(code_of([&] { evaluate_report(prompt, report, bad); }) == ErrorCode::MalformedEvaluation);
}

TEST_CASE("strict evaluation parsing") {
  nlohmann::json ok;
  for (auto c : kEvaluationCriteria) {
    ok["scores"][std::string(c)] = {{"score", 3}, {"justification", "j"}};
  }
  CHECK(parse_evaluation(ok.dump()).criteria[0].score == 3);
  CHECK(parse_evaluation("```json\n" + ok.dump() + "\n```").criteria[8].score == 3);

  auto extra = ok;
  extra["scores"]["bonus"] = {{"score", 3}, {"justification", "j"}};
  CHECK(code_of([&] { parse_evaluation(extra.dump()); }) == ErrorCode::MalformedEvaluation);
  auto high = ok;
  high["scores"]["clarity"]["score"] = 6;
  CHECK(code_of([&] { parse_evaluation(high.dump()); }) == ErrorCode::MalformedEvaluation);
  auto frac = ok;
  frac["scores"]["clarity"]["score"] = 3.5;
  CHECK(code_of([&] { parse_evaluation(frac.dump()); }) == ErrorCode::MalformedEvaluation);
  CHECK(code_of([] { parse_evaluation("not json"); }) == ErrorCode::MalformedEvaluation);

  std::vector<EvaluationRun> runs(2, parse_evaluation(ok.dump()));
  runs[1].criteria[0].score = 5;
  auto agg = aggregate_evaluations(runs);
  CHECK(agg.means[0] == 4.0);
  CHECK(agg.overall_mean == doctest::Approx((3.0 * 17 + 5.0) / 18.0));
  CHECK(agg.per_criterion[0] == std::array<int, 5>{0, 0, 1, 0, 1});
}

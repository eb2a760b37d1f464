#pragma once

#include <array>
#include <atomic>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "readlens/clustering.hpp"
#include "readlens/ingest.hpp"
#include "readlens/llm_backend.hpp"
#include "readlens/textmetrics.hpp"

namespace readlens {

// ---------------------------------------------------------------------------
// Curator input

struct QuestionPerformance {
  std::string id;
  std::string digest;
  std::vector<std::string> standard_codes;
  double accuracy = 0.0;
};

struct PromptBundle {
  std::string assessment_title;
  std::vector<ReadingStandard> reading_standards;
  std::vector<std::string> fluency_skills;
  TextComplexity text_complexity;
  ScoreDistribution score_distribution;
  std::vector<QuestionPerformance> question_performance;
  std::vector<std::string> feature_names;
  std::vector<ClusterProfile> cluster_profiles;
  QualityMetrics cluster_quality;
  std::vector<Outlier> outliers;
  std::vector<std::string> roster;
  std::string role_instruction;
};

std::string default_role_instruction();

PromptBundle make_prompt_bundle(const AssessmentContent& assessment,
                                const std::vector<StudentResponse>& responses,
                                const std::vector<std::string>& feature_names,
                                const std::vector<ClusterProfile>& profiles,
                                const QualityMetrics& quality,
                                const std::vector<Outlier>& outliers,
                                std::vector<std::string> roster);

/// Throws DanglingStandard when a question cites a code missing from
/// reading_standards, and UnknownStudent when a cluster member or outlier
/// is not on the roster.
void validate_bundle(const PromptBundle& bundle);

/// Key order is fixed; percentages are whole numbers and z-scores carry two
/// decimals.
nlohmann::ordered_json bundle_to_json(const PromptBundle& bundle);

// ---------------------------------------------------------------------------
// Curator prompt and report

inline constexpr std::array<std::string_view, 7> kReportSections = {
    "Status", "Summary", "Content", "Skills", "Clusters", "Outliers",
    "Recommendations"};

inline constexpr std::string_view kCuratorMarker = "ROLE: REPORT CURATOR";
inline constexpr std::string_view kEvaluatorMarker = "ROLE: REPORT EVALUATOR";
inline constexpr std::string_view kRepairMarker = "REPAIR REQUEST";

/// Placeholders: {{role_instruction}}, {{output_contract}}, {{bundle_json}}.
std::string default_curator_template();
std::string curator_output_contract();

/// Throws TemplateError for any placeholder other than the three above, or
/// an unterminated one.
std::string build_curator_prompt(const PromptBundle& bundle,
                                 std::string_view tmpl = default_curator_template());

/// The bundle JSON embedded in a curator prompt, if any.
std::optional<nlohmann::json> extract_bundle_json(std::string_view prompt);

struct ReportCluster {
  int number = 0;
  std::string name;
  std::vector<std::string> students;
  std::string characteristics;
};

struct CuratorReport {
  std::string raw_markdown;
  /// Required sections in canonical order; a missing one is absent.
  std::vector<std::pair<std::string, std::string>> sections;
  std::vector<ReportCluster> clusters;
  std::vector<std::string> outlier_ids;

  const std::string* section(std::string_view name) const;
};

std::string strip_code_fences(std::string_view text);

/// Splits Markdown into the seven required sections (by #-headers or
/// whole-line **bold** headers, case-insensitive) and parses the cluster
/// subsections. Does not validate.
CuratorReport parse_report(std::string_view markdown);

struct ReportProblems {
  std::vector<std::string> missing_sections;
  std::vector<std::string> unknown_students;

  bool ok() const { return missing_sections.empty() && unknown_students.empty(); }
  std::string describe() const;
};

ReportProblems check_report(const CuratorReport& report,
                            const std::vector<std::string>& roster);

struct ReportOptions {
  int retries = 3;
  double temperature = 0.7;
  int max_tokens = 4096;
};

/// Calls the backend, parses and validates the report, re-prompting with the
/// structural problems up to `retries` times. Throws UnknownStudent when the
/// final attempt names students outside the roster, else MalformedReport.
CuratorReport generate_report(const std::string& prompt, LlmBackend& backend,
                              const std::vector<std::string>& roster,
                              const ReportOptions& options = {});

// ---------------------------------------------------------------------------
// Evaluator

inline constexpr std::array<std::string_view, 9> kEvaluationCriteria = {
    "clarity",     "relevance",  "coherence",
    "applicability", "depth_of_insight", "specificity",
    "engagement",  "bias_and_fairness", "use_of_evidence"};

struct CriterionScore {
  int score = 0;
  std::string justification;
};

struct EvaluationRun {
  std::array<CriterionScore, kEvaluationCriteria.size()> criteria;
};

struct EvaluationSet {
  std::vector<EvaluationRun> runs;
  std::array<double, kEvaluationCriteria.size()> means{};
  /// histogram[s-1] counts scores equal to s over all runs and criteria.
  std::array<int, 5> histogram{};
  std::array<std::array<int, 5>, kEvaluationCriteria.size()> per_criterion{};
  double overall_mean = 0.0;
};

std::string build_evaluator_prompt(const std::string& curator_prompt,
                                   const std::string& report_markdown);

/// Strict parse of the evaluator JSON contract; throws MalformedEvaluation.
EvaluationRun parse_evaluation(std::string_view text);

struct EvaluateOptions {
  int runs = 5;
  double temperature = 0.2;
  int max_tokens = 2048;
  int max_in_flight = 2;
};

/// Runs the evaluator `runs` times (at most `max_in_flight` concurrently),
/// allowing one repair re-prompt per run, and aggregates in run order.
EvaluationSet evaluate_report(const std::string& curator_prompt,
                              const CuratorReport& report, LlmBackend& backend,
                              const EvaluateOptions& options = {});

EvaluationSet aggregate_evaluations(std::vector<EvaluationRun> runs);
nlohmann::ordered_json evaluations_to_json(const EvaluationSet& set);

// ---------------------------------------------------------------------------
// Offline backend

/// Knobs for MockBackend. Defaults produce a conforming report and all-4
/// evaluations.
struct MockScript {
  int evaluation_score = 4;
  /// Number of criteria emitted by the evaluator (9 conforms).
  int evaluation_criteria = static_cast<int>(kEvaluationCriteria.size());
  std::vector<std::string> omit_sections;
  /// Appended to the first cluster's student list.
  std::vector<std::string> extra_students;
  /// When true, a prompt carrying a repair request gets a conforming answer.
  bool honor_repair = false;
  bool fence_output = true;
};

/// Deterministic template-filling backend: curator prompts yield a report
/// built from the embedded bundle, evaluator prompts yield fixed-score JSON.
class MockBackend final : public LlmBackend {
 public:
  explicit MockBackend(MockScript script = {});

  std::string complete(const std::string& prompt, double temperature,
                       int max_tokens) override;
  std::string name() const override { return "mock"; }
  std::string model_id() const override { return "mock-template-v1"; }

  int calls() const { return calls_.load(); }

 private:
  std::string curator_reply(const std::string& prompt) const;
  std::string evaluator_reply(const std::string& prompt) const;

  MockScript script_;
  std::atomic<int> calls_{0};
};

}  // namespace readlens

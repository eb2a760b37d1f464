#include "readlens/agents.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include "readlens/error.hpp"
#include "readlens/format.hpp"

namespace readlens {

using ojson = nlohmann::ordered_json;

namespace {

double round_to(double value, int digits) {
  const double scale = std::pow(10.0, digits);
  double r = std::round(value * scale) / scale;
  return r == 0.0 ? 0.0 : r;
}

int whole_percent(double fraction) {
  return static_cast<int>(std::lround(fraction * 100.0));
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool contains(std::string_view haystack, std::string_view needle) {
  return haystack.find(needle) != std::string_view::npos;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = end + 1;
  }
  return lines;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string digest(std::string_view text, std::size_t limit = 100) {
  std::string t = trim(text);
  if (t.size() <= limit) return t;
  auto cut = t.rfind(' ', limit);
  if (cut == std::string::npos || cut < limit / 2) cut = limit;
  return t.substr(0, cut) + "...";
}

const std::map<std::string, std::string, std::less<>>& feature_glossary() {
  static const std::map<std::string, std::string, std::less<>> glossary = {
      {"norm_qa_coverage_line_%",
       "share of passage lines looked at while answering questions"},
      {"norm_coldread_coverage_line_%",
       "share of passage lines looked at during the first read"},
      {"norm_qa_saccade_regression_rate_%",
       "percentage of backward eye movements in the text while answering"},
      {"norm_qa_fix_dispersion_mean",
       "spread of gaze (cm) within 10 s windows while answering"},
      {"norm_qa_dwell_time_pdf",
       "seconds spent looking back at the passage while answering"},
      {"norm_qa_dwell_time_quiz", "seconds spent looking at the quiz panel"},
      {"norm_coldread_gaze_wpm_median",
       "gaze-based reading speed (words per minute) during the first read"},
      {"norm_coldread_saccade_regression_rate_%",
       "percentage of backward eye movements during the first read"},
      {"norm_coldread_fix_dispersion_mean",
       "spread of gaze (cm) within 10 s windows during the first read"},
      {"norm_coldread_dwell_time_pdf",
       "seconds spent fixating the passage during the first read"},
  };
  return glossary;
}

std::string describe_feature(std::string_view name) {
  const auto& g = feature_glossary();
  auto it = g.find(name);
  return it == g.end() ? std::string(name) : it->second;
}

}  // namespace

// ---------------------------------------------------------------------------
// bundle

std::string default_role_instruction() {
  return "You are an experienced literacy data specialist supporting middle-school "
         "reading teachers. You combine assessment scores, question-level "
         "results, reading standards and eye-tracking reading profiles into a "
         "concise, evidence-based classroom report that a teacher can act on.";
}

PromptBundle make_prompt_bundle(const AssessmentContent& assessment,
                                const std::vector<StudentResponse>& responses,
                                const std::vector<std::string>& feature_names,
                                const std::vector<ClusterProfile>& profiles,
                                const QualityMetrics& quality,
                                const std::vector<Outlier>& outliers,
                                std::vector<std::string> roster) {
  PromptBundle b;
  b.assessment_title = assessment.title;
  b.reading_standards = assessment.standards;
  b.fluency_skills = assessment.fluency_skills;
  b.text_complexity = flesch_kincaid(assessment.passage_text);
  b.score_distribution = score_distribution(responses, assessment);
  for (std::size_t i = 0; i < assessment.questions.size(); ++i) {
    const auto& q = assessment.questions[i];
    b.question_performance.push_back({q.id, digest(q.text), q.standard_codes,
                                      b.score_distribution.questions[i].accuracy});
  }
  b.feature_names = feature_names;
  b.cluster_profiles = profiles;
  b.cluster_quality = quality;
  b.outliers = outliers;
  std::sort(roster.begin(), roster.end());
  roster.erase(std::unique(roster.begin(), roster.end()), roster.end());
  b.roster = std::move(roster);
  b.role_instruction = default_role_instruction();
  return b;
}

void validate_bundle(const PromptBundle& bundle) {
  std::set<std::string> codes;
  for (const auto& s : bundle.reading_standards) codes.insert(s.code);
  for (const auto& q : bundle.question_performance) {
    for (const auto& c : q.standard_codes) {
      if (!codes.count(c)) {
        throw Error(ErrorCode::DanglingStandard,
                    "question " + q.id + " cites unknown standard " + c);
      }
    }
  }
  std::set<std::string> roster(bundle.roster.begin(), bundle.roster.end());
  for (const auto& p : bundle.cluster_profiles) {
    for (const auto& m : p.members) {
      if (!roster.count(m)) {
        throw Error(ErrorCode::UnknownStudent, "cluster member " + m + " not on roster");
      }
    }
  }
  for (const auto& o : bundle.outliers) {
    if (!roster.count(o.student_id)) {
      throw Error(ErrorCode::UnknownStudent,
                  "outlier " + o.student_id + " not on roster");
    }
  }
}

ojson bundle_to_json(const PromptBundle& b) {
  ojson j;
  j["assessment_title"] = b.assessment_title;
  auto& stds = j["reading_standards"] = ojson::array();
  for (const auto& s : b.reading_standards) {
    stds.push_back({{"code", s.code}, {"description", s.description}});
  }
  j["fluency_skills"] = b.fluency_skills;
  j["text_complexity"] = {
      {"flesch_kincaid_grade", round_to(b.text_complexity.flesch_kincaid_grade, 1)},
      {"word_count", b.text_complexity.word_count},
      {"sentence_count", b.text_complexity.sentence_count},
      {"syllable_count", b.text_complexity.syllable_count}};

  const auto& sd = b.score_distribution;
  const auto questions = static_cast<int>(sd.questions.size());
  ojson dist;
  dist["students"] = sd.student_totals.size();
  dist["questions"] = questions;
  dist["mean_score"] = round_to(sd.mean, 2);
  dist["mean_score_pct"] = questions > 0 ? whole_percent(sd.mean / questions) : 0;
  dist["std_score"] = round_to(sd.std, 2);
  dist["min_score"] = sd.min;
  dist["max_score"] = sd.max;
  dist["histogram"] = sd.histogram;
  j["score_distribution"] = std::move(dist);

  auto& qp = j["question_performance"] = ojson::array();
  for (std::size_t i = 0; i < b.question_performance.size(); ++i) {
    const auto& q = b.question_performance[i];
    ojson row;
    row["id"] = q.id;
    row["question"] = q.digest;
    row["standard_codes"] = q.standard_codes;
    if (i < sd.questions.size()) row["respondents"] = sd.questions[i].respondents;
    row["accuracy_pct"] = whole_percent(q.accuracy);
    qp.push_back(std::move(row));
  }

  j["cluster_quality"] = {
      {"method", std::string(to_string(b.cluster_quality.method))},
      {"clusters", b.cluster_quality.k},
      {"avg_within_cluster_variance",
       round_to(b.cluster_quality.avg_within_cluster_variance, 3)},
      {"silhouette", round_to(b.cluster_quality.silhouette, 3)}};

  auto& glossary = j["feature_glossary"] = ojson::object();
  for (const auto& f : b.feature_names) glossary[f] = describe_feature(f);

  auto& profiles = j["cluster_profiles"] = ojson::array();
  for (const auto& p : b.cluster_profiles) {
    ojson pj;
    pj["cluster"] = p.cluster + 1;
    pj["size"] = p.members.size();
    pj["students"] = p.members;
    auto& feats = pj["features"] = ojson::array();
    for (std::size_t f = 0; f < p.centroid_z.size(); ++f) {
      feats.push_back({{"feature", f < b.feature_names.size() ? b.feature_names[f]
                                                              : std::to_string(f)},
                       {"z", round_to(p.centroid_z[f], 2)},
                       {"level", std::string(to_string(p.tags[f]))}});
    }
    profiles.push_back(std::move(pj));
  }

  auto& outs = j["outliers"] = ojson::array();
  for (const auto& o : b.outliers) {
    outs.push_back({{"student_id", o.student_id},
                    {"cluster", o.cluster + 1},
                    {"distance", round_to(o.distance, 2)}});
  }
  j["roster"] = b.roster;
  return j;
}

// ---------------------------------------------------------------------------
// curator prompt

std::string default_curator_template() {
  return std::string(kCuratorMarker) +
         "\n{{role_instruction}}\n\n{{output_contract}}\n\n"
         "## Assessment data (JSON)\n\n```json\n{{bundle_json}}\n```\n";
}

std::string curator_output_contract() {
  return R"(## Output format
Write one classroom-wide report in Markdown. Begin with the title
"# Classroom-Wide Report: <assessment title>", then use exactly these
level-2 headers in this order:

## Status
3 to 5 short UPPERCASE keyword labels separated by " - ".
## Summary
One paragraph on overall performance, text complexity and standards alignment.
## Content
Question-level results: what students did well and poorly, citing accuracy
percentages and the reading standard codes involved.
## Skills
Strengths and weaknesses per reading standard and fluency skill.
## Clusters
One level-3 subsection per entry in cluster_profiles, headed
"### Cluster <n>: <descriptive reader name>", followed by the line
"Students: <comma-separated ids>" and the line "- Characteristics: <text>".
Interpret each profile from its feature z-scores (see feature_glossary).
## Outliers
Name each outlier as "Student <id>" and explain what sets them apart.
## Recommendations
A numbered list of concrete instructional actions, then one closing sentence.

## Rules
- Reason step by step: before each conclusion, state the data values that
  support it, so the teacher can follow the chain of evidence.
- Use only student ids from the roster. Do not invent students, scores or
  standards.
- Round percentages to whole numbers.
- Return only the Markdown report.)";
}

std::string build_curator_prompt(const PromptBundle& bundle, std::string_view tmpl) {
  validate_bundle(bundle);
  const std::map<std::string, std::string, std::less<>> values = {
      {"role_instruction", bundle.role_instruction},
      {"output_contract", curator_output_contract()},
      {"bundle_json", bundle_to_json(bundle).dump(2)},
  };
  std::string out;
  std::size_t pos = 0;
  while (true) {
    auto open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) {
      throw Error(ErrorCode::TemplateError, "unterminated placeholder in template");
    }
    auto name = trim(tmpl.substr(open + 2, close - open - 2));
    auto it = values.find(name);
    if (it == values.end()) {
      throw Error(ErrorCode::TemplateError, "unresolved placeholder {{" + name + "}}");
    }
    out.append(tmpl.substr(pos, open - pos));
    out.append(it->second);
    pos = close + 2;
  }
  return out;
}

std::optional<nlohmann::json> extract_bundle_json(std::string_view prompt) {
  constexpr std::string_view open = "```json\n";
  auto start = prompt.find(open);
  if (start == std::string_view::npos) return std::nullopt;
  start += open.size();
  auto end = prompt.find("\n```", start);
  if (end == std::string_view::npos) return std::nullopt;
  try {
    return nlohmann::json::parse(prompt.substr(start, end - start));
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// report parsing

const std::string* CuratorReport::section(std::string_view name) const {
  for (const auto& [k, v] : sections) {
    if (k == name) return &v;
  }
  return nullptr;
}

std::string strip_code_fences(std::string_view text) {
  std::string t = trim(text);
  if (t.rfind("```", 0) == 0) {
    auto nl = t.find('\n');
    t = nl == std::string::npos ? std::string() : t.substr(nl + 1);
    auto tail = t.rfind("```");
    if (tail != std::string::npos && trim(std::string_view(t).substr(tail + 3)).empty()) {
      t = t.substr(0, tail);
    }
  }
  return trim(t) + "\n";
}

namespace {

std::string strip_decoration(std::string_view s) {
  std::string t = trim(s);
  while (!t.empty() && (t.back() == '#' || t.back() == ':' || t.back() == '*' ||
                        t.back() == ' ')) {
    t.pop_back();
  }
  std::size_t b = 0;
  while (b < t.size() && (t[b] == '*' || t[b] == ' ')) ++b;
  return t.substr(b);
}

std::optional<std::size_t> section_slot(std::string_view title) {
  const auto l = lower(strip_decoration(title));
  for (std::size_t i = 0; i < kReportSections.size(); ++i) {
    if (l == lower(kReportSections[i])) return i;
  }
  return std::nullopt;
}

/// Recognizes "# Name", "**Name**" and "**Name** trailing text" lines.
std::optional<std::pair<std::size_t, std::string>> section_header(
    const std::string& line) {
  std::string t = trim(line);
  if (t.empty()) return std::nullopt;
  if (t[0] == '#') {
    std::size_t b = t.find_first_not_of('#');
    if (b == std::string::npos) return std::nullopt;
    if (auto slot = section_slot(t.substr(b))) return std::make_pair(*slot, std::string());
    return std::nullopt;
  }
  if (t.rfind("**", 0) == 0) {
    auto close = t.find("**", 2);
    if (close == std::string::npos) return std::nullopt;
    if (auto slot = section_slot(t.substr(2, close - 2))) {
      return std::make_pair(*slot, trim(t.substr(close + 2)));
    }
  }
  return std::nullopt;
}

std::vector<std::string> split_ids(std::string_view list) {
  std::vector<std::string> ids;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty() && lower(cur) != "and") ids.push_back(cur);
    cur.clear();
  };
  for (char c : list) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') {
      cur.push_back(c);
    } else {
      flush();
    }
  }
  flush();
  return ids;
}

void parse_clusters(const std::string& body, CuratorReport& report) {
  static const std::regex header(R"(^Cluster\s+(\d+)\s*[:\-]?\s*(.*)$)",
                                 std::regex::icase);
  static const std::regex students(R"(^Students?\s*:\s*(.*)$)", std::regex::icase);
  static const std::regex traits(R"(^Characteristics\s*:\s*(.*)$)", std::regex::icase);
  ReportCluster* current = nullptr;
  bool in_traits = false;
  for (const auto& raw : split_lines(body)) {
    std::string t = trim(raw);
    std::size_t b = 0;
    while (b < t.size() && (t[b] == '#' || t[b] == '*' || t[b] == '-' || t[b] == ' ')) ++b;
    std::string line = t.substr(b);
    // "**Students:** 1, 2" leaves "Students:** 1, 2"
    line = std::regex_replace(line, std::regex(R"(\*\*)"), "");
    std::smatch m;
    if (std::regex_match(line, m, header)) {
      report.clusters.push_back({std::stoi(m[1].str()), strip_decoration(m[2].str()), {}, {}});
      current = &report.clusters.back();
      in_traits = false;
    } else if (current && std::regex_match(line, m, students)) {
      auto ids = split_ids(m[1].str());
      current->students.insert(current->students.end(), ids.begin(), ids.end());
      in_traits = false;
    } else if (current && std::regex_match(line, m, traits)) {
      current->characteristics = trim(m[1].str());
      in_traits = true;
    } else if (current && in_traits && !line.empty()) {
      current->characteristics += " " + line;
    }
  }
}

void parse_outliers(const std::string& body, CuratorReport& report) {
  static const std::regex mention(
      R"(\bStudents?\s*:?\s+([A-Za-z0-9_\-]+(?:\s*(?:,|&|\band\b)\s*[A-Za-z0-9_\-]+)*))",
      std::regex::icase);
  std::set<std::string> seen;
  for (auto it = std::sregex_iterator(body.begin(), body.end(), mention);
       it != std::sregex_iterator(); ++it) {
    for (auto& id : split_ids((*it)[1].str())) {
      bool has_digit = std::any_of(id.begin(), id.end(), [](char c) {
        return std::isdigit(static_cast<unsigned char>(c));
      });
      if (has_digit && seen.insert(id).second) report.outlier_ids.push_back(id);
    }
  }
}

}  // namespace

CuratorReport parse_report(std::string_view markdown) {
  CuratorReport report;
  report.raw_markdown = std::string(markdown);
  std::array<std::optional<std::string>, kReportSections.size()> bodies;
  std::optional<std::size_t> current;
  for (const auto& line : split_lines(markdown)) {
    if (auto h = section_header(line)) {
      current = h->first;
      if (!bodies[*current]) bodies[*current] = std::string();
      if (!h->second.empty()) *bodies[*current] += h->second + "\n";
      continue;
    }
    if (current) *bodies[*current] += line + "\n";
  }
  for (std::size_t i = 0; i < kReportSections.size(); ++i) {
    if (bodies[i]) {
      report.sections.emplace_back(std::string(kReportSections[i]), trim(*bodies[i]));
    }
  }
  if (const auto* c = report.section("Clusters")) parse_clusters(*c, report);
  if (const auto* o = report.section("Outliers")) parse_outliers(*o, report);
  return report;
}

std::string ReportProblems::describe() const {
  std::vector<std::string> parts;
  if (!missing_sections.empty()) {
    parts.push_back("missing sections: " + join(missing_sections, ", "));
  }
  if (!unknown_students.empty()) {
    parts.push_back("student ids not in the roster: " + join(unknown_students, ", "));
  }
  return join(parts, "; ");
}

ReportProblems check_report(const CuratorReport& report,
                            const std::vector<std::string>& roster) {
  ReportProblems p;
  for (auto name : kReportSections) {
    if (!report.section(name)) p.missing_sections.emplace_back(name);
  }
  const std::set<std::string> known(roster.begin(), roster.end());
  std::set<std::string> flagged;
  auto check = [&](const std::string& id) {
    if (!known.count(id) && flagged.insert(id).second) p.unknown_students.push_back(id);
  };
  for (const auto& c : report.clusters) {
    for (const auto& s : c.students) check(s);
  }
  for (const auto& id : report.outlier_ids) check(id);
  return p;
}

CuratorReport generate_report(const std::string& prompt, LlmBackend& backend,
                              const std::vector<std::string>& roster,
                              const ReportOptions& options) {
  std::string request = prompt;
  ReportProblems last;
  for (int attempt = 0; attempt <= std::max(0, options.retries); ++attempt) {
    auto reply = backend.complete(request, options.temperature, options.max_tokens);
    auto report = parse_report(strip_code_fences(reply));
    last = check_report(report, roster);
    if (last.ok()) return report;
    request = prompt + "\n\n" + std::string(kRepairMarker) +
              ": your previous report was rejected (" + last.describe() +
              "). Regenerate the complete report, keeping all seven sections "
              "and using only student ids from the roster.\n";
  }
  if (!last.unknown_students.empty()) {
    throw Error(ErrorCode::UnknownStudent,
                "report names students outside the roster: " +
                    join(last.unknown_students, ", "));
  }
  throw Error(ErrorCode::MalformedReport,
              "report still invalid after " + std::to_string(options.retries) +
                  " repair attempts: " + last.describe());
}

// ---------------------------------------------------------------------------
// evaluator

std::string build_evaluator_prompt(const std::string& curator_prompt,
                                   const std::string& report_markdown) {
  static const std::map<std::string_view, std::string_view> meaning = {
      {"clarity", "the report is easy for a teacher to read and understand"},
      {"relevance", "content addresses the data and the teacher's needs"},
      {"coherence", "sections connect logically and do not contradict"},
      {"applicability", "findings translate into classroom action"},
      {"depth_of_insight", "goes beyond restating numbers"},
      {"specificity", "cites concrete students, questions, standards, values"},
      {"engagement", "tone and structure keep the teacher reading"},
      {"bias_and_fairness", "language is fair and free of stereotyping"},
      {"use_of_evidence", "claims are backed by the supplied data"},
  };
  std::string out(kEvaluatorMarker);
  out +=
      "\nYou are an expert reviewer of teacher-facing assessment reports. "
      "Rate the report below against the original prompt that produced it.\n\n"
      "Score each criterion on a 1-5 Likert scale (1 = poor, 5 = excellent):\n";
  for (auto c : kEvaluationCriteria) {
    out += "- " + std::string(c) + ": " + std::string(meaning.at(c)) + "\n";
  }
  out +=
      "\nRespond with JSON only, with exactly these nine keys and nothing else:\n"
      "{\"scores\": {\"<criterion>\": {\"score\": <integer 1-5>, "
      "\"justification\": \"<one or two sentences>\"}, ...}}\n\n"
      "=== ORIGINAL PROMPT BEGIN ===\n";
  out += curator_prompt;
  out += "\n=== ORIGINAL PROMPT END ===\n\n=== REPORT BEGIN ===\n";
  out += report_markdown;
  out += "\n=== REPORT END ===\n";
  return out;
}

EvaluationRun parse_evaluation(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(strip_code_fences(text));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedEvaluation, std::string("not JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("scores") || !doc["scores"].is_object()) {
    throw Error(ErrorCode::MalformedEvaluation, "expected an object with 'scores'");
  }
  const auto& scores = doc["scores"];
  if (scores.size() != kEvaluationCriteria.size()) {
    throw Error(ErrorCode::MalformedEvaluation,
                "expected 9 criteria, got " + std::to_string(scores.size()));
  }
  EvaluationRun run;
  for (std::size_t i = 0; i < kEvaluationCriteria.size(); ++i) {
    const std::string key(kEvaluationCriteria[i]);
    if (!scores.contains(key)) {
      throw Error(ErrorCode::MalformedEvaluation, "missing criterion " + key);
    }
    const auto& entry = scores[key];
    if (!entry.is_object() || !entry.contains("score") ||
        !entry["score"].is_number_integer() || !entry.contains("justification") ||
        !entry["justification"].is_string()) {
      throw Error(ErrorCode::MalformedEvaluation,
                  "criterion " + key + " needs integer score and justification");
    }
    int score = entry["score"].get<int>();
    if (score < 1 || score > 5) {
      throw Error(ErrorCode::MalformedEvaluation,
                  "criterion " + key + " score out of 1..5");
    }
    run.criteria[i] = {score, entry["justification"].get<std::string>()};
  }
  return run;
}

EvaluationSet aggregate_evaluations(std::vector<EvaluationRun> runs) {
  EvaluationSet set;
  set.runs = std::move(runs);
  double grand = 0.0;
  for (const auto& run : set.runs) {
    for (std::size_t c = 0; c < kEvaluationCriteria.size(); ++c) {
      const int s = run.criteria[c].score;
      set.means[c] += s;
      ++set.histogram[static_cast<std::size_t>(s - 1)];
      ++set.per_criterion[c][static_cast<std::size_t>(s - 1)];
      grand += s;
    }
  }
  if (!set.runs.empty()) {
    const auto n = static_cast<double>(set.runs.size());
    for (double& m : set.means) m /= n;
    set.overall_mean = grand / (n * static_cast<double>(kEvaluationCriteria.size()));
  }
  return set;
}

EvaluationSet evaluate_report(const std::string& curator_prompt,
                              const CuratorReport& report, LlmBackend& backend,
                              const EvaluateOptions& options) {
  for (auto name : kReportSections) {
    if (!report.section(name)) {
      throw Error(ErrorCode::MalformedReport,
                  "cannot evaluate a report without section " + std::string(name));
    }
  }
  const int runs = std::max(1, options.runs);
  const std::string prompt = build_evaluator_prompt(curator_prompt, report.raw_markdown);

  std::vector<std::optional<EvaluationRun>> results(static_cast<std::size_t>(runs));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(runs));
  auto run_one = [&](int index) {
    try {
      auto reply = backend.complete(prompt, options.temperature, options.max_tokens);
      try {
        results[static_cast<std::size_t>(index)] = parse_evaluation(reply);
      } catch (const Error& first) {
        auto repair = prompt + "\n\n" + std::string(kRepairMarker) +
                      ": your previous answer was rejected (" + first.what() +
                      "). Reply with the JSON object only.\n";
        results[static_cast<std::size_t>(index)] = parse_evaluation(
            backend.complete(repair, options.temperature, options.max_tokens));
      }
    } catch (...) {
      errors[static_cast<std::size_t>(index)] = std::current_exception();
    }
  };

  const int workers = std::clamp(options.max_in_flight, 1, runs);
  if (workers == 1) {
    for (int i = 0; i < runs; ++i) run_one(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int i = next++; i < runs; i = next++) run_one(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<EvaluationRun> ordered;
  for (auto& r : results) ordered.push_back(std::move(*r));
  return aggregate_evaluations(std::move(ordered));
}

ojson evaluations_to_json(const EvaluationSet& set) {
  ojson j;
  j["criteria"] = ojson::array();
  for (auto c : kEvaluationCriteria) j["criteria"].push_back(std::string(c));
  auto& runs = j["runs"] = ojson::array();
  for (std::size_t r = 0; r < set.runs.size(); ++r) {
    ojson rj;
    rj["run"] = r + 1;
    auto& scores = rj["scores"] = ojson::object();
    for (std::size_t c = 0; c < kEvaluationCriteria.size(); ++c) {
      scores[std::string(kEvaluationCriteria[c])] = {
          {"score", set.runs[r].criteria[c].score},
          {"justification", set.runs[r].criteria[c].justification}};
    }
    runs.push_back(std::move(rj));
  }
  ojson agg;
  agg["overall_mean"] = set.overall_mean;
  ojson means = ojson::object();
  ojson per = ojson::object();
  for (std::size_t c = 0; c < kEvaluationCriteria.size(); ++c) {
    means[std::string(kEvaluationCriteria[c])] = set.means[c];
    ojson h;
    for (int s = 1; s <= 5; ++s) h[std::to_string(s)] = set.per_criterion[c][static_cast<std::size_t>(s - 1)];
    per[std::string(kEvaluationCriteria[c])] = std::move(h);
  }
  agg["means"] = std::move(means);
  agg["per_criterion_histogram"] = std::move(per);
  ojson hist;
  for (int s = 1; s <= 5; ++s) hist[std::to_string(s)] = set.histogram[static_cast<std::size_t>(s - 1)];
  agg["histogram"] = std::move(hist);
  j["aggregate"] = std::move(agg);
  return j;
}

// ---------------------------------------------------------------------------
// mock backend

MockBackend::MockBackend(MockScript script) : script_(std::move(script)) {}

std::string MockBackend::complete(const std::string& prompt, double, int) {
  ++calls_;
  if (prompt.rfind(kEvaluatorMarker, 0) == 0) return evaluator_reply(prompt);
  return curator_reply(prompt);
}

std::string MockBackend::evaluator_reply(const std::string& prompt) const {
  const bool repaired = script_.honor_repair && contains(prompt, kRepairMarker);
  const int count = repaired ? static_cast<int>(kEvaluationCriteria.size())
                             : std::clamp(script_.evaluation_criteria, 0,
                                          static_cast<int>(kEvaluationCriteria.size()));
  ojson scores = ojson::object();
  for (int i = 0; i < count; ++i) {
    const std::string c(kEvaluationCriteria[static_cast<std::size_t>(i)]);
    scores[c] = {{"score", script_.evaluation_score},
                 {"justification", "Template assessment of " + c + "."}};
  }
  ojson doc;
  doc["scores"] = std::move(scores);
  std::string body = doc.dump(2);
  return script_.fence_output ? "```json\n" + body + "\n```" : body;
}

namespace {

double feature_z(const nlohmann::json& profile, std::string_view name) {
  for (const auto& f : profile["features"]) {
    if (f["feature"].get<std::string>() == name) return f["z"].get<double>();
  }
  return 0.0;
}

std::string reader_name(const nlohmann::json& profile) {
  const double wpm = feature_z(profile, "norm_coldread_gaze_wpm_median");
  const double coverage = 0.5 * (feature_z(profile, "norm_qa_coverage_line_%") +
                                 feature_z(profile, "norm_coldread_coverage_line_%"));
  const double regression =
      0.5 * (feature_z(profile, "norm_qa_saccade_regression_rate_%") +
             feature_z(profile, "norm_coldread_saccade_regression_rate_%"));
  const double quiz = feature_z(profile, "norm_qa_dwell_time_quiz");
  if (wpm > 0.33 && coverage < -0.33) return "Rapid Scanners";
  if (wpm > 0.33) return "Fluent Readers";
  if (coverage > 0.33 && regression > 0.33) return "Careful Re-readers";
  if (coverage > 0.33) return "Thorough Readers";
  if (wpm < -0.33) return "Deliberate Readers";
  if (quiz > 0.33) return "Question-Focused Responders";
  return "Steady Readers";
}

std::string level_words(std::string_view level) {
  if (level == "very_low") return "very low";
  if (level == "very_high") return "very high";
  return std::string(level);
}

std::string join_and(const std::vector<std::string>& items) {
  if (items.empty()) return "";
  if (items.size() == 1) return items[0];
  std::vector<std::string> head(items.begin(), items.end() - 1);
  return join(head, ", ") + " and " + items.back();
}

}  // namespace

std::string MockBackend::curator_reply(const std::string& prompt) const {
  auto bundle = extract_bundle_json(prompt);
  if (!bundle) return "The assessment data could not be found in the request.";
  const auto& b = *bundle;
  const bool repaired = script_.honor_repair && contains(prompt, kRepairMarker);
  auto omitted = [&](std::string_view s) {
    if (repaired) return false;
    return std::find(script_.omit_sections.begin(), script_.omit_sections.end(), s) !=
           script_.omit_sections.end();
  };

  const auto& dist = b["score_distribution"];
  const int mean_pct = dist["mean_score_pct"].get<int>();
  const auto& qp = b["question_performance"];
  std::vector<nlohmann::json> questions(qp.begin(), qp.end());
  std::stable_sort(questions.begin(), questions.end(), [](const nlohmann::json& x, const nlohmann::json& y) {
    return x["accuracy_pct"].get<int>() > y["accuracy_pct"].get<int>();
  });
  const auto& profiles = b["cluster_profiles"];
  const auto& outliers = b["outliers"];

  std::ostringstream md;
  md << "# Classroom-Wide Report: " << b["assessment_title"].get<std::string>() << "\n\n";

  if (!omitted("Status")) {
    std::vector<std::string> labels;
    labels.push_back(mean_pct >= 75   ? "STRONG TEXT COMPREHENSION"
                     : mean_pct >= 55 ? "GOOD TEXT COMPREHENSION"
                                      : "DEVELOPING TEXT COMPREHENSION");
    if (!questions.empty() && questions.back()["accuracy_pct"].get<int>() < 40) {
      labels.emplace_back("STRUGGLE WITH COMPLEX INFERENCES");
    }
    labels.emplace_back(profiles.size() >= 3 ? "VARIED READING BEHAVIORS"
                                             : "CONSISTENT READING BEHAVIORS");
    if (!outliers.empty()) labels.emplace_back("INDIVIDUAL NEEDS FLAGGED");
    md << "## Status\n" << join(labels, " - ") << "\n\n";
  }

  if (!omitted("Summary")) {
    const auto& tc = b["text_complexity"];
    const auto& q = b["cluster_quality"];
    md << "## Summary\n"
       << "The class of " << dist["students"].get<int>() << " students completed \""
       << b["assessment_title"].get<std::string>()
       << "\", a passage at Flesch-Kincaid grade level "
       << format_fixed(tc["flesch_kincaid_grade"].get<double>(), 1)
       << ". The mean score was " << format_fixed(dist["mean_score"].get<double>(), 2)
       << " of " << dist["questions"].get<int>() << " questions (" << mean_pct
       << "%), ranging from " << dist["min_score"].get<int>() << " to "
       << dist["max_score"].get<int>() << ". Eye-tracking profiles group the class into "
       << profiles.size() << " reading-behavior clusters (silhouette "
       << format_fixed(q["silhouette"].get<double>(), 2) << ").\n\n";
  }

  if (!omitted("Content")) {
    md << "## Content\n";
    auto line = [&](const nlohmann::json& qj) {
      md << "- Question " << qj["id"].get<std::string>() << " ("
         << qj["accuracy_pct"].get<int>() << "% accuracy; "
         << join(qj["standard_codes"].get<std::vector<std::string>>(), ", ")
         << "): " << qj["question"].get<std::string>() << "\n";
    };
    const std::size_t n = std::min<std::size_t>(2, questions.size());
    md << "Strongest results:\n";
    for (std::size_t i = 0; i < n; ++i) line(questions[i]);
    md << "Weakest results:\n";
    for (std::size_t i = 0; i < n; ++i) line(questions[questions.size() - 1 - i]);
    md << "\n";
  }

  if (!omitted("Skills")) {
    md << "## Skills\n";
    for (const auto& s : b["reading_standards"]) {
      const auto code = s["code"].get<std::string>();
      int total = 0;
      int count = 0;
      for (const auto& qj : qp) {
        const auto codes = qj["standard_codes"].get<std::vector<std::string>>();
        if (std::find(codes.begin(), codes.end(), code) != codes.end()) {
          total += qj["accuracy_pct"].get<int>();
          ++count;
        }
      }
      md << "- " << code << " (" << s["description"].get<std::string>() << "): ";
      if (count > 0) {
        md << static_cast<int>(std::lround(static_cast<double>(total) / count))
           << "% average accuracy across " << count << " questions.\n";
      } else {
        md << "not assessed.\n";
      }
    }
    const auto skills = b["fluency_skills"].get<std::vector<std::string>>();
    if (!skills.empty()) md << "Fluency focus: " << join(skills, ", ") << ".\n";
    md << "\n";
  }

  if (!omitted("Clusters")) {
    md << "## Clusters\n\n";
    bool first = true;
    for (const auto& p : profiles) {
      auto students = p["students"].get<std::vector<std::string>>();
      if (first && !repaired) {
        students.insert(students.end(), script_.extra_students.begin(),
                        script_.extra_students.end());
      }
      first = false;
      std::vector<nlohmann::json> feats(p["features"].begin(), p["features"].end());
      std::stable_sort(feats.begin(), feats.end(), [](const nlohmann::json& x, const nlohmann::json& y) {
        return std::abs(x["z"].get<double>()) > std::abs(y["z"].get<double>());
      });
      std::vector<std::string> traits;
      for (std::size_t i = 0; i < std::min<std::size_t>(3, feats.size()); ++i) {
        traits.push_back(level_words(feats[i]["level"].get<std::string>()) + " " +
                         describe_feature(feats[i]["feature"].get<std::string>()) +
                         " (z = " + format_fixed(feats[i]["z"].get<double>(), 2) + ")");
      }
      md << "### Cluster " << p["cluster"].get<int>() << ": " << reader_name(p) << "\n"
         << "Students: " << join(students, ", ") << "\n"
         << "- Characteristics: " << join_and(traits) << ".\n\n";
    }
  }

  if (!omitted("Outliers")) {
    md << "## Outliers\n";
    if (outliers.empty()) {
      md << "No students were flagged as outliers by the distance rule.\n";
    } else {
      std::vector<std::string> ids;
      for (const auto& o : outliers) ids.push_back(o["student_id"].get<std::string>());
      md << (ids.size() == 1 ? "Student " : "Students ") << join_and(ids)
         << (ids.size() == 1 ? " is a notable outlier.\n" : " are notable outliers.\n");
      for (const auto& o : outliers) {
        md << "- Student " << o["student_id"].get<std::string>() << " sits "
           << format_fixed(o["distance"].get<double>(), 2)
           << " standardized units from the centre of cluster "
           << o["cluster"].get<int>() << ".\n";
      }
    }
    md << "\n";
  }

  if (!omitted("Recommendations")) {
    md << "## Recommendations\n";
    std::string weakest = questions.empty()
                              ? std::string("the assessed standards")
                              : join(questions.back()["standard_codes"]
                                         .get<std::vector<std::string>>(),
                                     ", ");
    md << "1. **Target the weakest standard**: plan short, explicit lessons on "
       << weakest << ", where accuracy was lowest.\n"
       << "2. **Differentiate by reading profile**: group students by cluster and "
          "match pacing and scaffolds to each profile.\n"
       << "3. **Follow up individually**: check in with flagged outliers to "
          "confirm what the gaze data suggests.\n"
       << "4. **Reassess**: revisit these groupings after the next assessment.\n\n"
       << "These recommendations should be revised as new assessment results "
          "arrive.\n";
  }

  std::string body = md.str();
  return script_.fence_output ? "```markdown\n" + body + "```" : body;
}

}  // namespace readlens

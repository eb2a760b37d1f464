#include "readlens/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "readlens/error.hpp"
#include "readlens/format.hpp"

namespace readlens {

using nlohmann::json;

void ScreenGeometry::validate() const {
  if (!(width_cm > 0 && height_cm > 0 && width_px > 0 && height_px > 0 &&
        viewing_distance_cm > 0)) {
    throw Error(ErrorCode::ConfigError,
                "screen geometry dimensions must be strictly positive");
  }
}

std::string_view to_string(AoiKind kind) {
  switch (kind) {
    case AoiKind::PassageLine: return "passage_line";
    case AoiKind::PassagePage: return "passage_page";
    case AoiKind::QuizPanel: return "quiz_panel";
    case AoiKind::QuizQuestion: return "quiz_question";
  }
  return "passage_line";
}

std::optional<AoiKind> parse_aoi_kind(std::string_view text) {
  if (text == "passage_line") return AoiKind::PassageLine;
  if (text == "passage_page") return AoiKind::PassagePage;
  if (text == "quiz_panel") return AoiKind::QuizPanel;
  if (text == "quiz_question") return AoiKind::QuizQuestion;
  return std::nullopt;
}

double BoundingBox::intersection_area(const BoundingBox& o) const {
  double w = std::min(x1, o.x1) - std::max(x0, o.x0);
  double h = std::min(y1, o.y1) - std::max(y0, o.y0);
  return (w > 0 && h > 0) ? w * h : 0.0;
}

int SessionTimeline::page_at(double t_s) const {
  int page = 1;
  for (const auto& ev : page_events) {
    if (ev.t_s <= t_s) page = ev.page;
    else break;
  }
  return page;
}

const Question* AssessmentContent::find_question(std::string_view id) const {
  for (const auto& q : questions) {
    if (q.id == id) return &q;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// gaze log

namespace {

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return in;
}

bool parse_flag(std::string_view field, bool& out) {
  auto s = trim(field);
  if (s == "1" || s == "true") { out = true; return true; }
  if (s == "0" || s == "false") { out = false; return true; }
  return false;
}

void expect_header(std::istream& in, std::string_view expected) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::SchemaError, "missing header, expected '" +
                                            std::string(expected) + "'", 1);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  // tolerate a UTF-8 byte-order mark
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (line != expected) {
    throw Error(ErrorCode::SchemaError,
                "header '" + line + "' != '" + std::string(expected) + "'", 1);
  }
}

}  // namespace

std::vector<GazeSample> parse_gaze_log(std::istream& in,
                                       const ScreenGeometry& geom) {
  expect_header(in, "t_s,x_px,y_px,valid");
  std::vector<GazeSample> samples;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 4) {
      throw Error(ErrorCode::MalformedRow, "expected 4 fields", lineno);
    }
    GazeSample s;
    if (!parse_double(f[0], s.t_s)) {
      throw Error(ErrorCode::MalformedRow, "non-numeric t_s '" + f[0] + "'",
                  lineno);
    }
    if (!parse_flag(f[3], s.valid)) {
      throw Error(ErrorCode::MalformedRow, "validity flag must be 0 or 1",
                  lineno);
    }
    for (int c = 1; c <= 2; ++c) {
      double& dst = c == 1 ? s.x_px : s.y_px;
      if (trim(f[c]).empty()) {
        if (s.valid) {
          throw Error(ErrorCode::MalformedRow,
                      "valid sample without coordinates", lineno);
        }
        continue;
      }
      if (!parse_double(f[c], dst)) {
        throw Error(ErrorCode::MalformedRow,
                    "non-numeric coordinate '" + f[c] + "'", lineno);
      }
    }
    if (!samples.empty() && s.t_s < samples.back().t_s) {
      throw Error(ErrorCode::NonMonotonicTime,
                  "t_s decreases from " + format_double(samples.back().t_s) +
                      " to " + format_double(s.t_s),
                  lineno);
    }
    if (s.valid && !(s.x_px >= 0 && s.x_px < geom.width_px && s.y_px >= 0 &&
                     s.y_px < geom.height_px)) {
      s.valid = false;
    }
    samples.push_back(s);
  }
  return samples;
}

std::vector<GazeSample> parse_gaze_log(const std::filesystem::path& path,
                                       const ScreenGeometry& geom) {
  auto in = open_or_throw(path);
  return parse_gaze_log(in, geom);
}

std::string serialize_gaze_log(const std::vector<GazeSample>& samples) {
  std::string out = "t_s,x_px,y_px,valid\n";
  out.reserve(samples.size() * 28 + out.size());
  for (const auto& s : samples) {
    out += format_double(s.t_s);
    out += ',';
    if (!std::isnan(s.x_px)) out += format_double(s.x_px);
    out += ',';
    if (!std::isnan(s.y_px)) out += format_double(s.y_px);
    out += s.valid ? ",1\n" : ",0\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON helpers

json read_json_file(const std::filesystem::path& path) {
  auto text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
  }
}

namespace {

const json& require(const json& obj, const char* key, const std::string& ctx) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw Error(ErrorCode::SchemaError, ctx + ": missing field '" + key + "'");
  }
  return obj.at(key);
}

std::string require_string(const json& obj, const char* key,
                           const std::string& ctx) {
  const auto& v = require(obj, key, ctx);
  if (!v.is_string()) {
    throw Error(ErrorCode::SchemaError,
                ctx + ": field '" + key + "' must be a string");
  }
  return v.get<std::string>();
}

double require_number(const json& obj, const char* key, const std::string& ctx) {
  const auto& v = require(obj, key, ctx);
  if (!v.is_number()) {
    throw Error(ErrorCode::SchemaError,
                ctx + ": field '" + key + "' must be a number");
  }
  return v.get<double>();
}

int require_int(const json& obj, const char* key, const std::string& ctx) {
  const auto& v = require(obj, key, ctx);
  if (!v.is_number_integer()) {
    throw Error(ErrorCode::SchemaError,
                ctx + ": field '" + key + "' must be an integer");
  }
  return v.get<int>();
}

std::optional<int> optional_int(const json& obj, const char* key,
                                const std::string& ctx) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return require_int(obj, key, ctx);
}

std::vector<std::string> string_array(const json& v, const std::string& ctx) {
  if (!v.is_array()) {
    throw Error(ErrorCode::SchemaError, ctx + ": expected an array of strings");
  }
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) {
      throw Error(ErrorCode::SchemaError, ctx + ": expected an array of strings");
    }
    out.push_back(e.get<std::string>());
  }
  return out;
}

TimeInterval parse_interval(const json& obj, const char* key,
                            const std::string& ctx) {
  const auto& v = require(obj, key, ctx);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw Error(ErrorCode::SchemaError,
                ctx + ": '" + key + "' must be [start_s, end_s]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

// ---------------------------------------------------------------------------
// AOI layout

std::vector<AoiRegion> parse_aoi_layout(const json& doc) {
  if (!doc.is_array()) {
    throw Error(ErrorCode::SchemaError, "AOI layout must be a JSON array");
  }
  std::vector<AoiRegion> regions;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& r = doc[i];
    std::string ctx = "region[" + std::to_string(i) + "]";
    AoiRegion region;
    region.id = require_string(r, "id", ctx);
    ctx += " '" + region.id + "'";
    auto kind = parse_aoi_kind(require_string(r, "kind", ctx));
    if (!kind) throw Error(ErrorCode::SchemaError, ctx + ": unknown kind");
    region.kind = *kind;
    region.page = require_int(r, "page", ctx);
    const auto& bb = require(r, "bbox", ctx);
    if (!bb.is_array() || bb.size() != 4) {
      throw Error(ErrorCode::SchemaError, ctx + ": bbox must be [x0,y0,x1,y1]");
    }
    for (const auto& c : bb) {
      if (!c.is_number()) {
        throw Error(ErrorCode::SchemaError, ctx + ": bbox must be numeric");
      }
    }
    region.bbox = {bb[0].get<double>(), bb[1].get<double>(), bb[2].get<double>(),
                   bb[3].get<double>()};
    if (!(region.bbox.x0 < region.bbox.x1 && region.bbox.y0 < region.bbox.y1)) {
      throw Error(ErrorCode::SchemaError, ctx + ": bbox requires x0<x1 and y0<y1");
    }
    region.line_index = optional_int(r, "line_index", ctx);
    region.word_count = optional_int(r, "word_count", ctx);
    if (region.kind == AoiKind::PassageLine) {
      if (!region.line_index) {
        throw Error(ErrorCode::SchemaError, ctx + ": missing field 'line_index'");
      }
      if (!region.word_count) {
        throw Error(ErrorCode::SchemaError, ctx + ": missing field 'word_count'");
      }
      if (*region.word_count < 1) {
        throw Error(ErrorCode::SchemaError, ctx + ": word_count must be >= 1");
      }
    }
    if (!ids.insert(region.id).second) {
      throw Error(ErrorCode::SchemaError, ctx + ": duplicate id");
    }
    regions.push_back(std::move(region));
  }

  std::set<std::pair<int, int>> line_slots;
  for (const auto& r : regions) {
    if (r.line_index && r.kind == AoiKind::PassageLine &&
        !line_slots.insert({r.page, *r.line_index}).second) {
      throw Error(ErrorCode::SchemaError,
                  "line_index " + std::to_string(*r.line_index) +
                      " repeated on page " + std::to_string(r.page));
    }
  }
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const auto& a = regions[i];
    if (a.kind != AoiKind::PassageLine) continue;
    for (std::size_t j = i + 1; j < regions.size(); ++j) {
      const auto& b = regions[j];
      if (b.kind != AoiKind::PassageLine || b.page != a.page) continue;
      double smaller = std::min(a.bbox.area(), b.bbox.area());
      if (a.bbox.intersection_area(b.bbox) > kMaxLineOverlapFraction * smaller) {
        throw Error(ErrorCode::OverlapError,
                    "lines '" + a.id + "' and '" + b.id + "' overlap");
      }
    }
  }

  std::stable_sort(regions.begin(), regions.end(),
                   [](const AoiRegion& a, const AoiRegion& b) {
                     auto key = [](const AoiRegion& r) {
                       return std::make_tuple(r.page, r.line_index ? 0 : 1,
                                              r.line_index.value_or(0),
                                              std::string_view(r.id));
                     };
                     return key(a) < key(b);
                   });
  return regions;
}

std::vector<AoiRegion> parse_aoi_layout(const std::filesystem::path& path) {
  return parse_aoi_layout(read_json_file(path));
}

json serialize_aoi_layout(const std::vector<AoiRegion>& regions) {
  json out = json::array();
  for (const auto& r : regions) {
    json o;
    o["id"] = r.id;
    o["kind"] = std::string(to_string(r.kind));
    o["page"] = r.page;
    o["bbox"] = {r.bbox.x0, r.bbox.y0, r.bbox.x1, r.bbox.y1};
    if (r.line_index) o["line_index"] = *r.line_index;
    if (r.word_count) o["word_count"] = *r.word_count;
    out.push_back(std::move(o));
  }
  return out;
}

// ---------------------------------------------------------------------------
// session timeline

SessionTimeline parse_session_events(const json& doc) {
  const std::string ctx = "timeline";
  SessionTimeline tl;
  tl.student_id = require_string(doc, "student_id", ctx);
  tl.cold_read = parse_interval(doc, "cold_read", ctx);
  tl.qa = parse_interval(doc, "qa", ctx);
  if (tl.cold_read.start_s > tl.cold_read.end_s || tl.qa.start_s > tl.qa.end_s) {
    throw Error(ErrorCode::PhaseOrderError,
                "phase interval ends before it starts for " + tl.student_id);
  }
  if (tl.qa.start_s < tl.cold_read.end_s) {
    throw Error(ErrorCode::PhaseOrderError,
                "qa starts at " + format_double(tl.qa.start_s) +
                    " before cold_read ends at " +
                    format_double(tl.cold_read.end_s) + " for " + tl.student_id);
  }
  if (doc.contains("question_events")) {
    const auto& evs = doc.at("question_events");
    if (!evs.is_array()) {
      throw Error(ErrorCode::SchemaError, "question_events must be an array");
    }
    for (const auto& e : evs) {
      QuestionEvent q;
      q.question_id = require_string(e, "question_id", ctx);
      q.shown_s = require_number(e, "shown_s", ctx);
      q.answered_s = require_number(e, "answered_s", ctx);
      if (q.answered_s < q.shown_s) {
        throw Error(ErrorCode::SchemaError,
                    "question " + q.question_id + " answered before shown");
      }
      tl.question_events.push_back(std::move(q));
    }
  }
  if (doc.contains("page_events")) {
    const auto& evs = doc.at("page_events");
    if (!evs.is_array()) {
      throw Error(ErrorCode::SchemaError, "page_events must be an array");
    }
    for (const auto& e : evs) {
      PageEvent p;
      p.t_s = require_number(e, "t_s", ctx);
      p.page = require_int(e, "page", ctx);
      if (!tl.page_events.empty() && p.t_s < tl.page_events.back().t_s) {
        throw Error(ErrorCode::SchemaError, "page_events must be time-ordered");
      }
      tl.page_events.push_back(p);
    }
  }
  return tl;
}

SessionTimeline parse_session_events(const std::filesystem::path& path) {
  return parse_session_events(read_json_file(path));
}

json serialize_session_events(const SessionTimeline& tl) {
  json out;
  out["student_id"] = tl.student_id;
  out["cold_read"] = {tl.cold_read.start_s, tl.cold_read.end_s};
  out["qa"] = {tl.qa.start_s, tl.qa.end_s};
  out["question_events"] = json::array();
  for (const auto& q : tl.question_events) {
    out["question_events"].push_back(
        {{"question_id", q.question_id}, {"shown_s", q.shown_s},
         {"answered_s", q.answered_s}});
  }
  out["page_events"] = json::array();
  for (const auto& p : tl.page_events) {
    out["page_events"].push_back({{"t_s", p.t_s}, {"page", p.page}});
  }
  return out;
}

// ---------------------------------------------------------------------------
// responses

std::vector<StudentResponse> parse_responses(std::istream& in) {
  expect_header(in, "student_id,question_id,chosen_option,correct,latency_s");
  std::vector<StudentResponse> out;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 5) {
      throw Error(ErrorCode::MalformedRow, "expected 5 fields", lineno);
    }
    StudentResponse r;
    r.student_id = trim(f[0]);
    r.question_id = trim(f[1]);
    r.chosen_option = trim(f[2]);
    if (r.student_id.empty() || r.question_id.empty()) {
      throw Error(ErrorCode::MalformedRow, "empty student or question id",
                  lineno);
    }
    if (!parse_flag(f[3], r.correct)) {
      throw Error(ErrorCode::MalformedRow, "correct must be 0 or 1", lineno);
    }
    if (!parse_double(f[4], r.latency_s) || r.latency_s < 0) {
      throw Error(ErrorCode::MalformedRow, "latency_s must be a number >= 0",
                  lineno);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<StudentResponse> parse_responses(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_responses(in);
}

std::string serialize_responses(const std::vector<StudentResponse>& responses) {
  std::string out = "student_id,question_id,chosen_option,correct,latency_s\n";
  for (const auto& r : responses) {
    out += csv_escape(r.student_id) + ',' + csv_escape(r.question_id) + ',' +
           csv_escape(r.chosen_option) + ',' + (r.correct ? "1" : "0") + ',' +
           format_double(r.latency_s) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// assessment

AssessmentContent parse_assessment(const json& doc) {
  const std::string ctx = "assessment";
  AssessmentContent a;
  a.title = require_string(doc, "title", ctx);
  a.passage_text = require_string(doc, "passage_text", ctx);
  const auto& stds = require(doc, "standards", ctx);
  if (!stds.is_array()) {
    throw Error(ErrorCode::SchemaError, "standards must be an array");
  }
  std::set<std::string> codes;
  for (const auto& s : stds) {
    ReadingStandard rs{require_string(s, "code", "standard"),
                       require_string(s, "description", "standard")};
    codes.insert(rs.code);
    a.standards.push_back(std::move(rs));
  }
  const auto& qs = require(doc, "questions", ctx);
  if (!qs.is_array()) {
    throw Error(ErrorCode::SchemaError, "questions must be an array");
  }
  std::set<std::string> qids;
  for (const auto& q : qs) {
    Question question;
    question.id = require_string(q, "id", "question");
    std::string qctx = "question '" + question.id + "'";
    question.text = require_string(q, "text", qctx);
    question.options = string_array(require(q, "options", qctx), qctx);
    question.correct_option = require_string(q, "correct_option", qctx);
    question.standard_codes =
        string_array(require(q, "standard_codes", qctx), qctx);
    for (const auto& code : question.standard_codes) {
      if (!codes.count(code)) {
        throw Error(ErrorCode::DanglingStandard,
                    qctx + " cites unknown standard '" + code + "'");
      }
    }
    if (!qids.insert(question.id).second) {
      throw Error(ErrorCode::SchemaError, qctx + ": duplicate id");
    }
    a.questions.push_back(std::move(question));
  }
  if (doc.contains("fluency_skills")) {
    a.fluency_skills = string_array(doc.at("fluency_skills"), "fluency_skills");
  }
  return a;
}

AssessmentContent parse_assessment(const std::filesystem::path& path) {
  return parse_assessment(read_json_file(path));
}

json serialize_assessment(const AssessmentContent& a) {
  json out;
  out["title"] = a.title;
  out["passage_text"] = a.passage_text;
  out["questions"] = json::array();
  for (const auto& q : a.questions) {
    out["questions"].push_back({{"id", q.id},
                                {"text", q.text},
                                {"options", q.options},
                                {"correct_option", q.correct_option},
                                {"standard_codes", q.standard_codes}});
  }
  out["standards"] = json::array();
  for (const auto& s : a.standards) {
    out["standards"].push_back({{"code", s.code}, {"description", s.description}});
  }
  out["fluency_skills"] = a.fluency_skills;
  return out;
}

}  // namespace readlens

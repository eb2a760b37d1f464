#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <istream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace readlens {

/// Physical screen used to convert pixels to centimetres and visual angle.
/// Defaults describe a 34.5 x 19.5 cm laptop panel at 1528 x 704 px.
struct ScreenGeometry {
  double width_cm = 34.5;
  double height_cm = 19.5;
  double width_px = 1528.0;
  double height_px = 704.0;
  double viewing_distance_cm = 60.0;

  double cm_per_px_x() const { return width_cm / width_px; }
  double cm_per_px_y() const { return height_cm / height_px; }
  void validate() const;
};

/// One raw gaze sample. Invalid samples keep their timestamp; absent
/// coordinates are stored as NaN.
struct GazeSample {
  double t_s = 0.0;
  double x_px = std::numeric_limits<double>::quiet_NaN();
  double y_px = std::numeric_limits<double>::quiet_NaN();
  bool valid = false;

  bool has_position() const { return !std::isnan(x_px) && !std::isnan(y_px); }
};

enum class AoiKind { PassageLine, PassagePage, QuizPanel, QuizQuestion };

std::string_view to_string(AoiKind kind);
std::optional<AoiKind> parse_aoi_kind(std::string_view text);
inline bool is_passage(AoiKind k) {
  return k == AoiKind::PassageLine || k == AoiKind::PassagePage;
}
inline bool is_quiz(AoiKind k) {
  return k == AoiKind::QuizPanel || k == AoiKind::QuizQuestion;
}

struct BoundingBox {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  double area() const { return (x1 - x0) * (y1 - y0); }
  /// Half-open containment: [x0,x1) x [y0,y1).
  bool contains(double x, double y) const {
    return x >= x0 && x < x1 && y >= y0 && y < y1;
  }
  double intersection_area(const BoundingBox& o) const;
};

/// Page 0 marks a region that stays visible on every page (e.g. the quiz
/// panel docked beside the passage).
struct AoiRegion {
  std::string id;
  AoiKind kind = AoiKind::PassageLine;
  int page = 1;
  BoundingBox bbox;
  std::optional<int> line_index;
  std::optional<int> word_count;

  bool visible_on(int current_page) const {
    return page == 0 || page == current_page;
  }
};

struct TimeInterval {
  double start_s = 0.0;
  double end_s = 0.0;
  bool contains(double t) const { return t >= start_s && t < end_s; }
};

struct QuestionEvent {
  std::string question_id;
  double shown_s = 0.0;
  double answered_s = 0.0;
};

struct PageEvent {
  double t_s = 0.0;
  int page = 1;
};

struct SessionTimeline {
  std::string student_id;
  TimeInterval cold_read;
  TimeInterval qa;
  std::vector<QuestionEvent> question_events;
  /// Page shown from t_s onwards; empty means a single-page session.
  std::vector<PageEvent> page_events;

  int page_at(double t_s) const;
};

struct StudentResponse {
  std::string student_id;
  std::string question_id;
  std::string chosen_option;
  bool correct = false;
  double latency_s = 0.0;
};

struct Question {
  std::string id;
  std::string text;
  std::vector<std::string> options;
  std::string correct_option;
  std::vector<std::string> standard_codes;
};

struct ReadingStandard {
  std::string code;
  std::string description;
};

struct AssessmentContent {
  std::string title;
  std::string passage_text;
  std::vector<Question> questions;
  std::vector<ReadingStandard> standards;
  std::vector<std::string> fluency_skills;

  const Question* find_question(std::string_view id) const;
};

// Gaze logs (CSV, header t_s,x_px,y_px,valid). Valid samples falling
// outside the screen are kept but marked invalid.
std::vector<GazeSample> parse_gaze_log(std::istream& in,
                                       const ScreenGeometry& geom = {});
std::vector<GazeSample> parse_gaze_log(const std::filesystem::path& path,
                                       const ScreenGeometry& geom = {});
std::string serialize_gaze_log(const std::vector<GazeSample>& samples);

/// Passage-line bboxes on one page may overlap by at most this fraction of
/// the smaller box.
inline constexpr double kMaxLineOverlapFraction = 0.25;

std::vector<AoiRegion> parse_aoi_layout(const nlohmann::json& doc);
std::vector<AoiRegion> parse_aoi_layout(const std::filesystem::path& path);
nlohmann::json serialize_aoi_layout(const std::vector<AoiRegion>& regions);

SessionTimeline parse_session_events(const nlohmann::json& doc);
SessionTimeline parse_session_events(const std::filesystem::path& path);
nlohmann::json serialize_session_events(const SessionTimeline& timeline);

std::vector<StudentResponse> parse_responses(std::istream& in);
std::vector<StudentResponse> parse_responses(const std::filesystem::path& path);
std::string serialize_responses(const std::vector<StudentResponse>& responses);

AssessmentContent parse_assessment(const nlohmann::json& doc);
AssessmentContent parse_assessment(const std::filesystem::path& path);
nlohmann::json serialize_assessment(const AssessmentContent& content);

/// Reads a JSON document, mapping open failures to IoError and syntax errors
/// to SchemaError.
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace readlens

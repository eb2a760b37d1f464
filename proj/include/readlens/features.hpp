#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "readlens/aoi.hpp"
#include "readlens/gaze_events.hpp"
#include "readlens/ingest.hpp"

namespace readlens {

inline constexpr std::size_t kFeatureCount = 10;

/// Column order of every feature table.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "norm_qa_coverage_line_%",
    "norm_coldread_coverage_line_%",
    "norm_qa_saccade_regression_rate_%",
    "norm_qa_fix_dispersion_mean",
    "norm_qa_dwell_time_pdf",
    "norm_qa_dwell_time_quiz",
    "norm_coldread_gaze_wpm_median",
    "norm_coldread_saccade_regression_rate_%",
    "norm_coldread_fix_dispersion_mean",
    "norm_coldread_dwell_time_pdf",
};

enum FeatureColumn : std::size_t {
  kQaCoverage = 0,
  kColdReadCoverage,
  kQaRegressionRate,
  kQaDispersion,
  kQaDwellPassage,
  kQaDwellQuiz,
  kColdReadWpm,
  kColdReadRegressionRate,
  kColdReadDispersion,
  kColdReadDwellPassage,
};

inline constexpr double kFeatureWindowS = 10.0;

enum class DwellKind { Passage, Quiz };

/// Median over 10 s windows of words travelled per minute of line fixation
/// time. Word position on a line is the words preceding the line plus the
/// horizontal fraction across its bbox times its word count; travel sums the
/// positive advances between consecutive line fixations in a window. Windows
/// are anchored at `anchor_s` and need at least two line fixations.
/// Throws NoSignal when no window qualifies.
double gaze_wpm_median(const std::vector<Fixation>& phase_fixations,
                       const std::vector<AoiRegion>& layout, double anchor_s,
                       double window_s = kFeatureWindowS);

/// Fraction of passage lines with at least one fixation in `phase`.
double line_coverage(const std::vector<Fixation>& fixations,
                     const std::vector<AoiRegion>& layout, Phase phase);

/// Summed duration of `phase` fixations on passage or quiz regions.
double dwell_time(const std::vector<Fixation>& fixations,
                  const std::vector<AoiRegion>& layout, DwellKind kind,
                  Phase phase);

/// Mean over 10 s windows (>= 2 fixations) of the mean distance, in cm, from
/// each fixation to the window centroid. Throws NoSignal when no window
/// qualifies.
double fixation_dispersion_mean(const std::vector<Fixation>& phase_fixations,
                                double anchor_s, const ScreenGeometry& geom,
                                double window_s = kFeatureWindowS);

/// Fills line_delta and is_regression. A saccade regresses when it moves left
/// on the same line or to an earlier line in reading order.
void annotate_saccades(std::vector<Saccade>& saccades,
                       const std::vector<Fixation>& fixations,
                       const std::vector<AoiRegion>& layout);

/// Percentage of regressions among saccades whose endpoints both lie on
/// passage lines within `phase`. Expects annotated saccades. Throws NoSignal
/// when no saccade qualifies.
double saccade_regression_rate(const std::vector<Saccade>& saccades,
                               const std::vector<Fixation>& fixations,
                               Phase phase);

struct FeatureVector {
  std::string student_id;
  /// nullopt marks NoSignal.
  std::array<std::optional<double>, kFeatureCount> values;
};

/// All ten raw features for one student from AOI/phase-encoded fixations.
FeatureVector compute_student_features(const std::string& student_id,
                                       const std::vector<Fixation>& fixations,
                                       const std::vector<AoiRegion>& layout,
                                       const SessionTimeline& timeline,
                                       const ScreenGeometry& geom);

struct Imputation {
  std::string student_id;
  std::string feature;
  double value = 0.0;
};

struct FeatureMatrix {
  std::vector<std::string> student_ids;
  Eigen::MatrixXd values;  // students x features
  std::vector<std::string> feature_names;
  Eigen::VectorXd column_means;
  Eigen::VectorXd column_stds;
  bool standardized = false;
  std::vector<Imputation> imputations;
  std::vector<std::string> warnings;

  std::size_t rows() const { return student_ids.size(); }
};

/// Stacks per-student vectors in the given order. NoSignal cells take the
/// column median of the present values; each substitution is recorded.
FeatureMatrix build_feature_matrix(const std::vector<FeatureVector>& students);

/// Per-column z-scores with population standard deviation. Zero-variance
/// columns become all zeros and add a warning.
FeatureMatrix standardize(const FeatureMatrix& raw);

std::string serialize_feature_matrix(const FeatureMatrix& m);
FeatureMatrix parse_feature_matrix(const std::filesystem::path& path,
                                   bool standardized);

}  // namespace readlens

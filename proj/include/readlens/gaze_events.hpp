#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "readlens/ingest.hpp"

namespace readlens {

enum class Phase { ColdRead, Qa };

std::string_view to_string(Phase phase);
std::optional<Phase> parse_phase(std::string_view text);

struct Fixation {
  double start_s = 0.0;
  double end_s = 0.0;
  double duration_s = 0.0;
  double cx_px = 0.0;
  double cy_px = 0.0;
  std::optional<std::string> aoi_id;
  std::optional<Phase> phase;
};

struct Saccade {
  std::size_t from_idx = 0;
  std::size_t to_idx = 0;
  double dx_px = 0.0;
  double dy_px = 0.0;
  /// Reading-order line index of the target minus that of the source; set
  /// only when both endpoints sit on passage lines.
  std::optional<int> line_delta;
  bool is_regression = false;
};

/// Velocity-threshold (I-VT) settings. Defaults follow the published
/// defaults of the Tobii I-VT fixation filter.
struct IvtParams {
  double velocity_threshold_deg_s = 30.0;
  double velocity_window_ms = 20.0;
  double gap_fill_max_ms = 75.0;
  double merge_max_gap_ms = 75.0;
  double merge_max_angle_deg = 0.5;
  double min_fixation_duration_ms = 60.0;
  /// Moving-median noise filter width in samples; 0 disables it.
  int noise_filter_samples = 0;

  void validate() const;
};

/// Visual angle in degrees subtended by two screen points.
double visual_angle_deg(double x0_px, double y0_px, double x1_px, double y1_px,
                        const ScreenGeometry& geom);

/// Linear interpolation across runs of invalid samples whose flanking valid
/// samples are at most `max_gap_ms` apart. Leading, trailing and longer runs
/// stay invalid.
std::vector<GazeSample> fill_gaps(const std::vector<GazeSample>& samples,
                                  double max_gap_ms);

/// Per-sample angular velocity (deg/s); NaN where undefined.
std::vector<double> angular_velocities(const std::vector<GazeSample>& samples,
                                       double window_ms,
                                       const ScreenGeometry& geom);

/// I-VT classification, merge of adjacent fixations and minimum-duration
/// filtering. Expects gap-filled, time-ordered samples.
///
/// A fixation spans from its first member sample to the following sample (each
/// sample accounts for one sampling period). Throws InsufficientData with fewer
/// than two valid samples.
std::vector<Fixation> detect_fixations_ivt(const std::vector<GazeSample>& samples,
                                           const IvtParams& params,
                                           const ScreenGeometry& geom);

std::vector<Saccade> derive_saccades(const std::vector<Fixation>& fixations);

std::string serialize_fixations(const std::vector<Fixation>& fixations);
std::vector<Fixation> parse_fixations(std::istream& in);
std::vector<Fixation> parse_fixations(const std::filesystem::path& path);

}  // namespace readlens

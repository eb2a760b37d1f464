#include "readlens/gaze_events.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "readlens/error.hpp"
#include "readlens/format.hpp"

namespace readlens {

std::string_view to_string(Phase phase) {
  return phase == Phase::ColdRead ? "cold_read" : "qa";
}

std::optional<Phase> parse_phase(std::string_view text) {
  if (text == "cold_read") return Phase::ColdRead;
  if (text == "qa") return Phase::Qa;
  return std::nullopt;
}

void IvtParams::validate() const {
  if (!(velocity_threshold_deg_s > 0 && velocity_window_ms > 0 &&
        gap_fill_max_ms > 0 && merge_max_gap_ms > 0 && merge_max_angle_deg > 0 &&
        min_fixation_duration_ms > 0) ||
      noise_filter_samples < 0) {
    throw Error(ErrorCode::ConfigError, "I-VT parameters must be positive");
  }
}

double visual_angle_deg(double x0_px, double y0_px, double x1_px, double y1_px,
                        const ScreenGeometry& geom) {
  double dx = (x1_px - x0_px) * geom.cm_per_px_x();
  double dy = (y1_px - y0_px) * geom.cm_per_px_y();
  double dist = std::hypot(dx, dy);
  return 2.0 * std::atan(dist / (2.0 * geom.viewing_distance_cm)) * 180.0 /
         std::numbers::pi;
}

namespace {

bool usable(const GazeSample& s) { return s.valid && s.has_position(); }

double median_period(const std::vector<GazeSample>& samples) {
  std::vector<double> dts;
  dts.reserve(samples.size());
  for (std::size_t i = 1; i < samples.size(); ++i) {
    double dt = samples[i].t_s - samples[i - 1].t_s;
    if (dt > 0) dts.push_back(dt);
  }
  if (dts.empty()) return 0.0;
  auto mid = dts.begin() + static_cast<std::ptrdiff_t>(dts.size() / 2);
  std::nth_element(dts.begin(), mid, dts.end());
  return *mid;
}

std::vector<GazeSample> median_filter(const std::vector<GazeSample>& samples,
                                      int width) {
  if (width <= 1) return samples;
  const int half = width / 2;
  std::vector<GazeSample> out = samples;
  std::vector<double> xs, ys;
  const int n = static_cast<int>(samples.size());
  for (int i = 0; i < n; ++i) {
    if (!usable(samples[i])) continue;
    xs.clear();
    ys.clear();
    for (int j = std::max(0, i - half); j <= std::min(n - 1, i + half); ++j) {
      if (!usable(samples[j])) continue;
      xs.push_back(samples[j].x_px);
      ys.push_back(samples[j].y_px);
    }
    auto mx = xs.begin() + static_cast<std::ptrdiff_t>(xs.size() / 2);
    auto my = ys.begin() + static_cast<std::ptrdiff_t>(ys.size() / 2);
    std::nth_element(xs.begin(), mx, xs.end());
    std::nth_element(ys.begin(), my, ys.end());
    out[i].x_px = *mx;
    out[i].y_px = *my;
  }
  return out;
}

struct Candidate {
  double start_s;
  double end_s;
  double sum_x = 0;
  double sum_y = 0;
  std::size_t count = 0;

  double cx() const { return sum_x / static_cast<double>(count); }
  double cy() const { return sum_y / static_cast<double>(count); }
};

}  // namespace

std::vector<GazeSample> fill_gaps(const std::vector<GazeSample>& samples,
                                  double max_gap_ms) {
  std::vector<GazeSample> out = samples;
  const double max_gap_s = max_gap_ms / 1000.0;
  const std::size_t n = out.size();
  std::size_t i = 0;
  while (i < n) {
    if (usable(out[i])) {
      ++i;
      continue;
    }
    std::size_t run_end = i;
    while (run_end < n && !usable(out[run_end])) ++run_end;
    if (i > 0 && run_end < n) {
      const auto& a = out[i - 1];
      const auto& b = out[run_end];
      double span = b.t_s - a.t_s;
      if (span > 0 && span <= max_gap_s + 1e-9) {
        for (std::size_t j = i; j < run_end; ++j) {
          double f = (out[j].t_s - a.t_s) / span;
          out[j].x_px = a.x_px + f * (b.x_px - a.x_px);
          out[j].y_px = a.y_px + f * (b.y_px - a.y_px);
          out[j].valid = true;
        }
      }
    }
    i = run_end;
  }
  return out;
}

std::vector<double> angular_velocities(const std::vector<GazeSample>& samples,
                                       double window_ms,
                                       const ScreenGeometry& geom) {
  const std::size_t n = samples.size();
  std::vector<double> vel(n, std::numeric_limits<double>::quiet_NaN());
  double period = median_period(samples);
  if (n < 2 || period <= 0) return vel;
  // Window width in samples; at least two so a difference exists.
  auto width = static_cast<std::size_t>(
      std::max<long>(2, std::lround(window_ms / 1000.0 / period) + 1));
  width = std::min(width, n);
  const std::size_t before = width / 2;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j0 = i >= before ? i - before : 0;
    std::size_t j1 = std::min(n - 1, j0 + width - 1);
    j0 = j1 + 1 >= width ? j1 + 1 - width : 0;
    const auto& a = samples[j0];
    const auto& b = samples[j1];
    if (!usable(samples[i]) || !usable(a) || !usable(b)) continue;
    double dt = b.t_s - a.t_s;
    if (dt <= 0) continue;
    vel[i] = visual_angle_deg(a.x_px, a.y_px, b.x_px, b.y_px, geom) / dt;
  }
  return vel;
}

std::vector<Fixation> detect_fixations_ivt(const std::vector<GazeSample>& input,
                                           const IvtParams& params,
                                           const ScreenGeometry& geom) {
  std::size_t valid_count = 0;
  for (const auto& s : input) valid_count += usable(s) ? 1 : 0;
  if (valid_count < 2) {
    throw Error(ErrorCode::InsufficientData,
                "I-VT needs at least 2 valid samples, got " +
                    std::to_string(valid_count));
  }
  const std::vector<GazeSample> samples =
      median_filter(input, params.noise_filter_samples);
  const double period = median_period(samples);
  const auto vel = angular_velocities(samples, params.velocity_window_ms, geom);
  const std::size_t n = samples.size();

  std::vector<Candidate> candidates;
  std::size_t i = 0;
  while (i < n) {
    if (!(vel[i] < params.velocity_threshold_deg_s)) {
      ++i;
      continue;
    }
    Candidate c{samples[i].t_s, samples[i].t_s};
    std::size_t j = i;
    for (; j < n && vel[j] < params.velocity_threshold_deg_s; ++j) {
      c.sum_x += samples[j].x_px;
      c.sum_y += samples[j].y_px;
      ++c.count;
    }
    const double last_t = samples[j - 1].t_s;
    c.end_s = last_t + period;
    if (j < n) c.end_s = std::min(c.end_s, samples[j].t_s);
    candidates.push_back(c);
    i = j;
  }

  const double merge_gap_s = params.merge_max_gap_ms / 1000.0;
  std::vector<Candidate> merged;
  for (const auto& c : candidates) {
    if (!merged.empty()) {
      auto& prev = merged.back();
      bool close_in_time = c.start_s - prev.end_s <= merge_gap_s + 1e-9;
      if (close_in_time &&
          visual_angle_deg(prev.cx(), prev.cy(), c.cx(), c.cy(), geom) <=
              params.merge_max_angle_deg) {
        prev.end_s = c.end_s;
        prev.sum_x += c.sum_x;
        prev.sum_y += c.sum_y;
        prev.count += c.count;
        continue;
      }
    }
    merged.push_back(c);
  }

  const double min_dur_s = params.min_fixation_duration_ms / 1000.0;
  std::vector<Fixation> fixations;
  for (const auto& c : merged) {
    double duration = c.end_s - c.start_s;
    if (duration <= 0 || duration + 1e-9 < min_dur_s) continue;
    Fixation f;
    f.start_s = c.start_s;
    f.end_s = c.end_s;
    f.duration_s = duration;
    f.cx_px = c.cx();
    f.cy_px = c.cy();
    fixations.push_back(std::move(f));
  }
  return fixations;
}

std::vector<Saccade> derive_saccades(const std::vector<Fixation>& fixations) {
  if (fixations.size() < 2) {
    throw Error(ErrorCode::InsufficientData,
                "saccades need at least 2 fixations");
  }
  std::vector<Saccade> out;
  out.reserve(fixations.size() - 1);
  for (std::size_t i = 0; i + 1 < fixations.size(); ++i) {
    Saccade s;
    s.from_idx = i;
    s.to_idx = i + 1;
    s.dx_px = fixations[i + 1].cx_px - fixations[i].cx_px;
    s.dy_px = fixations[i + 1].cy_px - fixations[i].cy_px;
    out.push_back(s);
  }
  return out;
}

std::string serialize_fixations(const std::vector<Fixation>& fixations) {
  std::string out = "start_s,end_s,duration_s,cx_px,cy_px,aoi_id,phase\n";
  for (const auto& f : fixations) {
    out += format_double(f.start_s) + ',' + format_double(f.end_s) + ',' +
           format_double(f.duration_s) + ',' + format_double(f.cx_px) + ',' +
           format_double(f.cy_px) + ',' + csv_escape(f.aoi_id.value_or("")) +
           ',' + (f.phase ? std::string(to_string(*f.phase)) : std::string()) +
           '\n';
  }
  return out;
}

std::vector<Fixation> parse_fixations(std::istream& in) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line) ||
      trim(line) != "start_s,end_s,duration_s,cx_px,cy_px,aoi_id,phase") {
    throw Error(ErrorCode::SchemaError, "bad fixation CSV header", 1);
  }
  std::vector<Fixation> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 7) {
      throw Error(ErrorCode::MalformedRow, "expected 7 fields", lineno);
    }
    Fixation fx;
    if (!parse_double(f[0], fx.start_s) || !parse_double(f[1], fx.end_s) ||
        !parse_double(f[2], fx.duration_s) || !parse_double(f[3], fx.cx_px) ||
        !parse_double(f[4], fx.cy_px)) {
      throw Error(ErrorCode::MalformedRow, "non-numeric fixation field", lineno);
    }
    if (!f[5].empty()) fx.aoi_id = f[5];
    auto p = trim(f[6]);
    if (!p.empty()) {
      fx.phase = parse_phase(p);
      if (!fx.phase) {
        throw Error(ErrorCode::MalformedRow, "unknown phase '" + p + "'", lineno);
      }
    }
    out.push_back(std::move(fx));
  }
  return out;
}

std::vector<Fixation> parse_fixations(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return parse_fixations(in);
}

}  // namespace readlens

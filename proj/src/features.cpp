#include "readlens/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "readlens/error.hpp"
#include "readlens/format.hpp"

namespace readlens {

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Groups fixations into consecutive windows anchored at anchor_s, keyed by
/// window index. Fixations that start just before the anchor go to window 0.
std::map<long, std::vector<const Fixation*>> windows_of(
    const std::vector<Fixation>& fixations, double anchor_s, double window_s) {
  std::map<long, std::vector<const Fixation*>> out;
  for (const auto& f : fixations) {
    long w = static_cast<long>(std::floor((f.start_s - anchor_s) / window_s));
    out[std::max(0L, w)].push_back(&f);
  }
  return out;
}

bool in_phase(const Fixation& f, Phase p) { return f.phase && *f.phase == p; }

std::vector<Fixation> filter_phase(const std::vector<Fixation>& fixations,
                                   Phase p) {
  std::vector<Fixation> out;
  for (const auto& f : fixations) {
    if (in_phase(f, p)) out.push_back(f);
  }
  return out;
}

}  // namespace

double gaze_wpm_median(const std::vector<Fixation>& phase_fixations,
                       const std::vector<AoiRegion>& layout, double anchor_s,
                       double window_s) {
  LayoutIndex index(layout);
  std::vector<double> window_wpm;
  for (const auto& [w, members] : windows_of(phase_fixations, anchor_s, window_s)) {
    std::vector<double> positions;
    double fix_time_s = 0.0;
    for (const Fixation* f : members) {
      if (!f->aoi_id) continue;
      const AoiRegion* r = index.find(*f->aoi_id);
      if (!r || r->kind != AoiKind::PassageLine) continue;
      double frac = std::clamp((f->cx_px - r->bbox.x0) / (r->bbox.x1 - r->bbox.x0),
                               0.0, 1.0);
      positions.push_back(*index.words_before(r->id) +
                          frac * r->word_count.value_or(0));
      fix_time_s += f->duration_s;
    }
    if (positions.size() < 2 || fix_time_s <= 0) continue;
    double travel = 0.0;
    for (std::size_t i = 1; i < positions.size(); ++i) {
      travel += std::max(0.0, positions[i] - positions[i - 1]);
    }
    window_wpm.push_back(travel / (fix_time_s / 60.0));
  }
  if (window_wpm.empty()) {
    throw Error(ErrorCode::NoSignal, "no window with two line fixations");
  }
  return median_of(std::move(window_wpm));
}

double line_coverage(const std::vector<Fixation>& fixations,
                     const std::vector<AoiRegion>& layout, Phase phase) {
  LayoutIndex index(layout);
  if (index.line_count() == 0) return 0.0;
  std::set<std::string> touched;
  for (const auto& f : fixations) {
    if (!in_phase(f, phase) || !f.aoi_id) continue;
    if (index.line_order(*f.aoi_id)) touched.insert(*f.aoi_id);
  }
  return static_cast<double>(touched.size()) /
         static_cast<double>(index.line_count());
}

double dwell_time(const std::vector<Fixation>& fixations,
                  const std::vector<AoiRegion>& layout, DwellKind kind,
                  Phase phase) {
  LayoutIndex index(layout);
  double total = 0.0;
  for (const auto& f : fixations) {
    if (!in_phase(f, phase) || !f.aoi_id) continue;
    const AoiRegion* r = index.find(*f.aoi_id);
    if (!r) continue;
    bool match = kind == DwellKind::Passage ? is_passage(r->kind) : is_quiz(r->kind);
    if (match) total += f.duration_s;
  }
  return total;
}

double fixation_dispersion_mean(const std::vector<Fixation>& phase_fixations,
                                double anchor_s, const ScreenGeometry& geom,
                                double window_s) {
  const double sx = geom.cm_per_px_x();
  const double sy = geom.cm_per_px_y();
  std::vector<double> per_window;
  for (const auto& [w, members] : windows_of(phase_fixations, anchor_s, window_s)) {
    if (members.size() < 2) continue;
    double mx = 0, my = 0;
    for (const Fixation* f : members) {
      mx += f->cx_px * sx;
      my += f->cy_px * sy;
    }
    mx /= static_cast<double>(members.size());
    my /= static_cast<double>(members.size());
    double dist = 0;
    for (const Fixation* f : members) {
      dist += std::hypot(f->cx_px * sx - mx, f->cy_px * sy - my);
    }
    per_window.push_back(dist / static_cast<double>(members.size()));
  }
  if (per_window.empty()) {
    throw Error(ErrorCode::NoSignal, "no window with two fixations");
  }
  double sum = 0;
  for (double d : per_window) sum += d;
  return sum / static_cast<double>(per_window.size());
}

void annotate_saccades(std::vector<Saccade>& saccades,
                       const std::vector<Fixation>& fixations,
                       const std::vector<AoiRegion>& layout) {
  LayoutIndex index(layout);
  for (auto& s : saccades) {
    s.line_delta.reset();
    s.is_regression = false;
    const auto& a = fixations.at(s.from_idx);
    const auto& b = fixations.at(s.to_idx);
    if (!a.aoi_id || !b.aoi_id) continue;
    auto la = index.line_order(*a.aoi_id);
    auto lb = index.line_order(*b.aoi_id);
    if (!la || !lb) continue;
    s.line_delta = *lb - *la;
    s.is_regression = (*s.line_delta == 0 && s.dx_px < 0) || *s.line_delta < 0;
  }
}

double saccade_regression_rate(const std::vector<Saccade>& saccades,
                               const std::vector<Fixation>& fixations,
                               Phase phase) {
  std::size_t qualifying = 0;
  std::size_t regressions = 0;
  for (const auto& s : saccades) {
    if (!s.line_delta) continue;
    if (!in_phase(fixations.at(s.from_idx), phase) ||
        !in_phase(fixations.at(s.to_idx), phase)) {
      continue;
    }
    ++qualifying;
    regressions += s.is_regression ? 1 : 0;
  }
  if (qualifying == 0) {
    throw Error(ErrorCode::NoSignal, "no saccade between passage lines");
  }
  return 100.0 * static_cast<double>(regressions) /
         static_cast<double>(qualifying);
}

FeatureVector compute_student_features(const std::string& student_id,
                                       const std::vector<Fixation>& fixations,
                                       const std::vector<AoiRegion>& layout,
                                       const SessionTimeline& timeline,
                                       const ScreenGeometry& geom) {
  FeatureVector fv;
  fv.student_id = student_id;
  auto guarded = [](auto&& fn) -> std::optional<double> {
    try {
      return fn();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NoSignal ||
          e.code() == ErrorCode::InsufficientData) {
        return std::nullopt;
      }
      throw;
    }
  };

  const auto cold = filter_phase(fixations, Phase::ColdRead);
  const auto qa = filter_phase(fixations, Phase::Qa);

  std::vector<Saccade> saccades;
  if (fixations.size() >= 2) {
    saccades = derive_saccades(fixations);
    annotate_saccades(saccades, fixations, layout);
  }
  auto regression = [&](Phase p) {
    return guarded([&] { return saccade_regression_rate(saccades, fixations, p); });
  };

  auto& v = fv.values;
  v[kQaCoverage] = line_coverage(fixations, layout, Phase::Qa);
  v[kColdReadCoverage] = line_coverage(fixations, layout, Phase::ColdRead);
  v[kQaRegressionRate] = regression(Phase::Qa);
  v[kQaDispersion] = guarded(
      [&] { return fixation_dispersion_mean(qa, timeline.qa.start_s, geom); });
  v[kQaDwellPassage] = dwell_time(fixations, layout, DwellKind::Passage, Phase::Qa);
  v[kQaDwellQuiz] = dwell_time(fixations, layout, DwellKind::Quiz, Phase::Qa);
  v[kColdReadWpm] = guarded(
      [&] { return gaze_wpm_median(cold, layout, timeline.cold_read.start_s); });
  v[kColdReadRegressionRate] = regression(Phase::ColdRead);
  v[kColdReadDispersion] = guarded([&] {
    return fixation_dispersion_mean(cold, timeline.cold_read.start_s, geom);
  });
  v[kColdReadDwellPassage] =
      dwell_time(fixations, layout, DwellKind::Passage, Phase::ColdRead);
  return fv;
}

FeatureMatrix build_feature_matrix(const std::vector<FeatureVector>& students) {
  if (students.empty()) {
    throw Error(ErrorCode::EmptyCohort, "no students to build a feature matrix");
  }
  const auto n = static_cast<Eigen::Index>(students.size());
  const auto d = static_cast<Eigen::Index>(kFeatureCount);
  FeatureMatrix m;
  m.values = Eigen::MatrixXd::Zero(n, d);
  for (auto name : kFeatureNames) m.feature_names.emplace_back(name);
  for (const auto& s : students) m.student_ids.push_back(s.student_id);

  for (Eigen::Index c = 0; c < d; ++c) {
    std::vector<double> present;
    for (const auto& s : students) {
      if (const auto& v = s.values[static_cast<std::size_t>(c)]) {
        present.push_back(*v);
      }
    }
    const bool needs_imputation = present.size() < students.size();
    if (needs_imputation && present.empty()) {
      throw Error(ErrorCode::NoSignal,
                  "feature " + m.feature_names[static_cast<std::size_t>(c)] +
                      " has no signal for any student; cannot impute");
    }
    const double fill = needs_imputation ? median_of(present) : 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto& cell = students[static_cast<std::size_t>(r)]
                             .values[static_cast<std::size_t>(c)];
      if (cell) {
        m.values(r, c) = *cell;
      } else {
        m.values(r, c) = fill;
        m.imputations.push_back({m.student_ids[static_cast<std::size_t>(r)],
                                 m.feature_names[static_cast<std::size_t>(c)],
                                 fill});
      }
    }
  }
  m.column_means = m.values.colwise().mean().transpose();
  m.column_stds = ((m.values.rowwise() - m.column_means.transpose())
                       .array()
                       .square()
                       .colwise()
                       .mean())
                      .sqrt()
                      .transpose();
  return m;
}

FeatureMatrix standardize(const FeatureMatrix& raw) {
  FeatureMatrix out = raw;
  const Eigen::Index n = raw.values.rows();
  const Eigen::Index d = raw.values.cols();
  out.column_means.resize(d);
  out.column_stds.resize(d);
  for (Eigen::Index c = 0; c < d; ++c) {
    const auto col = raw.values.col(c);
    const double mean = col.mean();
    const double var = n > 0 ? (col.array() - mean).square().mean() : 0.0;
    const double sd = std::sqrt(var);
    out.column_means(c) = mean;
    out.column_stds(c) = sd;
    if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
      out.values.col(c).setZero();
      out.warnings.push_back("feature " +
                             out.feature_names[static_cast<std::size_t>(c)] +
                             " has zero variance; standardized to 0");
    } else {
      out.values.col(c) = (col.array() - mean) / sd;
    }
  }
  out.standardized = true;
  return out;
}

std::string serialize_feature_matrix(const FeatureMatrix& m) {
  std::string out = "student_id";
  for (const auto& name : m.feature_names) out += "," + csv_escape(name);
  out += '\n';
  for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
    out += csv_escape(m.student_ids[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < m.values.cols(); ++c) {
      out += ',' + format_double(m.values(r, c));
    }
    out += '\n';
  }
  return out;
}

FeatureMatrix parse_feature_matrix(const std::filesystem::path& path,
                                   bool standardized) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::SchemaError, "empty feature file " + path.string(), 1);
  }
  auto header = split_csv_line(line);
  if (header.empty() || header[0] != "student_id") {
    throw Error(ErrorCode::SchemaError, "feature header must start with student_id",
                1);
  }
  FeatureMatrix m;
  m.feature_names.assign(header.begin() + 1, header.end());
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != header.size()) {
      throw Error(ErrorCode::MalformedRow, "wrong field count", lineno);
    }
    m.student_ids.push_back(f[0]);
    std::vector<double> row(f.size() - 1);
    for (std::size_t i = 1; i < f.size(); ++i) {
      if (!parse_double(f[i], row[i - 1])) {
        throw Error(ErrorCode::MalformedRow, "non-numeric feature value", lineno);
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw Error(ErrorCode::EmptyCohort, "no rows in " + path.string());
  }
  m.values.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(m.feature_names.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          rows[r][c];
    }
  }
  m.column_means = m.values.colwise().mean().transpose();
  m.column_stds = ((m.values.rowwise() - m.column_means.transpose())
                       .array()
                       .square()
                       .colwise()
                       .mean())
                      .sqrt()
                      .transpose();
  m.standardized = standardized;
  return m;
}

}  // namespace readlens

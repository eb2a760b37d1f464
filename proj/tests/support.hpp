#pragma once

// Shared fixtures and independent oracles for the unit and acceptance tests.
// Oracles deliberately avoid the library's own helpers.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#include "readlens/gaze_events.hpp"
#include "readlens/ingest.hpp"

namespace testsupport {

inline std::filesystem::path fresh_dir(const std::string& name) {
  static std::atomic<int> counter{0};
  auto dir = std::filesystem::temp_directory_path() /
             ("readlens_test_" + name + "_" + std::to_string(::getpid()) + "_" +
              std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Gaze traces

struct TraceTruth {
  double cx, cy;
  double start_s, end_s;  // first sample time, last sample time + period
};

/// 60 Hz trace of stationary clusters with +-2 px uniform jitter joined by
/// fast jumps of `jump_samples` samples.
inline std::vector<readlens::GazeSample> cluster_trace(
    const std::vector<std::pair<double, double>>& centers, double cluster_ms,
    int jump_samples, std::uint64_t seed, std::vector<TraceTruth>* truth = nullptr) {
  constexpr double rate = 60.0;
  const int per_cluster = static_cast<int>(std::lround(cluster_ms / 1000.0 * rate));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-2.0, 2.0);
  std::vector<readlens::GazeSample> out;
  int k = 0;
  auto push = [&](double x, double y) {
    readlens::GazeSample s;
    s.t_s = k / rate;
    s.x_px = x;
    s.y_px = y;
    s.valid = true;
    out.push_back(s);
    ++k;
  };
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const double start = k / rate;
    for (int i = 0; i < per_cluster; ++i) {
      push(centers[c].first + jitter(rng), centers[c].second + jitter(rng));
    }
    if (truth) truth->push_back({centers[c].first, centers[c].second, start, k / rate});
    if (c + 1 < centers.size()) {
      for (int j = 1; j <= jump_samples; ++j) {
        const double a = static_cast<double>(j) / (jump_samples + 1);
        push(centers[c].first + a * (centers[c + 1].first - centers[c].first),
             centers[c].second + a * (centers[c + 1].second - centers[c].second));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Clustering oracles

/// Direct transcription of the silhouette definition, O(n^2) with no shared
/// code: singletons score 0; max(a,b) == 0 scores 0.
inline double brute_silhouette(const Eigen::MatrixXd& X, const std::vector<int>& labels) {
  const int n = static_cast<int>(X.rows());
  std::map<int, int> sizes;
  for (int l : labels) ++sizes[l];
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    if (sizes[labels[i]] == 1) continue;
    std::map<int, double> sum;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double d = 0.0;
      for (int f = 0; f < X.cols(); ++f) d += (X(i, f) - X(j, f)) * (X(i, f) - X(j, f));
      sum[labels[j]] += std::sqrt(d);
    }
    const double a = sum[labels[i]] / (sizes[labels[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [l, s] : sizes) {
      if (l != labels[i]) b = std::min(b, sum[l] / s);
    }
    const double m = std::max(a, b);
    if (m > 0.0) total += (b - a) / m;
  }
  return total / n;
}

inline double brute_within_variance(const Eigen::MatrixXd& X, const std::vector<int>& labels) {
  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < static_cast<int>(labels.size()); ++i) groups[labels[i]].push_back(i);
  double acc = 0.0;
  for (const auto& [l, idx] : groups) {
    double feat_sum = 0.0;
    for (int f = 0; f < X.cols(); ++f) {
      double mean = 0.0;
      for (int i : idx) mean += X(i, f);
      mean /= idx.size();
      double ss = 0.0;
      for (int i : idx) ss += (X(i, f) - mean) * (X(i, f) - mean);
      feat_sum += idx.size() > 1 ? ss / (idx.size() - 1) : 0.0;
    }
    acc += feat_sum / X.cols();
  }
  return acc / groups.size();
}

/// Minimum inertia over every partition of the rows into exactly k non-empty
/// groups (restricted-growth enumeration).
inline double exhaustive_kmeans_inertia(const Eigen::MatrixXd& X, int k) {
  const int n = static_cast<int>(X.rows());
  std::vector<int> a(n, 0);
  double best = std::numeric_limits<double>::infinity();
  std::function<void(int, int)> rec = [&](int i, int used) {
    if (n - i < k - used) return;
    if (i == n) {
      if (used != k) return;
      double inertia = 0.0;
      for (int c = 0; c < k; ++c) {
        Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(X.cols());
        int cnt = 0;
        for (int r = 0; r < n; ++r) {
          if (a[r] == c) {
            mean += X.row(r);
            ++cnt;
          }
        }
        mean /= cnt;
        for (int r = 0; r < n; ++r) {
          if (a[r] == c) inertia += (X.row(r) - mean).squaredNorm();
        }
      }
      best = std::min(best, inertia);
      return;
    }
    for (int c = 0; c <= std::min(used, k - 1); ++c) {
      a[i] = c;
      rec(i + 1, std::max(used, c + 1));
    }
  };
  rec(0, 0);
  return best;
}

/// Fraction of points whose label agrees with the majority label of their
/// true group, maximized as the usual purity score.
inline double purity(const std::vector<int>& labels, const std::vector<int>& truth) {
  std::map<int, std::map<int, int>> table;
  for (std::size_t i = 0; i < labels.size(); ++i) ++table[labels[i]][truth[i]];
  int hit = 0;
  for (const auto& [l, counts] : table) {
    int m = 0;
    for (const auto& [t, c] : counts) m = std::max(m, c);
    hit += m;
  }
  return static_cast<double>(hit) / labels.size();
}

inline Eigen::MatrixXd gaussian_blobs(const std::vector<Eigen::RowVectorXd>& centers,
                                      int per_blob, double sigma, std::uint64_t seed,
                                      std::vector<int>* truth = nullptr) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma);
  const int d = static_cast<int>(centers.front().size());
  Eigen::MatrixXd X(per_blob * static_cast<int>(centers.size()), d);
  int r = 0;
  for (std::size_t c = 0; c < centers.size(); ++c) {
    for (int i = 0; i < per_blob; ++i, ++r) {
      for (int f = 0; f < d; ++f) X(r, f) = centers[c](f) + n(rng);
      if (truth) truth->push_back(static_cast<int>(c));
    }
  }
  return X;
}

inline Eigen::MatrixXd rings(int per_ring, double r0, double r1, double noise,
                             std::uint64_t seed, std::vector<int>* truth) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, noise);
  Eigen::MatrixXd X(2 * per_ring, 2);
  const double pi = std::acos(-1.0);
  for (int ring = 0; ring < 2; ++ring) {
    const double r = ring == 0 ? r0 : r1;
    for (int i = 0; i < per_ring; ++i) {
      const double th = 2.0 * pi * i / per_ring;
      X(ring * per_ring + i, 0) = r * std::cos(th) + n(rng);
      X(ring * per_ring + i, 1) = r * std::sin(th) + n(rng);
      truth->push_back(ring);
    }
  }
  return X;
}

// ---------------------------------------------------------------------------
// F distribution oracle: adaptive Simpson integration of the density.

inline double f_pdf(double x, double d1, double d2) {
  if (x <= 0.0) return 0.0;
  const double lognum = 0.5 * d1 * std::log(d1 * x) + 0.5 * d2 * std::log(d2) -
                        0.5 * (d1 + d2) * std::log(d1 * x + d2);
  const double logbeta =
      std::lgamma(0.5 * d1) + std::lgamma(0.5 * d2) - std::lgamma(0.5 * (d1 + d2));
  return std::exp(lognum - logbeta) / x;
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double eps, int depth) {
  const double c = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fc = f(c);
  std::function<double(double, double, double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double flo, double fhi, double fmid, double whole,
          double tol, int d) -> double {
    const double mid = 0.5 * (lo + hi);
    const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
    const double flm = f(lm), frm = f(rm);
    const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    if (d <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
      return left + right + (left + right - whole) / 15.0;
    }
    return rec(lo, mid, flo, fmid, flm, left, tol / 2.0, d - 1) +
           rec(mid, hi, fmid, fhi, frm, right, tol / 2.0, d - 1);
  };
  return rec(a, b, fa, fb, fc, (b - a) / 6.0 * (fa + 4.0 * fc + fb), eps, depth);
}

/// P(X > f) for X ~ F(d1, d2): integrate the density over u in [0,1) with
/// x = f + u / (1 - u), which maps the infinite tail onto a finite interval.
inline double f_sf_quadrature(double f, double d1, double d2) {
  auto g = [&](double u) {
    if (u >= 1.0) return 0.0;
    const double x = f + u / (1.0 - u);
    return f_pdf(x, d1, d2) / ((1.0 - u) * (1.0 - u));
  };
  return adaptive_simpson(g, 0.0, 1.0 - 1e-12, 1e-12, 50);
}

// ---------------------------------------------------------------------------
// Feature fixtures

inline readlens::AoiRegion line_region(const std::string& id, int page, int index,
                                       double y0, int words) {
  return {id, readlens::AoiKind::PassageLine, page, {100.0, y0, 1100.0, y0 + 30.0},
          index, words};
}

inline readlens::Fixation fix(double start, double dur, double x, double y,
                              std::optional<std::string> aoi = std::nullopt,
                              std::optional<readlens::Phase> phase = std::nullopt) {
  readlens::Fixation f;
  f.start_s = start;
  f.end_s = start + dur;
  f.duration_s = dur;
  f.cx_px = x;
  f.cy_px = y;
  f.aoi_id = std::move(aoi);
  f.phase = phase;
  return f;
}

}  // namespace testsupport

#include "readlens/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <future>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>

#include "readlens/error.hpp"
#include "readlens/format.hpp"
#include "readlens/linalg.hpp"
#include "readlens/stats.hpp"

namespace readlens {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string_view to_string(ClusterMethod method) {
  switch (method) {
    case ClusterMethod::KMeans: return "kmeans";
    case ClusterMethod::Gmm: return "gmm";
    case ClusterMethod::Spectral: return "spectral";
  }
  return "kmeans";
}

std::optional<ClusterMethod> parse_cluster_method(std::string_view text) {
  if (text == "kmeans") return ClusterMethod::KMeans;
  if (text == "gmm") return ClusterMethod::Gmm;
  if (text == "spectral") return ClusterMethod::Spectral;
  return std::nullopt;
}

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void check_inputs(const MatrixXd& data, int k) {
  if (k < 2) {
    throw Error(ErrorCode::DegenerateData, "k must be at least 2");
  }
  if (data.rows() <= k) {
    throw Error(ErrorCode::DegenerateData,
                "need more rows (" + std::to_string(data.rows()) +
                    ") than clusters (" + std::to_string(k) + ")");
  }
  if (!data.allFinite()) {
    throw Error(ErrorCode::DegenerateData, "data contains non-finite values");
  }
}

std::size_t distinct_rows(const MatrixXd& data) {
  std::set<std::vector<double>> rows;
  for (Index r = 0; r < data.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(data.cols()));
    for (Index c = 0; c < data.cols(); ++c) row[static_cast<std::size_t>(c)] = data(r, c);
    rows.insert(std::move(row));
  }
  return rows.size();
}

/// Relabels by first appearance and returns the number of clusters.
int canonicalize(std::vector<int>& labels) {
  std::map<int, int> remap;
  for (int& l : labels) {
    auto [it, inserted] = remap.emplace(l, static_cast<int>(remap.size()));
    l = it->second;
  }
  return static_cast<int>(remap.size());
}

MatrixXd member_means(const MatrixXd& data, const std::vector<int>& labels,
                      int k) {
  MatrixXd c = MatrixXd::Zero(k, data.cols());
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (Index r = 0; r < data.rows(); ++r) {
    int l = labels[static_cast<std::size_t>(r)];
    c.row(l) += data.row(r);
    ++counts[static_cast<std::size_t>(l)];
  }
  for (int j = 0; j < k; ++j) {
    if (counts[static_cast<std::size_t>(j)] > 0) {
      c.row(j) /= static_cast<double>(counts[static_cast<std::size_t>(j)]);
    }
  }
  return c;
}

double inertia_of(const MatrixXd& data, const MatrixXd& centroids,
                  const std::vector<int>& labels) {
  double total = 0.0;
  for (Index r = 0; r < data.rows(); ++r) {
    total += (data.row(r) - centroids.row(labels[static_cast<std::size_t>(r)]))
                 .squaredNorm();
  }
  return total;
}

/// Nearest-centroid assignment; ties go to the lowest index.
std::vector<int> assign(const MatrixXd& data, const MatrixXd& centroids,
                        std::vector<double>* sq_dist = nullptr) {
  std::vector<int> labels(static_cast<std::size_t>(data.rows()));
  if (sq_dist) sq_dist->assign(static_cast<std::size_t>(data.rows()), 0.0);
  for (Index r = 0; r < data.rows(); ++r) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (Index j = 0; j < centroids.rows(); ++j) {
      double d = (data.row(r) - centroids.row(j)).squaredNorm();
      if (d < best) {
        best = d;
        arg = static_cast<int>(j);
      }
    }
    labels[static_cast<std::size_t>(r)] = arg;
    if (sq_dist) (*sq_dist)[static_cast<std::size_t>(r)] = best;
  }
  return labels;
}

MatrixXd kmeans_plus_plus(const MatrixXd& data, int k, std::mt19937_64& rng) {
  const Index n = data.rows();
  MatrixXd centers(k, data.cols());
  auto first = static_cast<Index>(uniform01(rng) * static_cast<double>(n));
  centers.row(0) = data.row(std::min(first, n - 1));
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Index r = 0; r < n; ++r) {
    d2[static_cast<std::size_t>(r)] = (data.row(r) - centers.row(0)).squaredNorm();
  }
  for (int j = 1; j < k; ++j) {
    double total = 0.0;
    for (double v : d2) total += v;
    Index pick = n - 1;
    double target = uniform01(rng) * total;
    double acc = 0.0;
    for (Index r = 0; r < n; ++r) {
      acc += d2[static_cast<std::size_t>(r)];
      if (acc > target && d2[static_cast<std::size_t>(r)] > 0) {
        pick = r;
        break;
      }
    }
    // Rounding can leave the cumulative sum short; fall back to the last
    // row with positive weight.
    if (d2[static_cast<std::size_t>(pick)] <= 0) {
      for (Index r = n - 1; r >= 0; --r) {
        if (d2[static_cast<std::size_t>(r)] > 0) {
          pick = r;
          break;
        }
      }
    }
    centers.row(j) = data.row(pick);
    for (Index r = 0; r < n; ++r) {
      d2[static_cast<std::size_t>(r)] =
          std::min(d2[static_cast<std::size_t>(r)],
                   (data.row(r) - centers.row(j)).squaredNorm());
    }
  }
  return centers;
}

struct LloydOutcome {
  std::vector<int> labels;
  MatrixXd centroids;
  double initial_inertia = 0.0;
  double inertia = 0.0;
  int iterations = 0;
};

LloydOutcome lloyd(const MatrixXd& data, MatrixXd centroids,
                   const KMeansOptions& opt) {
  const int k = static_cast<int>(centroids.rows());
  LloydOutcome out;
  std::vector<double> d2;
  auto labels = assign(data, centroids, &d2);
  for (double v : d2) out.initial_inertia += v;

  // Upper bound on reseed rounds once the centroids have settled.
  int settle_rounds = 0;
  for (int iter = 0;; ++iter) {
    MatrixXd next = MatrixXd::Zero(k, data.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Index r = 0; r < data.rows(); ++r) {
      next.row(labels[static_cast<std::size_t>(r)]) += data.row(r);
      ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(r)])];
    }
    bool reseeded = false;
    for (int j = 0; j < k; ++j) {
      if (counts[static_cast<std::size_t>(j)] > 0) {
        next.row(j) /= static_cast<double>(counts[static_cast<std::size_t>(j)]);
        continue;
      }
      auto far = std::max_element(d2.begin(), d2.end());
      auto idx = static_cast<Index>(far - d2.begin());
      next.row(j) = data.row(idx);
      *far = 0.0;
      reseeded = true;
    }
    double shift = 0.0;
    for (int j = 0; j < k; ++j) {
      shift = std::max(shift, (next.row(j) - centroids.row(j)).norm());
    }
    centroids = std::move(next);
    out.iterations = iter + 1;
    labels = assign(data, centroids, &d2);
    const bool converged = shift < opt.tolerance && !reseeded;
    if (converged || iter + 1 >= opt.max_iterations) {
      std::vector<int> counts_final(static_cast<std::size_t>(k), 0);
      for (int l : labels) ++counts_final[static_cast<std::size_t>(l)];
      bool any_empty = std::find(counts_final.begin(), counts_final.end(), 0) !=
                       counts_final.end();
      if (!any_empty || ++settle_rounds > 100) break;
    }
  }
  out.centroids = member_means(data, labels, k);
  out.inertia = inertia_of(data, out.centroids, labels);
  out.labels = std::move(labels);
  return out;
}

}  // namespace

ClusterResult kmeans(const MatrixXd& data, int k, std::uint64_t seed,
                     const KMeansOptions& options) {
  check_inputs(data, k);
  if (distinct_rows(data) < static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::DegenerateData,
                "fewer distinct rows than clusters (k=" + std::to_string(k) + ")");
  }
  std::mt19937_64 rng(seed);
  ClusterResult best;
  best.method = ClusterMethod::KMeans;
  best.seed = seed;
  best.requested_k = k;
  bool have = false;
  std::vector<KMeansRestart> restarts;
  for (int run = 0; run < std::max(1, options.restarts); ++run) {
    auto outcome = lloyd(data, kmeans_plus_plus(data, k, rng), options);
    restarts.push_back(
        {outcome.initial_inertia, outcome.inertia, outcome.iterations});
    if (!have || outcome.inertia < best.inertia) {
      have = true;
      best.labels = std::move(outcome.labels);
      best.inertia = outcome.inertia;
    }
  }
  best.k = canonicalize(best.labels);
  if (best.k != k) {
    throw Error(ErrorCode::DegenerateData, "k-means left a cluster empty");
  }
  best.centroids = member_means(data, best.labels, best.k);
  best.inertia = inertia_of(data, best.centroids, best.labels);
  best.restarts = std::move(restarts);
  return best;
}

// ---------------------------------------------------------------------------
// Gaussian mixture

namespace {

struct Mixture {
  VectorXd weights;
  std::vector<VectorXd> means;
  std::vector<MatrixXd> covariances;
};

void m_step(const MatrixXd& data, const MatrixXd& resp, double reg,
            Mixture& mix) {
  const Index n = data.rows();
  const Index d = data.cols();
  const Index k = resp.cols();
  mix.weights.resize(k);
  mix.means.assign(static_cast<std::size_t>(k), VectorXd::Zero(d));
  mix.covariances.assign(static_cast<std::size_t>(k), MatrixXd::Zero(d, d));
  for (Index j = 0; j < k; ++j) {
    const double nk = resp.col(j).sum();
    const double safe_nk = std::max(nk, 10.0 * std::numeric_limits<double>::epsilon());
    mix.weights(j) = nk / static_cast<double>(n);
    VectorXd mean = (data.transpose() * resp.col(j)) / safe_nk;
    MatrixXd centered = data.rowwise() - mean.transpose();
    MatrixXd cov = (centered.array().colwise() * resp.col(j).array())
                       .matrix()
                       .transpose() *
                   centered / safe_nk;
    cov.diagonal().array() += reg;
    mix.means[static_cast<std::size_t>(j)] = std::move(mean);
    mix.covariances[static_cast<std::size_t>(j)] = std::move(cov);
  }
}

/// Returns the total log-likelihood and fills responsibilities.
double e_step(const MatrixXd& data, const Mixture& mix, MatrixXd& resp) {
  const Index n = data.rows();
  const Index d = data.cols();
  const Index k = static_cast<Index>(mix.means.size());
  MatrixXd log_prob(n, k);
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  for (Index j = 0; j < k; ++j) {
    Eigen::LLT<MatrixXd> llt(mix.covariances[static_cast<std::size_t>(j)]);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::SingularCovariance,
                  "component " + std::to_string(j) +
                      " covariance is not positive definite");
    }
    const MatrixXd& l = llt.matrixL();
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    MatrixXd centered =
        (data.rowwise() - mix.means[static_cast<std::size_t>(j)].transpose())
            .transpose();
    MatrixXd solved = llt.matrixL().solve(centered);
    VectorXd maha = solved.colwise().squaredNorm().transpose();
    const double log_w = mix.weights(j) > 0
                             ? std::log(mix.weights(j))
                             : -std::numeric_limits<double>::infinity();
    log_prob.col(j) =
        (log_w - 0.5 * (static_cast<double>(d) * log_2pi + log_det)) -
        0.5 * maha.array();
  }
  resp.resize(n, k);
  double total = 0.0;
  for (Index r = 0; r < n; ++r) {
    const double m = log_prob.row(r).maxCoeff();
    const double lse = m + std::log((log_prob.row(r).array() - m).exp().sum());
    total += lse;
    resp.row(r) = (log_prob.row(r).array() - lse).exp();
  }
  return total;
}

}  // namespace

ClusterResult gmm_em(const MatrixXd& data, int k, std::uint64_t seed,
                     const GmmOptions& options) {
  check_inputs(data, k);
  const ClusterResult init = kmeans(data, k, seed);
  const Index n = data.rows();
  const Index d = data.cols();

  MatrixXd resp = MatrixXd::Zero(n, k);
  for (Index r = 0; r < n; ++r) resp(r, init.labels[static_cast<std::size_t>(r)]) = 1.0;

  Mixture mix;
  ClusterResult out;
  double previous = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    m_step(data, resp, options.covariance_regularization, mix);
    const double ll = e_step(data, mix, resp);
    out.log_likelihood_trace.push_back(ll);
    if (ll - previous < options.tolerance) break;
    previous = ll;
  }

  out.method = ClusterMethod::Gmm;
  out.seed = seed;
  out.requested_k = k;
  out.labels.resize(static_cast<std::size_t>(n));
  for (Index r = 0; r < n; ++r) {
    Index arg = 0;
    resp.row(r).maxCoeff(&arg);
    out.labels[static_cast<std::size_t>(r)] = static_cast<int>(arg);
  }
  out.k = canonicalize(out.labels);
  if (out.k < 2) {
    throw Error(ErrorCode::DegenerateData,
                "GMM collapsed to a single occupied component");
  }
  out.centroids = member_means(data, out.labels, out.k);
  out.inertia = inertia_of(data, out.centroids, out.labels);
  out.log_likelihood = out.log_likelihood_trace.back();
  const double params = static_cast<double>(k - 1) + static_cast<double>(k * d) +
                        static_cast<double>(k) * static_cast<double>(d * (d + 1)) / 2.0;
  out.bic = -2.0 * *out.log_likelihood + params * std::log(static_cast<double>(n));
  out.responsibilities = std::move(resp);
  return out;
}

// ---------------------------------------------------------------------------
// Spectral

MatrixXd rbf_affinity(const MatrixXd& data, double gamma) {
  const Index n = data.rows();
  MatrixXd a = MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double v = std::exp(-gamma * (data.row(i) - data.row(j)).squaredNorm());
      a(i, j) = v;
      a(j, i) = v;
    }
  }
  return a;
}

MatrixXd normalized_laplacian(const MatrixXd& affinity) {
  const Index n = affinity.rows();
  VectorXd degree = affinity.rowwise().sum();
  for (Index i = 0; i < n; ++i) {
    if (!(degree(i) > 0)) {
      throw Error(ErrorCode::DisconnectedGraph,
                  "row " + std::to_string(i) + " has zero affinity to all others");
    }
  }
  VectorXd inv_sqrt = degree.array().rsqrt();
  MatrixXd lap = -(inv_sqrt.asDiagonal() * affinity * inv_sqrt.asDiagonal());
  lap.diagonal().array() += 1.0;
  return 0.5 * (lap + lap.transpose());
}

ClusterResult spectral(const MatrixXd& data, int k, double gamma,
                       std::uint64_t seed) {
  check_inputs(data, k);
  if (!(gamma > 0)) {
    throw Error(ErrorCode::DegenerateData, "spectral gamma must be positive");
  }
  const MatrixXd lap = normalized_laplacian(rbf_affinity(data, gamma));
  const auto eig = jacobi_eigen(lap);
  MatrixXd embedding = eig.vectors.leftCols(k);
  for (Index r = 0; r < embedding.rows(); ++r) {
    const double norm = embedding.row(r).norm();
    if (norm > 0) embedding.row(r) /= norm;
  }
  ClusterResult inner = kmeans(embedding, k, seed);
  ClusterResult out;
  out.method = ClusterMethod::Spectral;
  out.seed = seed;
  out.requested_k = k;
  out.labels = std::move(inner.labels);
  out.k = inner.k;
  out.centroids = member_means(data, out.labels, out.k);
  out.inertia = inertia_of(data, out.centroids, out.labels);
  out.restarts = std::move(inner.restarts);
  out.gamma = gamma;
  out.laplacian_eigenvalues = eig.values;
  return out;
}

// ---------------------------------------------------------------------------
// Quality metrics

namespace {

std::map<int, std::vector<Index>> groups_of(const std::vector<int>& labels,
                                            Index rows) {
  if (static_cast<Index>(labels.size()) != rows) {
    throw Error(ErrorCode::DegenerateData, "label count does not match rows");
  }
  std::map<int, std::vector<Index>> groups;
  for (Index r = 0; r < rows; ++r) groups[labels[static_cast<std::size_t>(r)]].push_back(r);
  if (groups.size() < 2) {
    throw Error(ErrorCode::SingleCluster, "all rows share one label");
  }
  return groups;
}

}  // namespace

double silhouette(const MatrixXd& data, const std::vector<int>& labels) {
  const auto groups = groups_of(labels, data.rows());
  const Index n = data.rows();
  MatrixXd dist(n, n);
  for (Index i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (Index j = i + 1; j < n; ++j) {
      dist(i, j) = dist(j, i) = (data.row(i) - data.row(j)).norm();
    }
  }
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    const int own = labels[static_cast<std::size_t>(i)];
    const auto& mates = groups.at(own);
    if (mates.size() == 1) continue;
    double a = 0.0;
    for (Index j : mates) a += dist(i, j);
    a /= static_cast<double>(mates.size() - 1);
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [label, members] : groups) {
      if (label == own) continue;
      double mean = 0.0;
      for (Index j : members) mean += dist(i, j);
      b = std::min(b, mean / static_cast<double>(members.size()));
    }
    const double denom = std::max(a, b);
    if (denom > 0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

double within_cluster_variance(const MatrixXd& data,
                               const std::vector<int>& labels) {
  const auto groups = groups_of(labels, data.rows());
  double total = 0.0;
  for (const auto& [label, members] : groups) {
    if (members.size() < 2) continue;
    MatrixXd sub(static_cast<Index>(members.size()), data.cols());
    for (std::size_t i = 0; i < members.size(); ++i) {
      sub.row(static_cast<Index>(i)) = data.row(members[i]);
    }
    const Eigen::RowVectorXd mean = sub.colwise().mean();
    const Eigen::RowVectorXd var =
        (sub.rowwise() - mean).array().square().colwise().sum() /
        static_cast<double>(members.size() - 1);
    total += var.mean();
  }
  return total / static_cast<double>(groups.size());
}

std::vector<AnovaResult> anova_per_feature(
    const MatrixXd& data, const std::vector<int>& labels,
    const std::vector<std::string>& feature_names) {
  const auto groups = groups_of(labels, data.rows());
  const auto n = static_cast<double>(data.rows());
  const auto k = static_cast<double>(groups.size());
  if (n <= k) {
    throw Error(ErrorCode::DegenerateData, "ANOVA needs more rows than groups");
  }
  std::vector<AnovaResult> out;
  for (Index c = 0; c < data.cols(); ++c) {
    AnovaResult res;
    res.feature = static_cast<std::size_t>(c) < feature_names.size()
                      ? feature_names[static_cast<std::size_t>(c)]
                      : "feature_" + std::to_string(c);
    const double grand = data.col(c).mean();
    double ssb = 0.0;
    double ssw = 0.0;
    for (const auto& [label, members] : groups) {
      double mean = 0.0;
      for (Index r : members) mean += data(r, c);
      mean /= static_cast<double>(members.size());
      ssb += static_cast<double>(members.size()) * (mean - grand) * (mean - grand);
      for (Index r : members) ssw += (data(r, c) - mean) * (data(r, c) - mean);
    }
    const double sst = ssb + ssw;
    if (sst <= 1e-300) {
      res.f_statistic = 0.0;
      res.p_value = 1.0;
    } else if (ssw <= 1e-14 * sst) {
      res.f_statistic = std::numeric_limits<double>::infinity();
      res.p_value = kAnovaPFloor;
      res.zero_within_variance = true;
    } else {
      const double msb = ssb / (k - 1.0);
      const double msw = ssw / (n - k);
      res.f_statistic = msb / msw;
      res.p_value = std::max(f_distribution_sf(res.f_statistic, k - 1.0, n - k),
                             std::numeric_limits<double>::min());
    }
    out.push_back(std::move(res));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const AnovaResult& a, const AnovaResult& b) {
                     return a.f_statistic > b.f_statistic;
                   });
  return out;
}

// ---------------------------------------------------------------------------
// Model selection

std::uint64_t run_seed(std::uint64_t seed, ClusterMethod method, int k) {
  // FNV-1a over "method:k"; stable across platforms and schedules.
  std::uint64_t h = 1469598103934665603ULL;
  std::string key = std::string(to_string(method)) + ":" + std::to_string(k);
  for (unsigned char ch : key) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return seed + h;
}

ModelSelection select_model(const MatrixXd& data, ClusterMethod method,
                            std::uint64_t seed, const SelectOptions& options) {
  if (options.k_min < 2 || options.k_max < options.k_min) {
    throw Error(ErrorCode::ConfigError, "k range must satisfy 2 <= k_min <= k_max");
  }
  auto run_one = [&](int k) {
    const std::uint64_t s = run_seed(seed, method, k);
    switch (method) {
      case ClusterMethod::KMeans: return kmeans(data, k, s);
      case ClusterMethod::Gmm: return gmm_em(data, k, s);
      case ClusterMethod::Spectral: return spectral(data, k, options.gamma, s);
    }
    return kmeans(data, k, s);
  };

  using Outcome = std::pair<std::optional<ClusterResult>, std::exception_ptr>;
  auto attempt = [&](int k) -> Outcome {
    try {
      return {run_one(k), nullptr};
    } catch (const Error& e) {
      if (e.code() == ErrorCode::DegenerateData ||
          e.code() == ErrorCode::SingularCovariance ||
          e.code() == ErrorCode::DisconnectedGraph) {
        return {std::nullopt, std::current_exception()};
      }
      throw;
    }
  };

  std::vector<Outcome> outcomes;
  if (options.jobs > 1) {
    std::vector<std::future<Outcome>> futures;
    for (int k = options.k_min; k <= options.k_max; ++k) {
      futures.push_back(std::async(std::launch::async, attempt, k));
    }
    for (auto& f : futures) outcomes.push_back(f.get());
  } else {
    for (int k = options.k_min; k <= options.k_max; ++k) outcomes.push_back(attempt(k));
  }

  ModelSelection sel;
  std::optional<ClusterResult> best;
  std::exception_ptr last_error;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const int k = options.k_min + static_cast<int>(i);
    auto& [result, error] = outcomes[i];
    if (!result) {
      last_error = error;
      try {
        std::rethrow_exception(error);
      } catch (const Error& e) {
        sel.skipped.emplace_back(k, e.what());
      }
      continue;
    }
    QualityMetrics q;
    q.method = method;
    q.k = result->k;
    q.avg_within_cluster_variance = within_cluster_variance(data, result->labels);
    q.silhouette = silhouette(data, result->labels);
    sel.table.push_back(q);
    if (!best || q.silhouette > sel.best_quality.silhouette) {
      best = std::move(*result);
      sel.best_quality = q;
    }
  }
  if (!best) std::rethrow_exception(last_error);
  sel.best = std::move(*best);
  return sel;
}

std::vector<Outlier> detect_outliers(const MatrixXd& data,
                                     const ClusterResult& result,
                                     const std::vector<std::string>& student_ids) {
  const Index n = data.rows();
  std::vector<double> d(static_cast<std::size_t>(n));
  double mean = 0.0;
  for (Index r = 0; r < n; ++r) {
    d[static_cast<std::size_t>(r)] =
        (data.row(r) - result.centroids.row(result.labels[static_cast<std::size_t>(r)]))
            .norm();
    mean += d[static_cast<std::size_t>(r)];
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : d) var += (v - mean) * (v - mean);
  const double threshold = mean + 2.0 * std::sqrt(var / static_cast<double>(n));
  std::vector<Outlier> out;
  for (Index r = 0; r < n; ++r) {
    if (d[static_cast<std::size_t>(r)] > threshold) {
      out.push_back({student_ids.at(static_cast<std::size_t>(r)),
                     result.labels[static_cast<std::size_t>(r)],
                     d[static_cast<std::size_t>(r)]});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Profiles and exports

std::string_view to_string(ProfileTag tag) {
  switch (tag) {
    case ProfileTag::VeryLow: return "very_low";
    case ProfileTag::Low: return "low";
    case ProfileTag::Average: return "average";
    case ProfileTag::High: return "high";
    case ProfileTag::VeryHigh: return "very_high";
  }
  return "average";
}

ProfileTag tag_for(double z) {
  if (z < -1.0) return ProfileTag::VeryLow;
  if (z < -0.33) return ProfileTag::Low;
  if (z <= 0.33) return ProfileTag::Average;
  if (z <= 1.0) return ProfileTag::High;
  return ProfileTag::VeryHigh;
}

std::vector<ClusterProfile> cluster_profile(
    const ClusterResult& result, const std::vector<std::string>& student_ids) {
  std::vector<ClusterProfile> profiles(static_cast<std::size_t>(result.k));
  for (int c = 0; c < result.k; ++c) {
    auto& p = profiles[static_cast<std::size_t>(c)];
    p.cluster = c;
    for (Index j = 0; j < result.centroids.cols(); ++j) {
      p.centroid_z.push_back(result.centroids(c, j));
      p.tags.push_back(tag_for(result.centroids(c, j)));
    }
  }
  for (std::size_t r = 0; r < result.labels.size(); ++r) {
    profiles[static_cast<std::size_t>(result.labels[r])].members.push_back(
        student_ids.at(r));
  }
  return profiles;
}

std::string heatmap_csv(const std::vector<ClusterProfile>& profiles,
                        const std::vector<std::string>& feature_names) {
  std::string out = "cluster";
  for (const auto& f : feature_names) out += "," + csv_escape(f);
  out += '\n';
  for (const auto& p : profiles) {
    out += std::to_string(p.cluster);
    for (double z : p.centroid_z) out += "," + format_double(z);
    out += '\n';
  }
  return out;
}

std::string quality_csv(const std::vector<QualityMetrics>& rows) {
  std::string out = "method,k,avg_within_cluster_variance,silhouette\n";
  for (const auto& q : rows) {
    out += std::string(to_string(q.method)) + "," + std::to_string(q.k) + "," +
           format_double(q.avg_within_cluster_variance) + "," +
           format_double(q.silhouette) + "\n";
  }
  return out;
}

std::string anova_csv(const std::vector<AnovaResult>& rows) {
  std::string out = "feature,F,p\n";
  for (const auto& a : rows) {
    out += csv_escape(a.feature) + "," + format_double(a.f_statistic) + "," +
           (a.zero_within_variance ? std::string("<0.001") : format_double(a.p_value)) +
           "\n";
  }
  return out;
}

nlohmann::ordered_json clusters_to_json(
    const ClusterResult& result, const std::vector<std::string>& student_ids,
    const std::vector<std::string>& feature_names,
    const std::vector<ClusterProfile>& profiles,
    const std::vector<Outlier>& outliers) {
  nlohmann::ordered_json j;
  j["method"] = std::string(to_string(result.method));
  j["k"] = result.k;
  j["requested_k"] = result.requested_k;
  j["seed"] = result.seed;
  j["feature_names"] = feature_names;
  auto& labels = j["labels"] = nlohmann::ordered_json::object();
  for (std::size_t r = 0; r < result.labels.size(); ++r) {
    labels[student_ids.at(r)] = result.labels[r];
  }
  auto& cents = j["centroids"] = nlohmann::ordered_json::array();
  for (Index c = 0; c < result.centroids.rows(); ++c) {
    std::vector<double> row;
    for (Index f = 0; f < result.centroids.cols(); ++f) row.push_back(result.centroids(c, f));
    cents.push_back(row);
  }
  auto& profs = j["profiles"] = nlohmann::ordered_json::array();
  for (const auto& p : profiles) {
    nlohmann::ordered_json pj;
    pj["cluster"] = p.cluster;
    pj["members"] = p.members;
    pj["centroid_z"] = p.centroid_z;
    std::vector<std::string> tags;
    for (auto t : p.tags) tags.emplace_back(to_string(t));
    pj["tags"] = tags;
    profs.push_back(std::move(pj));
  }
  auto& outs = j["outliers"] = nlohmann::ordered_json::array();
  for (const auto& o : outliers) {
    outs.push_back({{"student_id", o.student_id},
                    {"cluster", o.cluster},
                    {"distance", o.distance}});
  }
  auto& extras = j["extras"] = nlohmann::ordered_json::object();
  extras["inertia"] = result.inertia;
  if (result.log_likelihood) extras["log_likelihood"] = *result.log_likelihood;
  if (result.bic) extras["bic"] = *result.bic;
  if (result.gamma) extras["gamma"] = *result.gamma;
  return j;
}

}  // namespace readlens

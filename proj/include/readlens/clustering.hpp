#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace readlens {

enum class ClusterMethod { KMeans, Gmm, Spectral };

std::string_view to_string(ClusterMethod method);
std::optional<ClusterMethod> parse_cluster_method(std::string_view text);

struct KMeansRestart {
  double initial_inertia = 0.0;
  double final_inertia = 0.0;
  int iterations = 0;
};

struct ClusterResult {
  ClusterMethod method = ClusterMethod::KMeans;
  int k = 0;
  /// Cluster index per row, canonicalized by first appearance.
  std::vector<int> labels;
  /// k x d; row i is the mean of the rows labeled i.
  Eigen::MatrixXd centroids;
  std::uint64_t seed = 0;
  int requested_k = 0;

  // k-means (also the embedding run inside spectral)
  double inertia = 0.0;
  std::vector<KMeansRestart> restarts;

  // GMM
  std::optional<double> log_likelihood;
  std::optional<double> bic;
  std::vector<double> log_likelihood_trace;
  Eigen::MatrixXd responsibilities;

  // spectral
  std::optional<double> gamma;
  Eigen::VectorXd laplacian_eigenvalues;
};

struct KMeansOptions {
  int restarts = 10;
  int max_iterations = 300;
  double tolerance = 1e-6;
};

/// k-means++ seeding, Lloyd iterations, best of `restarts` by inertia. An
/// empty cluster is reseeded at the point farthest from its centroid. Throws
/// DegenerateData when there are fewer than k distinct rows, N <= k, or the
/// data is not finite.
ClusterResult kmeans(const Eigen::MatrixXd& data, int k, std::uint64_t seed,
                     const KMeansOptions& options = {});

struct GmmOptions {
  double covariance_regularization = 1e-6;
  double tolerance = 1e-4;
  int max_iterations = 500;
};

/// Full-covariance EM initialized from k-means. Labels are the argmax
/// responsibility; components that win no row are dropped from the labeling,
/// so `k` may be below `requested_k`.
ClusterResult gmm_em(const Eigen::MatrixXd& data, int k, std::uint64_t seed,
                     const GmmOptions& options = {});

/// exp(-gamma * |xi - xj|^2) off the diagonal, zero on it.
Eigen::MatrixXd rbf_affinity(const Eigen::MatrixXd& data, double gamma);
/// I - D^-1/2 A D^-1/2. Throws DisconnectedGraph on a zero degree.
Eigen::MatrixXd normalized_laplacian(const Eigen::MatrixXd& affinity);

ClusterResult spectral(const Eigen::MatrixXd& data, int k, double gamma,
                       std::uint64_t seed);

/// Mean silhouette over all rows; singleton clusters contribute 0.
double silhouette(const Eigen::MatrixXd& data, const std::vector<int>& labels);

/// Per-cluster mean over features of the sample variance (ddof 1), averaged
/// over clusters with equal weight.
double within_cluster_variance(const Eigen::MatrixXd& data,
                               const std::vector<int>& labels);

struct AnovaResult {
  std::string feature;
  double f_statistic = 0.0;
  double p_value = 1.0;
  /// Set when within-group variance is zero: F is +inf and p_value holds the
  /// 0.001 reporting bound.
  bool zero_within_variance = false;
};

inline constexpr double kAnovaPFloor = 0.001;

/// One-way ANOVA per column across the label groups, sorted by descending F.
std::vector<AnovaResult> anova_per_feature(
    const Eigen::MatrixXd& data, const std::vector<int>& labels,
    const std::vector<std::string>& feature_names);

struct QualityMetrics {
  ClusterMethod method = ClusterMethod::KMeans;
  int k = 0;
  double avg_within_cluster_variance = 0.0;
  double silhouette = 0.0;
};

struct SelectOptions {
  int k_min = 2;
  int k_max = 8;
  double gamma = 1.0;
  int jobs = 1;
};

struct ModelSelection {
  ClusterResult best;
  QualityMetrics best_quality;
  /// One row per k that produced a valid clustering.
  std::vector<QualityMetrics> table;
  /// k values skipped because the method could not fit them.
  std::vector<std::pair<int, std::string>> skipped;
};

/// Seed used for one (method, k) run of a sweep.
std::uint64_t run_seed(std::uint64_t seed, ClusterMethod method, int k);

/// Runs `method` for every k in range and keeps the one with the highest
/// silhouette (smaller k on ties). A k whose fit raises DegenerateData,
/// SingularCovariance or DisconnectedGraph is skipped; when every k fails the
/// last error propagates.
ModelSelection select_model(const Eigen::MatrixXd& data, ClusterMethod method,
                            std::uint64_t seed, const SelectOptions& options = {});

struct Outlier {
  std::string student_id;
  int cluster = 0;
  double distance = 0.0;
};

/// Rows whose distance to their centroid exceeds mean + 2 std (population).
std::vector<Outlier> detect_outliers(const Eigen::MatrixXd& data,
                                     const ClusterResult& result,
                                     const std::vector<std::string>& student_ids);

enum class ProfileTag { VeryLow, Low, Average, High, VeryHigh };
std::string_view to_string(ProfileTag tag);
ProfileTag tag_for(double z);

struct ClusterProfile {
  int cluster = 0;
  std::vector<std::string> members;
  std::vector<double> centroid_z;
  std::vector<ProfileTag> tags;
};

std::vector<ClusterProfile> cluster_profile(
    const ClusterResult& result, const std::vector<std::string>& student_ids);

std::string heatmap_csv(const std::vector<ClusterProfile>& profiles,
                        const std::vector<std::string>& feature_names);
std::string quality_csv(const std::vector<QualityMetrics>& rows);
std::string anova_csv(const std::vector<AnovaResult>& rows);

nlohmann::ordered_json clusters_to_json(
    const ClusterResult& result, const std::vector<std::string>& student_ids,
    const std::vector<std::string>& feature_names,
    const std::vector<ClusterProfile>& profiles,
    const std::vector<Outlier>& outliers);

}  // namespace readlens

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "readlens/agents.hpp"
#include "readlens/clustering.hpp"
#include "readlens/gaze_events.hpp"
#include "readlens/ingest.hpp"

namespace readlens {

struct PipelinePaths {
  std::filesystem::path gaze_dir;
  std::filesystem::path timelines_dir;
  std::filesystem::path aoi_layout;
  std::filesystem::path responses;
  std::filesystem::path assessment;
  std::filesystem::path out_dir;
  /// Empty selects the built-in curator template.
  std::filesystem::path curator_template;
};

struct LlmSettings {
  bool mock = false;
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4o";
  std::string api_key_env = "LLM_API_KEY";
  double timeout_s = 60.0;
  int report_retries = 3;
  int evaluation_runs = 5;
  int max_in_flight = 2;
  double curator_temperature = 0.7;
  double evaluator_temperature = 0.2;
};

struct PipelineConfig {
  PipelinePaths paths;
  ScreenGeometry screen;
  IvtParams ivt;
  std::uint64_t seed = 7;
  int k_min = 2;
  int k_max = 8;
  double gamma = 1.0;
  /// kmeans, gmm, spectral or all.
  std::string method = "kmeans";
  /// 0 means one worker per logical core.
  int jobs = 0;
  LlmSettings llm;

  std::vector<ClusterMethod> methods() const;
  /// The method whose best model feeds ANOVA, profiles and the report.
  ClusterMethod report_method() const;
  int worker_count() const;
  void validate() const;
};

/// Relative paths resolve against the config file's directory. Throws
/// ConfigError on a bad value and IoError when the file cannot be read.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig config_from_json(const nlohmann::json& doc,
                                const std::filesystem::path& base_dir);

/// Output file names inside out_dir.
namespace artifacts {
inline constexpr const char* kFixationsDir = "fixations";
inline constexpr const char* kFeaturesRaw = "features_raw.csv";
inline constexpr const char* kFeaturesNorm = "features_norm.csv";
inline constexpr const char* kImputations = "imputations.csv";
inline constexpr const char* kQuality = "cluster_quality.csv";
inline constexpr const char* kSweep = "cluster_sweep.csv";
inline constexpr const char* kAnova = "anova.csv";
inline constexpr const char* kClusters = "clusters.json";
inline constexpr const char* kHeatmap = "heatmap.csv";
inline constexpr const char* kPrompt = "prompt.json";
inline constexpr const char* kReport = "report.md";
inline constexpr const char* kEvaluations = "evaluations.json";
}  // namespace artifacts

/// Each stage reads the previous stage's files from out_dir and writes its
/// own; `log` receives progress and warnings.
void stage_fixations(const PipelineConfig& cfg, std::ostream& log);
void stage_features(const PipelineConfig& cfg, std::ostream& log);
void stage_cluster(const PipelineConfig& cfg, std::ostream& log);
void stage_report(const PipelineConfig& cfg, LlmBackend& backend, std::ostream& log);
void stage_evaluate(const PipelineConfig& cfg, LlmBackend& backend, std::ostream& log);

/// MockBackend when cfg.llm.mock, else the HTTP client keyed from the
/// configured environment variable (ConfigError when unset).
std::unique_ptr<LlmBackend> make_backend(const PipelineConfig& cfg);

/// Command-line entry point. Returns 0 on success, 1 on a typed pipeline
/// error and 2 on configuration or I/O errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace readlens

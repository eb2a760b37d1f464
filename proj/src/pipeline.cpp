#include "readlens/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "readlens/aoi.hpp"
#include "readlens/error.hpp"
#include "readlens/features.hpp"
#include "readlens/fixture.hpp"
#include "readlens/format.hpp"
#include "readlens/llm_backend.hpp"

namespace readlens {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// config

std::vector<ClusterMethod> PipelineConfig::methods() const {
  if (method == "all") {
    return {ClusterMethod::KMeans, ClusterMethod::Gmm, ClusterMethod::Spectral};
  }
  auto m = parse_cluster_method(method);
  if (!m) throw Error(ErrorCode::ConfigError, "unknown clustering method '" + method + "'");
  return {*m};
}

ClusterMethod PipelineConfig::report_method() const {
  return method == "all" ? ClusterMethod::KMeans : methods().front();
}

int PipelineConfig::worker_count() const {
  if (jobs > 0) return jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

void PipelineConfig::validate() const {
  screen.validate();
  ivt.validate();
  (void)methods();
  if (k_min < 2 || k_max < k_min) {
    throw Error(ErrorCode::ConfigError, "k range must satisfy 2 <= k_min <= k_max");
  }
  if (!(gamma > 0.0)) throw Error(ErrorCode::ConfigError, "gamma must be positive");
  if (jobs < 0) throw Error(ErrorCode::ConfigError, "jobs must be >= 0");
  if (llm.evaluation_runs < 1) {
    throw Error(ErrorCode::ConfigError, "evaluation_runs must be >= 1");
  }
  if (llm.report_retries < 0) throw Error(ErrorCode::ConfigError, "report_retries must be >= 0");
  if (llm.max_in_flight < 1) throw Error(ErrorCode::ConfigError, "max_in_flight must be >= 1");
}

namespace {

template <typename T>
void read_opt(const nlohmann::json& obj, const char* key, T& out, const std::string& ctx) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::ConfigError, ctx + "." + key + " has the wrong type");
  }
}

const nlohmann::json& section(const nlohmann::json& doc, const char* key) {
  static const nlohmann::json empty = nlohmann::json::object();
  if (!doc.contains(key)) return empty;
  if (!doc.at(key).is_object()) {
    throw Error(ErrorCode::ConfigError, std::string(key) + " must be an object");
  }
  return doc.at(key);
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

}  // namespace

PipelineConfig config_from_json(const nlohmann::json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
  PipelineConfig cfg;

  const auto& paths = section(doc, "paths");
  auto path_of = [&](const char* key, bool required, const char* fallback) {
    std::string v = fallback;
    if (required && !paths.contains(key)) {
      throw Error(ErrorCode::ConfigError, std::string("paths.") + key + " is required");
    }
    read_opt(paths, key, v, "paths");
    return resolve(base_dir, v);
  };
  cfg.paths.gaze_dir = path_of("gaze_dir", true, "");
  cfg.paths.timelines_dir = path_of("timelines_dir", true, "");
  cfg.paths.aoi_layout = path_of("aoi_layout", true, "");
  cfg.paths.responses = path_of("responses", true, "");
  cfg.paths.assessment = path_of("assessment", true, "");
  cfg.paths.out_dir = path_of("out_dir", false, "out");
  cfg.paths.curator_template = path_of("curator_template", false, "");

  const auto& screen = section(doc, "screen");
  read_opt(screen, "width_cm", cfg.screen.width_cm, "screen");
  read_opt(screen, "height_cm", cfg.screen.height_cm, "screen");
  read_opt(screen, "width_px", cfg.screen.width_px, "screen");
  read_opt(screen, "height_px", cfg.screen.height_px, "screen");
  read_opt(screen, "viewing_distance_cm", cfg.screen.viewing_distance_cm, "screen");

  const auto& ivt = section(doc, "ivt");
  read_opt(ivt, "velocity_threshold_deg_s", cfg.ivt.velocity_threshold_deg_s, "ivt");
  read_opt(ivt, "velocity_window_ms", cfg.ivt.velocity_window_ms, "ivt");
  read_opt(ivt, "gap_fill_max_ms", cfg.ivt.gap_fill_max_ms, "ivt");
  read_opt(ivt, "merge_max_gap_ms", cfg.ivt.merge_max_gap_ms, "ivt");
  read_opt(ivt, "merge_max_angle_deg", cfg.ivt.merge_max_angle_deg, "ivt");
  read_opt(ivt, "min_fixation_duration_ms", cfg.ivt.min_fixation_duration_ms, "ivt");
  read_opt(ivt, "noise_filter_samples", cfg.ivt.noise_filter_samples, "ivt");

  const auto& cl = section(doc, "clustering");
  read_opt(cl, "seed", cfg.seed, "clustering");
  read_opt(cl, "k_min", cfg.k_min, "clustering");
  read_opt(cl, "k_max", cfg.k_max, "clustering");
  read_opt(cl, "gamma", cfg.gamma, "clustering");
  read_opt(cl, "method", cfg.method, "clustering");
  read_opt(doc, "jobs", cfg.jobs, "config");

  const auto& llm = section(doc, "llm");
  read_opt(llm, "mock", cfg.llm.mock, "llm");
  read_opt(llm, "base_url", cfg.llm.base_url, "llm");
  read_opt(llm, "model", cfg.llm.model, "llm");
  read_opt(llm, "api_key_env", cfg.llm.api_key_env, "llm");
  read_opt(llm, "timeout_s", cfg.llm.timeout_s, "llm");
  read_opt(llm, "report_retries", cfg.llm.report_retries, "llm");
  read_opt(llm, "evaluation_runs", cfg.llm.evaluation_runs, "llm");
  read_opt(llm, "max_in_flight", cfg.llm.max_in_flight, "llm");
  read_opt(llm, "curator_temperature", cfg.llm.curator_temperature, "llm");
  read_opt(llm, "evaluator_temperature", cfg.llm.evaluator_temperature, "llm");

  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const fs::path& path) {
  nlohmann::json doc;
  try {
    doc = read_json_file(path);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SchemaError) throw Error(ErrorCode::ConfigError, e.what());
    throw;
  }
  return config_from_json(doc, path.parent_path());
}

// ---------------------------------------------------------------------------
// helpers

namespace {

void require_dir(const fs::path& dir, const char* what) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::IoError, std::string(what) + " not found: " + dir.string());
  }
}

void require_file(const fs::path& file, const char* what) {
  if (!fs::is_regular_file(file)) {
    throw Error(ErrorCode::IoError, std::string(what) + " not found: " + file.string());
  }
}

/// Stems of `dir/*ext`, sorted.
std::vector<std::string> ids_in(const fs::path& dir, const std::string& ext) {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ext) {
      ids.push_back(entry.path().stem().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The error of the
/// lowest failing index is rethrown, so failures do not depend on scheduling.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  auto guarded = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, workers)), n);
  if (count <= 1) {
    for (std::size_t i = 0; i < n; ++i) guarded(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < count; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) guarded(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

fs::path out_path(const PipelineConfig& cfg, const char* name) {
  return cfg.paths.out_dir / name;
}

SessionTimeline load_timeline(const PipelineConfig& cfg, const std::string& id) {
  const auto path = cfg.paths.timelines_dir / (id + ".json");
  require_file(path, "timeline");
  auto tl = parse_session_events(path);
  if (tl.student_id != id) {
    throw Error(ErrorCode::SchemaError,
                path.string() + " is for student " + tl.student_id + ", expected " + id);
  }
  return tl;
}

std::vector<ClusterProfile> profiles_from_json(const nlohmann::json& j) {
  std::vector<ClusterProfile> out;
  for (const auto& p : j.at("profiles")) {
    ClusterProfile cp;
    cp.cluster = p.at("cluster").get<int>();
    cp.members = p.at("members").get<std::vector<std::string>>();
    cp.centroid_z = p.at("centroid_z").get<std::vector<double>>();
    for (double z : cp.centroid_z) cp.tags.push_back(tag_for(z));
    out.push_back(std::move(cp));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// stages

void stage_fixations(const PipelineConfig& cfg, std::ostream& log) {
  require_dir(cfg.paths.gaze_dir, "gaze directory");
  require_dir(cfg.paths.timelines_dir, "timelines directory");
  require_file(cfg.paths.aoi_layout, "AOI layout");
  const auto layout = parse_aoi_layout(cfg.paths.aoi_layout);
  const auto ids = ids_in(cfg.paths.gaze_dir, ".csv");
  if (ids.empty()) {
    throw Error(ErrorCode::EmptyCohort, "no gaze logs in " + cfg.paths.gaze_dir.string());
  }
  const auto dir = cfg.paths.out_dir / artifacts::kFixationsDir;
  fs::create_directories(dir);

  std::vector<std::size_t> counts(ids.size());
  std::vector<std::string> notes(ids.size());
  parallel_for(ids.size(), cfg.worker_count(), [&](std::size_t i) {
    const auto& id = ids[i];
    const auto timeline = load_timeline(cfg, id);
    const auto samples = parse_gaze_log(cfg.paths.gaze_dir / (id + ".csv"), cfg.screen);
    std::vector<Fixation> fixations;
    try {
      fixations = detect_fixations_ivt(fill_gaps(samples, cfg.ivt.gap_fill_max_ms),
                                       cfg.ivt, cfg.screen);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InsufficientData) throw;
      notes[i] = "student " + id + ": " + e.what();
    }
    const auto encoded = encode_fixations(fixations, layout, timeline);
    counts[i] = encoded.size();
    write_text_file(dir / (id + ".csv"), serialize_fixations(encoded));
  });

  std::size_t total = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    total += counts[i];
    if (!notes[i].empty()) log << "warning: " << notes[i] << "\n";
  }
  log << "fixations: " << ids.size() << " students, " << total << " fixations\n";
}

void stage_features(const PipelineConfig& cfg, std::ostream& log) {
  const auto dir = cfg.paths.out_dir / artifacts::kFixationsDir;
  require_dir(dir, "fixation directory (run the fixations stage first)");
  require_file(cfg.paths.aoi_layout, "AOI layout");
  const auto layout = parse_aoi_layout(cfg.paths.aoi_layout);
  const auto ids = ids_in(dir, ".csv");
  if (ids.empty()) throw Error(ErrorCode::EmptyCohort, "no fixation files in " + dir.string());

  std::vector<FeatureVector> vectors(ids.size());
  parallel_for(ids.size(), cfg.worker_count(), [&](std::size_t i) {
    const auto timeline = load_timeline(cfg, ids[i]);
    const auto fixations = parse_fixations(dir / (ids[i] + ".csv"));
    vectors[i] = compute_student_features(ids[i], fixations, layout, timeline, cfg.screen);
  });

  const auto raw = build_feature_matrix(vectors);
  const auto norm = standardize(raw);
  write_text_file(out_path(cfg, artifacts::kFeaturesRaw), serialize_feature_matrix(raw));
  write_text_file(out_path(cfg, artifacts::kFeaturesNorm), serialize_feature_matrix(norm));
  std::string imputed = "student_id,feature,value\n";
  for (const auto& im : raw.imputations) {
    imputed += csv_escape(im.student_id) + "," + csv_escape(im.feature) + "," +
               format_double(im.value) + "\n";
  }
  write_text_file(out_path(cfg, artifacts::kImputations), imputed);
  for (const auto& w : raw.warnings) log << "warning: " << w << "\n";
  for (const auto& w : norm.warnings) log << "warning: " << w << "\n";
  log << "features: " << raw.rows() << " students, " << raw.imputations.size()
      << " imputed values\n";
}

void stage_cluster(const PipelineConfig& cfg, std::ostream& log) {
  const auto norm_path = out_path(cfg, artifacts::kFeaturesNorm);
  require_file(norm_path, "standardized features (run the features stage first)");
  const auto norm = parse_feature_matrix(norm_path, true);
  const Eigen::MatrixXd& data = norm.values;
  const int n = static_cast<int>(norm.rows());

  SelectOptions sel;
  sel.k_min = cfg.k_min;
  sel.k_max = std::min(cfg.k_max, n - 1);
  sel.gamma = cfg.gamma;
  sel.jobs = cfg.worker_count();
  if (sel.k_max < sel.k_min) {
    throw Error(ErrorCode::DegenerateData,
                std::to_string(n) + " students are too few for k >= " +
                    std::to_string(cfg.k_min));
  }
  if (sel.k_max < cfg.k_max) {
    log << "warning: k_max lowered to " << sel.k_max << " for " << n << " students\n";
  }

  std::vector<QualityMetrics> best_rows;
  std::vector<QualityMetrics> sweep;
  std::optional<ModelSelection> reported;
  for (auto method : cfg.methods()) {
    auto selection = select_model(data, method, cfg.seed, sel);
    for (const auto& [k, why] : selection.skipped) {
      log << "warning: " << to_string(method) << " k=" << k << " skipped: " << why << "\n";
    }
    best_rows.push_back(selection.best_quality);
    sweep.insert(sweep.end(), selection.table.begin(), selection.table.end());
    if (method == cfg.report_method()) reported = std::move(selection);
  }

  const auto& best = reported->best;
  const auto anova = anova_per_feature(data, best.labels, norm.feature_names);
  const auto outliers = detect_outliers(data, best, norm.student_ids);
  const auto profiles = cluster_profile(best, norm.student_ids);

  write_text_file(out_path(cfg, artifacts::kQuality), quality_csv(best_rows));
  write_text_file(out_path(cfg, artifacts::kSweep), quality_csv(sweep));
  write_text_file(out_path(cfg, artifacts::kAnova), anova_csv(anova));
  write_text_file(out_path(cfg, artifacts::kHeatmap),
                  heatmap_csv(profiles, norm.feature_names));
  auto j = clusters_to_json(best, norm.student_ids, norm.feature_names, profiles, outliers);
  const auto& q = reported->best_quality;
  j["quality"] = {{"method", std::string(to_string(q.method))},
                  {"k", q.k},
                  {"avg_within_cluster_variance", q.avg_within_cluster_variance},
                  {"silhouette", q.silhouette}};
  write_text_file(out_path(cfg, artifacts::kClusters), j.dump(2) + "\n");
  log << "cluster: " << to_string(best.method) << " k=" << best.k << " silhouette "
      << format_fixed(q.silhouette, 3) << ", " << outliers.size() << " outliers\n";
}

std::unique_ptr<LlmBackend> make_backend(const PipelineConfig& cfg) {
  if (cfg.llm.mock) return std::make_unique<MockBackend>();
  HttpBackendConfig http;
  http.base_url = cfg.llm.base_url;
  http.model = cfg.llm.model;
  http.timeout_s = cfg.llm.timeout_s;
  const char* key = std::getenv(cfg.llm.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw Error(ErrorCode::ConfigError,
                "environment variable " + cfg.llm.api_key_env +
                    " is not set (or pass --mock-llm)");
  }
  http.api_key = key;
  return std::make_unique<HttpChatBackend>(std::move(http));
}

void stage_report(const PipelineConfig& cfg, LlmBackend& backend, std::ostream& log) {
  const auto clusters_path = out_path(cfg, artifacts::kClusters);
  require_file(clusters_path, "clusters.json (run the cluster stage first)");
  require_file(cfg.paths.assessment, "assessment");
  require_file(cfg.paths.responses, "responses");
  const auto clusters = read_json_file(clusters_path);
  const auto assessment = parse_assessment(cfg.paths.assessment);
  const auto responses = parse_responses(cfg.paths.responses);

  std::vector<Outlier> outliers;
  for (const auto& o : clusters.at("outliers")) {
    outliers.push_back({o.at("student_id").get<std::string>(), o.at("cluster").get<int>(),
                        o.at("distance").get<double>()});
  }
  QualityMetrics quality;
  const auto& qj = clusters.at("quality");
  quality.method = parse_cluster_method(qj.at("method").get<std::string>()).value();
  quality.k = qj.at("k").get<int>();
  quality.avg_within_cluster_variance = qj.at("avg_within_cluster_variance").get<double>();
  quality.silhouette = qj.at("silhouette").get<double>();

  std::vector<std::string> roster;
  for (const auto& [id, label] : clusters.at("labels").items()) roster.push_back(id);
  for (const auto& r : responses) roster.push_back(r.student_id);

  auto bundle = make_prompt_bundle(
      assessment, responses, clusters.at("feature_names").get<std::vector<std::string>>(),
      profiles_from_json(clusters), quality, outliers, roster);
  const std::string tmpl = cfg.paths.curator_template.empty()
                               ? default_curator_template()
                               : read_text_file(cfg.paths.curator_template);
  const auto prompt = build_curator_prompt(bundle, tmpl);

  ReportOptions options;
  options.retries = cfg.llm.report_retries;
  options.temperature = cfg.llm.curator_temperature;
  const auto report = generate_report(prompt, backend, bundle.roster, options);

  ojson pj;
  pj["backend"] = backend.name();
  pj["model"] = backend.model_id();
  pj["temperature"] = options.temperature;
  pj["role_instruction"] = bundle.role_instruction;
  pj["bundle"] = bundle_to_json(bundle);
  pj["prompt"] = prompt;
  write_text_file(out_path(cfg, artifacts::kPrompt), pj.dump(2) + "\n");
  write_text_file(out_path(cfg, artifacts::kReport), report.raw_markdown);
  log << "report: " << report.sections.size() << " sections, " << report.clusters.size()
      << " clusters via " << backend.name() << "\n";
}

void stage_evaluate(const PipelineConfig& cfg, LlmBackend& backend, std::ostream& log) {
  const auto prompt_path = out_path(cfg, artifacts::kPrompt);
  const auto report_path = out_path(cfg, artifacts::kReport);
  require_file(prompt_path, "prompt.json (run the report stage first)");
  require_file(report_path, "report.md (run the report stage first)");
  const auto pj = read_json_file(prompt_path);
  const auto report = parse_report(read_text_file(report_path));

  EvaluateOptions options;
  options.runs = cfg.llm.evaluation_runs;
  options.max_in_flight = cfg.llm.max_in_flight;
  options.temperature = cfg.llm.evaluator_temperature;
  const auto set = evaluate_report(pj.at("prompt").get<std::string>(), report, backend, options);

  auto j = evaluations_to_json(set);
  ojson doc;
  doc["backend"] = backend.name();
  doc["model"] = backend.model_id();
  for (auto& [k, v] : j.items()) doc[k] = v;
  write_text_file(out_path(cfg, artifacts::kEvaluations), doc.dump(2) + "\n");
  log << "evaluate: " << set.runs.size() << " runs, overall mean "
      << format_fixed(set.overall_mean, 2) << "\n";
}

// ---------------------------------------------------------------------------
// command line

namespace {

struct CliFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  bool mock_llm = false;
  std::string out_dir;
  std::string k_range;
  std::string method;
};

void apply_flags(PipelineConfig& cfg, const CliFlags& f) {
  if (f.seed) cfg.seed = *f.seed;
  if (f.jobs) cfg.jobs = *f.jobs;
  if (f.mock_llm) cfg.llm.mock = true;
  if (!f.out_dir.empty()) cfg.paths.out_dir = f.out_dir;
  if (!f.method.empty()) cfg.method = f.method;
  if (!f.k_range.empty()) {
    auto dash = f.k_range.find('-');
    long long lo = 0;
    long long hi = 0;
    const bool ok = dash == std::string::npos
                        ? parse_int(f.k_range, lo) && (hi = lo, true)
                        : parse_int(f.k_range.substr(0, dash), lo) &&
                              parse_int(f.k_range.substr(dash + 1), hi);
    if (!ok) {
      throw Error(ErrorCode::ConfigError,
                  "--k-range expects MIN-MAX or K, got '" + f.k_range + "'");
    }
    cfg.k_min = static_cast<int>(lo);
    cfg.k_max = static_cast<int>(hi);
  }
  cfg.validate();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Eye-tracking reading analytics and report generation"};
  app.require_subcommand(1);
  app.fallthrough();

  CliFlags flags;
  app.add_option("--config", flags.config, "Pipeline config JSON");
  app.add_option("--seed", flags.seed, "Clustering / fixture seed");
  app.add_option("--jobs", flags.jobs, "Worker threads (0 = logical cores)");
  app.add_flag("--mock-llm", flags.mock_llm, "Use the offline deterministic LLM backend");
  app.add_option("--out-dir", flags.out_dir, "Output directory");
  app.add_option("--k-range", flags.k_range, "Cluster counts to try, e.g. 2-8");
  app.add_option("--method", flags.method, "kmeans, gmm, spectral or all")
      ->check(CLI::IsMember({"kmeans", "gmm", "spectral", "all"}));

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"fixations", "Gaze logs to fixation CSVs"},
      {"features", "Fixations to raw and standardized feature tables"},
      {"cluster", "Cluster students and write quality, ANOVA and profiles"},
      {"report", "Build the curator prompt and generate report.md"},
      {"evaluate", "Score report.md with the evaluator agent"},
      {"pipeline", "Run every stage in order"},
      {"gen-fixture", "Write the synthetic 46-student dataset to --out-dir"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    if (command == "gen-fixture") {
      if (flags.out_dir.empty()) throw Error(ErrorCode::ConfigError, "gen-fixture needs --out-dir");
      FixtureOptions options;
      if (flags.seed) options.seed = *flags.seed;
      write_fixture(generate_fixture(options), flags.out_dir, options.seed);
      out << "fixture: " << options.students << " students written to " << flags.out_dir
          << "\n";
      return 0;
    }
    if (flags.config.empty()) throw Error(ErrorCode::ConfigError, "--config is required");
    auto cfg = load_config(flags.config);
    apply_flags(cfg, flags);
    fs::create_directories(cfg.paths.out_dir);

    const bool all = command == "pipeline";
    if (all || command == "fixations") stage_fixations(cfg, out);
    if (all || command == "features") stage_features(cfg, out);
    if (all || command == "cluster") stage_cluster(cfg, out);
    if (all || command == "report" || command == "evaluate") {
      auto backend = make_backend(cfg);
      if (all || command == "report") stage_report(cfg, *backend, out);
      if (all || command == "evaluate") stage_evaluate(cfg, *backend, out);
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.is_environment_error() ? 2 : 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    err << "error: SchemaError: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace readlens

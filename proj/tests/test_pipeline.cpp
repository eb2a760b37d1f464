#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "readlens/error.hpp"
#include "readlens/fixture.hpp"
#include "readlens/pipeline.hpp"
#include "support.hpp"

using namespace readlens;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

/// A small cohort is enough to exercise every stage.
fs::path small_fixture() {
  static const fs::path dir = [] {
    auto d = testsupport::fresh_dir("pipeline_fixture");
    FixtureOptions o;
    o.students = 12;
    o.cold_read_s = 40.0;
    write_fixture(generate_fixture(o), d, o.seed);
    return d;
  }();
  return dir;
}

std::vector<fs::path> files_under(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root));
  }
  std::sort(out.begin(), out.end());
  return out;
}

fs::path write_config(const nlohmann::json& patch, const std::string& name) {
  auto doc = read_json_file(small_fixture() / "config.json");
  doc.merge_patch(patch);
  auto p = small_fixture() / name;
  std::ofstream(p) << doc.dump(2);
  return p;
}

}  // namespace

TEST_CASE("pipeline equals the composition of its stages") {
  const auto cfg = (small_fixture() / "config.json").string();
  const auto whole = testsupport::fresh_dir("whole");
  const auto staged = testsupport::fresh_dir("staged");

  auto r = cli({"--config", cfg, "--mock-llm", "--out-dir", whole.string(), "pipeline"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  for (const char* stage : {"fixations", "features", "cluster", "report", "evaluate"}) {
    auto s = cli({"--config", cfg, "--mock-llm", "--out-dir", staged.string(), stage});
    REQUIRE_MESSAGE(s.code == 0, stage, ": ", s.err);
  }
  auto a = files_under(whole);
  CHECK(a == files_under(staged));
  for (const char* f : {artifacts::kFeaturesRaw, artifacts::kFeaturesNorm, artifacts::kQuality,
                        artifacts::kSweep, artifacts::kAnova, artifacts::kClusters,
                        artifacts::kHeatmap, artifacts::kPrompt, artifacts::kReport,
                        artifacts::kEvaluations}) {
    CHECK(std::find(a.begin(), a.end(), fs::path(f)) != a.end());
  }
  for (const auto& rel : a) {
    CHECK_MESSAGE(testsupport::slurp(whole / rel) == testsupport::slurp(staged / rel), rel);
  }
}

TEST_CASE("cluster stage is byte-identical across reruns and job counts") {
  const auto cfg = (small_fixture() / "config.json").string();
  const auto out = testsupport::fresh_dir("rerun");
  REQUIRE(cli({"--config", cfg, "--out-dir", out.string(), "fixations"}).code == 0);
  REQUIRE(cli({"--config", cfg, "--out-dir", out.string(), "features"}).code == 0);
  REQUIRE(cli({"--config", cfg, "--out-dir", out.string(), "--method", "all", "cluster"}).code == 0);
  std::vector<std::string> first;
  const char* names[] = {artifacts::kQuality, artifacts::kSweep, artifacts::kAnova,
                         artifacts::kClusters, artifacts::kHeatmap};
  for (const char* f : names) first.push_back(testsupport::slurp(out / f));
  REQUIRE(cli({"--config", cfg, "--out-dir", out.string(), "--method", "all", "--jobs", "1",
               "cluster"})
              .code == 0);
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK_MESSAGE(testsupport::slurp(out / names[i]) == first[i], names[i]);
  }
  // One quality row per method.
  auto q = first[0];
  CHECK(std::count(q.begin(), q.end(), '\n') == 4);
}

TEST_CASE("missing gaze directory is an environment error naming the path") {
  auto cfg = write_config({{"paths", {{"gaze_dir", "no_such_gaze"}}}}, "missing_gaze.json");
  auto r = cli({"--config", cfg.string(), "--out-dir",
                testsupport::fresh_dir("missing").string(), "fixations"});
  CHECK(r.code == 2);
  CHECK(r.err.find("no_such_gaze") != std::string::npos);
}

TEST_CASE("configuration errors exit with status 2") {
  const auto out = testsupport::fresh_dir("cfgerr").string();
  auto bad_k = write_config({{"clustering", {{"k_min", 5}, {"k_max", 3}}}}, "bad_k.json");
  CHECK(cli({"--config", bad_k.string(), "--out-dir", out, "fixations"}).code == 2);

  auto broken = small_fixture() / "broken.json";
  std::ofstream(broken) << "{ not json";
  auto r = cli({"--config", broken.string(), "fixations"});
  CHECK(r.code == 2);

  CHECK(cli({"--config", "/nonexistent/config.json", "fixations"}).code == 2);
  CHECK(cli({"fixations"}).code == 2);
  CHECK(cli({"--method", "dbscan", "fixations"}).code == 2);
  CHECK(cli({"gen-fixture"}).code == 2);
  CHECK(cli({"--k-range", "x-3", "--config", (small_fixture() / "config.json").string(),
             "fixations"})
            .code == 2);
}

TEST_CASE("a real backend needs its API key") {
  auto cfg = write_config({{"llm", {{"mock", false}, {"api_key_env", "READLENS_TEST_UNSET_KEY"}}}},
                          "needs_key.json");
  ::unsetenv("READLENS_TEST_UNSET_KEY");
  auto loaded = load_config(cfg);
  try {
    make_backend(loaded);
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    CHECK(std::string(e.what()).find("READLENS_TEST_UNSET_KEY") != std::string::npos);
  }
}

TEST_CASE("config paths resolve against the config file") {
  auto cfg = load_config(small_fixture() / "config.json");
  CHECK(cfg.paths.gaze_dir.is_absolute());
  CHECK(fs::exists(cfg.paths.gaze_dir));
  CHECK(fs::exists(cfg.paths.aoi_layout));
  CHECK(cfg.methods() == std::vector<ClusterMethod>{ClusterMethod::KMeans});
  cfg.method = "all";
  CHECK(cfg.methods().size() == 3);
  CHECK(cfg.report_method() == ClusterMethod::KMeans);
}

TEST_CASE("help exits cleanly") {
  auto r = cli({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("pipeline") != std::string::npos);
}

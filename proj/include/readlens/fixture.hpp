#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "readlens/ingest.hpp"

namespace readlens {

/// Latent reading behaviors the synthetic cohort is drawn from.
enum class ReaderProfile { Fluent, Scanner, Rereader, Struggling };
std::string_view to_string(ReaderProfile profile);

struct FixtureOptions {
  std::uint64_t seed = 7;
  int students = 46;
  double cold_read_s = 90.0;
  double sample_rate_hz = 60.0;
};

struct FixtureStudent {
  std::string id;
  ReaderProfile profile = ReaderProfile::Fluent;
  SessionTimeline timeline;
  std::vector<GazeSample> gaze;
};

struct FixtureDataset {
  ScreenGeometry geometry;
  std::vector<AoiRegion> layout;
  AssessmentContent assessment;
  std::vector<FixtureStudent> students;
  std::vector<StudentResponse> responses;
};

/// Three-page passage layout (14, 13 and 13 lines) with a quiz panel docked
/// on the right of every page. Word counts come from `passage_text`.
std::vector<AoiRegion> fixture_layout(const std::string& passage_text);

AssessmentContent fixture_assessment();

/// Deterministic in `options`: identical options give identical datasets.
FixtureDataset generate_fixture(const FixtureOptions& options = {});

/// Writes aoi_layout.json, assessment.json, responses.csv, profiles.csv,
/// gaze/<id>.csv, timelines/<id>.json and a config.json pointing at them.
void write_fixture(const FixtureDataset& dataset, const std::filesystem::path& dir,
                   std::uint64_t seed);

}  // namespace readlens

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "readlens/gaze_events.hpp"
#include "readlens/ingest.hpp"

namespace readlens {

/// Region lookup over a validated layout.
///
/// On the visible page, passage lines win over quiz questions, which win over
/// the enclosing page and panel regions. Regions on page 0 are visible on
/// every page.
std::optional<std::string> assign_aoi(const Fixation& fixation,
                                      const std::vector<AoiRegion>& layout,
                                      int current_page);

struct PhaseSegments {
  std::vector<Fixation> cold_read;
  std::vector<Fixation> qa;
  std::size_t dropped = 0;

  const std::vector<Fixation>& of(Phase p) const {
    return p == Phase::ColdRead ? cold_read : qa;
  }
};

/// Assigns each fixation to the phase whose interval contains its midpoint.
/// The returned fixations carry their phase.
PhaseSegments segment_by_phase(const std::vector<Fixation>& fixations,
                               const SessionTimeline& timeline);

/// AOI and phase encoding in one pass. The page for each fixation comes from
/// the timeline's page events at the fixation midpoint. Fixations outside both
/// phases are kept with an empty phase.
std::vector<Fixation> encode_fixations(const std::vector<Fixation>& fixations,
                                       const std::vector<AoiRegion>& layout,
                                       const SessionTimeline& timeline);

/// id -> region index for a layout, plus each passage line's global
/// reading-order position and the number of words preceding it.
class LayoutIndex {
 public:
  explicit LayoutIndex(const std::vector<AoiRegion>& layout);

  const AoiRegion* find(const std::string& id) const;
  /// 0-based reading-order position of a passage line across pages.
  std::optional<int> line_order(const std::string& id) const;
  /// Words on all passage lines before this one in reading order.
  std::optional<int> words_before(const std::string& id) const;
  std::size_t line_count() const { return line_count_; }

 private:
  const std::vector<AoiRegion>* layout_;
  std::map<std::string, std::size_t> by_id_;
  std::map<std::string, std::pair<int, int>> line_info_;
  std::size_t line_count_ = 0;
};

}  // namespace readlens

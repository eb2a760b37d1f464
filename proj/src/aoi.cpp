#include "readlens/aoi.hpp"

#include <algorithm>
#include <tuple>

namespace readlens {

namespace {

int precedence(AoiKind kind) {
  switch (kind) {
    case AoiKind::PassageLine: return 0;
    case AoiKind::QuizQuestion: return 1;
    case AoiKind::PassagePage: return 2;
    case AoiKind::QuizPanel: return 2;
  }
  return 3;
}

std::optional<Phase> phase_at(double t, const SessionTimeline& tl) {
  if (tl.cold_read.contains(t)) return Phase::ColdRead;
  if (tl.qa.contains(t)) return Phase::Qa;
  return std::nullopt;
}

double midpoint(const Fixation& f) { return 0.5 * (f.start_s + f.end_s); }

}  // namespace

std::optional<std::string> assign_aoi(const Fixation& fixation,
                                      const std::vector<AoiRegion>& layout,
                                      int current_page) {
  const AoiRegion* best = nullptr;
  for (const auto& r : layout) {
    if (!r.visible_on(current_page) ||
        !r.bbox.contains(fixation.cx_px, fixation.cy_px)) {
      continue;
    }
    // Layout order (page, line_index, id) breaks ties deterministically.
    if (!best || precedence(r.kind) < precedence(best->kind)) best = &r;
  }
  if (!best) return std::nullopt;
  return best->id;
}

PhaseSegments segment_by_phase(const std::vector<Fixation>& fixations,
                               const SessionTimeline& timeline) {
  PhaseSegments seg;
  for (const auto& f : fixations) {
    auto phase = phase_at(midpoint(f), timeline);
    if (!phase) {
      ++seg.dropped;
      continue;
    }
    Fixation tagged = f;
    tagged.phase = phase;
    (*phase == Phase::ColdRead ? seg.cold_read : seg.qa).push_back(
        std::move(tagged));
  }
  return seg;
}

std::vector<Fixation> encode_fixations(const std::vector<Fixation>& fixations,
                                       const std::vector<AoiRegion>& layout,
                                       const SessionTimeline& timeline) {
  std::vector<Fixation> out = fixations;
  for (auto& f : out) {
    double mid = midpoint(f);
    f.phase = phase_at(mid, timeline);
    f.aoi_id = assign_aoi(f, layout, timeline.page_at(mid));
  }
  return out;
}

LayoutIndex::LayoutIndex(const std::vector<AoiRegion>& layout)
    : layout_(&layout) {
  std::vector<std::size_t> lines;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    by_id_[layout[i].id] = i;
    if (layout[i].kind == AoiKind::PassageLine) lines.push_back(i);
  }
  std::sort(lines.begin(), lines.end(), [&](std::size_t a, std::size_t b) {
    return std::make_tuple(layout[a].page, layout[a].line_index.value_or(0)) <
           std::make_tuple(layout[b].page, layout[b].line_index.value_or(0));
  });
  int words = 0;
  for (std::size_t pos = 0; pos < lines.size(); ++pos) {
    const auto& r = layout[lines[pos]];
    line_info_[r.id] = {static_cast<int>(pos), words};
    words += r.word_count.value_or(0);
  }
  line_count_ = lines.size();
}

const AoiRegion* LayoutIndex::find(const std::string& id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &(*layout_)[it->second];
}

std::optional<int> LayoutIndex::line_order(const std::string& id) const {
  auto it = line_info_.find(id);
  if (it == line_info_.end()) return std::nullopt;
  return it->second.first;
}

std::optional<int> LayoutIndex::words_before(const std::string& id) const {
  auto it = line_info_.find(id);
  if (it == line_info_.end()) return std::nullopt;
  return it->second.second;
}

}  // namespace readlens

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gvt/geometry.hpp"
#include "gvt/resolution.hpp"

namespace gvt {

struct TilingSpec {
  std::int64_t length = 512;
  std::int64_t overlap = 100;

  void validate() const;
  std::int64_t stride() const { return length - overlap; }
};

struct TileWindow {
  std::int64_t x0 = 0;
  std::int64_t y0 = 0;
  std::int64_t w = 0;
  std::int64_t h = 0;

  friend bool operator==(const TileWindow&, const TileWindow&) = default;
};

// Window starts along one axis: 0, s, 2s, ... with the last start clamped to dim - length.
std::vector<std::int64_t> axis_starts(std::int64_t dim, const TilingSpec& spec);

// Row-major windows covering the image.
std::vector<TileWindow> plan_windows(const ImageGeometry& g, const TilingSpec& spec);

// Keeps detections whose area inside the window is at least keep_ratio of their own
// area, in window-local coordinates. Partially clipped boxes are refitted to the
// minimum-area rectangle around the clipped polygon.
std::vector<LabeledDetection> clip_annotations(std::span<const LabeledDetection> dets,
                                               const TileWindow& win, double keep_ratio);

using WindowDetections = std::pair<TileWindow, std::vector<LabeledDetection>>;

// Translates window-local detections to the global frame and suppresses duplicates
// without scores: earlier windows (and earlier detections) take precedence, and a
// later detection is dropped when it overlaps a kept one of the same category with
// IoU >= dedup_iou.
std::vector<LabeledDetection> merge_windows(std::span<const WindowDetections> per_window,
                                            double dedup_iou);

}  // namespace gvt

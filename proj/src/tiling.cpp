#include "gvt/tiling.hpp"

#include <algorithm>

#include "gvt/kernels.hpp"

namespace gvt {

void TilingSpec::validate() const {
  if (length < 1) throw Error(ErrorCode::ConfigError, "tiling length must be >= 1");
  if (overlap < 0 || overlap >= length) {
    throw Error(ErrorCode::ConfigError, "tiling overlap must satisfy 0 <= overlap < length");
  }
}

std::vector<std::int64_t> axis_starts(std::int64_t dim, const TilingSpec& spec) {
  spec.validate();
  if (dim <= spec.length) return {0};
  std::vector<std::int64_t> starts;
  for (std::int64_t s = 0;; s += spec.stride()) {
    if (s + spec.length >= dim) {
      const std::int64_t last = dim - spec.length;
      if (starts.empty() || starts.back() != last) starts.push_back(last);
      break;
    }
    starts.push_back(s);
  }
  return starts;
}

std::vector<TileWindow> plan_windows(const ImageGeometry& g, const TilingSpec& spec) {
  const auto ys = axis_starts(g.height, spec);
  const auto xs = axis_starts(g.width, spec);
  const std::int64_t h = std::min(g.height, spec.length);
  const std::int64_t w = std::min(g.width, spec.length);
  std::vector<TileWindow> out;
  out.reserve(ys.size() * xs.size());
  for (auto y : ys) {
    for (auto x : xs) out.push_back({x, y, w, h});
  }
  return out;
}

std::vector<LabeledDetection> clip_annotations(std::span<const LabeledDetection> dets,
                                               const TileWindow& win, double keep_ratio) {
  const double x0 = static_cast<double>(win.x0);
  const double y0 = static_cast<double>(win.y0);
  const double x1 = x0 + static_cast<double>(win.w);
  const double y1 = y0 + static_cast<double>(win.h);
  const std::array<Point2D, 4> rect{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};

  std::vector<LabeledDetection> out;
  for (const auto& d : dets) {
    const QuadBox box = canonicalize_quad(d.box);
    const bool inside = std::all_of(box.vertices.begin(), box.vertices.end(), [&](const Point2D& p) {
      return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
    });
    if (inside) {
      out.push_back({d.category, translate_quad(box, -x0, -y0)});
      continue;
    }
    const ConvexPolygon hull = convex_hull(box);
    const double area = polygon_area(hull.view());
    if (area < kZeroAreaTolerance) continue;
    const ConvexPolygon clipped = clip_convex(hull.view(), rect);
    if (clipped.size < 3) continue;
    const double kept_area = polygon_area(clipped.view());
    if (kept_area / area < keep_ratio || kept_area < kZeroAreaTolerance) continue;
    out.push_back({d.category, translate_quad(min_area_rect(clipped.view()), -x0, -y0)});
  }
  return out;
}

std::vector<LabeledDetection> merge_windows(std::span<const WindowDetections> per_window,
                                            double dedup_iou) {
  // IoU thresholds at or below zero would make disjoint boxes duplicates, which the
  // envelope prefilter below does not model.
  if (!(dedup_iou > 0.0) || dedup_iou > 1.0) {
    throw Error(ErrorCode::ConfigError, "dedup_iou must lie in (0, 1]");
  }
  std::vector<LabeledDetection> kept;
  kernels::HBoxSoA kept_envelopes;
  std::vector<std::uint8_t> mask;
  for (const auto& [win, dets] : per_window) {
    for (const auto& d : dets) {
      LabeledDetection global{d.category,
                              translate_quad(d.box, static_cast<double>(win.x0), static_cast<double>(win.y0))};
      const HBox env = hbox_envelope(global.box);
      mask.resize(kept.size());
      kernels::hbox_overlap_mask(env, kept_envelopes, mask);
      bool duplicate = false;
      for (std::size_t k = 0; k < kept.size() && !duplicate; ++k) {
        if (!mask[k] || kept[k].category != global.category) continue;
        duplicate = quad_iou(kept[k].box, global.box) >= dedup_iou;
      }
      if (duplicate) continue;
      kept_envelopes.push_back(env);
      kept.push_back(std::move(global));
    }
  }
  return kept;
}

}  // namespace gvt

#include "gvt/resolution.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace gvt {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

// A patch grid (rows x cols) reached at the uniform scale factor rows*L/H or
// cols*L/W. scale_num/scale_den is that factor divided by L, kept exact.
struct GridCandidate {
  std::int64_t rows;
  std::int64_t cols;
  std::int64_t scale_num;
  std::int64_t scale_den;
};

bool scale_less(const GridCandidate& a, const GridCandidate& b) {
  return a.scale_num * b.scale_den < b.scale_num * a.scale_den;
}

// The patch-ceiled area is a non-decreasing step function of the scale factor
// whose value is constant on (previous breakpoint, breakpoint]. Every attainable
// grid therefore appears at a breakpoint, where one axis lands exactly on a
// whole number of patches.
std::vector<GridCandidate> breakpoint_grids(const ImageGeometry& g, const PatchSpec& p) {
  const std::int64_t limit = p.max_pixels / (p.patch_length * p.patch_length);
  std::vector<GridCandidate> out;
  for (std::int64_t k = 1; k <= limit; ++k) {
    const std::int64_t cols = ceil_div(g.width * k, g.height);
    if (k * cols > limit) break;
    out.push_back({k, cols, k, g.height});
  }
  for (std::int64_t m = 1; m <= limit; ++m) {
    const std::int64_t rows = ceil_div(g.height * m, g.width);
    if (rows * m > limit) break;
    out.push_back({rows, m, m, g.width});
  }
  return out;
}

ResizePlan make_plan(const ImageGeometry& g, std::int64_t rows, std::int64_t cols, const PatchSpec& p) {
  ResizePlan plan;
  plan.source = g;
  plan.target = {rows * p.patch_length, cols * p.patch_length};
  plan.sx = static_cast<double>(plan.target.width) / static_cast<double>(g.width);
  plan.sy = static_cast<double>(plan.target.height) / static_cast<double>(g.height);
  return plan;
}

[[noreturn]] void unsatisfiable(const ImageGeometry& g) {
  throw Error(ErrorCode::Unsatisfiable, "no patch grid fits the pixel bounds for " +
                                            std::to_string(g.height) + "x" + std::to_string(g.width));
}

double clamp_coord(double v, double limit, const char* axis, Diagnostics* diag) {
  constexpr double kTolerance = 1.0;
  if (v < -kTolerance || v > limit + kTolerance) {
    throw Error(ErrorCode::OutOfBounds, std::string(axis) + " coordinate " + std::to_string(v) +
                                            " outside [0, " + std::to_string(limit) + "]");
  }
  if (v < 0.0 || v > limit) {
    note(diag, std::string("clamped ") + axis + " coordinate " + std::to_string(v));
    return std::clamp(v, 0.0, limit);
  }
  return v;
}

QuadBox map_quad(const QuadBox& q, double fx, double fy, const ImageGeometry& frame, Diagnostics* diag) {
  QuadBox out;
  for (std::size_t i = 0; i < 4; ++i) {
    out.vertices[i] = {clamp_coord(q.vertices[i].x * fx, static_cast<double>(frame.width), "x", diag),
                       clamp_coord(q.vertices[i].y * fy, static_cast<double>(frame.height), "y", diag)};
  }
  return out;
}

HBox map_hbox(const HBox& b, double fx, double fy, const ImageGeometry& frame, Diagnostics* diag) {
  const double w = static_cast<double>(frame.width);
  const double h = static_cast<double>(frame.height);
  return {clamp_coord(b.x1 * fx, w, "x", diag), clamp_coord(b.y1 * fy, h, "y", diag),
          clamp_coord(b.x2 * fx, w, "x", diag), clamp_coord(b.y2 * fy, h, "y", diag)};
}

}  // namespace

ImageGeometry make_geometry(std::int64_t height, std::int64_t width) {
  if (height < 1 || width < 1) {
    throw Error(ErrorCode::ValidationError, "image geometry must be at least 1x1");
  }
  return {height, width};
}

void PatchSpec::validate() const {
  if (patch_length < 1) throw Error(ErrorCode::ConfigError, "patch_length must be >= 1");
  if (min_pixels <= 0 || min_pixels > max_pixels) {
    throw Error(ErrorCode::ConfigError, "pixel bounds must satisfy 0 < min_pixels <= max_pixels");
  }
}

std::string_view to_string(ScaleClass c) {
  switch (c) {
    case ScaleClass::Small: return "small";
    case ScaleClass::Regular: return "regular";
    case ScaleClass::UHR: return "uhr";
  }
  return "unknown";
}

ResizePlan smart_resize(const ImageGeometry& g, const PatchSpec& p, PlanMode mode) {
  p.validate();
  (void)make_geometry(g.height, g.width);

  const std::int64_t rows0 = ceil_div(g.height, p.patch_length);
  const std::int64_t cols0 = ceil_div(g.width, p.patch_length);
  const std::int64_t area0 = rows0 * cols0 * p.patch_length * p.patch_length;
  if (mode == PlanMode::Standard && area0 >= p.min_pixels && area0 <= p.max_pixels) {
    return make_plan(g, rows0, cols0, p);
  }

  const std::int64_t cell = p.patch_length * p.patch_length;
  const auto candidates = breakpoint_grids(g, p);  // all satisfy area <= max_pixels
  std::optional<GridCandidate> chosen;
  const bool grow = mode == PlanMode::Standard && area0 < p.min_pixels;
  for (const auto& c : candidates) {
    if (grow) {
      // Smallest factor whose grid reaches min_pixels.
      if (c.rows * c.cols * cell < p.min_pixels) continue;
      if (!chosen || scale_less(c, *chosen)) chosen = c;
    } else {
      // Largest factor whose grid stays within max_pixels.
      if (!chosen || scale_less(*chosen, c)) chosen = c;
    }
  }
  if (!chosen || chosen->rows * chosen->cols * cell < p.min_pixels) unsatisfiable(g);
  return make_plan(g, chosen->rows, chosen->cols, p);
}

ScaleClass classify_scale(const ImageGeometry& g, const PatchSpec& p) {
  if (g.area() < p.min_pixels) return ScaleClass::Small;
  if (g.area() > p.max_pixels) return ScaleClass::UHR;
  return ScaleClass::Regular;
}

LabeledDetection to_model_space(const LabeledDetection& det, const ResizePlan& plan, Diagnostics* diag) {
  return {det.category, map_quad(det.box, plan.sx, plan.sy, plan.target, diag)};
}

LabeledDetection from_model_space(const LabeledDetection& det, const ResizePlan& plan, Diagnostics* diag) {
  return {det.category, map_quad(det.box, 1.0 / plan.sx, 1.0 / plan.sy, plan.source, diag)};
}

HBox to_model_space(const HBox& box, const ResizePlan& plan, Diagnostics* diag) {
  return map_hbox(box, plan.sx, plan.sy, plan.target, diag);
}

HBox from_model_space(const HBox& box, const ResizePlan& plan, Diagnostics* diag) {
  return map_hbox(box, 1.0 / plan.sx, 1.0 / plan.sy, plan.source, diag);
}

}  // namespace gvt

#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "gvt/error.hpp"
#include "gvt/geometry.hpp"

namespace gvt {

struct ImageGeometry {
  std::int64_t height = 1;
  std::int64_t width = 1;

  std::int64_t area() const { return height * width; }
  friend bool operator==(const ImageGeometry&, const ImageGeometry&) = default;
};

ImageGeometry make_geometry(std::int64_t height, std::int64_t width);

// Bounds are on total pixel count (height * width).
struct PatchSpec {
  std::int64_t patch_length = 28;
  std::int64_t min_pixels = 224 * 224;
  std::int64_t max_pixels = 1008 * 1008;

  void validate() const;
};

struct ResizePlan {
  ImageGeometry source;
  ImageGeometry target;
  double sx = 1.0;  // target.width / source.width
  double sy = 1.0;  // target.height / source.height
};

enum class ScaleClass { Small, Regular, UHR };
std::string_view to_string(ScaleClass c);

enum class PlanMode {
  Standard,  // wrap in place when the patch-ceiled area fits, else rescale into bounds
  Max,       // largest patch grid within max_pixels, regardless of source size
};

// Plans model-input dimensions. In-bounds images are wrapped by the tightest patch
// grid; out-of-bounds images are rescaled uniformly and then wrapped.
// Throws Unsatisfiable when no patch grid with the source aspect fits the bounds.
ResizePlan smart_resize(const ImageGeometry& g, const PatchSpec& p, PlanMode mode = PlanMode::Standard);

ScaleClass classify_scale(const ImageGeometry& g, const PatchSpec& p);

// Multiplies by (sx, sy). Coordinates outside the source frame by more than 1 px
// raise OutOfBounds; smaller excursions are clamped with a diagnostic.
LabeledDetection to_model_space(const LabeledDetection& det, const ResizePlan& plan,
                                Diagnostics* diag = nullptr);
LabeledDetection from_model_space(const LabeledDetection& det, const ResizePlan& plan,
                                  Diagnostics* diag = nullptr);
HBox to_model_space(const HBox& box, const ResizePlan& plan, Diagnostics* diag = nullptr);
HBox from_model_space(const HBox& box, const ResizePlan& plan, Diagnostics* diag = nullptr);

}  // namespace gvt

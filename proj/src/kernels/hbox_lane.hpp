#pragma once

#include <algorithm>
#include <cstdint>

// Single-lane reference formulas shared by the scalar kernels and SIMD tails.
namespace gvt::kernels::lane {

inline double hbox_iou(double ax1, double ay1, double ax2, double ay2, double bx1, double by1,
                       double bx2, double by2) {
  const double iw = std::max(0.0, std::min(ax2, bx2) - std::max(ax1, bx1));
  const double ih = std::max(0.0, std::min(ay2, by2) - std::max(ay1, by1));
  const double inter = iw * ih;
  const double uni = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

inline std::uint8_t hbox_overlap(double ax1, double ay1, double ax2, double ay2, double bx1,
                                 double by1, double bx2, double by2) {
  const bool ox = std::min(ax2, bx2) > std::max(ax1, bx1);
  const bool oy = std::min(ay2, by2) > std::max(ay1, by1);
  return static_cast<std::uint8_t>(ox && oy);
}

}  // namespace gvt::kernels::lane

#include "gvt/kernels.hpp"
#include "hbox_lane.hpp"

namespace gvt::kernels::scalar {

void hbox_iou_pairwise(const HBoxSoA& a, const HBoxSoA& b, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = lane::hbox_iou(a.x1[i], a.y1[i], a.x2[i], a.y2[i], b.x1[i], b.y1[i], b.x2[i], b.y2[i]);
  }
}

void hbox_iou_one_to_many(const HBox& q, const HBoxSoA& boxes, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = lane::hbox_iou(q.x1, q.y1, q.x2, q.y2, boxes.x1[i], boxes.y1[i], boxes.x2[i], boxes.y2[i]);
  }
}

void hbox_overlap_mask(const HBox& q, const HBoxSoA& boxes, std::span<std::uint8_t> out) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = lane::hbox_overlap(q.x1, q.y1, q.x2, q.y2, boxes.x1[i], boxes.y1[i], boxes.x2[i],
                                boxes.y2[i]);
  }
}

}  // namespace gvt::kernels::scalar

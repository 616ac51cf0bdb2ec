#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gvt/geometry.hpp"

// Batched axis-aligned box kernels. Each entry point has a scalar reference
// implementation and, on x86-64, an AVX2 variant picked at runtime. Variants
// perform the same IEEE operations in the same order, so results are identical.
namespace gvt::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);
bool isa_available(Isa isa);
Isa active_isa();
// Pins dispatch to a specific ISA (tests, benchmarking); nullopt restores autodetection.
// GVT_FORCE_SCALAR=1 in the environment has the same effect as forcing Scalar.
void force_isa(std::optional<Isa> isa);

struct HBoxSoA {
  std::vector<double> x1, y1, x2, y2;

  HBoxSoA() = default;
  explicit HBoxSoA(std::span<const HBox> boxes);

  std::size_t size() const { return x1.size(); }
  void push_back(const HBox& b);
  HBox at(std::size_t i) const { return {x1[i], y1[i], x2[i], y2[i]}; }
};

// out[i] = IoU(a[i], b[i]). Sizes must match.
void hbox_iou_pairwise(const HBoxSoA& a, const HBoxSoA& b, std::span<double> out);
// out[i] = IoU(query, boxes[i]).
void hbox_iou_one_to_many(const HBox& query, const HBoxSoA& boxes, std::span<double> out);
// out[i] = 1 when query and boxes[i] share positive area.
void hbox_overlap_mask(const HBox& query, const HBoxSoA& boxes, std::span<std::uint8_t> out);

namespace scalar {
void hbox_iou_pairwise(const HBoxSoA& a, const HBoxSoA& b, std::span<double> out);
void hbox_iou_one_to_many(const HBox& query, const HBoxSoA& boxes, std::span<double> out);
void hbox_overlap_mask(const HBox& query, const HBoxSoA& boxes, std::span<std::uint8_t> out);
}  // namespace scalar

#if defined(GVT_HAVE_AVX2)
namespace avx2 {
void hbox_iou_pairwise(const HBoxSoA& a, const HBoxSoA& b, std::span<double> out);
void hbox_iou_one_to_many(const HBox& query, const HBoxSoA& boxes, std::span<double> out);
void hbox_overlap_mask(const HBox& query, const HBoxSoA& boxes, std::span<std::uint8_t> out);
}  // namespace avx2
#endif

}  // namespace gvt::kernels

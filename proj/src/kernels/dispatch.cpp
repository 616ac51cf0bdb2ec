#include <atomic>
#include <cstdlib>
#include <cstring>

#include "gvt/kernels.hpp"

namespace gvt::kernels {

namespace {

// -1: autodetect, otherwise an Isa value.
std::atomic<int> g_forced{-1};

bool cpu_has_avx2() {
#if defined(GVT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  static const bool has = __builtin_cpu_supports("avx2");
  return has;
#else
  return false;
#endif
}

bool env_forces_scalar() {
  static const bool forced = [] {
    const char* v = std::getenv("GVT_FORCE_SCALAR");
    return v != nullptr && std::strcmp(v, "") != 0 && std::strcmp(v, "0") != 0;
  }();
  return forced;
}

void check_sizes(std::size_t expected, std::size_t actual) {
  if (expected != actual) throw Error(ErrorCode::LengthMismatch, "kernel input and output sizes differ");
}

}  // namespace

std::string_view to_string(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool isa_available(Isa isa) { return isa == Isa::Scalar || cpu_has_avx2(); }

Isa active_isa() {
  const int forced = g_forced.load(std::memory_order_relaxed);
  if (forced >= 0) return static_cast<Isa>(forced);
  if (env_forces_scalar()) return Isa::Scalar;
  return cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
}

void force_isa(std::optional<Isa> isa) {
  if (isa && !isa_available(*isa)) {
    throw Error(ErrorCode::ConfigError, std::string("ISA not available: ") + std::string(to_string(*isa)));
  }
  g_forced.store(isa ? static_cast<int>(*isa) : -1, std::memory_order_relaxed);
}

HBoxSoA::HBoxSoA(std::span<const HBox> boxes) {
  x1.reserve(boxes.size());
  y1.reserve(boxes.size());
  x2.reserve(boxes.size());
  y2.reserve(boxes.size());
  for (const auto& b : boxes) push_back(b);
}

void HBoxSoA::push_back(const HBox& b) {
  x1.push_back(b.x1);
  y1.push_back(b.y1);
  x2.push_back(b.x2);
  y2.push_back(b.y2);
}

void hbox_iou_pairwise(const HBoxSoA& a, const HBoxSoA& b, std::span<double> out) {
  check_sizes(a.size(), b.size());
  check_sizes(a.size(), out.size());
#if defined(GVT_HAVE_AVX2)
  if (active_isa() == Isa::Avx2) return avx2::hbox_iou_pairwise(a, b, out);
#endif
  scalar::hbox_iou_pairwise(a, b, out);
}

void hbox_iou_one_to_many(const HBox& query, const HBoxSoA& boxes, std::span<double> out) {
  check_sizes(boxes.size(), out.size());
#if defined(GVT_HAVE_AVX2)
  if (active_isa() == Isa::Avx2) return avx2::hbox_iou_one_to_many(query, boxes, out);
#endif
  scalar::hbox_iou_one_to_many(query, boxes, out);
}

void hbox_overlap_mask(const HBox& query, const HBoxSoA& boxes, std::span<std::uint8_t> out) {
  check_sizes(boxes.size(), out.size());
#if defined(GVT_HAVE_AVX2)
  if (active_isa() == Isa::Avx2) return avx2::hbox_overlap_mask(query, boxes, out);
#endif
  scalar::hbox_overlap_mask(query, boxes, out);
}

}  // namespace gvt::kernels

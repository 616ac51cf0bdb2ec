// Compiled with -mavx2 only; never called unless the CPU reports AVX2.
#include <immintrin.h>

#include "gvt/kernels.hpp"
#include "hbox_lane.hpp"

namespace gvt::kernels::avx2 {

namespace {

// Operand order mirrors std::min(a, b) == (b < a ? b : a) and
// std::max(a, b) == (a < b ? b : a) so lanes match the scalar path bit for bit.
inline __m256d min_like_std(__m256d a, __m256d b) { return _mm256_min_pd(b, a); }
inline __m256d max_like_std(__m256d a, __m256d b) { return _mm256_max_pd(b, a); }

inline __m256d iou4(__m256d ax1, __m256d ay1, __m256d ax2, __m256d ay2, __m256d bx1, __m256d by1,
                    __m256d bx2, __m256d by2) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d iw =
      max_like_std(zero, _mm256_sub_pd(min_like_std(ax2, bx2), max_like_std(ax1, bx1)));
  const __m256d ih =
      max_like_std(zero, _mm256_sub_pd(min_like_std(ay2, by2), max_like_std(ay1, by1)));
  const __m256d inter = _mm256_mul_pd(iw, ih);
  const __m256d area_a = _mm256_mul_pd(_mm256_sub_pd(ax2, ax1), _mm256_sub_pd(ay2, ay1));
  const __m256d area_b = _mm256_mul_pd(_mm256_sub_pd(bx2, bx1), _mm256_sub_pd(by2, by1));
  const __m256d uni = _mm256_sub_pd(_mm256_add_pd(area_a, area_b), inter);
  const __m256d positive = _mm256_cmp_pd(uni, zero, _CMP_GT_OQ);
  return _mm256_blendv_pd(zero, _mm256_div_pd(inter, uni), positive);
}

}  // namespace

void hbox_iou_pairwise(const HBoxSoA& a, const HBoxSoA& b, std::span<double> out) {
  const std::size_t n = out.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = iou4(_mm256_loadu_pd(&a.x1[i]), _mm256_loadu_pd(&a.y1[i]),
                           _mm256_loadu_pd(&a.x2[i]), _mm256_loadu_pd(&a.y2[i]),
                           _mm256_loadu_pd(&b.x1[i]), _mm256_loadu_pd(&b.y1[i]),
                           _mm256_loadu_pd(&b.x2[i]), _mm256_loadu_pd(&b.y2[i]));
    _mm256_storeu_pd(&out[i], r);
  }
  for (; i < n; ++i) {
    out[i] = lane::hbox_iou(a.x1[i], a.y1[i], a.x2[i], a.y2[i], b.x1[i], b.y1[i], b.x2[i], b.y2[i]);
  }
}

void hbox_iou_one_to_many(const HBox& q, const HBoxSoA& boxes, std::span<double> out) {
  const std::size_t n = out.size();
  const __m256d qx1 = _mm256_set1_pd(q.x1);
  const __m256d qy1 = _mm256_set1_pd(q.y1);
  const __m256d qx2 = _mm256_set1_pd(q.x2);
  const __m256d qy2 = _mm256_set1_pd(q.y2);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = iou4(qx1, qy1, qx2, qy2, _mm256_loadu_pd(&boxes.x1[i]),
                           _mm256_loadu_pd(&boxes.y1[i]), _mm256_loadu_pd(&boxes.x2[i]),
                           _mm256_loadu_pd(&boxes.y2[i]));
    _mm256_storeu_pd(&out[i], r);
  }
  for (; i < n; ++i) {
    out[i] = lane::hbox_iou(q.x1, q.y1, q.x2, q.y2, boxes.x1[i], boxes.y1[i], boxes.x2[i], boxes.y2[i]);
  }
}

void hbox_overlap_mask(const HBox& q, const HBoxSoA& boxes, std::span<std::uint8_t> out) {
  const std::size_t n = out.size();
  const __m256d qx1 = _mm256_set1_pd(q.x1);
  const __m256d qy1 = _mm256_set1_pd(q.y1);
  const __m256d qx2 = _mm256_set1_pd(q.x2);
  const __m256d qy2 = _mm256_set1_pd(q.y2);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d ox = _mm256_cmp_pd(min_like_std(qx2, _mm256_loadu_pd(&boxes.x2[i])),
                                     max_like_std(qx1, _mm256_loadu_pd(&boxes.x1[i])), _CMP_GT_OQ);
    const __m256d oy = _mm256_cmp_pd(min_like_std(qy2, _mm256_loadu_pd(&boxes.y2[i])),
                                     max_like_std(qy1, _mm256_loadu_pd(&boxes.y1[i])), _CMP_GT_OQ);
    const int bits = _mm256_movemask_pd(_mm256_and_pd(ox, oy));
    for (int k = 0; k < 4; ++k) out[i + k] = static_cast<std::uint8_t>((bits >> k) & 1);
  }
  for (; i < n; ++i) {
    out[i] = lane::hbox_overlap(q.x1, q.y1, q.x2, q.y2, boxes.x1[i], boxes.y1[i], boxes.x2[i],
                                boxes.y2[i]);
  }
}

}  // namespace gvt::kernels::avx2

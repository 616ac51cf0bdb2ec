#include <cstring>
#include <random>

#include "doctest.h"
#include "gvt/kernels.hpp"

using namespace gvt;
using namespace gvt::kernels;

namespace {

HBoxSoA random_boxes(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> pos(0.0, 100.0);
  std::uniform_real_distribution<double> size(0.0, 40.0);
  HBoxSoA out;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = pos(rng);
    const double y = pos(rng);
    // some exact duplicates and shared edges to exercise ties
    if (i % 7 == 3 && out.size() > 0) {
      out.push_back(out.at(out.size() - 1));
      continue;
    }
    out.push_back({x, y, x + size(rng), y + size(rng)});
  }
  return out;
}

}  // namespace

TEST_CASE("scalar kernels match the geometry reference") {
  std::mt19937_64 rng(1);
  const HBoxSoA a = random_boxes(rng, 101);
  const HBoxSoA b = random_boxes(rng, 101);
  std::vector<double> out(a.size());
  scalar::hbox_iou_pairwise(a, b, out);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(out[i] == hbox_iou(a.at(i), b.at(i)));
}

TEST_CASE("grounding pair at IoU exactly 0.5") {
  HBoxSoA a;
  HBoxSoA b;
  a.push_back({0, 0, 2, 1});
  b.push_back({0, 0, 1, 1});
  std::vector<double> out(1);
  hbox_iou_pairwise(a, b, out);
  CHECK(out[0] == 0.5);
}

#if defined(GVT_HAVE_AVX2)
TEST_CASE("avx2 kernels are bitwise identical to scalar") {
  if (!isa_available(Isa::Avx2)) {
    MESSAGE("AVX2 not available on this CPU; skipping");
    return;
  }
  std::mt19937_64 rng(7);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 17u, 256u, 1003u}) {
    const HBoxSoA a = random_boxes(rng, n);
    const HBoxSoA b = random_boxes(rng, n);
    std::vector<double> s(n), v(n);
    scalar::hbox_iou_pairwise(a, b, s);
    avx2::hbox_iou_pairwise(a, b, v);
    CHECK(std::memcmp(s.data(), v.data(), n * sizeof(double)) == 0);

    const HBox q = n > 0 ? a.at(0) : HBox{10, 10, 50, 50};
    scalar::hbox_iou_one_to_many(q, b, s);
    avx2::hbox_iou_one_to_many(q, b, v);
    CHECK(std::memcmp(s.data(), v.data(), n * sizeof(double)) == 0);

    std::vector<std::uint8_t> ms(n), mv(n);
    scalar::hbox_overlap_mask(q, b, ms);
    avx2::hbox_overlap_mask(q, b, mv);
    CHECK(ms == mv);
  }
}
#endif

TEST_CASE("forced dispatch routes through the requested ISA") {
  force_isa(Isa::Scalar);
  CHECK(active_isa() == Isa::Scalar);
  force_isa(std::nullopt);
  if (isa_available(Isa::Avx2)) CHECK(active_isa() == Isa::Avx2);
}

TEST_CASE("dispatch rejects mismatched sizes") {
  HBoxSoA a;
  a.push_back({0, 0, 1, 1});
  std::vector<double> out(2);
  CHECK_THROWS_AS(hbox_iou_one_to_many({0, 0, 1, 1}, a, out), Error);
}

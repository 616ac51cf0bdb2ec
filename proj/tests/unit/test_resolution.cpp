#include <cmath>
#include <random>

#include "doctest.h"
#include "gvt/resolution.hpp"

using namespace gvt;

namespace {

struct Grid {
  std::int64_t h;
  std::int64_t w;
};

Grid ceiled(double h, double w, std::int64_t L) {
  return {static_cast<std::int64_t>(std::ceil(h / L)) * L, static_cast<std::int64_t>(std::ceil(w / L)) * L};
}

// Linear scan downward from s = 1 for the largest factor whose ceiled area fits.
Grid scan_shrink(const ImageGeometry& g, const PatchSpec& p, double step) {
  for (double s = 1.0; s > 0; s -= step) {
    const Grid c = ceiled(g.height * s, g.width * s, p.patch_length);
    if (c.h * c.w <= p.max_pixels) return c;
  }
  return {0, 0};
}

// Linear scan upward from s = 1 for the smallest factor whose ceiled area reaches min.
Grid scan_grow(const ImageGeometry& g, const PatchSpec& p, double step) {
  for (double s = 1.0;; s += step) {
    const Grid c = ceiled(g.height * s, g.width * s, p.patch_length);
    if (c.h * c.w >= p.min_pixels) return c;
  }
}

}  // namespace

TEST_CASE("smart_resize: in-bounds examples") {
  const PatchSpec p{28, 224 * 224, 1008 * 1008};
  const auto plan = smart_resize({448, 448}, p);
  CHECK(plan.target == ImageGeometry{448, 448});
  CHECK(plan.sx == 1.0);
  CHECK(plan.sy == 1.0);

  const PatchSpec p14{14, 224 * 224, 1008 * 1008};
  const auto plan2 = smart_resize({500, 300}, p14);
  CHECK(plan2.target == ImageGeometry{504, 308});
  CHECK(plan2.sx == doctest::Approx(308.0 / 300.0));
  CHECK(plan2.sy == doctest::Approx(504.0 / 500.0));
}

TEST_CASE("smart_resize: UHR image matches the linear-scan oracle") {
  const PatchSpec p{14, 224 * 224, 1008 * 1008};
  const auto plan = smart_resize({5000, 4000}, p);
  const Grid oracle = scan_shrink({5000, 4000}, p, 1e-4);
  CHECK(plan.target.height == oracle.h);
  CHECK(plan.target.width == oracle.w);
  CHECK(plan.target.area() <= 1016064);
  CHECK(plan.target.height % 14 == 0);
  CHECK(plan.target.width % 14 == 0);
}

TEST_CASE("smart_resize: shrink and grow agree with scan oracles on random sizes") {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::int64_t> big(1100, 9000);
  std::uniform_int_distribution<std::int64_t> small(60, 220);
  const PatchSpec p{28, 224 * 224, 1008 * 1008};
  for (int i = 0; i < 40; ++i) {
    const ImageGeometry g{big(rng), big(rng)};
    const auto plan = smart_resize(g, p);
    const Grid o = scan_shrink(g, p, 1e-5);
    CHECK(plan.target.height == o.h);
    CHECK(plan.target.width == o.w);
  }
  for (int i = 0; i < 40; ++i) {
    const ImageGeometry g{small(rng), small(rng)};
    const auto plan = smart_resize(g, p);
    const Grid o = scan_grow(g, p, 1e-5);
    CHECK(plan.target.height == o.h);
    CHECK(plan.target.width == o.w);
  }
}

TEST_CASE("smart_resize: bounds no patch grid can satisfy") {
  // Grid areas are multiples of 784; none lies in [1000000, 1000100].
  const PatchSpec p{28, 1000000, 1000100};
  const auto wide = smart_resize({1, 200000}, PatchSpec{});
  CHECK(wide.target.height == 28);
  try {
    (void)smart_resize({3000, 3000}, p);
    FAIL("expected Unsatisfiable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Unsatisfiable);
  }
}

TEST_CASE("smart_resize: max mode upscales to the largest fitting grid") {
  const PatchSpec p{28, 224 * 224, 1008 * 1008};
  const auto plan = smart_resize({448, 448}, p, PlanMode::Max);
  CHECK(plan.target == ImageGeometry{1008, 1008});
  const auto wide = smart_resize({300, 600}, p, PlanMode::Max);
  CHECK(wide.target.area() <= p.max_pixels);
  CHECK(wide.target.width == 2 * wide.target.height);
}

TEST_CASE("smart_resize: invalid spec and geometry are rejected") {
  CHECK_THROWS_AS(smart_resize({10, 10}, PatchSpec{0, 1, 2}), Error);
  CHECK_THROWS_AS(smart_resize({10, 10}, PatchSpec{14, 5, 4}), Error);
  CHECK_THROWS_AS(smart_resize({0, 10}, PatchSpec{}), Error);
}

TEST_CASE("classify_scale") {
  const PatchSpec p;
  CHECK(classify_scale({100, 100}, p) == ScaleClass::Small);
  CHECK(classify_scale({448, 448}, p) == ScaleClass::Regular);
  CHECK(classify_scale({7099, 6329}, p) == ScaleClass::UHR);
}

TEST_CASE("model-space transforms") {
  const LabeledDetection d{"car", hbox_to_quad({10, 10, 20, 20})};
  const ResizePlan identity{{100, 100}, {100, 100}, 1.0, 1.0};
  CHECK(to_model_space(d, identity) == d);

  const ResizePlan twice{{100, 100}, {200, 200}, 2.0, 2.0};
  CHECK(hbox_envelope(to_model_space(d, twice).box) == HBox{20, 20, 40, 40});

  const PatchSpec p14{14, 224 * 224, 1008 * 1008};
  const auto plan = smart_resize({500, 300}, p14);
  // row 499, column 299 of the 500x300 image
  const LabeledDetection v{"car", QuadBox{{{{299, 499}, {299, 499}, {299, 499}, {299, 499}}}}};
  const auto m = to_model_space(v, plan);
  CHECK(m.box.vertices[0].x == 299.0 * (308.0 / 300.0));
  CHECK(m.box.vertices[0].y == 499.0 * (504.0 / 500.0));
}

TEST_CASE("model-space round trip and bounds handling") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const PatchSpec p;
  for (int i = 0; i < 200; ++i) {
    const ImageGeometry g{static_cast<std::int64_t>(200 + 3000 * u(rng)),
                          static_cast<std::int64_t>(200 + 3000 * u(rng))};
    const auto plan = smart_resize(g, p);
    QuadBox q;
    for (auto& v : q.vertices) v = {u(rng) * g.width, u(rng) * g.height};
    const LabeledDetection d{"x", q};
    const auto back = from_model_space(to_model_space(d, plan), plan);
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(std::abs(back.box.vertices[k].x - q.vertices[k].x) < 1e-9);
      CHECK(std::abs(back.box.vertices[k].y - q.vertices[k].y) < 1e-9);
    }
  }

  const ResizePlan identity{{100, 100}, {100, 100}, 1.0, 1.0};
  Diagnostics diag;
  const auto clamped = to_model_space(HBox{-0.5, 0, 100.5, 100}, identity, &diag);
  CHECK(clamped == HBox{0, 0, 100, 100});
  CHECK(diag.size() == 2);
  CHECK_THROWS_AS(to_model_space(HBox{-2, 0, 10, 10}, identity), Error);
}

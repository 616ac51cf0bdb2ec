#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "doctest.h"
#include "gvt/augment.hpp"
#include "gvt/records.hpp"
#include "gvt/sampler.hpp"
#include "gvt/text.hpp"
#include "../support/oracles.hpp"

using namespace gvt;
using nlohmann::json;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& text) {
  const auto dir = std::filesystem::temp_directory_path() / "gvt_unit";
  std::filesystem::create_directories(dir);
  const auto p = dir / name;
  write_text_file(p, text);
  return p;
}

// Rotated rectangle corners computed directly, then canonicalized by enumeration.
QuadBox obox_oracle(double cx, double cy, double w, double h, double a) {
  const double c = std::cos(a), s = std::sin(a);
  QuadBox q;
  const std::array<std::pair<double, double>, 4> d{{{-w / 2, -h / 2}, {w / 2, -h / 2}, {w / 2, h / 2}, {-w / 2, h / 2}}};
  for (std::size_t i = 0; i < 4; ++i) {
    q.vertices[i] = {cx + d[i].first * c - d[i].second * s, cy + d[i].first * s + d[i].second * c};
  }
  return oracle::canonical_by_enumeration(q);
}

DetectionRecord small_detection(const std::string& id, std::int64_t h, std::int64_t w) {
  DetectionRecord r;
  r.id = id;
  r.image = id + ".png";
  r.geometry = {h, w};
  r.annotations = {{"plane", canonicalize_quad(hbox_to_quad({10, 10, 60, 40}))},
                   {"ship", canonicalize_quad(obox_to_quad(OBox::make(100, 100, 40, 12, 0.3)))},
                   {"storage tank", canonicalize_quad(hbox_to_quad({5, 150, 25, 170}))}};
  return r;
}

}  // namespace

TEST_CASE("strip_task_descriptors") {
  const std::string p = "Please locate:";
  CHECK(strip_task_descriptors("[refer] the red car on the road", p) == "Please locate: the red car on the road");
  CHECK(strip_task_descriptors("the red  car", p) == "the red  car");
  CHECK(strip_task_descriptors("[identify][grounding] x", p) == "Please locate: x");
  CHECK(strip_task_descriptors("  [REFER]   x", p) == "Please locate: x");
  CHECK(strip_task_descriptors("find [refer] the car", p) == "find the car");
  CHECK(strip_task_descriptors("[other] x", p) == "[other] x");
  const std::vector<std::string> extra{"detect"};
  CHECK(strip_task_descriptors("[detect] ships", "Find", extra) == "Find ships");

  const std::vector<std::string> pool{"Find:", "Where is"};
  Rng rng(1);
  const std::string once = strip_task_descriptors("[grounding] the bridge", pool, rng);
  CHECK((once == "Find: the bridge" || once == "Where is the bridge"));
  CHECK(strip_task_descriptors(once, pool, rng) == once);

  std::mt19937_64 gen(4);
  const std::string alphabet = "ab [refer][grounding]x.";
  for (int i = 0; i < 1000; ++i) {
    std::string s;
    for (int k = static_cast<int>(gen() % 30); k > 0; --k) s.push_back(alphabet[gen() % alphabet.size()]);
    const std::string a = strip_task_descriptors(s, p);
    CHECK(strip_task_descriptors(a, p) == a);
  }
}

TEST_CASE("clean_text") {
  CHECK(clean_text("a  ship..") == "a ship.");
  CHECK(clean_text("wait... what!!") == "wait... what!");
  CHECK(clean_text("so.....") == "so...");
  CHECK(clean_text(" two planes , one ship ?? ") == "two planes, one ship?");
  const TypoTable typos({{"teh", "the"}, {"alot", "a lot"}});
  CHECK(clean_text("teh plane", typos) == "the plane");
  CHECK(clean_text("Teh plane has alot of fuel", typos) == "The plane has a lot of fuel");
  CHECK(clean_text("tehran", typos) == "tehran");
  CHECK_THROWS_AS(TypoTable(std::map<std::string, std::string>{{"teh", "teh x"}}), Error);
  CHECK_THROWS_AS(TypoTable(std::map<std::string, std::string>{{"a", "b"}, {"b", "c"}}), Error);

  std::mt19937_64 gen(8);
  const std::string alphabet = "tehTab  ..!!??,,;:\t\nxy";
  for (int i = 0; i < 1000; ++i) {
    std::string s;
    for (int k = static_cast<int>(gen() % 40); k > 0; --k) s.push_back(alphabet[gen() % alphabet.size()]);
    const std::string once = clean_text(s, typos);
    CHECK(clean_text(once, typos) == once);
  }
}

TEST_CASE("unify boxes") {
  CHECK(unify_to_quad(OBox::make(50, 50, 20, 10, 0.0)) == hbox_to_quad({40, 45, 60, 55}));
  const QuadBox tilted{{{{10, 0}, {20, 10}, {10, 20}, {0, 10}}}};
  CHECK(unify_to_hbox(tilted) == HBox{0, 0, 20, 20});

  const json rec = {
      {"id", "m1"},
      {"image", "m1.png"},
      {"height", 200},
      {"width", 300},
      {"annotations",
       {{{"label", "a"}, {"bbox", {10, 20, 30, 50}}},
        {{"label", "b"}, {"obox", {100, 100, 40, 20, std::numbers::pi / 4}}},
        {{"label", "c"}, {"poly", {0, 0, 0, 10, 10, 10, 10, 0}}}}}};
  const auto r = detection_from_json(rec);
  REQUIRE(r.annotations.size() == 3);
  CHECK(r.annotations[0].box == oracle::canonical_by_enumeration(hbox_to_quad({10, 20, 30, 50})));
  const QuadBox ob = obox_oracle(100, 100, 40, 20, std::numbers::pi / 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(r.annotations[1].box.vertices[i].x == doctest::Approx(ob.vertices[i].x).epsilon(1e-12));
    CHECK(r.annotations[1].box.vertices[i].y == doctest::Approx(ob.vertices[i].y).epsilon(1e-12));
  }
  CHECK(r.annotations[2].box == hbox_to_quad({0, 0, 10, 10}));

  const json g = {{"id", "g1"}, {"image", "g.png"}, {"height", 100}, {"width", 100}, {"expression", "the car"},
                  {"poly", {10, 0, 20, 10, 10, 20, 0, 10}}};
  CHECK(grounding_from_json(g).target == HBox{0, 0, 20, 20});
}

TEST_CASE("bounds handling on ingest") {
  json rec = {{"id", "b"}, {"image", "b.png"}, {"height", 100}, {"width", 100},
              {"annotations", {{{"label", "a"}, {"bbox", {-0.5, 10, 20, 30}}}, {{"label", "a"}, {"bbox", {90, 90, 110, 99}}}}}};
  Diagnostics d;
  const auto r = detection_from_json(rec, {}, &d);
  REQUIRE(r.annotations.size() == 1);
  CHECK(hbox_envelope(r.annotations[0].box) == HBox{0, 10, 20, 30});
  CHECK(d.size() == 2);
  IngestOptions strict;
  strict.strict = true;
  CHECK_THROWS_AS(detection_from_json(rec, strict), Error);

  json degenerate = {{"id", "z"}, {"image", "z.png"}, {"height", 10}, {"width", 10},
                     {"annotations", {{{"label", "a"}, {"bbox", {1, 1, 1, 5}}}}}};
  Diagnostics dz;
  CHECK(detection_from_json(degenerate, {}, &dz).annotations.empty());
  CHECK(dz.size() == 1);
  IngestOptions hard;
  hard.degenerate = DegeneratePolicy::HardError;
  CHECK_THROWS_AS(detection_from_json(degenerate, hard), Error);
}

TEST_CASE("COCO round trip is byte-stable") {
  const json coco = json::parse(R"({
    "images": [{"id": 7, "file_name": "a.png", "height": 300, "width": 400},
               {"id": 9, "file_name": "b.png", "height": 500, "width": 500}],
    "categories": [{"id": 3, "name": "ship"}, {"id": 1, "name": "plane"}],
    "annotations": [
      {"id": 1, "image_id": 7, "category_id": 3, "bbox": [10, 10, 50, 20]},
      {"id": 2, "image_id": 9, "category_id": 1, "bbox": [0, 0, 1, 1],
       "segmentation": [[100, 100, 140, 110, 130, 150, 90, 140]]},
      {"id": 3, "image_id": 7, "category_id": 1, "bbox": [0, 0, 1, 1], "obox": [200, 150, 60, 20, 0.5]}
    ]})");
  const auto recs = read_coco(coco);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].id == "7");
  CHECK(recs[0].annotations.size() == 2);
  const std::string first = write_coco(recs).dump();
  const auto again = read_coco(json::parse(first));
  CHECK(write_coco(again).dump() == first);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    REQUIRE(again[i].annotations.size() == recs[i].annotations.size());
    for (std::size_t k = 0; k < recs[i].annotations.size(); ++k) CHECK(again[i].annotations[k] == recs[i].annotations[k]);
  }

  const std::string jsonl = to_jsonl(recs);
  const auto path = temp_file("dets.jsonl", jsonl);
  const auto loaded = load_detection_jsonl(path);
  CHECK(loaded.rejected == 0);
  CHECK(to_jsonl(loaded.records) == jsonl);
}

TEST_CASE("JSON Lines loading reports bad lines") {
  const std::string text =
      R"({"id":"1","image":"1.png","height":10,"width":10,"annotations":[]})"
      "\nnot json\n\n"
      R"({"id":"3","image":"3.png","height":10,"annotations":[]})"
      "\n"
      R"({"id":"4","image":"4.png","height":10,"width":10,"annotations":[{"label":"a","poly":[1,2,3]}]})"
      "\n";
  const auto path = temp_file("bad.jsonl", text);
  const auto r = load_detection_jsonl(path);
  CHECK(r.records.size() == 1);
  CHECK(r.rejected == 3);
  CHECK(r.diagnostics.messages[0].rfind("line 4", 0) == 0);
  IngestOptions strict;
  strict.strict = true;
  CHECK_THROWS_AS(load_detection_jsonl(path, strict), Error);
}

TEST_CASE("conversation records") {
  const json ok = json::parse(R"({"id":"c","images":[{"ref":"x.png","height":10,"width":20}],
    "messages":[{"role":"user","content":[{"type":"image","image":"x.png"},{"type":"text","text":"hi"}]},
                {"role":"assistant","content":"hello","trainable":true}]})");
  const auto c = conversation_from_json(ok);
  CHECK(c.trainable_count() == 1);
  CHECK(conversation_from_json(json::parse(to_json(c).dump())).messages == c.messages);

  json bad = ok;
  bad["messages"][0]["trainable"] = true;
  CHECK_THROWS_AS(conversation_from_json(bad), Error);
  json twice = ok;
  twice["messages"].push_back(ok["messages"][1]);
  CHECK_THROWS_AS(conversation_from_json(twice), Error);
  json missing = ok;
  missing["images"] = json::array();
  CHECK_THROWS_AS(conversation_from_json(missing), Error);
}

TEST_CASE("sampler: weights, determinism, empty subsets") {
  auto unit = [](const std::string& name, int n, double w) {
    SubsetUnit u{name, TaskKind::Detection, {}, w};
    for (int i = 0; i < n; ++i) u.records.push_back(small_detection(name + std::to_string(i), 300, 300));
    return u;
  };
  {
    WeightedSampler s({unit("a", 3, 1), unit("b", 3, 0)}, 5);
    for (int i = 0; i < 1000; ++i) CHECK(s.next().subset == 0);
  }
  {
    WeightedSampler s({unit("a", 5, 1), unit("b", 7, 3)}, 11);
    const int N = 100000;
    int b = 0;
    for (int i = 0; i < N; ++i) b += s.next().subset == 1 ? 1 : 0;
    const double sigma = std::sqrt(0.75 * 0.25 / N);
    CHECK(std::fabs(b / static_cast<double>(N) - 0.75) < 3 * sigma);
  }
  {
    WeightedSampler s1({unit("a", 5, 1), unit("b", 7, 3)}, 3), s2({unit("a", 5, 1), unit("b", 7, 3)}, 3);
    for (int i = 0; i < 500; ++i) {
      const auto x = s1.next(), y = s2.next();
      CHECK(x.subset == y.subset);
      CHECK(x.record == y.record);
      CHECK(x.index == y.index);
    }
  }
  {
    // Each epoch of a subset's stream visits every record once.
    WeightedSampler s({unit("a", 6, 1)}, 2);
    std::vector<int> seen(6, 0);
    for (int i = 0; i < 18; ++i) ++seen[s.next().record];
    CHECK(seen == std::vector<int>(6, 3));
  }
  {
    WeightedSampler s({unit("a", 2, 1), unit("e", 0, 5)}, 1);
    CHECK(s.warnings().size() == 1);
    for (int i = 0; i < 100; ++i) CHECK(s.next().subset == 0);
    try {
      WeightedSampler bad({unit("e", 0, 1)}, 1);
      FAIL("expected EmptySubset");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptySubset);
    }
    CHECK_THROWS_AS(WeightedSampler({unit("a", 1, -1)}, 1), Error);
  }
}

TEST_CASE("augment: pass-through policy") {
  AugmentationPolicy policy;
  policy.prompt_pools = {{"detection", {"Detect."}}};
  policy.json_mode_probability = 0.0;
  policy.synonym_probability = 0.0;
  policy.scale_min = policy.scale_max = 1.0;
  const auto rec = small_detection("p", 448, 448);
  Rng rng(1);
  const auto s = augment(Record(rec), TaskKind::Detection, policy, PatchSpec{}, rng);
  CHECK(s.plan.target == ImageGeometry{448, 448});
  REQUIRE(s.conversation.messages.size() == 2);
  CHECK(s.conversation.messages[0].text() == "Detect.");
  std::vector<LabeledDetection> expected;
  for (const auto& d : rec.annotations) {
    QuadBox q = d.box;
    for (auto& p : q.vertices) p = {std::floor(p.x + 0.5), std::floor(p.y + 0.5)};
    expected.push_back({d.category, q});
  }
  CHECK(s.conversation.messages[1].text() ==
        render_detections(canonical_response_order(expected), ResponseMode::Plain));
  CHECK(s.conversation.trainable_count() == 1);
}

TEST_CASE("augment: json mode round trip and synonym protection") {
  AugmentationPolicy policy;
  policy.prompt_pools = {{"detection", {"Find every plane and ship, then stop."}}, {"grounding", {"Find"}}};
  policy.json_mode_probability = 1.0;
  policy.synonyms = {{"find", {"locate"}}, {"plane", {"aircraft"}}, {"ship", {"vessel"}}, {"red", {"crimson"}}};
  policy.synonym_probability = 1.0;
  const auto rec = small_detection("q", 900, 1200);
  Rng rng(2);
  const auto s = augment(Record(rec), TaskKind::Detection, policy, PatchSpec{}, rng);
  CHECK(s.mode == ResponseMode::Json);
  CHECK(s.conversation.messages[0].text() ==
        "Locate every plane and ship, then stop." + std::string(kJsonInstruction));
  const std::string answer = s.conversation.messages[1].text();
  const auto parsed = parse_detections(answer);
  CHECK(parsed.diagnostics.empty());
  CHECK(parsed.response.mode == ResponseMode::Json);
  CHECK(render_detections(parsed.response.detections, ResponseMode::Json) == answer);

  GroundingRecord g{"g", "g.png", {1000, 1000}, "the red car", {100, 200, 300, 400}};
  const auto gs = augment(Record(g), TaskKind::Grounding, policy, PatchSpec{}, rng);
  CHECK(gs.conversation.messages[0].text() == "Locate the crimson car" + std::string(kJsonInstruction));
  const HBox got = parse_hbox(gs.conversation.messages[1].text());
  CHECK(got.x1 == std::floor(100 * gs.plan.sx + 0.5));
}

TEST_CASE("augment: 10,000 samples stay inside the rendered geometry") {
  AugmentationPolicy policy;
  policy.synonyms = {{"plane", {"aircraft"}}, {"objects", {"items", "targets"}}};
  policy.synonym_probability = 0.5;
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<std::int64_t> dim(100, 5000);
  std::uniform_real_distribution<double> unit(0, 1);
  int checked = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::int64_t h = dim(gen), w = dim(gen);
    DetectionRecord rec{std::to_string(i), "x.png", {h, w}, {}};
    for (int k = 0; k < 4; ++k) {
      const double x = unit(gen) * (w - 20), y = unit(gen) * (h - 20);
      rec.annotations.push_back({k % 2 ? "plane" : "ship", hbox_to_quad({x, y, x + 10 + unit(gen) * 10, y + 10})});
    }
    Rng rng(derive_seed(99, static_cast<std::uint64_t>(i)));
    const auto s = augment(Record(rec), TaskKind::Detection, policy, PatchSpec{}, rng);
    const auto& g = s.conversation.image_geometries.at("x.png");
    CHECK(g == s.plan.target);
    const auto parsed = parse_detections(s.conversation.messages[1].text());
    for (const auto& d : parsed.response.detections) {
      CHECK((d.category == "plane" || d.category == "ship"));
      for (const auto& p : d.box.vertices) {
        const bool inside = p.x >= 0 && p.y >= 0 && p.x <= static_cast<double>(g.width) &&
                            p.y <= static_cast<double>(g.height);
        if (!inside) FAIL_CHECK("vertex outside rendered geometry");
        ++checked;
      }
    }
  }
  CHECK(checked > 100000);
}

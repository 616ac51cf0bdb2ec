#include "gvt/zoomchain.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "gvt/parallel.hpp"
#include "gvt/random.hpp"
#include "gvt/response_codec.hpp"

namespace gvt {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::ValidationError, msg); }
[[noreturn]] void schema(const std::string& msg) { throw Error(ErrorCode::SchemaError, msg); }

HBox envelope_union(const std::vector<QuadBox>& boxes) {
  HBox u = hbox_envelope(boxes.front());
  for (const auto& q : boxes) {
    const HBox e = hbox_envelope(q);
    u = {std::min(u.x1, e.x1), std::min(u.y1, e.y1), std::max(u.x2, e.x2), std::max(u.y2, e.y2)};
  }
  return u;
}

// Grows [lo, hi] around its centre to at least `side`, shifted back inside [0, limit].
void expand_axis(double& lo, double& hi, double side, double limit) {
  side = std::min(side, limit);
  if (hi - lo >= side) return;
  const double c = 0.5 * (lo + hi);
  lo = c - 0.5 * side;
  hi = c + 0.5 * side;
  if (lo < 0.0) {
    hi -= lo;
    lo = 0.0;
  }
  if (hi > limit) {
    lo -= hi - limit;
    hi = limit;
  }
  lo = std::max(lo, 0.0);
}

std::string fmt_int(double v) { return std::to_string(static_cast<long long>(std::llround(v))); }

std::map<std::string, std::vector<QuadBox>> by_category(const DetectionRecord& rec) {
  std::map<std::string, std::vector<QuadBox>> out;
  for (const auto& a : rec.annotations) out[a.category].push_back(a.box);
  return out;
}

std::string region_key(std::size_t idx) { return std::string(kRegionNames[idx]); }

}  // namespace

void ZoomConfig::validate() const {
  patch.validate();
  if (!(min_crop_side >= 1.0) || !std::isfinite(min_crop_side)) throw Error(ErrorCode::ConfigError, "min_crop_side must be >= 1");
  if (!(min_roi_side > 0.0) || !std::isfinite(min_roi_side)) throw Error(ErrorCode::ConfigError, "min_roi_side must be positive");
  if (!(region_padding >= 0.0) || !std::isfinite(region_padding)) {
    throw Error(ErrorCode::ConfigError, "region_padding must be non-negative");
  }
}

ZoomSample make_zoom_sample(std::string id, std::string image, const ImageGeometry& native, std::string question,
                            const HBox& native_region, std::string answer, const ZoomConfig& cfg) {
  ZoomSample s;
  s.id = std::move(id);
  s.image = std::move(image);
  s.native = native;
  s.plan = smart_resize(native, cfg.patch, PlanMode::Max);
  s.question = std::move(question);
  s.final_answer = std::move(answer);
  const HBox m = to_model_space(native_region, s.plan);
  const double w = static_cast<double>(s.plan.target.width);
  const double h = static_cast<double>(s.plan.target.height);
  s.roi = {std::clamp(std::floor(m.x1), 0.0, w), std::clamp(std::floor(m.y1), 0.0, h),
           std::clamp(std::ceil(m.x2), 0.0, w), std::clamp(std::ceil(m.y2), 0.0, h)};
  return s;
}

HBox compute_crop(const HBox& roi, const ResizePlan& plan, double min_side) {
  const double W = static_cast<double>(plan.source.width);
  const double H = static_cast<double>(plan.source.height);
  double x1 = std::clamp(roi.x1 / plan.sx, 0.0, W);
  double x2 = std::clamp(roi.x2 / plan.sx, 0.0, W);
  double y1 = std::clamp(roi.y1 / plan.sy, 0.0, H);
  double y2 = std::clamp(roi.y2 / plan.sy, 0.0, H);
  expand_axis(x1, x2, min_side, W);
  expand_axis(y1, y2, min_side, H);
  // Division can leave values a hair off an integer; snap those before rounding outward.
  auto lo = [](double v) { return std::abs(v - std::round(v)) < 1e-9 ? std::round(v) : std::floor(v); };
  auto hi = [](double v) { return std::abs(v - std::round(v)) < 1e-9 ? std::round(v) : std::ceil(v); };
  return {std::clamp(lo(x1), 0.0, W), std::clamp(lo(y1), 0.0, H), std::clamp(hi(x2), 0.0, W),
          std::clamp(hi(y2), 0.0, H)};
}

std::string crop_ref(const std::string& image, const HBox& crop) {
  return image + "#crop=" + fmt_int(crop.x1) + "," + fmt_int(crop.y1) + "," + fmt_int(crop.x2) + "," + fmt_int(crop.y2);
}

ConversationRecord build_zoom_conversation(const ZoomSample& s, const ZoomConfig& cfg) {
  const double w = static_cast<double>(s.plan.target.width);
  const double h = static_cast<double>(s.plan.target.height);
  const HBox& r = s.roi;
  if (!(r.x1 >= 0.0 && r.y1 >= 0.0 && r.x2 <= w && r.y2 <= h) || !std::isfinite(r.x1) || !std::isfinite(r.y1)) {
    throw Error(ErrorCode::RoiOutOfBounds, s.id + ": roi outside the downsampled image");
  }
  if (r.width() < cfg.min_roi_side || r.height() < cfg.min_roi_side) {
    throw Error(ErrorCode::RoiOutOfBounds, s.id + ": roi smaller than the minimum side");
  }

  const HBox crop = compute_crop(r, s.plan, cfg.min_crop_side);
  const std::string cref = crop_ref(s.image, crop);
  const HBox rounded{static_cast<double>(round_half_up(r.x1)), static_cast<double>(round_half_up(r.y1)),
                     static_cast<double>(round_half_up(r.x2)), static_cast<double>(round_half_up(r.y2))};

  ConversationRecord c;
  c.id = s.id;
  c.messages.push_back({Role::User, {ContentPart::image(s.image), ContentPart::text(cfg.first_prompt + " " + s.question)}, false});
  c.messages.push_back({Role::Assistant, {ContentPart::text(render_hbox(rounded))}, true});
  c.messages.push_back({Role::Tool, {ContentPart::image(cref)}, false});
  c.messages.push_back({Role::Assistant, {ContentPart::text(s.final_answer)}, true});
  c.image_geometries[s.image] = s.plan.target;
  c.image_geometries[cref] = {static_cast<std::int64_t>(crop.height()), static_cast<std::int64_t>(crop.width())};
  return c;
}

std::size_t region_of(const Point2D& p, const ImageGeometry& g) {
  auto bucket = [](double v, std::int64_t d) -> std::size_t {
    if (v < static_cast<double>(d / 3)) return 0;
    if (v < static_cast<double>(2 * d / 3)) return 1;
    return 2;
  };
  return bucket(p.y, g.height) * 3 + bucket(p.x, g.width);
}

HBox region_bounds(std::size_t index, const ImageGeometry& g) {
  if (index > 8) invalid("grid region index " + std::to_string(index) + " out of range");
  auto edges = [](std::int64_t d, std::size_t k) {
    const std::int64_t e[4] = {0, d / 3, 2 * d / 3, d};
    return std::pair<double, double>(static_cast<double>(e[k]), static_cast<double>(e[k + 1]));
  };
  const auto [y1, y2] = edges(g.height, index / 3);
  const auto [x1, x2] = edges(g.width, index % 3);
  return {x1, y1, x2, y2};
}

std::string pluralize(const std::string& noun) {
  if (noun.empty()) return noun;
  auto ends = [&](std::string_view s) { return noun.size() >= s.size() && noun.compare(noun.size() - s.size(), s.size(), s) == 0; };
  if (ends("s") || ends("x") || ends("z") || ends("ch") || ends("sh")) return noun + "es";
  if (noun.size() >= 2 && noun.back() == 'y' && std::string_view("aeiou").find(noun[noun.size() - 2]) == std::string_view::npos) {
    return noun.substr(0, noun.size() - 1) + "ies";
  }
  return noun + "s";
}

std::vector<CountingQa> gen_counting_qa(const DetectionRecord& rec, std::size_t density_threshold) {
  std::vector<CountingQa> out;
  for (const auto& [cat, boxes] : by_category(rec)) {
    const std::string plural = pluralize(cat);
    if (boxes.size() > density_threshold) {
      std::array<std::vector<QuadBox>, 9> cells;
      for (const auto& q : boxes) cells[region_of(centroid(q), rec.geometry)].push_back(q);
      for (std::size_t k = 0; k < 9; ++k) {
        if (cells[k].empty()) continue;
        CountingQa qa;
        qa.category = cat;
        qa.region = k;
        qa.count = cells[k].size();
        qa.question = "How many " + plural + " are in the " + region_key(k) + " region of the image?";
        qa.answer = std::to_string(qa.count);
        qa.evidence = std::move(cells[k]);
        out.push_back(std::move(qa));
      }
    } else {
      CountingQa qa;
      qa.category = cat;
      qa.count = boxes.size();
      qa.question = "How many " + plural + " are there in the image?";
      qa.answer = std::to_string(qa.count);
      qa.evidence = boxes;
      out.push_back(std::move(qa));
    }
  }
  return out;
}

ComparisonQa gen_comparison_qa(const DetectionRecord& rec, const std::string& cat_a, const std::string& cat_b,
                               const CategorySet* categories) {
  if (cat_a == cat_b) invalid("comparison needs two different categories");
  if (categories != nullptr) {
    for (const auto* c : {&cat_a, &cat_b}) {
      if (!categories->contains(*c)) invalid("category '" + *c + "' is not in the category set");
    }
  }
  ComparisonQa qa;
  std::size_t na = 0;
  std::size_t nb = 0;
  for (const auto& a : rec.annotations) {
    if (a.category == cat_a) ++na;
    if (a.category == cat_b) ++nb;
    if (a.category == cat_a || a.category == cat_b) qa.evidence.push_back(a.box);
  }
  const std::string pa = pluralize(cat_a);
  const std::string pb = pluralize(cat_b);
  qa.question = "Are there more " + pa + " or " + pb + " in the image?";
  qa.answer = na > nb ? pa : nb > na ? pb : "equal";
  return qa;
}

ExternalQa external_qa_from_json(const json& j, double padding, Diagnostics* diag) {
  if (!j.is_object()) schema("expected an object");
  for (const auto& [key, v] : j.items()) {
    static const std::set<std::string> known{"id", "image", "height", "width", "question", "answer", "region", "distractors"};
    if (!known.count(key)) schema("unknown key '" + key + "'");
  }
  auto text = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_string() || j[key].get<std::string>().empty()) {
      schema(std::string("'") + key + "' must be a non-empty string");
    }
    return j[key].get<std::string>();
  };
  auto dim = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_number_integer() || j[key].get<std::int64_t>() <= 0) {
      schema(std::string("'") + key + "' must be a positive integer");
    }
    return j[key].get<std::int64_t>();
  };

  ExternalQa qa;
  qa.image = text("image");
  qa.id = j.contains("id") ? text("id") : std::string();
  qa.question = text("question");
  qa.answer = text("answer");
  qa.geometry = {dim("height"), dim("width")};

  const json& r = j.contains("region") ? j["region"] : json();
  if (!r.is_array() || r.size() != 4 || !std::all_of(r.begin(), r.end(), [](const json& v) { return v.is_number(); })) {
    schema("'region' must be [x1, y1, x2, y2]");
  }
  HBox b{r[0].get<double>(), r[1].get<double>(), r[2].get<double>(), r[3].get<double>()};
  if (!std::isfinite(b.x1) || !std::isfinite(b.y1) || !std::isfinite(b.x2) || !std::isfinite(b.y2) || !(b.x1 < b.x2) ||
      !(b.y1 < b.y2)) {
    schema("'region' must satisfy x1 < x2 and y1 < y2");
  }
  const double W = static_cast<double>(qa.geometry.width);
  const double H = static_cast<double>(qa.geometry.height);
  if (b.x1 < 0.0 || b.y1 < 0.0 || b.x2 > W || b.y2 > H) note(diag, "region exceeds the image; clamped");
  if (b.x2 <= 0.0 || b.y2 <= 0.0 || b.x1 >= W || b.y1 >= H) schema("'region' lies entirely outside the image");
  const double px = padding * b.width();
  const double py = padding * b.height();
  qa.region = {std::max(0.0, b.x1 - px), std::max(0.0, b.y1 - py), std::min(W, b.x2 + px), std::min(H, b.y2 + py)};

  if (j.contains("distractors")) {
    const json& d = j["distractors"];
    if (!d.is_array() || !std::all_of(d.begin(), d.end(), [](const json& v) { return v.is_string(); })) {
      schema("'distractors' must be a list of strings");
    }
    for (const auto& v : d) qa.distractors.push_back(v.get<std::string>());
  }
  return qa;
}

LoadResult<ExternalQa> ingest_external_qa(const std::filesystem::path& path, double padding) {
  LoadResult<ExternalQa> out;
  Diagnostics parse_errors;
  for_each_jsonl(
      read_text_file(path),
      [&](std::size_t line, const json& j) {
        const std::string at = "line " + std::to_string(line) + ": ";
        Diagnostics local;
        try {
          ExternalQa qa = external_qa_from_json(j, padding, &local);
          if (qa.id.empty()) qa.id = "line" + std::to_string(line);
          out.records.push_back(std::move(qa));
          for (auto& m : local.messages) out.diagnostics.add(at + m);
        } catch (const Error& e) {
          ++out.rejected;
          out.diagnostics.add(at + e.what());
        }
      },
      parse_errors);
  out.rejected += parse_errors.size();
  for (auto& m : parse_errors.messages) out.diagnostics.add(m);
  return out;
}

std::string McqItem::render() const {
  std::string out = question;
  for (std::size_t i = 0; i < options.size(); ++i) {
    out += "\n";
    out.push_back(static_cast<char>('A' + i));
    out += ". " + options[i];
  }
  return out;
}

McqItem convert_to_mcq(const std::string& question, const std::string& gold, const std::vector<std::string>& distractors,
                       std::uint64_t seed) {
  if (distractors.size() != 3) invalid("expected 3 distractors, got " + std::to_string(distractors.size()));
  std::array<std::string, 4> opts{gold, distractors[0], distractors[1], distractors[2]};
  std::set<std::string> seen;
  for (const auto& o : opts) {
    if (o.empty()) invalid("empty option");
    if (!seen.insert(o).second) invalid("duplicate option '" + o + "'");
  }
  std::array<std::size_t, 4> order{0, 1, 2, 3};
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  McqItem item;
  item.question = question;
  for (std::size_t i = 0; i < 4; ++i) {
    item.options[i] = opts[order[i]];
    if (order[i] == 0) item.answer_letter = static_cast<char>('A' + i);
  }
  return item;
}

std::vector<std::string> counting_distractors(std::size_t gold) {
  std::vector<std::string> out;
  const auto g = static_cast<long long>(gold);
  for (long long d : {-1LL, 1LL, -2LL, 2LL, -3LL, 3LL}) {
    if (out.size() == 3) break;
    if (g + d > 0) out.push_back(std::to_string(g + d));
  }
  return out;
}

namespace {

struct RecordOutput {
  std::vector<ConversationRecord> conversations;
  std::size_t excluded = 0;
  Diagnostics diagnostics;
};

template <typename MakeSample>
void emit(RecordOutput& out, const std::string& id, MakeSample make, const ZoomConfig& cfg) {
  try {
    out.conversations.push_back(build_zoom_conversation(make(), cfg));
  } catch (const Error& e) {
    ++out.excluded;
    out.diagnostics.add(id + ": " + e.what());
  }
}

RecordOutput zoom_one(const DetectionRecord& rec, ZoomRecipe recipe, const ZoomConfig& cfg, std::uint64_t seed) {
  RecordOutput out;
  if (rec.annotations.empty()) return out;
  const std::uint64_t rseed = seed ^ fnv1a64(rec.id);

  if (recipe == ZoomRecipe::Comparison) {
    const auto groups = by_category(rec);
    if (groups.size() < 2) return out;
    std::vector<std::string> cats;
    for (const auto& [c, _] : groups) cats.push_back(c);
    Rng rng(rseed);
    const auto i = static_cast<std::size_t>(rng.below(cats.size()));
    auto k = static_cast<std::size_t>(rng.below(cats.size() - 1));
    if (k >= i) ++k;
    const ComparisonQa qa = gen_comparison_qa(rec, cats[i], cats[k]);
    const std::string id = rec.id + "#compare";
    emit(out, id, [&] { return make_zoom_sample(id, rec.image, rec.geometry, qa.question, envelope_union(qa.evidence), qa.answer, cfg); }, cfg);
    return out;
  }

  const auto qas = gen_counting_qa(rec, cfg.density_threshold);
  for (std::size_t n = 0; n < qas.size(); ++n) {
    const auto& qa = qas[n];
    const HBox region = qa.region ? region_bounds(*qa.region, rec.geometry) : envelope_union(qa.evidence);
    std::string id = rec.id + "#count" + std::to_string(n);
    std::string question = qa.question;
    std::string answer = qa.answer;
    if (recipe == ZoomRecipe::Mcq) {
      id = rec.id + "#mcq" + std::to_string(n);
      try {
        const McqItem item = convert_to_mcq(qa.question, qa.answer, counting_distractors(qa.count), derive_seed(rseed, n));
        question = item.render();
        answer = std::string(1, item.answer_letter);
      } catch (const Error& e) {
        ++out.excluded;
        out.diagnostics.add(id + ": " + e.what());
        continue;
      }
    }
    emit(out, id, [&] { return make_zoom_sample(id, rec.image, rec.geometry, question, region, answer, cfg); }, cfg);
  }
  return out;
}

std::vector<ConversationRecord> collect(std::vector<RecordOutput>& slots, ZoomStats& stats) {
  std::vector<ConversationRecord> all;
  for (auto& s : slots) {
    stats.excluded += s.excluded;
    for (auto& m : s.diagnostics.messages) stats.diagnostics.add(std::move(m));
    for (auto& c : s.conversations) all.push_back(std::move(c));
  }
  stats.conversations += all.size();
  return all;
}

}  // namespace

std::vector<ConversationRecord> run_zoom_recipe(const std::vector<DetectionRecord>& records, ZoomRecipe recipe,
                                                const ZoomConfig& cfg, std::uint64_t seed, ZoomStats& stats, int jobs) {
  cfg.validate();
  std::vector<RecordOutput> slots(records.size());
  parallel_for(records.size(), jobs, [&](std::size_t i) { slots[i] = zoom_one(records[i], recipe, cfg, seed); });
  stats.records += records.size();
  return collect(slots, stats);
}

std::vector<ConversationRecord> run_external_recipe(const std::vector<ExternalQa>& items, bool as_mcq,
                                                    const ZoomConfig& cfg, std::uint64_t seed, ZoomStats& stats) {
  cfg.validate();
  std::vector<RecordOutput> slots(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& qa = items[i];
    auto& out = slots[i];
    std::string question = qa.question;
    std::string answer = qa.answer;
    if (as_mcq && !qa.distractors.empty()) {
      try {
        const McqItem item = convert_to_mcq(qa.question, qa.answer, qa.distractors, seed ^ fnv1a64(qa.id));
        question = item.render();
        answer = std::string(1, item.answer_letter);
      } catch (const Error& e) {
        ++out.excluded;
        out.diagnostics.add(qa.id + ": " + e.what());
        continue;
      }
    }
    emit(out, qa.id, [&] { return make_zoom_sample(qa.id, qa.image, qa.geometry, question, qa.region, answer, cfg); }, cfg);
  }
  stats.records += items.size();
  return collect(slots, stats);
}

}  // namespace gvt

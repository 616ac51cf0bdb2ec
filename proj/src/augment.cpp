#include "gvt/augment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "gvt/parallel.hpp"

namespace gvt {

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

const std::string& pick(const std::vector<std::string>& pool, Rng& rng) {
  return pool[static_cast<std::size_t>(rng.below(pool.size()))];
}

const std::vector<std::string>& pool_for(const AugmentationPolicy& policy, TaskKind task) {
  const auto it = policy.prompt_pools.find(std::string(to_string(task)));
  if (it == policy.prompt_pools.end() || it->second.empty()) {
    throw Error(ErrorCode::ConfigError, "no prompt pool for task '" + std::string(to_string(task)) + "'");
  }
  return it->second;
}

std::vector<std::string> category_names(const std::vector<LabeledDetection>& dets) {
  std::vector<std::string> out;
  for (const auto& d : dets) out.push_back(d.category);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ResizePlan scaled_plan(const ImageGeometry& native, double s, const PatchSpec& patch) {
  const ImageGeometry scaled{std::max<std::int64_t>(1, std::llround(static_cast<double>(native.height) * s)),
                             std::max<std::int64_t>(1, std::llround(static_cast<double>(native.width) * s))};
  const ResizePlan inner = smart_resize(scaled, patch);
  return {native, inner.target, static_cast<double>(inner.target.width) / static_cast<double>(native.width),
          static_cast<double>(inner.target.height) / static_cast<double>(native.height)};
}

double rounded(double v) { return static_cast<double>(round_half_up(v)); }

}  // namespace

std::map<std::string, std::vector<std::string>> AugmentationPolicy::default_prompt_pools() {
  return {
      {"detection",
       {"Detect all objects in the image.",
        "Find every object in this image and give its quadrilateral coordinates.",
        "List all objects you can see, grouped by category, with their corner coordinates."}},
      {"grounding",
       {"Locate the object described below.", "Give the bounding box of the following object:",
        "Where is the object described here? Answer with a box."}},
  };
}

void AugmentationPolicy::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::ConfigError, std::string(name) + " must lie in [0, 1]");
  };
  prob(json_mode_probability, "json_mode_probability");
  prob(synonym_probability, "synonym_probability");
  if (!(scale_min > 0.0) || !(scale_max >= scale_min) || !std::isfinite(scale_max)) {
    throw Error(ErrorCode::ConfigError, "scale range must satisfy 0 < min <= max");
  }
  for (const auto& [task, pool] : prompt_pools) {
    if (pool.empty()) throw Error(ErrorCode::ConfigError, "prompt pool '" + task + "' is empty");
  }
  for (const auto& [word, syns] : synonyms) {
    if (syns.empty()) throw Error(ErrorCode::ConfigError, "synonym entry '" + word + "' has no replacements");
  }
}

std::string replace_synonyms(const std::string& text, const AugmentationPolicy& policy,
                             const std::vector<std::string>& protected_phrases, Rng& rng) {
  if (policy.synonyms.empty() || policy.synonym_probability <= 0.0) return text;
  std::set<std::string> guarded;
  for (const auto& phrase : protected_phrases) {
    std::string word;
    for (char c : phrase + " ") {
      if (std::isalnum(static_cast<unsigned char>(c))) {
        word.push_back(c);
      } else if (!word.empty()) {
        guarded.insert(lower(word));
        word.clear();
      }
    }
  }

  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!std::isalnum(static_cast<unsigned char>(text[i]))) {
      out.push_back(text[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && std::isalnum(static_cast<unsigned char>(text[j]))) ++j;
    const std::string word = text.substr(i, j - i);
    i = j;
    const std::string key = lower(word);
    const bool has_digit = std::any_of(word.begin(), word.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
    const bool option_letter = word.size() == 1 && word[0] >= 'A' && word[0] <= 'D';
    const auto it = policy.synonyms.find(key);
    if (has_digit || option_letter || guarded.count(key) || it == policy.synonyms.end() ||
        !rng.bernoulli(policy.synonym_probability)) {
      out += word;
      continue;
    }
    std::string rep = pick(it->second, rng);
    if (std::isupper(static_cast<unsigned char>(word[0])) && !rep.empty()) {
      rep[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(rep[0])));
    }
    out += rep;
  }
  return out;
}

double draw_scale(const ImageGeometry& g, const AugmentationPolicy& policy, const PatchSpec& patch, Rng& rng) {
  const double s = rng.uniform(policy.scale_min, policy.scale_max);
  const double area = static_cast<double>(g.area());
  const double lo = std::sqrt(static_cast<double>(patch.min_pixels) / area);
  const double hi = std::sqrt(static_cast<double>(patch.max_pixels) / area);
  return std::clamp(s, lo, hi);
}

TrainingSample augment(const Record& record, TaskKind task, const AugmentationPolicy& policy, const PatchSpec& patch,
                       Rng& rng, Diagnostics* diag) {
  TrainingSample out;
  out.id = record_id(record);
  out.task = task;
  auto& conv = out.conversation;
  conv.id = out.id;

  if (const auto* det = std::get_if<DetectionRecord>(&record)) {
    if (task != TaskKind::Detection) throw Error(ErrorCode::ConfigError, out.id + ": detection record in a non-detection subset");
    const std::string prompt = pick(pool_for(policy, task), rng);
    out.mode = rng.bernoulli(policy.json_mode_probability) ? ResponseMode::Json : ResponseMode::Plain;
    std::string user = replace_synonyms(prompt, policy, category_names(det->annotations), rng);
    if (out.mode == ResponseMode::Json) user += kJsonInstruction;
    out.scale = draw_scale(det->geometry, policy, patch, rng);
    out.plan = scaled_plan(det->geometry, out.scale, patch);

    std::vector<LabeledDetection> model;
    for (const auto& d : det->annotations) {
      const LabeledDetection m = to_model_space(d, out.plan, diag);
      QuadBox q = m.box;
      for (auto& p : q.vertices) p = {rounded(p.x), rounded(p.y)};
      try {
        model.push_back({m.category, canonicalize_quad(q)});
      } catch (const Error&) {
        note(diag, out.id + ": '" + m.category + "' box collapsed after rounding; dropped");
      }
    }
    model = canonical_response_order(model);
    conv.messages.push_back({Role::User, {ContentPart::image(det->image), ContentPart::text(user)}, false});
    conv.messages.push_back({Role::Assistant, {ContentPart::text(render_detections(model, out.mode))}, true});
    conv.image_geometries[det->image] = out.plan.target;
  } else if (const auto* gr = std::get_if<GroundingRecord>(&record)) {
    if (task != TaskKind::Grounding) throw Error(ErrorCode::ConfigError, out.id + ": grounding record in a non-grounding subset");
    const std::string prompt = pick(pool_for(policy, task), rng);
    out.mode = rng.bernoulli(policy.json_mode_probability) ? ResponseMode::Json : ResponseMode::Plain;
    std::string user = replace_synonyms(prompt + " " + gr->expression, policy, {}, rng);
    if (out.mode == ResponseMode::Json) user += kJsonInstruction;
    out.scale = draw_scale(gr->geometry, policy, patch, rng);
    out.plan = scaled_plan(gr->geometry, out.scale, patch);
    const HBox m = to_model_space(gr->target, out.plan, diag);
    const HBox r{rounded(m.x1), rounded(m.y1), rounded(m.x2), rounded(m.y2)};
    conv.messages.push_back({Role::User, {ContentPart::image(gr->image), ContentPart::text(user)}, false});
    conv.messages.push_back(
        {Role::Assistant, {ContentPart::text(out.mode == ResponseMode::Json ? render_hbox_json(r) : render_hbox(r))}, true});
    conv.image_geometries[gr->image] = out.plan.target;
  } else {
    // Free-form conversations may quote pixel positions in text, which cannot be
    // rescaled, so their images are only planned, never randomly scaled.
    const auto& src = std::get<ConversationRecord>(record);
    conv = src;
    for (auto& m : conv.messages) {
      if (m.role != Role::User) continue;
      for (auto& p : m.content) {
        if (p.kind == ContentPart::Kind::Text) p.value = replace_synonyms(p.value, policy, {}, rng);
      }
    }
    bool first = true;
    for (auto& [ref, g] : conv.image_geometries) {
      const ResizePlan plan = smart_resize(g, patch);
      if (first) out.plan = plan;
      first = false;
      g = plan.target;
    }
  }
  return out;
}

std::vector<TrainingSample> generate_samples(const std::vector<SubsetUnit>& units, const AugmentationPolicy& policy,
                                             const PatchSpec& patch, std::uint64_t seed, std::uint64_t n, int jobs,
                                             Diagnostics* diag) {
  policy.validate();
  patch.validate();
  if (n == 0) return {};
  WeightedSampler sampler(units, seed);
  for (const auto& w : sampler.warnings().messages) note(diag, w);
  std::vector<Draw> draws(n);
  for (auto& d : draws) d = sampler.next();

  std::vector<TrainingSample> out(n);
  std::vector<Diagnostics> notes(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    const Draw& d = draws[i];
    const SubsetUnit& u = units[d.subset];
    Rng rng(derive_seed(seed ^ 0x5A4D, d.index));
    out[i] = augment(u.records[d.record], u.task, policy, patch, rng, &notes[i]);
    out[i].subset = u.name;
    out[i].draw = d.index;
  });
  for (auto& dn : notes) {
    for (auto& m : dn.messages) note(diag, std::move(m));
  }
  return out;
}

nlohmann::ordered_json TrainingSample::to_json() const {
  nlohmann::ordered_json j;
  j["id"] = id;
  j["subset"] = subset;
  j["draw"] = draw;
  j["task"] = std::string(to_string(task));
  j["mode"] = std::string(to_string(mode));
  j["scale"] = scale;
  j["native"] = {{"height", plan.source.height}, {"width", plan.source.width}};
  j["target"] = {{"height", plan.target.height}, {"width", plan.target.width}};
  const auto c = gvt::to_json(conversation);
  j["images"] = c["images"];
  j["messages"] = c["messages"];
  return j;
}

}  // namespace gvt

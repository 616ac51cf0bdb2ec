#include "gvt/config.hpp"

#include <set>

namespace gvt {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) fail(where + " must be an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.count(k)) fail("unknown key '" + (where.empty() ? k : where + "." + k) + "'");
  }
}

template <typename T>
void take(const json& obj, const char* key, T& dst, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    dst = obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail("'" + where + "." + key + "' has the wrong type");
  }
}

}  // namespace

RunConfig config_from_json(const json& doc, const std::filesystem::path& base_dir) {
  only_keys(doc, "", {"seed", "patch", "subsets", "policy", "metrics", "tiling", "zoom", "ingest"});
  RunConfig c;
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) fail("'seed' must be a non-negative integer");
    c.seed = doc["seed"].get<std::uint64_t>();
  }

  if (doc.contains("patch")) {
    const json& p = doc["patch"];
    only_keys(p, "patch", {"patch_length", "min_pixels", "max_pixels"});
    take(p, "patch_length", c.patch.patch_length, "patch");
    take(p, "min_pixels", c.patch.min_pixels, "patch");
    take(p, "max_pixels", c.patch.max_pixels, "patch");
  }
  try {
    c.patch.validate();
  } catch (const Error& e) {
    fail(e.what());
  }

  if (doc.contains("subsets")) {
    if (!doc["subsets"].is_array()) fail("'subsets' must be a list");
    std::set<std::string> names;
    for (const auto& s : doc["subsets"]) {
      only_keys(s, "subsets[]", {"name", "task", "path", "format", "weight"});
      SubsetDecl d;
      std::string path;
      take(s, "name", d.name, "subsets[]");
      take(s, "task", d.task, "subsets[]");
      take(s, "path", path, "subsets[]");
      take(s, "format", d.format, "subsets[]");
      take(s, "weight", d.weight, "subsets[]");
      if (d.name.empty() || path.empty()) fail("every subset needs 'name' and 'path'");
      if (!names.insert(d.name).second) fail("duplicate subset '" + d.name + "'");
      parse_task(d.task);
      if (d.format != "jsonl" && d.format != "coco") fail("subset '" + d.name + "': format must be jsonl or coco");
      if (d.format == "coco" && parse_task(d.task) != TaskKind::Detection) fail("subset '" + d.name + "': coco holds detection only");
      d.path = std::filesystem::path(path).is_absolute() ? std::filesystem::path(path) : base_dir / path;
      c.subsets.push_back(std::move(d));
    }
  }

  if (doc.contains("policy")) {
    const json& p = doc["policy"];
    only_keys(p, "policy", {"prompt_pools", "json_mode_probability", "synonyms", "synonyms_path", "synonym_probability",
                            "scale_min", "scale_max"});
    take(p, "prompt_pools", c.policy.prompt_pools, "policy");
    take(p, "json_mode_probability", c.policy.json_mode_probability, "policy");
    take(p, "synonyms", c.policy.synonyms, "policy");
    take(p, "synonym_probability", c.policy.synonym_probability, "policy");
    take(p, "scale_min", c.policy.scale_min, "policy");
    take(p, "scale_max", c.policy.scale_max, "policy");
    if (p.contains("synonyms_path")) {
      std::string path;
      take(p, "synonyms_path", path, "policy");
      const auto full = std::filesystem::path(path).is_absolute() ? std::filesystem::path(path) : base_dir / path;
      const json lex = json::parse(read_text_file(full), nullptr, false);
      if (lex.is_discarded()) fail(full.string() + ": invalid JSON");
      try {
        for (const auto& [w, reps] : lex.get<std::map<std::string, std::vector<std::string>>>()) {
          auto& dst = c.policy.synonyms[w];
          dst.insert(dst.end(), reps.begin(), reps.end());
        }
      } catch (const json::exception&) {
        fail(full.string() + ": synonym lexicon must map words to lists of strings");
      }
    }
  }
  c.policy.validate();

  if (doc.contains("metrics")) {
    const json& m = doc["metrics"];
    only_keys(m, "metrics", {"iou_thresholds", "trials_random", "include_constant_trial", "interpolation", "strict"});
    take(m, "iou_thresholds", c.metrics.iou_thresholds, "metrics");
    take(m, "trials_random", c.metrics.trials_random, "metrics");
    take(m, "include_constant_trial", c.metrics.include_constant_trial, "metrics");
    take(m, "strict", c.metrics.strict, "metrics");
    if (m.contains("interpolation")) {
      std::string name;
      take(m, "interpolation", name, "metrics");
      c.metrics.interpolation = parse_interpolation(name);
    }
  }
  c.metrics.seed = c.seed.value_or(0);
  try {
    c.metrics.validate();
  } catch (const Error& e) {
    fail(e.what());
  }

  if (doc.contains("tiling")) {
    const json& t = doc["tiling"];
    only_keys(t, "tiling", {"length", "overlap", "keep_ratio", "dedup_iou"});
    take(t, "length", c.tiling.spec.length, "tiling");
    take(t, "overlap", c.tiling.spec.overlap, "tiling");
    take(t, "keep_ratio", c.tiling.keep_ratio, "tiling");
    take(t, "dedup_iou", c.tiling.dedup_iou, "tiling");
  }
  try {
    c.tiling.spec.validate();
  } catch (const Error& e) {
    fail(e.what());
  }
  if (!(c.tiling.keep_ratio >= 0.0 && c.tiling.keep_ratio <= 1.0)) fail("tiling.keep_ratio must lie in [0, 1]");
  if (!(c.tiling.dedup_iou > 0.0 && c.tiling.dedup_iou <= 1.0)) fail("tiling.dedup_iou must lie in (0, 1]");

  c.zoom.patch = c.patch;
  if (doc.contains("zoom")) {
    const json& z = doc["zoom"];
    only_keys(z, "zoom", {"min_crop_side", "min_roi_side", "first_prompt", "density_threshold", "region_padding"});
    take(z, "min_crop_side", c.zoom.min_crop_side, "zoom");
    take(z, "min_roi_side", c.zoom.min_roi_side, "zoom");
    take(z, "first_prompt", c.zoom.first_prompt, "zoom");
    take(z, "density_threshold", c.zoom.density_threshold, "zoom");
    take(z, "region_padding", c.zoom.region_padding, "zoom");
  }
  c.zoom.validate();

  if (doc.contains("ingest")) {
    const json& g = doc["ingest"];
    only_keys(g, "ingest", {"degenerate", "strict"});
    take(g, "strict", c.ingest.strict, "ingest");
    std::string deg = "drop";
    take(g, "degenerate", deg, "ingest");
    if (deg == "drop") {
      c.ingest.degenerate = DegeneratePolicy::DropWithWarning;
    } else if (deg == "error") {
      c.ingest.degenerate = DegeneratePolicy::HardError;
    } else {
      fail("ingest.degenerate must be 'drop' or 'error'");
    }
  }

  c.source = c.to_json().dump();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  const json doc = json::parse(read_text_file(path), nullptr, false);
  if (doc.is_discarded()) fail(path.string() + ": invalid JSON");
  return config_from_json(doc, path.parent_path());
}

ordered_json RunConfig::to_json() const {
  ordered_json j;
  j["seed"] = seed ? ordered_json(*seed) : ordered_json(nullptr);
  j["patch"] = {{"patch_length", patch.patch_length}, {"min_pixels", patch.min_pixels}, {"max_pixels", patch.max_pixels}};
  j["subsets"] = ordered_json::array();
  for (const auto& s : subsets) {
    j["subsets"].push_back(
        {{"name", s.name}, {"task", s.task}, {"path", s.path.generic_string()}, {"format", s.format}, {"weight", s.weight}});
  }
  j["policy"] = {{"prompt_pools", policy.prompt_pools},
                 {"json_mode_probability", policy.json_mode_probability},
                 {"synonyms", policy.synonyms},
                 {"synonym_probability", policy.synonym_probability},
                 {"scale_min", policy.scale_min},
                 {"scale_max", policy.scale_max}};
  j["metrics"] = {{"iou_thresholds", metrics.iou_thresholds},
                  {"trials_random", metrics.trials_random},
                  {"include_constant_trial", metrics.include_constant_trial},
                  {"interpolation", std::string(to_string(metrics.interpolation))},
                  {"strict", metrics.strict}};
  j["tiling"] = {{"length", tiling.spec.length},
                 {"overlap", tiling.spec.overlap},
                 {"keep_ratio", tiling.keep_ratio},
                 {"dedup_iou", tiling.dedup_iou}};
  j["zoom"] = {{"min_crop_side", zoom.min_crop_side},
               {"min_roi_side", zoom.min_roi_side},
               {"first_prompt", zoom.first_prompt},
               {"density_threshold", zoom.density_threshold},
               {"region_padding", zoom.region_padding}};
  j["ingest"] = {{"degenerate", ingest.degenerate == DegeneratePolicy::HardError ? "error" : "drop"},
                 {"strict", ingest.strict}};
  return j;
}

LoadResult<Record> load_subset(const SubsetDecl& decl, const IngestOptions& opt) {
  LoadResult<Record> out;
  auto absorb = [&](auto&& res) {
    for (auto& r : res.records) out.records.emplace_back(std::move(r));
    out.diagnostics = std::move(res.diagnostics);
    out.rejected = res.rejected;
  };
  switch (parse_task(decl.task)) {
    case TaskKind::Detection:
      if (decl.format == "coco") {
        absorb(load_coco(decl.path, opt));
      } else {
        absorb(load_detection_jsonl(decl.path, opt));
      }
      break;
    case TaskKind::Grounding: absorb(load_grounding_jsonl(decl.path, opt)); break;
    case TaskKind::Conversation: absorb(load_conversation_jsonl(decl.path, opt)); break;
  }
  return out;
}

}  // namespace gvt

#include "cli.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>

#include "CLI11.hpp"
#include "gvt/augment.hpp"
#include "gvt/config.hpp"
#include "gvt/image_probe.hpp"
#include "gvt/metrics.hpp"
#include "gvt/records.hpp"
#include "gvt/response_codec.hpp"
#include "gvt/text.hpp"
#include "gvt/tiling.hpp"
#include "gvt/zoomchain.hpp"

namespace gvt::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Options shared by every subcommand.
struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

RunConfig effective_config(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? config_from_json(json::object()) : load_config(c.config_path);
  if (c.seed) cfg.seed = c.seed;
  cfg.metrics.seed = cfg.seed.value_or(0);
  cfg.metrics.jobs = c.jobs;
  return cfg;
}

std::uint64_t require_seed(const RunConfig& cfg) {
  if (!cfg.seed) throw UsageError("a seed is required: pass --seed or set 'seed' in the config");
  return *cfg.seed;
}

// Provenance written next to every output.
void write_manifest(const fs::path& path, const std::string& command, const RunConfig& cfg, ordered_json extra) {
  ordered_json options = cfg.to_json();
  ordered_json m;
  m["command"] = command;
  m["seed"] = cfg.seed ? ordered_json(*cfg.seed) : ordered_json(nullptr);
  m["config_hash"] = hex(fnv1a64(options.dump()));
  m["config"] = options;
  for (auto& [k, v] : extra.items()) m[k] = v;
  write_text_file(path, m.dump(2) + "\n");
}

fs::path manifest_for(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

void report_diagnostics(const Diagnostics& d, std::ostream& err, const std::string& prefix) {
  for (const auto& m : d.messages) err << prefix << m << "\n";
}

template <typename T>
std::vector<T> checked(LoadResult<T> res, std::ostream& err, const std::string& what) {
  report_diagnostics(res.diagnostics, err, what + ": ");
  return std::move(res.records);
}

void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
  } else {
    write_text_file(out_path, text);
  }
}

json parse_json_file(const fs::path& p) {
  const json doc = json::parse(read_text_file(p), nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::SchemaError, p.string() + ": invalid JSON");
  return doc;
}

std::vector<json> jsonl_objects(const fs::path& p, std::ostream& err) {
  std::vector<json> out;
  Diagnostics diag;
  for_each_jsonl(read_text_file(p), [&](std::size_t, const json& j) { out.push_back(j); }, diag);
  if (!diag.empty()) {
    report_diagnostics(diag, err, p.string() + ": ");
    throw Error(ErrorCode::SchemaError, p.string() + ": " + std::to_string(diag.size()) + " unreadable line(s)");
  }
  return out;
}

std::string str_field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_string()) throw Error(ErrorCode::SchemaError, where + ": missing string '" + key + "'");
  return j[key].get<std::string>();
}

// ---------------------------------------------------------------- convert

struct ConvertArgs {
  std::string from, to, in, out;
  bool strip = false, clean = false, strict = false;
  std::string prompt;
  std::string typos;
  std::vector<std::string> tags = default_descriptor_tags();
};

std::string tidy(std::string text, const ConvertArgs& a, const TypoTable& typos) {
  if (a.strip) text = strip_task_descriptors(text, a.prompt, a.tags);
  if (a.clean) text = clean_text(text, typos);
  return text;
}

int cmd_convert(const ConvertArgs& a, const Common& c, std::ostream& err) {
  RunConfig cfg = effective_config(c);
  IngestOptions opt = cfg.ingest;
  opt.strict = opt.strict || a.strict;
  TypoTable typos;
  if (!a.typos.empty()) typos = TypoTable(parse_json_file(a.typos).get<std::map<std::string, std::string>>());

  std::string text;
  std::size_t count = 0;
  if (a.from == "coco" || a.from == "detection") {
    auto recs = checked(a.from == "coco" ? load_coco(a.in, opt) : load_detection_jsonl(a.in, opt), err, a.in);
    count = recs.size();
    text = a.to == "coco" ? write_coco(recs).dump(2) + "\n" : to_jsonl(recs);
  } else if (a.to == "coco") {
    throw UsageError("--to coco needs detection input");
  } else if (a.from == "grounding") {
    auto recs = checked(load_grounding_jsonl(a.in, opt), err, a.in);
    for (auto& r : recs) r.expression = tidy(r.expression, a, typos);
    count = recs.size();
    text = to_jsonl(recs);
  } else {
    auto recs = checked(load_conversation_jsonl(a.in, opt), err, a.in);
    for (auto& r : recs) {
      for (auto& m : r.messages) {
        if (m.role != Role::User) continue;
        for (auto& p : m.content) {
          if (p.kind == ContentPart::Kind::Text) p.value = tidy(p.value, a, typos);
        }
      }
    }
    count = recs.size();
    text = to_jsonl(recs);
  }
  write_text_file(a.out, text);
  write_manifest(manifest_for(a.out), "convert", cfg,
                 {{"from", a.from}, {"to", a.to}, {"input", a.in}, {"records", count}, {"strip", a.strip}, {"clean", a.clean}});
  return kOk;
}

// ---------------------------------------------------------------- sample

struct SampleArgs {
  std::uint64_t n = 0;
  std::string out;
};

int cmd_sample(const SampleArgs& a, const Common& c, std::ostream& err) {
  if (c.config_path.empty()) throw UsageError("sample needs --config");
  RunConfig cfg = effective_config(c);
  const std::uint64_t seed = require_seed(cfg);
  std::vector<SubsetUnit> units;
  for (const auto& d : cfg.subsets) {
    auto res = load_subset(d, cfg.ingest);
    report_diagnostics(res.diagnostics, err, d.name + ": ");
    units.push_back({d.name, parse_task(d.task), std::move(res.records), d.weight});
  }
  Diagnostics diag;
  std::vector<TrainingSample> samples;
  if (a.n > 0) samples = generate_samples(units, cfg.policy, cfg.patch, seed, a.n, c.jobs, &diag);
  report_diagnostics(diag, err, "");

  std::string text;
  std::map<std::string, std::uint64_t> histogram;
  for (const auto& u : units) histogram[u.name] = 0;
  for (const auto& s : samples) {
    text += s.to_json().dump() + "\n";
    ++histogram[s.subset];
  }
  write_text_file(a.out, text);
  ordered_json hist;
  for (const auto& u : units) hist[u.name] = histogram[u.name];
  write_manifest(manifest_for(a.out), "sample", cfg, {{"n", a.n}, {"subset_counts", hist}});
  return kOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string kind, preds, gts, gt_format, out, csv, aliases;
  std::vector<std::string> categories;
  std::vector<double> iou_thresholds;
  std::optional<int> trials;
  std::string interp;
  bool no_constant = false, strict = false, sweep = false, f1 = false;
};

std::optional<QuadBox> pred_quad(const json& a, const std::string& where, Diagnostics& diag) {
  auto nums = [&](const char* key, std::size_t n) {
    const json& v = a[key];
    if (!v.is_array() || v.size() != n) throw Error(ErrorCode::SchemaError, where + ": '" + key + "' needs " + std::to_string(n) + " numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw Error(ErrorCode::SchemaError, where + ": non-numeric '" + key + "'");
      out.push_back(x.get<double>());
    }
    return out;
  };
  AnyBox box;
  if (a.contains("poly")) {
    box = make_quad(nums("poly", 8));
  } else if (a.contains("obox")) {
    const auto o = nums("obox", 5);
    box = OBox::make(o[0], o[1], o[2], o[3], o[4]);
  } else if (a.contains("bbox")) {
    const auto b = nums("bbox", 4);
    box = make_hbox(b[0], b[1], b[2], b[3]);
  } else {
    throw Error(ErrorCode::SchemaError, where + ": needs 'poly', 'obox' or 'bbox'");
  }
  try {
    return canonicalize_quad(unify_to_quad(box));
  } catch (const Error& e) {
    diag.add(where + ": " + e.what() + "; dropped");
    return std::nullopt;
  }
}

// Optional "target": {"height", "width"} says the prediction is in a resized frame.
std::optional<ResizePlan> pred_plan(const json& j, const ImageGeometry* native) {
  if (!j.contains("target") || native == nullptr) return std::nullopt;
  const ImageGeometry t = make_geometry(j["target"].at("height").get<std::int64_t>(), j["target"].at("width").get<std::int64_t>());
  return ResizePlan{*native, t, static_cast<double>(t.width) / static_cast<double>(native->width),
                    static_cast<double>(t.height) / static_cast<double>(native->height)};
}

int cmd_eval_detection(const EvalArgs& a, const Common& c, std::ostream& out, std::ostream& err) {
  RunConfig cfg = effective_config(c);
  require_seed(cfg);
  ApNcProtocol protocol = cfg.metrics;
  if (!a.iou_thresholds.empty()) protocol.iou_thresholds = a.iou_thresholds;
  if (a.trials) protocol.trials_random = *a.trials;
  if (a.no_constant) protocol.include_constant_trial = false;
  if (!a.interp.empty()) protocol.interpolation = parse_interpolation(a.interp);
  if (a.strict) protocol.strict = true;

  const bool coco = a.gt_format == "coco" || (a.gt_format.empty() && fs::path(a.gts).extension() == ".json");
  const auto gt_records = checked(coco ? load_coco(a.gts, cfg.ingest) : load_detection_jsonl(a.gts, cfg.ingest), err, a.gts);
  DetectionsByImage gts;
  std::map<std::string, ImageGeometry> geometry;
  for (const auto& r : gt_records) {
    auto& dst = gts[r.image];
    dst.insert(dst.end(), r.annotations.begin(), r.annotations.end());
    geometry[r.image] = r.geometry;
  }

  ScoredByImage scored;
  Diagnostics diag;
  for (const auto& j : jsonl_objects(a.preds, err)) {
    const std::string image = str_field(j, "image", a.preds);
    const auto g = geometry.find(image);
    const auto plan = pred_plan(j, g == geometry.end() ? nullptr : &g->second);
    auto& dst = scored[image];
    std::vector<std::pair<LabeledDetection, double>> dets;
    if (j.contains("response")) {
      ParseOptions po;
      po.strict = protocol.strict;
      auto res = parse_detections(str_field(j, "response", image), po);
      report_diagnostics(res.diagnostics, err, image + ": ");
      for (auto& d : res.response.detections) dets.push_back({std::move(d), 1.0});
    } else if (j.contains("annotations") && j["annotations"].is_array()) {
      std::size_t k = 0;
      for (const auto& ann : j["annotations"]) {
        const std::string where = image + " prediction " + std::to_string(k++);
        const auto q = pred_quad(ann, where, diag);
        if (!q) continue;
        const double score = ann.contains("score") ? ann["score"].get<double>() : 1.0;
        dets.push_back({{str_field(ann, "label", where), *q}, score});
      }
    } else {
      throw Error(ErrorCode::SchemaError, image + ": prediction needs 'response' or 'annotations'");
    }
    for (auto& [d, s] : dets) {
      if (plan) d = from_model_space(d, *plan, &diag);
      dst.push_back({std::move(d), s});
    }
  }
  report_diagnostics(diag, err, "");

  DetectionsByImage preds;
  for (const auto& [img, list] : scored) {
    auto& dst = preds[img];
    for (const auto& s : list) dst.push_back(s.det);
  }
  const CategorySet cats = a.categories.empty() ? CategorySet{} : CategorySet(a.categories);
  const EvalReport report = ap_nc(preds, gts, protocol, cats);
  ordered_json j = report.to_json();
  if (a.sweep) j["sweep"] = threshold_sweep(scored, gts, protocol, cats).to_json();
  if (a.f1) j["mf1"] = mean_f1(preds, gts).to_json();
  emit(j.dump(2) + "\n", a.out, out);
  if (!a.csv.empty()) write_text_file(a.csv, report.to_csv());
  if (!a.out.empty()) write_manifest(manifest_for(a.out), "eval detection", cfg, {{"preds", a.preds}, {"gts", a.gts}});
  return kOk;
}

std::map<std::string, json> preds_by_id(const std::string& path, std::ostream& err) {
  std::map<std::string, json> out;
  for (auto& j : jsonl_objects(path, err)) {
    const std::string id = str_field(j, "id", path);
    if (!out.emplace(id, std::move(j)).second) throw Error(ErrorCode::SchemaError, path + ": duplicate id '" + id + "'");
  }
  return out;
}

int cmd_eval_other(const EvalArgs& a, const Common& c, std::ostream& out, std::ostream& err) {
  RunConfig cfg = effective_config(c);
  const auto preds = preds_by_id(a.preds, err);
  auto response_of = [&](const std::string& id) -> std::optional<std::string> {
    const auto it = preds.find(id);
    if (it == preds.end()) return std::nullopt;
    return str_field(it->second, "response", id);
  };
  AliasMap aliases;
  if (!a.aliases.empty()) aliases = parse_json_file(a.aliases).get<AliasMap>();

  ordered_json report;
  if (a.kind == "grounding") {
    const auto gts = checked(load_grounding_jsonl(a.gts, cfg.ingest), err, a.gts);
    std::vector<std::optional<HBox>> p;
    std::vector<HBox> g;
    for (const auto& r : gts) {
      g.push_back(r.target);
      std::optional<HBox> box;
      if (const auto text = response_of(r.id)) {
        try {
          box = parse_hbox(*text);
          if (const auto plan = pred_plan(preds.at(r.id), &r.geometry)) box = from_model_space(*box, *plan);
        } catch (const Error&) {
          box.reset();
        }
      }
      p.push_back(box);
    }
    report = grounding_accuracy(p, g).to_json();
  } else {
    std::vector<json> gts = jsonl_objects(a.gts, err);
    std::vector<std::string> p, g;
    for (const auto& r : gts) {
      const std::string id = str_field(r, "id", a.gts);
      g.push_back(str_field(r, "answer", id));
      p.push_back(response_of(id).value_or(""));
    }
    if (a.kind == "classification") {
      report = classification_accuracy(p, g, aliases).to_json();
    } else if (a.kind == "vqa") {
      report = vqa_accuracy(p, g, aliases).to_json();
    } else {
      std::vector<VqaOutcome> outcomes;
      for (std::size_t i = 0; i < gts.size(); ++i) {
        const std::string id = str_field(gts[i], "id", a.gts);
        const auto one = vqa_accuracy(std::span(&p[i], 1), std::span(&g[i], 1), aliases);
        outcomes.push_back({str_field(gts[i], "source", id), str_field(gts[i], "task", id), one.correct == 1});
      }
      report = lrsvqa_average_accuracy(outcomes).to_json();
    }
  }
  emit(report.dump(2) + "\n", a.out, out);
  if (!a.out.empty()) write_manifest(manifest_for(a.out), "eval " + a.kind, cfg, {{"preds", a.preds}, {"gts", a.gts}});
  return kOk;
}

// ---------------------------------------------------------------- tile

struct TileArgs {
  std::string manifest, annotations, out, shards;
  std::optional<std::int64_t> length, overlap;
  std::optional<double> keep_ratio, dedup_iou;
  bool merge = false;
};

ordered_json window_json(const TileWindow& w) { return {{"x0", w.x0}, {"y0", w.y0}, {"w", w.w}, {"h", w.h}}; }

int cmd_tile(const TileArgs& a, const Common& c, std::ostream& err) {
  RunConfig cfg = effective_config(c);
  if (a.length) cfg.tiling.spec.length = *a.length;
  if (a.overlap) cfg.tiling.spec.overlap = *a.overlap;
  if (a.keep_ratio) cfg.tiling.keep_ratio = *a.keep_ratio;
  if (a.dedup_iou) cfg.tiling.dedup_iou = *a.dedup_iou;
  cfg.tiling.spec.validate();

  if (a.merge) {
    if (a.shards.empty()) throw UsageError("--merge needs --shards");
    // source image -> (geometry, windows in file order)
    std::map<std::string, std::pair<ImageGeometry, std::vector<WindowDetections>>> groups;
    std::vector<std::string> order;
    for (const auto& j : jsonl_objects(a.shards, err)) {
      const std::string src = str_field(j, "source_image", a.shards);
      const json& w = j.at("window");
      const TileWindow win{w.at("x0").get<std::int64_t>(), w.at("y0").get<std::int64_t>(), w.at("w").get<std::int64_t>(),
                           w.at("h").get<std::int64_t>()};
      Diagnostics diag;
      const DetectionRecord local = detection_from_json(j, cfg.ingest, &diag);
      report_diagnostics(diag, err, src + ": ");
      auto [it, fresh] = groups.try_emplace(src);
      if (fresh) order.push_back(src);
      it->second.first = make_geometry(j.at("source_height").get<std::int64_t>(), j.at("source_width").get<std::int64_t>());
      it->second.second.push_back({win, local.annotations});
    }
    std::vector<DetectionRecord> merged;
    for (const auto& src : order) {
      const auto& [geom, wins] = groups[src];
      merged.push_back({src, src, geom, merge_windows(wins, cfg.tiling.dedup_iou)});
    }
    write_text_file(a.out, to_jsonl(merged));
    write_manifest(manifest_for(a.out), "tile merge", cfg, {{"shards", a.shards}, {"images", merged.size()}});
    return kOk;
  }

  if (a.manifest.empty()) throw UsageError("tile needs --manifest");
  const fs::path base = fs::path(a.manifest).parent_path();
  std::map<std::string, std::vector<LabeledDetection>> anns;
  if (!a.annotations.empty()) {
    const bool coco = fs::path(a.annotations).extension() == ".json";
    for (const auto& r : checked(coco ? load_coco(a.annotations, cfg.ingest) : load_detection_jsonl(a.annotations, cfg.ingest), err,
                                 a.annotations)) {
      auto& dst = anns[r.image];
      dst.insert(dst.end(), r.annotations.begin(), r.annotations.end());
    }
  }

  std::string windows_text, shards_text;
  std::size_t n_windows = 0;
  for (const auto& j : jsonl_objects(a.manifest, err)) {
    const std::string image = str_field(j, "image", a.manifest);
    ImageGeometry g;
    if (j.contains("height") && j.contains("width")) {
      g = make_geometry(j["height"].get<std::int64_t>(), j["width"].get<std::int64_t>());
    } else {
      const fs::path p = fs::path(image).is_absolute() ? fs::path(image) : base / image;
      g = probe_image_file(p);
    }
    const auto wins = plan_windows(g, cfg.tiling.spec);
    const auto it = anns.find(image);
    for (std::size_t k = 0; k < wins.size(); ++k) {
      const auto& w = wins[k];
      const std::string wid = image + "#" + std::to_string(k);
      const ordered_json wj{{"window_id", wid}, {"image", image}, {"index", k},
                            {"x0", w.x0},       {"y0", w.y0},       {"w", w.w}, {"h", w.h}};
      windows_text += wj.dump() + "\n";
      ++n_windows;
      if (a.annotations.empty()) continue;
      DetectionRecord shard{wid, wid, make_geometry(w.h, w.w), {}};
      if (it != anns.end()) shard.annotations = clip_annotations(it->second, w, cfg.tiling.keep_ratio);
      ordered_json sj = to_json(shard);
      sj["source_image"] = image;
      sj["source_height"] = g.height;
      sj["source_width"] = g.width;
      sj["window"] = window_json(w);
      shards_text += sj.dump() + "\n";
    }
  }
  const fs::path dir(a.out);
  write_text_file(dir / "windows.jsonl", windows_text);
  if (!a.annotations.empty()) write_text_file(dir / "shards.jsonl", shards_text);
  write_manifest(dir / "manifest.json", "tile", cfg, {{"manifest", a.manifest}, {"windows", n_windows}});
  return kOk;
}

// ---------------------------------------------------------------- zoomgen

struct ZoomArgs {
  std::string recipe, in, format, out;
  bool mcq = false;
  std::optional<std::size_t> density_threshold;
  std::optional<double> min_crop_side, padding;
};

int cmd_zoomgen(const ZoomArgs& a, const Common& c, std::ostream& err) {
  RunConfig cfg = effective_config(c);
  const std::uint64_t seed = require_seed(cfg);
  ZoomConfig zc = cfg.zoom;
  if (a.density_threshold) zc.density_threshold = *a.density_threshold;
  if (a.min_crop_side) zc.min_crop_side = *a.min_crop_side;
  if (a.padding) zc.region_padding = *a.padding;
  zc.validate();

  ZoomStats stats;
  std::vector<ConversationRecord> convs;
  if (a.recipe == "external") {
    auto res = ingest_external_qa(a.in, zc.region_padding);
    report_diagnostics(res.diagnostics, err, a.in + ": ");
    stats.excluded += res.rejected;
    convs = run_external_recipe(res.records, a.mcq, zc, seed, stats);
  } else {
    const ZoomRecipe recipe = a.recipe == "counting" ? ZoomRecipe::Counting
                              : a.recipe == "comparison" ? ZoomRecipe::Comparison
                                                         : ZoomRecipe::Mcq;
    const bool coco = a.format == "coco" || (a.format.empty() && fs::path(a.in).extension() == ".json");
    const auto recs = checked(coco ? load_coco(a.in, cfg.ingest) : load_detection_jsonl(a.in, cfg.ingest), err, a.in);
    convs = run_zoom_recipe(recs, recipe, zc, seed, stats, c.jobs);
  }
  report_diagnostics(stats.diagnostics, err, "");
  write_text_file(a.out, to_jsonl(convs));
  write_manifest(manifest_for(a.out), "zoomgen", cfg,
                 {{"generator", "zoomgen/" + a.recipe},
                  {"mcq", a.mcq},
                  {"density_threshold", zc.density_threshold},
                  {"min_crop_side", zc.min_crop_side},
                  {"region_padding", zc.region_padding},
                  {"records", stats.records},
                  {"conversations", stats.conversations},
                  {"excluded", stats.excluded}});
  return kOk;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError: return kUsage;
    case ErrorCode::Unsatisfiable:
    case ErrorCode::UncanonicalInput: return kInternal;
    default: return kData;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Geospatial vision-language toolkit: data curation, tiling, zoom chains and score-free evaluation."};
  app.require_subcommand(1);
  Common common;
  std::uint64_t seed_value = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed_value, "Seed for all randomness");
    sub->add_option("--jobs", common.jobs, "Worker threads")->check(CLI::PositiveNumber);
  };

  ConvertArgs conv;
  auto* c_convert = app.add_subcommand("convert", "Convert and clean record files");
  c_convert->add_option("--from", conv.from)->required()->check(CLI::IsMember({"coco", "detection", "grounding", "conversation"}));
  c_convert->add_option("--to", conv.to)->required()->check(CLI::IsMember({"coco", "jsonl"}));
  c_convert->add_option("--in", conv.in)->required()->check(CLI::ExistingFile);
  c_convert->add_option("--out", conv.out)->required();
  c_convert->add_flag("--strip", conv.strip, "Remove task descriptor tags");
  c_convert->add_option("--prompt", conv.prompt, "Text put in place of a leading descriptor tag");
  c_convert->add_option("--tags", conv.tags, "Descriptor tags to strip");
  c_convert->add_flag("--clean", conv.clean, "Rule-based text cleanup");
  c_convert->add_option("--typos", conv.typos, "Typo table (JSON object)")->check(CLI::ExistingFile);
  c_convert->add_flag("--strict", conv.strict, "Fail on the first bad record");
  add_common(c_convert);

  SampleArgs smp;
  auto* c_sample = app.add_subcommand("sample", "Draw augmented training samples");
  c_sample->add_option("--n", smp.n)->required();
  c_sample->add_option("--out", smp.out)->required();
  add_common(c_sample);

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Score predictions");
  c_eval->add_option("kind", ev.kind)->required()->check(CLI::IsMember({"detection", "grounding", "classification", "vqa", "lrsvqa"}));
  c_eval->add_option("--preds", ev.preds)->required()->check(CLI::ExistingFile);
  c_eval->add_option("--gts", ev.gts)->required()->check(CLI::ExistingFile);
  c_eval->add_option("--gt-format", ev.gt_format)->check(CLI::IsMember({"coco", "jsonl"}));
  c_eval->add_option("--out", ev.out, "Report path (default: stdout)");
  c_eval->add_option("--csv", ev.csv, "Per-class CSV (detection)");
  c_eval->add_option("--categories", ev.categories)->delimiter(',');
  c_eval->add_option("--iou-thresholds", ev.iou_thresholds)->delimiter(',');
  c_eval->add_option("--trials", ev.trials);
  c_eval->add_option("--interp", ev.interp)->check(CLI::IsMember({"voc07_11point", "all_points"}));
  c_eval->add_flag("--no-constant", ev.no_constant, "Skip the constant-score trial");
  c_eval->add_flag("--strict", ev.strict);
  c_eval->add_flag("--sweep", ev.sweep, "Add the score threshold sweep");
  c_eval->add_flag("--f1", ev.f1, "Add mean F1");
  c_eval->add_option("--aliases", ev.aliases, "Answer aliases (JSON object)")->check(CLI::ExistingFile);
  add_common(c_eval);

  TileArgs tl;
  auto* c_tile = app.add_subcommand("tile", "Plan windows and clip annotations, or merge window detections");
  c_tile->add_option("--manifest", tl.manifest, "JSON Lines of {image, height?, width?}")->check(CLI::ExistingFile);
  c_tile->add_option("--annotations", tl.annotations)->check(CLI::ExistingFile);
  c_tile->add_option("--out", tl.out, "Output directory, or merged file with --merge")->required();
  c_tile->add_option("--length", tl.length);
  c_tile->add_option("--overlap", tl.overlap);
  c_tile->add_option("--keep-ratio", tl.keep_ratio);
  c_tile->add_option("--dedup-iou", tl.dedup_iou);
  c_tile->add_flag("--merge", tl.merge, "Merge window-local detections back to images");
  c_tile->add_option("--shards", tl.shards)->check(CLI::ExistingFile);
  add_common(c_tile);

  ZoomArgs zg;
  auto* c_zoom = app.add_subcommand("zoomgen", "Synthesize zoom-in chain conversations");
  c_zoom->add_option("--recipe", zg.recipe)->required()->check(CLI::IsMember({"counting", "comparison", "mcq", "external"}));
  c_zoom->add_option("--in", zg.in)->required()->check(CLI::ExistingFile);
  c_zoom->add_option("--format", zg.format)->check(CLI::IsMember({"coco", "jsonl"}));
  c_zoom->add_option("--out", zg.out)->required();
  c_zoom->add_flag("--mcq", zg.mcq, "External QA with distractors becomes multiple choice");
  c_zoom->add_option("--density-threshold", zg.density_threshold);
  c_zoom->add_option("--min-crop-side", zg.min_crop_side);
  c_zoom->add_option("--padding", zg.padding);
  add_common(c_zoom);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kUsage;
  }

  try {
    for (auto* sub : app.get_subcommands()) {
      if (sub->count("--seed") > 0) common.seed = seed_value;
    }
    if (c_convert->parsed()) return cmd_convert(conv, common, err);
    if (c_sample->parsed()) return cmd_sample(smp, common, err);
    if (c_eval->parsed()) return ev.kind == "detection" ? cmd_eval_detection(ev, common, out, err) : cmd_eval_other(ev, common, out, err);
    if (c_tile->parsed()) return cmd_tile(tl, common, err);
    if (c_zoom->parsed()) return cmd_zoomgen(zg, common, err);
  } catch (const UsageError& e) {
    err << "usage: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}

}  // namespace gvt::cli

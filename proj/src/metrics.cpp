#include "gvt/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "gvt/kernels.hpp"
#include "gvt/parallel.hpp"
#include "gvt/random.hpp"
#include "gvt/response_codec.hpp"

namespace gvt {

namespace {

// Index of the unmatched GT with the highest IoU >= thr, scanning gts in order.
std::optional<std::size_t> best_unmatched(const double* ious, std::size_t n_gt, const std::vector<std::uint8_t>& used,
                                          double thr) {
  std::optional<std::size_t> best;
  double best_iou = 0.0;
  for (std::size_t g = 0; g < n_gt; ++g) {
    if (used[g] || ious[g] < thr) continue;
    if (!best || ious[g] > best_iou) {
      best = g;
      best_iou = ious[g];
    }
  }
  return best;
}

// IoUs between every prediction and GT of one category in one image, row-major.
std::vector<double> iou_matrix(std::span<const QuadBox> preds, std::span<const QuadBox> gts) {
  std::vector<double> out(preds.size() * gts.size(), 0.0);
  if (gts.empty()) return out;
  kernels::HBoxSoA gt_env;
  for (const auto& g : gts) gt_env.push_back(hbox_envelope(g));
  std::vector<std::uint8_t> mask(gts.size());
  for (std::size_t p = 0; p < preds.size(); ++p) {
    kernels::hbox_overlap_mask(hbox_envelope(preds[p]), gt_env, mask);
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (mask[g]) out[p * gts.size() + g] = quad_iou(preds[p], gts[g]);
    }
  }
  return out;
}

double mean_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double pop_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

std::size_t threshold_index(const std::vector<double>& thresholds, double t) {
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (std::fabs(thresholds[i] - t) < 1e-12) return i;
  }
  throw Error(ErrorCode::ValidationError, "threshold not evaluated");
}

// Everything about an evaluation that does not depend on scores.
struct Prepared {
  std::vector<std::string> classes;
  std::vector<double> thresholds;
  std::vector<std::size_t> n_gt;  // per class
  struct Group {
    std::size_t n_gt = 0;
    std::vector<double> ious;  // preds x gts
  };
  std::vector<Group> groups;  // one per (image, class) with predictions
  struct Pred {
    std::size_t cls = 0;
    std::size_t group = 0;
    std::size_t row = 0;
  };
  std::vector<Pred> preds;  // global order: images ascending, then list order
  std::size_t n_images = 0;
  std::size_t n_gt_total = 0;
  std::size_t excluded = 0;
};

template <typename PredMap, typename GetDet>
Prepared prepare(const PredMap& preds, const DetectionsByImage& gts, const ApNcProtocol& protocol,
                 const CategorySet& categories, GetDet get_det) {
  Prepared P;
  if (categories.empty()) {
    std::vector<std::string> names;
    for (const auto& [img, dets] : gts) {
      for (const auto& d : dets) names.push_back(d.category);
    }
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    P.classes = names;
  } else {
    P.classes = categories.sorted();
  }
  auto class_of = [&](const std::string& c) -> std::optional<std::size_t> {
    const auto it = std::lower_bound(P.classes.begin(), P.classes.end(), c);
    if (it == P.classes.end() || *it != c) return std::nullopt;
    return static_cast<std::size_t>(it - P.classes.begin());
  };

  P.thresholds = protocol.iou_thresholds;
  for (double t : {0.5, 0.75}) {
    if (std::none_of(P.thresholds.begin(), P.thresholds.end(), [&](double x) { return std::fabs(x - t) < 1e-12; })) {
      P.thresholds.push_back(t);
    }
  }
  std::sort(P.thresholds.begin(), P.thresholds.end());

  std::vector<std::string> images;
  for (const auto& [img, d] : gts) images.push_back(img);
  for (const auto& [img, d] : preds) images.push_back(img);
  std::sort(images.begin(), images.end());
  images.erase(std::unique(images.begin(), images.end()), images.end());
  P.n_images = images.size();
  P.n_gt.assign(P.classes.size(), 0);

  struct GroupInput {
    std::vector<QuadBox> pred_boxes, gt_boxes;
  };
  std::vector<GroupInput> inputs;
  for (const auto& img : images) {
    std::vector<std::vector<QuadBox>> gt_by_class(P.classes.size());
    if (const auto it = gts.find(img); it != gts.end()) {
      for (const auto& d : it->second) {
        const auto c = class_of(d.category);
        if (!c) throw Error(ErrorCode::CategoryMismatch, "ground truth category '" + d.category + "' not in set");
        gt_by_class[*c].push_back(d.box);
        ++P.n_gt[*c];
        ++P.n_gt_total;
      }
    }
    std::vector<std::optional<std::size_t>> group_of(P.classes.size());
    if (const auto it = preds.find(img); it != preds.end()) {
      for (const auto& item : it->second) {
        const LabeledDetection& d = get_det(item);
        const auto c = class_of(d.category);
        if (!c) {
          if (protocol.strict) {
            throw Error(ErrorCode::CategoryMismatch, "predicted category '" + d.category + "' not in set");
          }
          ++P.excluded;
          continue;
        }
        if (!group_of[*c]) {
          group_of[*c] = inputs.size();
          inputs.push_back({{}, gt_by_class[*c]});
        }
        auto& in = inputs[*group_of[*c]];
        P.preds.push_back({*c, *group_of[*c], in.pred_boxes.size()});
        in.pred_boxes.push_back(d.box);
      }
    }
  }
  P.groups.resize(inputs.size());
  parallel_for(inputs.size(), protocol.jobs, [&](std::size_t i) {
    P.groups[i].n_gt = inputs[i].gt_boxes.size();
    P.groups[i].ious = iou_matrix(inputs[i].pred_boxes, inputs[i].gt_boxes);
  });
  return P;
}

struct TrialSpec {
  bool random = false;
  std::uint64_t seed = 0;
};

// Per-class AP for every threshold, over the predictions with keep[i] set.
// Classes without GT and without kept predictions come back as nullopt.
std::vector<std::optional<std::vector<double>>> evaluate_trial(const Prepared& P, const std::vector<std::uint8_t>& keep,
                                                               const TrialSpec& trial, Interpolation interp) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < P.preds.size(); ++i) {
    if (keep[i]) order.push_back(i);
  }
  if (trial.random) {
    Rng rng(trial.seed);
    std::vector<double> score(P.preds.size(), 0.0);
    for (std::size_t i : order) score[i] = rng.uniform01();
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  }

  std::vector<std::size_t> class_preds(P.classes.size(), 0);
  for (std::size_t i : order) ++class_preds[P.preds[i].cls];

  std::vector<std::optional<std::vector<double>>> out(P.classes.size());
  for (std::size_t c = 0; c < P.classes.size(); ++c) {
    if (P.n_gt[c] > 0 || class_preds[c] > 0) out[c] = std::vector<double>(P.thresholds.size(), 0.0);
  }
  std::vector<std::vector<std::uint8_t>> used(P.groups.size());
  std::vector<std::vector<std::uint8_t>> flags(P.classes.size());
  for (std::size_t t = 0; t < P.thresholds.size(); ++t) {
    for (std::size_t g = 0; g < P.groups.size(); ++g) used[g].assign(P.groups[g].n_gt, 0);
    for (auto& f : flags) f.clear();
    for (std::size_t i : order) {
      const auto& p = P.preds[i];
      const auto& grp = P.groups[p.group];
      const auto hit = best_unmatched(grp.ious.data() + p.row * grp.n_gt, grp.n_gt, used[p.group], P.thresholds[t]);
      if (hit) used[p.group][*hit] = 1;
      flags[p.cls].push_back(hit ? 1 : 0);
    }
    for (std::size_t c = 0; c < P.classes.size(); ++c) {
      if (!out[c] || P.n_gt[c] == 0) continue;  // no GT: AP stays 0
      (*out[c])[t] = average_precision(flags[c], P.n_gt[c], interp);
    }
  }
  return out;
}

std::vector<TrialSpec> trial_specs(const ApNcProtocol& protocol) {
  std::vector<TrialSpec> specs;
  for (int r = 0; r < protocol.trials_random; ++r) {
    specs.push_back({true, protocol.seed + static_cast<std::uint64_t>(r)});
  }
  if (protocol.include_constant_trial) specs.push_back({false, 0});
  return specs;
}

EvalReport run_report(const Prepared& P, const std::vector<std::uint8_t>& keep, const ApNcProtocol& protocol) {
  EvalReport R;
  R.protocol = protocol;
  R.thresholds = P.thresholds;
  R.n_images = P.n_images;
  R.n_gt = P.n_gt_total;
  R.n_pred = static_cast<std::size_t>(std::count(keep.begin(), keep.end(), 1));
  R.excluded_predictions = P.excluded;

  const auto specs = trial_specs(protocol);
  std::vector<std::vector<std::optional<std::vector<double>>>> per_trial(specs.size());
  parallel_for(specs.size(), protocol.jobs, [&](std::size_t k) {
    per_trial[k] = evaluate_trial(P, keep, specs[k], protocol.interpolation);
  });

  // Skipping depends only on GT and kept predictions, so it is the same for every trial.
  std::vector<std::size_t> evaluated;
  if (!specs.empty()) {
    for (std::size_t c = 0; c < P.classes.size(); ++c) {
      if (per_trial[0][c]) {
        evaluated.push_back(c);
        R.classes.push_back(P.classes[c]);
      } else {
        R.skipped_classes.push_back(P.classes[c]);
      }
    }
  }

  const std::size_t i50 = threshold_index(P.thresholds, 0.5);
  const std::size_t i75 = threshold_index(P.thresholds, 0.75);
  std::vector<std::size_t> range_idx;
  for (double t : protocol.iou_thresholds) range_idx.push_back(threshold_index(P.thresholds, t));

  std::vector<double> v50, v75, v5095, r50, r75, r5095;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    TrialResult tr;
    tr.kind = specs[k].random ? "random" : "constant";
    tr.seed = specs[k].seed;
    std::vector<double> c50, c75, c5095;
    for (std::size_t c : evaluated) {
      const auto& aps = *per_trial[k][c];
      tr.per_class[P.classes[c]] = aps;
      c50.push_back(aps[i50]);
      c75.push_back(aps[i75]);
      std::vector<double> over;
      for (std::size_t i : range_idx) over.push_back(aps[i]);
      c5095.push_back(mean_of(over));
    }
    tr.ap50 = mean_of(c50);
    tr.ap75 = mean_of(c75);
    tr.ap50_95 = mean_of(c5095);
    v50.push_back(tr.ap50);
    v75.push_back(tr.ap75);
    v5095.push_back(tr.ap50_95);
    if (specs[k].random) {
      r50.push_back(tr.ap50);
      r75.push_back(tr.ap75);
      r5095.push_back(tr.ap50_95);
    }
    R.trials.push_back(std::move(tr));
  }

  auto summarize = [&](MetricSummary& s, const std::vector<double>& all, const std::vector<double>& rnd,
                       double TrialResult::*field) {
    s.mean = mean_of(all);
    s.std = pop_std(all);
    s.random_mean = mean_of(rnd);
    s.random_std = pop_std(rnd);
    if (protocol.include_constant_trial) s.constant = R.trials.back().*field;
  };
  summarize(R.ap50, v50, r50, &TrialResult::ap50);
  summarize(R.ap75, v75, r75, &TrialResult::ap75);
  summarize(R.ap50_95, v5095, r5095, &TrialResult::ap50_95);

  for (const auto& name : R.classes) {
    std::vector<double> a50, a5095;
    for (const auto& tr : R.trials) {
      const auto& aps = tr.per_class.at(name);
      a50.push_back(aps[i50]);
      std::vector<double> over;
      for (std::size_t i : range_idx) over.push_back(aps[i]);
      a5095.push_back(mean_of(over));
    }
    R.class_ap50[name] = mean_of(a50);
    R.class_ap50_95[name] = mean_of(a5095);
  }
  return R;
}

nlohmann::ordered_json summary_json(const MetricSummary& s) {
  nlohmann::ordered_json j;
  j["mean"] = s.mean;
  j["std"] = s.std;
  j["random_mean"] = s.random_mean;
  j["random_std"] = s.random_std;
  j["constant"] = s.constant ? nlohmann::ordered_json(*s.constant) : nlohmann::ordered_json(nullptr);
  return j;
}

template <typename Fn>
AccuracyReport accuracy_loop(std::size_t n, Fn&& correct) {
  AccuracyReport r;
  r.total = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (correct(i, r)) ++r.correct;
  }
  r.accuracy = n == 0 ? 0.0 : static_cast<double>(r.correct) / static_cast<double>(n);
  return r;
}

void require_same_length(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(a) + " predictions vs " + std::to_string(b) + " ground-truth entries");
  }
}

}  // namespace

std::string_view to_string(Interpolation interp) {
  return interp == Interpolation::Voc07 ? "voc07_11point" : "all_points";
}

Interpolation parse_interpolation(std::string_view name) {
  if (name == "voc07_11point" || name == "11point" || name == "voc07") return Interpolation::Voc07;
  if (name == "all_points" || name == "area") return Interpolation::AllPoints;
  throw Error(ErrorCode::ConfigError, "unknown interpolation '" + std::string(name) + "'");
}

MatchResult match_detections(std::span<const LabeledDetection> preds, std::span<const LabeledDetection> gts,
                             double iou_thr) {
  MatchResult r;
  r.tp.assign(preds.size(), 0);
  r.matched.assign(preds.size(), std::nullopt);
  std::vector<std::uint8_t> used(gts.size(), 0);
  std::vector<double> ious(gts.size());
  for (std::size_t p = 0; p < preds.size(); ++p) {
    for (std::size_t g = 0; g < gts.size(); ++g) {
      // Other categories can never match; -1 keeps them below any threshold.
      ious[g] = gts[g].category == preds[p].category ? quad_iou(preds[p].box, gts[g].box) : -1.0;
    }
    const auto hit = best_unmatched(ious.data(), gts.size(), used, iou_thr);
    if (hit) {
      used[*hit] = 1;
      r.tp[p] = 1;
      r.matched[p] = hit;
    }
  }
  return r;
}

double average_precision(std::span<const std::uint8_t> flags, std::size_t n_gt, Interpolation interp) {
  if (n_gt == 0) throw Error(ErrorCode::ValidationError, "average_precision needs n_gt > 0");
  const std::size_t n = flags.size();
  std::vector<double> recall(n), precision(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    tp += flags[i] ? 1 : 0;
    recall[i] = static_cast<double>(tp) / static_cast<double>(n_gt);
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  if (interp == Interpolation::Voc07) {
    double sum = 0.0;
    for (int k = 0; k <= 10; ++k) {
      const double t = k / 10.0;
      double best = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (recall[i] >= t) best = std::max(best, precision[i]);
      }
      sum += best;
    }
    return sum / 11.0;
  }
  // Precision envelope, then area over recall steps.
  std::vector<double> mrec(n + 2), mpre(n + 2);
  mrec[0] = 0.0;
  mpre[0] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mrec[i + 1] = recall[i];
    mpre[i + 1] = precision[i];
  }
  mrec[n + 1] = 1.0;
  mpre[n + 1] = 0.0;
  for (std::size_t i = n + 1; i > 0; --i) mpre[i - 1] = std::max(mpre[i - 1], mpre[i]);
  double ap = 0.0;
  for (std::size_t i = 0; i + 1 < mrec.size(); ++i) {
    if (mrec[i + 1] != mrec[i]) ap += (mrec[i + 1] - mrec[i]) * mpre[i + 1];
  }
  return ap;
}

std::vector<double> coco_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back((50 + 5 * i) / 100.0);
  return t;
}

void ApNcProtocol::validate() const {
  if (iou_thresholds.empty()) throw Error(ErrorCode::ConfigError, "iou_thresholds must not be empty");
  for (double t : iou_thresholds) {
    if (!(t > 0.0 && t <= 1.0)) throw Error(ErrorCode::ConfigError, "iou thresholds must lie in (0, 1]");
  }
  if (trials_random < 0) throw Error(ErrorCode::ConfigError, "trials_random must be >= 0");
  if (trials_random == 0 && !include_constant_trial) throw Error(ErrorCode::ConfigError, "no trials to run");
  if (jobs < 1) throw Error(ErrorCode::ConfigError, "jobs must be >= 1");
}

EvalReport ap_nc(const DetectionsByImage& preds, const DetectionsByImage& gts, const ApNcProtocol& protocol,
                 const CategorySet& categories) {
  protocol.validate();
  const Prepared P =
      prepare(preds, gts, protocol, categories, [](const LabeledDetection& d) -> const LabeledDetection& { return d; });
  return run_report(P, std::vector<std::uint8_t>(P.preds.size(), 1), protocol);
}

std::vector<double> sweep_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 20; ++i) t.push_back(i / 20.0);
  return t;
}

SweepResult threshold_sweep(const ScoredByImage& preds, const DetectionsByImage& gts, const ApNcProtocol& protocol,
                            const CategorySet& categories) {
  protocol.validate();
  const Prepared P =
      prepare(preds, gts, protocol, categories, [](const ScoredDetection& d) -> const LabeledDetection& { return d.det; });
  // Scores in the same global order as P.preds.
  std::vector<double> scores;
  for (const auto& [img, dets] : preds) {
    for (const auto& d : dets) {
      if (!std::isfinite(d.score)) throw Error(ErrorCode::ValidationError, "non-finite score in image " + img);
      if (std::binary_search(P.classes.begin(), P.classes.end(), d.det.category)) scores.push_back(d.score);
    }
  }
  SweepResult out;
  double best = -1.0;
  for (double t : sweep_thresholds()) {
    std::vector<std::uint8_t> keep(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) keep[i] = scores[i] >= t ? 1 : 0;
    const EvalReport r = run_report(P, keep, protocol);
    out.curve.push_back({t, r.ap50.mean, r.n_pred});
    if (r.ap50.mean > best) {
      best = r.ap50.mean;
      out.best_threshold = t;
    }
  }
  return out;
}

F1Report mean_f1(const DetectionsByImage& preds, const DetectionsByImage& gts, double iou_thr) {
  F1Report rep;
  for (const auto& [img, dets] : gts) {
    for (const auto& d : dets) ++rep.per_class[d.category].n_gt;
  }
  static const std::vector<LabeledDetection> none;
  for (const auto& [img, dets] : preds) {
    const auto it = gts.find(img);
    const auto& g = it == gts.end() ? none : it->second;
    const MatchResult m = match_detections(dets, g, iou_thr);
    for (std::size_t i = 0; i < dets.size(); ++i) {
      auto& c = rep.per_class[dets[i].category];
      if (m.tp[i]) {
        ++c.tp;
      } else {
        ++c.fp;
      }
    }
  }
  std::vector<double> f1s;
  for (auto& [name, c] : rep.per_class) {
    c.precision = c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    c.recall = c.n_gt == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.n_gt);
    c.f1 = c.precision + c.recall == 0.0 ? 0.0 : 2.0 * c.precision * c.recall / (c.precision + c.recall);
    f1s.push_back(c.f1);
  }
  rep.evaluable = !f1s.empty();
  rep.mean_f1 = mean_of(f1s);
  return rep;
}

AccuracyReport grounding_accuracy(std::span<const std::optional<HBox>> preds, std::span<const HBox> gts) {
  require_same_length(preds.size(), gts.size());
  kernels::HBoxSoA a, b;
  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!preds[i]) continue;
    a.push_back(*preds[i]);
    b.push_back(gts[i]);
    valid.push_back(i);
  }
  std::vector<double> iou(valid.size());
  kernels::hbox_iou_pairwise(a, b, iou);
  std::vector<double> by_index(preds.size(), -1.0);
  for (std::size_t k = 0; k < valid.size(); ++k) by_index[valid[k]] = iou[k];
  return accuracy_loop(preds.size(), [&](std::size_t i, AccuracyReport& r) {
    if (!preds[i]) ++r.unparseable;
    return by_index[i] > 0.5;
  });
}

std::string normalize_answer(std::string_view text) {
  std::string out;
  bool space = false;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

namespace {

// Maps a normalized answer to its alias group key, or to itself.
std::string alias_key(const std::string& norm, const AliasMap& aliases) {
  for (const auto& [key, syns] : aliases) {
    const std::string k = normalize_answer(key);
    if (norm == k) return k;
    for (const auto& s : syns) {
      if (normalize_answer(s) == norm) return k;
    }
  }
  return norm;
}

bool label_match(const std::string& pred, const std::string& gt, const AliasMap& aliases) {
  const std::string p = normalize_answer(pred);
  const std::string g = normalize_answer(gt);
  return p == g || alias_key(p, aliases) == alias_key(g, aliases);
}

}  // namespace

AccuracyReport classification_accuracy(std::span<const std::string> preds, std::span<const std::string> gts,
                                       const AliasMap& aliases) {
  require_same_length(preds.size(), gts.size());
  return accuracy_loop(preds.size(),
                       [&](std::size_t i, AccuracyReport&) { return label_match(preds[i], gts[i], aliases); });
}

AccuracyReport vqa_accuracy(std::span<const std::string> preds, std::span<const std::string> gts,
                            const AliasMap& aliases) {
  require_same_length(preds.size(), gts.size());
  return accuracy_loop(preds.size(), [&](std::size_t i, AccuracyReport& r) {
    const std::string g = normalize_answer(gts[i]);
    if (g.size() == 1 && g[0] >= 'a' && g[0] <= 'd') {
      try {
        return std::tolower(static_cast<unsigned char>(parse_choice(preds[i]))) == g[0];
      } catch (const Error&) {
        ++r.unparseable;
        return false;
      }
    }
    return label_match(preds[i], gts[i], aliases);
  });
}

LrsVqaReport lrsvqa_average_accuracy(std::span<const VqaOutcome> records) {
  std::map<std::string, std::map<std::string, std::pair<std::size_t, std::size_t>>> cells;
  for (const auto& r : records) {
    auto& c = cells[r.source][r.task];
    ++c.second;
    if (r.correct) ++c.first;
  }
  LrsVqaReport rep;
  std::vector<double> sources;
  for (const auto& [source, tasks] : cells) {
    std::vector<double> accs;
    for (const auto& [task, c] : tasks) {
      const double acc = static_cast<double>(c.first) / static_cast<double>(c.second);
      rep.cell_accuracy[source][task] = acc;
      accs.push_back(acc);
    }
    rep.source_aa[source] = mean_of(accs);
    sources.push_back(rep.source_aa[source]);
  }
  rep.overall = mean_of(sources);
  return rep;
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json p;
  p["iou_thresholds"] = protocol.iou_thresholds;
  p["trials_random"] = protocol.trials_random;
  p["include_constant_trial"] = protocol.include_constant_trial;
  p["seed"] = protocol.seed;
  std::vector<std::uint64_t> seeds;
  for (int r = 0; r < protocol.trials_random; ++r) seeds.push_back(protocol.seed + static_cast<std::uint64_t>(r));
  p["trial_seeds"] = seeds;
  p["interpolation"] = std::string(to_string(protocol.interpolation));
  p["constant_order"] = "input";
  j["protocol"] = p;
  j["counts"] = {{"images", n_images}, {"gt", n_gt}, {"predictions", n_pred},
                 {"excluded_predictions", excluded_predictions}};
  j["classes"] = classes;
  j["skipped_classes"] = skipped_classes;
  j["ap_nc50"] = summary_json(ap50);
  j["ap_nc75"] = summary_json(ap75);
  j["ap_nc50_95"] = summary_json(ap50_95);
  nlohmann::ordered_json pc = nlohmann::ordered_json::object();
  for (const auto& name : classes) pc[name] = {{"ap50", class_ap50.at(name)}, {"ap50_95", class_ap50_95.at(name)}};
  j["per_class"] = pc;
  nlohmann::ordered_json tj = nlohmann::ordered_json::array();
  for (const auto& t : trials) {
    tj.push_back({{"kind", t.kind}, {"seed", t.seed}, {"ap50", t.ap50}, {"ap75", t.ap75}, {"ap50_95", t.ap50_95}});
  }
  j["trials"] = tj;
  return j;
}

std::string EvalReport::to_csv() const {
  std::string out = "class,ap50,ap50_95\n";
  char buf[64];
  for (const auto& name : classes) {
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f\n", class_ap50.at(name), class_ap50_95.at(name));
    // Names with commas or quotes get quoted.
    if (name.find_first_of(",\"") != std::string::npos) {
      std::string q = "\"";
      for (char c : name) {
        if (c == '"') q.push_back('"');
        q.push_back(c);
      }
      out += q + "\"";
    } else {
      out += name;
    }
    out += buf;
  }
  return out;
}

nlohmann::ordered_json SweepResult::to_json() const {
  nlohmann::ordered_json j;
  j["best_threshold"] = best_threshold;
  nlohmann::ordered_json c = nlohmann::ordered_json::array();
  for (const auto& p : curve) c.push_back({{"threshold", p.threshold}, {"ap_nc50", p.ap50}, {"kept", p.kept}});
  j["curve"] = c;
  return j;
}

nlohmann::ordered_json F1Report::to_json() const {
  nlohmann::ordered_json j;
  j["mean_f1"] = mean_f1;
  j["evaluable"] = evaluable;
  if (!evaluable) j["note"] = "no classes evaluable";
  nlohmann::ordered_json pc = nlohmann::ordered_json::object();
  for (const auto& [name, c] : per_class) {
    pc[name] = {{"tp", c.tp}, {"fp", c.fp}, {"n_gt", c.n_gt},
                {"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}};
  }
  j["per_class"] = pc;
  return j;
}

nlohmann::ordered_json AccuracyReport::to_json() const {
  return {{"accuracy", accuracy}, {"correct", correct}, {"total", total}, {"unparseable", unparseable}};
}

nlohmann::ordered_json LrsVqaReport::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json src = nlohmann::ordered_json::object();
  for (const auto& [source, tasks] : cell_accuracy) {
    nlohmann::ordered_json t = nlohmann::ordered_json::object();
    for (const auto& [task, acc] : tasks) t[task] = acc;
    src[source] = {{"tasks", t}, {"average_accuracy", source_aa.at(source)}};
  }
  j["sources"] = src;
  j["overall"] = overall;
  return j;
}

}  // namespace gvt

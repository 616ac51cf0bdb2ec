#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gvt/geometry.hpp"
#include "json.hpp"

// Detection, grounding and question-answering metrics.
namespace gvt {

using DetectionsByImage = std::map<std::string, std::vector<LabeledDetection>>;

struct ScoredDetection {
  LabeledDetection det;
  double score = 1.0;
};
using ScoredByImage = std::map<std::string, std::vector<ScoredDetection>>;

enum class Interpolation { Voc07, AllPoints };
std::string_view to_string(Interpolation interp);
Interpolation parse_interpolation(std::string_view name);

struct MatchResult {
  std::vector<std::uint8_t> tp;                     // per prediction, 1 = true positive
  std::vector<std::optional<std::size_t>> matched;  // per prediction, index into gts
};

// Predictions are taken in the given order. Each one claims the unmatched GT of the
// same category with the highest IoU >= iou_thr; ties go to the lower GT index.
MatchResult match_detections(std::span<const LabeledDetection> preds, std::span<const LabeledDetection> gts,
                             double iou_thr);

// AP from ranked TP flags. n_gt must be > 0.
double average_precision(std::span<const std::uint8_t> flags, std::size_t n_gt, Interpolation interp);

// 0.50, 0.55, ..., 0.95
std::vector<double> coco_iou_thresholds();

struct ApNcProtocol {
  std::vector<double> iou_thresholds = coco_iou_thresholds();
  int trials_random = 10;
  bool include_constant_trial = true;
  std::uint64_t seed = 0;
  Interpolation interpolation = Interpolation::Voc07;
  bool strict = false;  // predictions outside the category set throw CategoryMismatch
  int jobs = 1;

  void validate() const;
};

struct TrialResult {
  std::string kind;  // "random" or "constant"
  std::uint64_t seed = 0;
  // class -> AP per entry of EvalReport::thresholds
  std::map<std::string, std::vector<double>> per_class;
  double ap50 = 0.0;
  double ap75 = 0.0;
  double ap50_95 = 0.0;
};

struct MetricSummary {
  double mean = 0.0;          // over all trials
  double std = 0.0;           // population std over all trials
  double random_mean = 0.0;   // random-score trials only
  double random_std = 0.0;
  std::optional<double> constant;
};

struct EvalReport {
  ApNcProtocol protocol;
  std::vector<double> thresholds;  // protocol thresholds plus 0.50 and 0.75, sorted
  std::vector<std::string> classes;          // evaluated
  std::vector<std::string> skipped_classes;  // no GT and no predictions
  std::vector<TrialResult> trials;
  MetricSummary ap50, ap75, ap50_95;
  std::map<std::string, double> class_ap50;     // mean over trials
  std::map<std::string, double> class_ap50_95;  // mean over trials
  std::size_t n_images = 0;
  std::size_t n_gt = 0;
  std::size_t n_pred = 0;
  std::size_t excluded_predictions = 0;  // category outside the set

  nlohmann::ordered_json to_json() const;
  std::string to_csv() const;
};

// categories empty: the union of GT categories is used.
EvalReport ap_nc(const DetectionsByImage& preds, const DetectionsByImage& gts, const ApNcProtocol& protocol,
                 const CategorySet& categories = {});

struct SweepPoint {
  double threshold = 0.0;
  double ap50 = 0.0;  // AP_nc50 mean over trials
  std::size_t kept = 0;
};

struct SweepResult {
  double best_threshold = 0.0;
  std::vector<SweepPoint> curve;

  nlohmann::ordered_json to_json() const;
};

// t in {0.00, 0.05, ..., 0.95}: predictions with score >= t are kept, their scores
// discarded, and AP_nc evaluated. The best t maximizes AP_nc50; ties go to the smaller t.
SweepResult threshold_sweep(const ScoredByImage& preds, const DetectionsByImage& gts, const ApNcProtocol& protocol,
                            const CategorySet& categories = {});
std::vector<double> sweep_thresholds();

struct ClassF1 {
  std::size_t tp = 0, fp = 0, n_gt = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct F1Report {
  double mean_f1 = 0.0;
  bool evaluable = false;  // false when no class has GT or predictions
  std::map<std::string, ClassF1> per_class;

  nlohmann::ordered_json to_json() const;
};

F1Report mean_f1(const DetectionsByImage& preds, const DetectionsByImage& gts, double iou_thr = 0.5);

struct AccuracyReport {
  std::size_t total = 0;
  std::size_t correct = 0;
  std::size_t unparseable = 0;
  double accuracy = 0.0;

  nlohmann::ordered_json to_json() const;
};

// Success means IoU strictly above 0.5. Missing predictions count as failures.
AccuracyReport grounding_accuracy(std::span<const std::optional<HBox>> preds, std::span<const HBox> gts);

using AliasMap = std::map<std::string, std::vector<std::string>>;

// Lowercases, trims and collapses internal whitespace.
std::string normalize_answer(std::string_view text);

AccuracyReport classification_accuracy(std::span<const std::string> preds, std::span<const std::string> gts,
                                       const AliasMap& aliases = {});

// Single-letter GT (A-D) is compared against the option letter extracted from the
// prediction; anything else is compared like a class label.
AccuracyReport vqa_accuracy(std::span<const std::string> preds, std::span<const std::string> gts,
                            const AliasMap& aliases = {});

struct VqaOutcome {
  std::string source;
  std::string task;
  bool correct = false;
};

struct LrsVqaReport {
  std::map<std::string, std::map<std::string, double>> cell_accuracy;  // source -> task -> acc
  std::map<std::string, double> source_aa;
  double overall = 0.0;

  nlohmann::ordered_json to_json() const;
};

LrsVqaReport lrsvqa_average_accuracy(std::span<const VqaOutcome> records);

}  // namespace gvt

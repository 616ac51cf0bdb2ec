#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gvt/records.hpp"
#include "gvt/resolution.hpp"

// Zoom-in chain conversations: the model first answers with a region of the
// downsampled image, then receives the native-resolution crop of that region and
// answers the question.
namespace gvt {

struct ZoomConfig {
  PatchSpec patch;                // first turn is planned with PlanMode::Max
  double min_crop_side = 224.0;   // native pixels
  double min_roi_side = 1.0;      // downsampled pixels
  std::string first_prompt = "Find the region of the image needed to answer the question, then zoom in.";
  std::size_t density_threshold = 10;
  double region_padding = 0.1;    // external QA regions, fraction of each side

  void validate() const;
};

struct ZoomSample {
  std::string id;
  std::string image;
  ImageGeometry native;
  ResizePlan plan;  // native -> downsampled
  std::string question;
  HBox roi;         // downsampled frame
  std::string final_answer;
};

// Plans the first-turn downsample and maps a native-frame region into it, rounding
// outward to whole pixels.
ZoomSample make_zoom_sample(std::string id, std::string image, const ImageGeometry& native, std::string question,
                            const HBox& native_region, std::string answer, const ZoomConfig& cfg);

// Native-frame crop for a downsampled roi: divide by the plan scale, clamp, grow
// symmetrically to min_side (within the image), snap outward to integers, clamp.
HBox compute_crop(const HBox& roi, const ResizePlan& plan, double min_side = 224.0);

// Exactly two trainable messages, both assistant. Throws RoiOutOfBounds.
ConversationRecord build_zoom_conversation(const ZoomSample& sample, const ZoomConfig& cfg = {});
std::string crop_ref(const std::string& image, const HBox& crop);

// 3x3 grid, split at floor(d/3) and floor(2d/3), half-open cells.
inline constexpr std::array<std::string_view, 9> kRegionNames{
    "top-left",    "top-center", "top-right",     "middle-left",  "center",
    "middle-right", "bottom-left", "bottom-center", "bottom-right"};
std::size_t region_of(const Point2D& p, const ImageGeometry& g);
HBox region_bounds(std::size_t index, const ImageGeometry& g);

std::string pluralize(const std::string& noun);

struct CountingQa {
  std::string category;
  std::optional<std::size_t> region;
  std::string question;
  std::string answer;
  std::size_t count = 0;
  std::vector<QuadBox> evidence;
};

// Per category: more than `density_threshold` instances gives one question per
// non-empty grid region (membership by centroid), otherwise one total-count question.
std::vector<CountingQa> gen_counting_qa(const DetectionRecord& rec, std::size_t density_threshold = 10);

struct ComparisonQa {
  std::string question;
  std::string answer;  // plural of the larger category, or "equal"
  std::vector<QuadBox> evidence;
};

// Throws ValidationError when either category is outside the set (if given).
ComparisonQa gen_comparison_qa(const DetectionRecord& rec, const std::string& cat_a, const std::string& cat_b,
                               const CategorySet* categories = nullptr);

struct ExternalQa {
  std::string id;
  std::string image;
  ImageGeometry geometry;
  std::string question;
  std::string answer;
  HBox region;  // padded and clamped, native frame
  std::vector<std::string> distractors;
};

// One JSON object per line:
//   {"id": ..., "image": ..., "height": H, "width": W, "question": ..., "answer": ...,
//    "region": [x1, y1, x2, y2], "distractors": [3 strings, optional]}
LoadResult<ExternalQa> ingest_external_qa(const std::filesystem::path& path, double padding = 0.1);
ExternalQa external_qa_from_json(const nlohmann::json& j, double padding, Diagnostics* diag);

struct McqItem {
  std::string question;
  std::array<std::string, 4> options;
  char answer_letter = 'A';

  std::string render() const;  // question, then "A. ..." lines
};

// Throws ValidationError on empty or duplicate options, or distractors.size() != 3.
McqItem convert_to_mcq(const std::string& question, const std::string& gold, const std::vector<std::string>& distractors,
                       std::uint64_t seed);

// gold +- {1, 2, 3}, kept when positive and distinct, first three in the order
// -1, +1, -2, +2, -3, +3.
std::vector<std::string> counting_distractors(std::size_t gold);

enum class ZoomRecipe { Counting, Comparison, Mcq };

struct ZoomStats {
  std::size_t records = 0;
  std::size_t conversations = 0;
  std::size_t excluded = 0;  // failed validation
  Diagnostics diagnostics;
};

// Template recipes over detection records. Each record uses seed ^ fnv1a64(id).
std::vector<ConversationRecord> run_zoom_recipe(const std::vector<DetectionRecord>& records, ZoomRecipe recipe,
                                                const ZoomConfig& cfg, std::uint64_t seed, ZoomStats& stats,
                                                int jobs = 1);
// External QA, optionally converted to multiple choice when distractors are present.
std::vector<ConversationRecord> run_external_recipe(const std::vector<ExternalQa>& items, bool as_mcq,
                                                    const ZoomConfig& cfg, std::uint64_t seed, ZoomStats& stats);

}  // namespace gvt

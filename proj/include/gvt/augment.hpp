#pragma once

#include <map>
#include <string>
#include <vector>

#include "gvt/random.hpp"
#include "gvt/records.hpp"
#include "gvt/resolution.hpp"
#include "gvt/response_codec.hpp"
#include "gvt/sampler.hpp"

// Turns unified records into randomized training conversations.
namespace gvt {

struct AugmentationPolicy {
  std::map<std::string, std::vector<std::string>> prompt_pools = default_prompt_pools();
  double json_mode_probability = 0.5;
  std::map<std::string, std::vector<std::string>> synonyms;  // lowercase word -> replacements
  double synonym_probability = 0.1;
  double scale_min = 0.5;
  double scale_max = 2.0;

  void validate() const;
  static std::map<std::string, std::vector<std::string>> default_prompt_pools();
};

inline constexpr std::string_view kJsonInstruction = " Output the result in JSON format.";

struct TrainingSample {
  std::string id;
  std::string subset;
  std::uint64_t draw = 0;
  TaskKind task = TaskKind::Detection;
  double scale = 1.0;
  ResponseMode mode = ResponseMode::Plain;
  ResizePlan plan;  // native image -> model input
  ConversationRecord conversation;

  nlohmann::ordered_json to_json() const;
};

// Words protected from synonym replacement: anything with a digit, a lone option
// letter A-D, and every word of a protected phrase (category names).
std::string replace_synonyms(const std::string& text, const AugmentationPolicy& policy,
                             const std::vector<std::string>& protected_phrases, Rng& rng);

// Scale drawn from the policy range and clamped so the scaled image stays inside the
// patch pixel bounds.
double draw_scale(const ImageGeometry& g, const AugmentationPolicy& policy, const PatchSpec& patch, Rng& rng);

TrainingSample augment(const Record& record, TaskKind task, const AugmentationPolicy& policy, const PatchSpec& patch,
                       Rng& rng, Diagnostics* diag = nullptr);

// First n draws of the weighted stream, each augmented with
// Rng(derive_seed(seed ^ 0x5A4D, draw index)), so output does not depend on jobs.
std::vector<TrainingSample> generate_samples(const std::vector<SubsetUnit>& units, const AugmentationPolicy& policy,
                                             const PatchSpec& patch, std::uint64_t seed, std::uint64_t n, int jobs = 1,
                                             Diagnostics* diag = nullptr);

}  // namespace gvt

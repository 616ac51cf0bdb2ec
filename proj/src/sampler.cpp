#include "gvt/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gvt {

std::string_view to_string(TaskKind t) {
  switch (t) {
    case TaskKind::Detection: return "detection";
    case TaskKind::Grounding: return "grounding";
    case TaskKind::Conversation: return "conversation";
  }
  return "detection";
}

TaskKind parse_task(std::string_view name) {
  if (name == "detection") return TaskKind::Detection;
  if (name == "grounding") return TaskKind::Grounding;
  if (name == "conversation" || name == "vqa" || name == "classification") return TaskKind::Conversation;
  throw Error(ErrorCode::ConfigError, "unknown task '" + std::string(name) + "'");
}

WeightedSampler::WeightedSampler(const std::vector<SubsetUnit>& units, std::uint64_t seed)
    : choose_(derive_seed(seed, 0)) {
  double total = 0.0;
  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto& u = units[i];
    if (!std::isfinite(u.weight) || u.weight < 0.0) {
      throw Error(ErrorCode::ConfigError, "subset '" + u.name + "' has an invalid weight");
    }
    streams_.push_back({Rng(derive_seed(seed, i + 1)), {}, 0, u.records.size()});
    if (u.weight == 0.0) continue;
    if (u.records.empty()) {
      warnings_.add("subset '" + u.name + "' is empty and is skipped");
      continue;
    }
    total += u.weight;
    cumulative_.push_back(total);
    subset_of_.push_back(i);
  }
  if (cumulative_.empty()) {
    bool any_weight = std::any_of(units.begin(), units.end(), [](const SubsetUnit& u) { return u.weight > 0.0; });
    if (any_weight) throw Error(ErrorCode::EmptySubset, "every subset with positive weight is empty");
    throw Error(ErrorCode::ConfigError, "at least one subset needs a positive weight");
  }
}

Draw WeightedSampler::next() {
  const double u = choose_.uniform01() * cumulative_.back();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
  const std::size_t subset = subset_of_[k];

  Stream& s = streams_[subset];
  if (s.pos == s.order.size()) {
    s.order.resize(s.size);
    std::iota(s.order.begin(), s.order.end(), std::size_t{0});
    s.rng.shuffle(std::span<std::size_t>(s.order));
    s.pos = 0;
  }
  return {drawn_++, subset, s.order[s.pos++]};
}

}  // namespace gvt

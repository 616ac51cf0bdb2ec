#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gvt/random.hpp"

// Rule-based prompt cleanup.
namespace gvt {

inline const std::vector<std::string>& default_descriptor_tags() {
  static const std::vector<std::string> tags{"grounding", "refer", "identify"};
  return tags;
}

// Removes "[tag]" descriptors (case-insensitive) anywhere in the text and normalizes
// whitespace. When at least one tag led the text, `prompt` is put in front.
std::string strip_task_descriptors(std::string_view text, std::string_view prompt,
                                   std::span<const std::string> tags = default_descriptor_tags());
// Same, with the prompt drawn uniformly from the pool. The rng is only advanced when a
// leading tag is actually replaced.
std::string strip_task_descriptors(std::string_view text, std::span<const std::string> pool, Rng& rng,
                                   std::span<const std::string> tags = default_descriptor_tags());

// Whole-word substitutions. A capitalized occurrence maps to a capitalized
// replacement. Throws ConfigError when a replacement contains a key, which would
// break idempotence.
class TypoTable {
 public:
  TypoTable() = default;
  explicit TypoTable(std::map<std::string, std::string> entries);

  const std::map<std::string, std::string>& entries() const { return entries_; }
  std::string apply(std::string_view text) const;

 private:
  std::map<std::string, std::string> entries_;
};

// Collapses whitespace, removes spaces before punctuation, collapses repeated
// punctuation ("!!" -> "!", ".." -> ".", while "..." and longer runs become "..."),
// and applies the typo table. Idempotent.
std::string clean_text(std::string_view text, const TypoTable& typos = {});

}  // namespace gvt

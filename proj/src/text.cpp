#include "gvt/text.hpp"

#include <algorithm>
#include <cctype>

#include "gvt/error.hpp"

namespace gvt {

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':'; }

std::string collapse_spaces(std::string_view s) {
  std::string out;
  bool pending = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(c);
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Length of the "[tag]" at pos, or 0.
std::size_t tag_at(std::string_view text, std::size_t pos, std::span<const std::string> tags) {
  if (text[pos] != '[') return 0;
  const auto close = text.find(']', pos);
  if (close == std::string_view::npos) return 0;
  const std::string inner = lower(text.substr(pos + 1, close - pos - 1));
  for (const auto& t : tags) {
    if (inner == lower(t)) return close - pos + 1;
  }
  return 0;
}

struct Stripped {
  std::string text;
  bool removed = false;
  bool leading = false;
};

Stripped strip(std::string_view text, std::span<const std::string> tags) {
  Stripped s;
  bool at_start = true;
  for (std::size_t i = 0; i < text.size();) {
    if (const auto n = tag_at(text, i, tags)) {
      s.removed = true;
      s.leading = s.leading || at_start;
      s.text.push_back(' ');
      i += n;
      continue;
    }
    if (!std::isspace(static_cast<unsigned char>(text[i]))) at_start = false;
    s.text.push_back(text[i++]);
  }
  if (s.removed) s.text = collapse_spaces(s.text);
  return s;
}

std::string with_prompt(std::string_view prompt, const std::string& rest) {
  const std::string p = collapse_spaces(prompt);
  if (p.empty()) return rest;
  if (rest.empty()) return p;
  return p + " " + rest;
}

}  // namespace

std::string strip_task_descriptors(std::string_view text, std::string_view prompt, std::span<const std::string> tags) {
  Stripped s = strip(text, tags);
  if (!s.removed) return std::string(text);
  return s.leading ? with_prompt(prompt, s.text) : s.text;
}

std::string strip_task_descriptors(std::string_view text, std::span<const std::string> pool, Rng& rng,
                                   std::span<const std::string> tags) {
  Stripped s = strip(text, tags);
  if (!s.removed) return std::string(text);
  if (!s.leading || pool.empty()) return s.text;
  return with_prompt(pool[static_cast<std::size_t>(rng.below(pool.size()))], s.text);
}

TypoTable::TypoTable(std::map<std::string, std::string> entries) : entries_(std::move(entries)) {
  auto is_key = [&](const std::string& w) {
    if (entries_.count(w)) return true;
    return !w.empty() && entries_.count(lower(w.substr(0, 1)) + w.substr(1)) > 0;
  };
  for (const auto& [key, value] : entries_) {
    if (key.empty() || !std::all_of(key.begin(), key.end(), is_word_char)) {
      throw Error(ErrorCode::ConfigError, "typo key '" + key + "' must be a single word");
    }
    std::string word;
    for (std::size_t i = 0; i <= value.size(); ++i) {
      if (i < value.size() && is_word_char(value[i])) {
        word.push_back(value[i]);
        continue;
      }
      if (is_key(word)) {
        throw Error(ErrorCode::ConfigError, "typo replacement '" + value + "' contains the key '" + word + "'");
      }
      word.clear();
    }
  }
}

std::string TypoTable::apply(std::string_view text) const {
  if (entries_.empty()) return std::string(text);
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_char(text[i])) {
      out.push_back(text[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_word_char(text[j])) ++j;
    const std::string word(text.substr(i, j - i));
    if (const auto it = entries_.find(word); it != entries_.end()) {
      out += it->second;
    } else if (std::isupper(static_cast<unsigned char>(word[0]))) {
      const std::string uncapped = lower(word.substr(0, 1)) + word.substr(1);
      const auto cap = entries_.find(uncapped);
      if (cap != entries_.end() && !cap->second.empty()) {
        std::string v = cap->second;
        v[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(v[0])));
        out += v;
      } else {
        out += word;
      }
    } else {
      out += word;
    }
    i = j;
  }
  return out;
}

std::string clean_text(std::string_view text, const TypoTable& typos) {
  const std::string spaced = collapse_spaces(typos.apply(text));

  std::string tight;
  for (char c : spaced) {
    if (is_punct(c) && !tight.empty() && tight.back() == ' ') tight.pop_back();
    tight.push_back(c);
  }

  std::string out;
  for (std::size_t i = 0; i < tight.size();) {
    const char c = tight[i];
    if (!is_punct(c)) {
      out.push_back(c);
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < tight.size() && tight[j] == c) ++j;
    out += (c == '.' && j - i >= 3) ? std::string("...") : std::string(1, c);
    i = j;
  }
  return out;
}

}  // namespace gvt

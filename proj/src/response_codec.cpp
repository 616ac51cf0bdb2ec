#include "gvt/response_codec.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>
#include <tuple>

#include "json.hpp"

namespace gvt {

namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_none_marker(std::string_view s) {
  s = trim(s);
  if (s.size() < 13) return false;
  std::string lower;
  for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return lower == "there is none." || lower == "there is none";
}

auto order_key(const LabeledDetection& d) {
  return std::tie(d.category, d.box.vertices[0].y, d.box.vertices[0].x);
}

bool parse_int(std::string_view s, long long& out) {
  static const std::regex int_re(R"([+-]?\d{1,15})");
  const std::string str(trim(s));
  if (!std::regex_match(str, int_re)) return false;
  out = std::stoll(str);
  return true;
}

// Strips a ```json ... ``` fence if the text is wrapped in one.
std::string_view strip_fence(std::string_view text) {
  std::string_view t = trim(text);
  if (t.substr(0, 3) != "```") return t;
  const auto first_nl = t.find('\n');
  if (first_nl == std::string_view::npos) return t;
  t.remove_prefix(first_nl + 1);
  const auto close = t.rfind("```");
  if (close != std::string_view::npos) t = t.substr(0, close);
  return trim(t);
}

void add_box(DetectionResponse& resp, Diagnostics& diag, std::string category, const std::array<double, 8>& c,
             const std::string& where) {
  try {
    QuadBox q = make_quad(c);
    q = canonicalize_quad(q);
    resp.detections.push_back({std::move(category), q});
  } catch (const Error& e) {
    diag.add(where + ": " + e.what());
  }
}

void parse_plain(std::string_view text, DetectionResponse& resp, Diagnostics& diag) {
  static const std::regex box_re(R"(\(([^()]*)\))");
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (is_none_marker(line)) {
      diag.add(where + ": 'There is none.' mixed with detections");
      continue;
    }
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) {
      diag.add(where + ": no 'category:' prefix");
      continue;
    }
    const std::string category(trim(line.substr(0, colon)));
    if (category.empty()) {
      diag.add(where + ": empty category");
      continue;
    }
    const std::string rest(line.substr(colon + 1));
    std::size_t consumed = 0;
    std::size_t box_index = 0;
    for (auto it = std::sregex_iterator(rest.begin(), rest.end(), box_re); it != std::sregex_iterator(); ++it) {
      const auto& m = *it;
      const std::string between = rest.substr(consumed, static_cast<std::size_t>(m.position()) - consumed);
      if (std::any_of(between.begin(), between.end(),
                      [](char c) { return !std::isspace(static_cast<unsigned char>(c)) && c != ';' && c != ','; })) {
        diag.add(where + ": unexpected text '" + std::string(trim(between)) + "'");
      }
      consumed = static_cast<std::size_t>(m.position() + m.length());
      const std::string body = m[1].str();
      const std::string box_where = where + " box " + std::to_string(++box_index);
      std::array<double, 8> coords{};
      std::size_t count = 0;
      bool ok = true;
      std::size_t start = 0;
      while (ok) {
        const auto comma = body.find(',', start);
        const std::string_view field =
            std::string_view(body).substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        long long v = 0;
        if (!parse_int(field, v) || count >= 8) {
          ok = false;
          break;
        }
        coords[count++] = static_cast<double>(v);
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      if (!ok || count != 8) {
        diag.add(box_where + ": expected 8 integers in '(" + body + ")'");
        continue;
      }
      add_box(resp, diag, category, coords, box_where);
    }
    const std::string tail(trim(std::string_view(rest).substr(consumed)));
    if (!tail.empty()) diag.add(where + ": unexpected text '" + tail + "'");
    if (box_index == 0 && tail.empty()) diag.add(where + ": no boxes after '" + category + ":'");
  }
}

void parse_json_mode(std::string_view text, DetectionResponse& resp, Diagnostics& diag) {
  json doc = json::parse(strip_fence(text), nullptr, false);
  if (doc.is_discarded()) {
    diag.add("json: document does not parse");
    return;
  }
  if (doc.is_object()) doc = json::array({doc});
  if (!doc.is_array()) {
    diag.add("json: expected an array of objects");
    return;
  }
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string where = "json item " + std::to_string(i);
    const json& item = doc[i];
    if (!item.is_object() || !item.contains("label") || !item["label"].is_string()) {
      diag.add(where + ": missing string 'label'");
      continue;
    }
    std::array<double, 8> coords{};
    if (item.contains("poly") && item["poly"].is_array() && item["poly"].size() == 8 &&
        std::all_of(item["poly"].begin(), item["poly"].end(), [](const json& v) { return v.is_number(); })) {
      for (std::size_t k = 0; k < 8; ++k) coords[k] = item["poly"][k].get<double>();
    } else if (item.contains("bbox_2d") && item["bbox_2d"].is_array() && item["bbox_2d"].size() == 4 &&
               std::all_of(item["bbox_2d"].begin(), item["bbox_2d"].end(),
                           [](const json& v) { return v.is_number(); })) {
      const auto& b = item["bbox_2d"];
      coords = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[1].get<double>(),
                b[2].get<double>(), b[3].get<double>(), b[0].get<double>(), b[3].get<double>()};
    } else {
      diag.add(where + ": expected 'poly' with 8 numbers");
      continue;
    }
    add_box(resp, diag, item["label"].get<std::string>(), coords, where);
  }
}

ResponseMode detect_mode(std::string_view text) {
  const std::string_view t = strip_fence(text);
  if (!t.empty() && (t.front() == '[' || t.front() == '{')) return ResponseMode::Json;
  return ResponseMode::Plain;
}

}  // namespace

std::string_view to_string(ResponseMode mode) { return mode == ResponseMode::Json ? "json" : "plain"; }

long long round_half_up(double v) { return static_cast<long long>(std::floor(v + 0.5)); }

std::vector<LabeledDetection> canonical_response_order(std::span<const LabeledDetection> dets) {
  std::vector<LabeledDetection> out;
  out.reserve(dets.size());
  for (const auto& d : dets) out.push_back({d.category, canonicalize_quad(d.box)});
  std::stable_sort(out.begin(), out.end(),
                   [](const LabeledDetection& a, const LabeledDetection& b) { return order_key(a) < order_key(b); });
  return out;
}

std::string render_detections(std::span<const LabeledDetection> dets, ResponseMode mode) {
  if (dets.empty()) return std::string(kNoneResponse);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (!is_canonical(dets[i].box)) {
      throw Error(ErrorCode::UncanonicalInput, "box " + std::to_string(i) + " is not in canonical vertex order");
    }
    if (i > 0 && order_key(dets[i]) < order_key(dets[i - 1])) {
      throw Error(ErrorCode::UncanonicalInput, "detection " + std::to_string(i) + " is out of response order");
    }
  }

  std::string out;
  if (mode == ResponseMode::Json) {
    out.push_back('[');
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (i > 0) out.push_back(',');
      out += R"({"label":)";
      out += json(dets[i].category).dump();
      out += R"(,"poly":[)";
      const auto c = quad_coords(dets[i].box);
      for (std::size_t k = 0; k < 8; ++k) {
        if (k > 0) out.push_back(',');
        out += std::to_string(round_half_up(c[k]));
      }
      out += "]}";
    }
    out.push_back(']');
    return out;
  }

  for (std::size_t i = 0; i < dets.size(); ++i) {
    const bool new_block = i == 0 || dets[i].category != dets[i - 1].category;
    if (new_block) {
      if (i > 0) out.push_back('\n');
      out += dets[i].category;
      out += ": ";
    } else {
      out += "; ";
    }
    out.push_back('(');
    const auto c = quad_coords(dets[i].box);
    for (std::size_t k = 0; k < 8; ++k) {
      if (k > 0) out.push_back(',');
      out += std::to_string(round_half_up(c[k]));
    }
    out.push_back(')');
  }
  return out;
}

ParseResult parse_detections(std::string_view text, const ParseOptions& options) {
  ParseResult result;
  auto& resp = result.response;
  resp.mode = options.mode_hint.value_or(detect_mode(text));

  if (is_none_marker(text)) {
    resp.empty_marker = true;
    return result;
  }
  if (resp.mode == ResponseMode::Json) {
    parse_json_mode(text, resp, result.diagnostics);
  } else {
    parse_plain(text, resp, result.diagnostics);
  }
  if (options.strict && !result.diagnostics.empty()) {
    throw Error(ErrorCode::StrictParseError, result.diagnostics.messages.front());
  }

  resp.detections = canonical_response_order(resp.detections);
  resp.empty_marker = resp.detections.empty();
  resp.unknown_category.assign(resp.detections.size(), false);
  if (options.categories != nullptr) {
    for (std::size_t i = 0; i < resp.detections.size(); ++i) {
      if (!options.categories->contains(resp.detections[i].category)) {
        resp.unknown_category[i] = true;
        result.diagnostics.add("unknown_category: " + resp.detections[i].category);
      }
    }
    if (options.strict && !result.diagnostics.empty()) {
      throw Error(ErrorCode::StrictParseError, result.diagnostics.messages.front());
    }
  }
  return result;
}

std::string render_hbox(const HBox& b) {
  return "[" + std::to_string(round_half_up(b.x1)) + ", " + std::to_string(round_half_up(b.y1)) + ", " +
         std::to_string(round_half_up(b.x2)) + ", " + std::to_string(round_half_up(b.y2)) + "]";
}

std::string render_hbox_json(const HBox& b) {
  return R"([{"bbox_2d":[)" + std::to_string(round_half_up(b.x1)) + "," + std::to_string(round_half_up(b.y1)) +
         "," + std::to_string(round_half_up(b.x2)) + "," + std::to_string(round_half_up(b.y2)) + "]}]";
}

HBox parse_hbox(std::string_view text, double min_side) {
  static const std::regex box_re(
      R"(\[\s*(-?\d+(?:\.\d+)?)\s*,\s*(-?\d+(?:\.\d+)?)\s*,\s*(-?\d+(?:\.\d+)?)\s*,\s*(-?\d+(?:\.\d+)?)\s*\])");
  std::smatch m;
  const std::string str(text);
  if (!std::regex_search(str, m, box_re)) throw Error(ErrorCode::MalformedBox, "no [x1, y1, x2, y2] group");
  const HBox b{std::stod(m[1].str()), std::stod(m[2].str()), std::stod(m[3].str()), std::stod(m[4].str())};
  if (b.x2 - b.x1 < min_side || b.y2 - b.y1 < min_side) {
    throw Error(ErrorCode::MalformedBox, "box sides below the minimum of " + std::to_string(min_side));
  }
  return b;
}

char parse_choice(std::string_view text) {
  const std::string s(text);
  std::smatch m;

  // "Answer: C", "the correct option is (B)", "answer is b". Lowercase letters count only
  // when they are not the start of a word like "a dog".
  static const std::regex keyed(
      R"((?:answer|option|choice)(?:\s+(?:is|would be|should be|will be))?\s*[:\-=]?\s*(?:option\s*)?[\(\[\*]*([A-Da-d])(?![A-Za-z]))",
      std::regex::icase);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), keyed); it != std::sregex_iterator(); ++it) {
    const auto pos = static_cast<std::size_t>((*it).position(1));
    const char letter = s[pos];
    const bool word = std::islower(static_cast<unsigned char>(letter)) && pos + 2 < s.size() &&
                      s[pos + 1] == ' ' && std::isalpha(static_cast<unsigned char>(s[pos + 2]));
    if (!word) return static_cast<char>(std::toupper(static_cast<unsigned char>(letter)));
  }

  // Leading letter: "B", "C.", "(A)", "D) five". "A ship..." is an article, not a choice.
  static const std::regex leading(R"(^\s*[\(\[\*]*([A-D])(?:[\)\]\.:,\*]|\s|$))");
  if (std::regex_search(s, m, leading)) {
    const auto after = static_cast<std::size_t>(m.position(1) + 1);
    const bool article = m[1].str()[0] == 'A' && after + 1 < s.size() && s[after] == ' ' &&
                         std::islower(static_cast<unsigned char>(s[after + 1]));
    if (!article) return m[1].str()[0];
  }

  static const std::regex bracketed(R"([\(\[]([A-D])[\)\]])");
  if (std::regex_search(s, m, bracketed)) return m[1].str()[0];

  static const std::regex dotted(R"((?:^|[^A-Za-z])([A-D])[\.\):](?:\s|$))");
  if (std::regex_search(s, m, dotted)) return m[1].str()[0];

  static const std::regex standalone(R"((?:^|[^A-Za-z])([A-D])(?![A-Za-z]))");
  for (auto it = std::sregex_iterator(s.begin(), s.end(), standalone); it != std::sregex_iterator(); ++it) {
    const auto pos = static_cast<std::size_t>((*it).position(1));
    const char letter = s[pos];
    const bool article = letter == 'A' && pos + 2 < s.size() && s[pos + 1] == ' ' &&
                         std::islower(static_cast<unsigned char>(s[pos + 2]));
    if (!article) return letter;
  }
  throw Error(ErrorCode::NoChoiceFound, "no option letter in '" + s + "'");
}

}  // namespace gvt

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gvt/error.hpp"
#include "gvt/geometry.hpp"

// Text encodings of model responses.
//
// Plain detection grammar:
//   response = "There is none." | block { "\n" block }
//   block    = category ": " box { "; " box }
//   box      = "(" int 7*( "," int ) ")"
// Json detection mode: [{"label":<category>,"poly":[x1,y1,...,x4,y4]}, ...] with no
// insignificant whitespace.
namespace gvt {

inline constexpr std::string_view kNoneResponse = "There is none.";

enum class ResponseMode { Plain, Json };
std::string_view to_string(ResponseMode mode);

struct DetectionResponse {
  std::vector<LabeledDetection> detections;
  std::vector<bool> unknown_category;  // parallel to detections
  bool empty_marker = true;
  ResponseMode mode = ResponseMode::Plain;
};

struct ParseOptions {
  std::optional<ResponseMode> mode_hint;
  bool strict = false;                     // any diagnostic becomes StrictParseError
  const CategorySet* categories = nullptr;  // flags unknown labels when set
};

struct ParseResult {
  DetectionResponse response;
  Diagnostics diagnostics;
};

// Canonicalizes every box and sorts: category ascending, then start vertex (y, x).
// The sort is stable, so equal keys keep their input order.
std::vector<LabeledDetection> canonical_response_order(std::span<const LabeledDetection> dets);

// Coordinates are rounded half-up to integers. Throws UncanonicalInput when a box is
// not canonical or the list is out of response order.
std::string render_detections(std::span<const LabeledDetection> dets, ResponseMode mode);

// Never throws on malformed text unless options.strict is set; problems are reported
// as diagnostics and the well-formed groups are kept.
ParseResult parse_detections(std::string_view text, const ParseOptions& options = {});

std::string render_hbox(const HBox& box);
// First "[x1, y1, x2, y2]" group in the text. Throws MalformedBox when absent or when
// either side is shorter than min_side.
HBox parse_hbox(std::string_view text, double min_side = 1.0);

// Grounding answers in Json mode: [{"bbox_2d":[x1,y1,x2,y2]}].
std::string render_hbox_json(const HBox& box);

// First standalone option letter A-D. Throws NoChoiceFound.
char parse_choice(std::string_view text);

long long round_half_up(double v);

}  // namespace gvt

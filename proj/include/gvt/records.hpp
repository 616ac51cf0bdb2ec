#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gvt/error.hpp"
#include "gvt/geometry.hpp"
#include "gvt/resolution.hpp"
#include "json.hpp"

// Unified record formats and their file encodings.
//
// Detection: COCO-style JSON or JSON Lines
//   {"id":..., "image":..., "height":H, "width":W, "annotations":[{"label":..., "poly":[8]}]}
// Grounding: JSON Lines
//   {"id":..., "image":..., "height":H, "width":W, "expression":..., "bbox":[x1,y1,x2,y2]}
// Conversation: JSON Lines
//   {"id":..., "images":[{"ref":..., "height":H, "width":W}], "messages":[...]}
namespace gvt {

enum class Role { User, Assistant, Tool };
std::string_view to_string(Role role);
Role parse_role(std::string_view name);

struct ContentPart {
  enum class Kind { Text, Image } kind = Kind::Text;
  std::string value;  // text, or image ref

  static ContentPart text(std::string t) { return {Kind::Text, std::move(t)}; }
  static ContentPart image(std::string ref) { return {Kind::Image, std::move(ref)}; }
  friend bool operator==(const ContentPart&, const ContentPart&) = default;
};

struct Message {
  Role role = Role::User;
  std::vector<ContentPart> content;
  bool trainable = false;

  std::string text() const;  // text parts joined with no separator
  friend bool operator==(const Message&, const Message&) = default;
};

struct ConversationRecord {
  std::string id;
  std::vector<Message> messages;
  std::map<std::string, ImageGeometry> image_geometries;

  // Throws ValidationError: trainable non-assistant, consecutive assistant turns,
  // unresolved image refs.
  void validate() const;
  std::size_t trainable_count() const;
};

struct DetectionRecord {
  std::string id;
  std::string image;
  ImageGeometry geometry;
  std::vector<LabeledDetection> annotations;
};

struct GroundingRecord {
  std::string id;
  std::string image;
  ImageGeometry geometry;
  std::string expression;
  HBox target;
};

using Record = std::variant<DetectionRecord, GroundingRecord, ConversationRecord>;
const std::string& record_id(const Record& r);

// Box in any of the accepted source representations.
using AnyBox = std::variant<HBox, OBox, QuadBox>;
// Canonical quad for detection targets. Throws ZeroAreaQuad.
QuadBox unify_to_quad(const AnyBox& box);
// Axis-aligned envelope for grounding targets.
HBox unify_to_hbox(const AnyBox& box);

// Boxes beyond 1 px outside the image are errors; closer ones are clamped with a note.
struct IngestOptions {
  DegeneratePolicy degenerate = DegeneratePolicy::DropWithWarning;
  bool strict = false;  // any diagnostic becomes an error
};

nlohmann::ordered_json to_json(const ConversationRecord& r);
nlohmann::ordered_json to_json(const DetectionRecord& r);
nlohmann::ordered_json to_json(const GroundingRecord& r);
ConversationRecord conversation_from_json(const nlohmann::json& j);
DetectionRecord detection_from_json(const nlohmann::json& j, const IngestOptions& opt = {},
                                    Diagnostics* diag = nullptr);
GroundingRecord grounding_from_json(const nlohmann::json& j, const IngestOptions& opt = {},
                                    Diagnostics* diag = nullptr);

// COCO reading accepts `bbox` [x, y, w, h], an 8-number `segmentation` polygon and an
// `obox` [cx, cy, w, h, angle] extension; the most specific one present wins.
std::vector<DetectionRecord> read_coco(const nlohmann::json& doc, const IngestOptions& opt = {},
                                       Diagnostics* diag = nullptr);
// Category ids are assigned 1..n in name order.
nlohmann::ordered_json write_coco(const std::vector<DetectionRecord>& records);

// JSON Lines helpers. Bad lines become "line N: ..." diagnostics (SchemaError in
// strict mode) and are skipped.
template <typename T>
struct LoadResult {
  std::vector<T> records;
  Diagnostics diagnostics;
  std::size_t rejected = 0;
};

LoadResult<DetectionRecord> load_detection_jsonl(const std::filesystem::path& path, const IngestOptions& opt = {});
LoadResult<GroundingRecord> load_grounding_jsonl(const std::filesystem::path& path, const IngestOptions& opt = {});
LoadResult<ConversationRecord> load_conversation_jsonl(const std::filesystem::path& path,
                                                       const IngestOptions& opt = {});
LoadResult<DetectionRecord> load_coco(const std::filesystem::path& path, const IngestOptions& opt = {});

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
// Calls fn(line_number, json) for every non-blank line; parse errors go to diag.
void for_each_jsonl(const std::string& text, const std::function<void(std::size_t, const nlohmann::json&)>& fn,
                    Diagnostics& diag);

template <typename T>
std::string to_jsonl(const std::vector<T>& records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace gvt

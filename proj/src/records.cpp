#include "gvt/records.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gvt {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void schema(const std::string& msg) { throw Error(ErrorCode::SchemaError, msg); }

void report(const IngestOptions& opt, Diagnostics* diag, const std::string& msg) {
  if (opt.strict) schema(msg);
  note(diag, msg);
}

const json& field(const json& j, const char* key) {
  if (!j.is_object()) schema("expected an object");
  const auto it = j.find(key);
  if (it == j.end()) schema(std::string("missing field '") + key + "'");
  return *it;
}

std::string string_field(const json& j, const char* key) {
  const json& v = field(j, key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  schema(std::string("field '") + key + "' must be a string");
}

std::int64_t int_field(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number_integer()) schema(std::string("field '") + key + "' must be an integer");
  return v.get<std::int64_t>();
}

std::vector<double> numbers(const json& v, std::size_t n, const char* what) {
  if (!v.is_array() || v.size() != n) {
    schema(std::string(what) + " must be an array of " + std::to_string(n) + " numbers");
  }
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) schema(std::string(what) + " must contain numbers only");
    out.push_back(x.get<double>());
    if (!std::isfinite(out.back())) schema(std::string(what) + " must be finite");
  }
  return out;
}

ImageGeometry geometry_of(const json& j) {
  const auto h = int_field(j, "height");
  const auto w = int_field(j, "width");
  if (h < 1 || w < 1) schema("height and width must be >= 1");
  return {h, w};
}

// Integral values print without a fractional part.
ordered_json num(double v) {
  if (std::nearbyint(v) == v && std::fabs(v) < 9.0e15) return static_cast<long long>(v);
  return v;
}

ordered_json num_array(std::span<const double> v) {
  ordered_json a = ordered_json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

double clamp_into(double v, double limit, bool& clamped, bool& outside) {
  if (v < -1.0 || v > limit + 1.0) outside = true;
  if (v < 0.0) {
    clamped = true;
    return 0.0;
  }
  if (v > limit) {
    clamped = true;
    return limit;
  }
  return v;
}

std::optional<LabeledDetection> finish_detection(std::string label, const AnyBox& box, const ImageGeometry& g,
                                                 const IngestOptions& opt, Diagnostics* diag,
                                                 const std::string& where) {
  QuadBox q;
  try {
    q = unify_to_quad(box);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ZeroAreaQuad || opt.degenerate == DegeneratePolicy::HardError) throw;
    report(opt, diag, where + ": dropped degenerate box");
    return std::nullopt;
  }
  bool clamped = false;
  bool outside = false;
  for (auto& p : q.vertices) {
    p.x = clamp_into(p.x, static_cast<double>(g.width), clamped, outside);
    p.y = clamp_into(p.y, static_cast<double>(g.height), clamped, outside);
  }
  if (outside) {
    report(opt, diag, where + ": box lies more than 1 px outside the image; dropped");
    return std::nullopt;
  }
  if (clamped) {
    report(opt, diag, where + ": box clamped to the image bounds");
    try {
      q = canonicalize_quad(q);
    } catch (const Error&) {
      report(opt, diag, where + ": box degenerate after clamping; dropped");
      return std::nullopt;
    }
  }
  return LabeledDetection{std::move(label), q};
}

ordered_json content_json(const ContentPart& p) {
  if (p.kind == ContentPart::Kind::Image) return {{"type", "image"}, {"image", p.value}};
  return {{"type", "text"}, {"text", p.value}};
}

template <typename T, typename Parse>
LoadResult<T> load_lines(const std::filesystem::path& path, const IngestOptions& opt, Parse parse) {
  LoadResult<T> out;
  const std::string text = read_text_file(path);
  Diagnostics parse_errors;
  for_each_jsonl(
      text,
      [&](std::size_t line, const json& j) {
        Diagnostics local;
        try {
          out.records.push_back(parse(j, local));
          for (auto& m : local.messages) out.diagnostics.add("line " + std::to_string(line) + ": " + m);
        } catch (const Error& e) {
          if (opt.strict) throw Error(e.code(), "line " + std::to_string(line) + ": " + e.what());
          ++out.rejected;
          out.diagnostics.add("line " + std::to_string(line) + ": " + e.what());
        }
      },
      parse_errors);
  if (!parse_errors.empty() && opt.strict) schema(parse_errors.messages.front());
  out.rejected += parse_errors.size();
  for (auto& m : parse_errors.messages) out.diagnostics.add(m);
  return out;
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    case Role::Tool: return "tool";
  }
  return "user";
}

Role parse_role(std::string_view name) {
  if (name == "user") return Role::User;
  if (name == "assistant") return Role::Assistant;
  if (name == "tool") return Role::Tool;
  schema("unknown role '" + std::string(name) + "'");
}

std::string Message::text() const {
  std::string out;
  for (const auto& p : content) {
    if (p.kind == ContentPart::Kind::Text) out += p.value;
  }
  return out;
}

void ConversationRecord::validate() const {
  for (std::size_t i = 0; i < messages.size(); ++i) {
    const auto& m = messages[i];
    if (m.trainable && m.role != Role::Assistant) {
      throw Error(ErrorCode::ValidationError, id + ": message " + std::to_string(i) + " is trainable but not assistant");
    }
    if (i > 0 && m.role == Role::Assistant && messages[i - 1].role == Role::Assistant) {
      throw Error(ErrorCode::ValidationError, id + ": consecutive assistant messages at " + std::to_string(i));
    }
    for (const auto& p : m.content) {
      if (p.kind == ContentPart::Kind::Image && !image_geometries.count(p.value)) {
        throw Error(ErrorCode::ValidationError, id + ": image '" + p.value + "' has no geometry");
      }
    }
  }
}

std::size_t ConversationRecord::trainable_count() const {
  return static_cast<std::size_t>(std::count_if(messages.begin(), messages.end(), [](const Message& m) {
    return m.trainable;
  }));
}

const std::string& record_id(const Record& r) {
  return std::visit([](const auto& x) -> const std::string& { return x.id; }, r);
}

QuadBox unify_to_quad(const AnyBox& box) {
  return std::visit(
      [](const auto& b) -> QuadBox {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, HBox>) {
          return canonicalize_quad(hbox_to_quad(b));
        } else if constexpr (std::is_same_v<T, OBox>) {
          return obox_to_quad(b);
        } else {
          return canonicalize_quad(b);
        }
      },
      box);
}

HBox unify_to_hbox(const AnyBox& box) {
  return std::visit(
      [](const auto& b) -> HBox {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, HBox>) {
          return b;
        } else if constexpr (std::is_same_v<T, OBox>) {
          return hbox_envelope(obox_to_quad(b));
        } else {
          return hbox_envelope(b);
        }
      },
      box);
}

ordered_json to_json(const ConversationRecord& r) {
  ordered_json j;
  j["id"] = r.id;
  ordered_json images = ordered_json::array();
  for (const auto& [ref, g] : r.image_geometries) images.push_back({{"ref", ref}, {"height", g.height}, {"width", g.width}});
  j["images"] = images;
  ordered_json msgs = ordered_json::array();
  for (const auto& m : r.messages) {
    ordered_json mj;
    mj["role"] = std::string(to_string(m.role));
    ordered_json parts = ordered_json::array();
    for (const auto& p : m.content) parts.push_back(content_json(p));
    mj["content"] = parts;
    mj["trainable"] = m.trainable;
    msgs.push_back(mj);
  }
  j["messages"] = msgs;
  return j;
}

ordered_json to_json(const DetectionRecord& r) {
  ordered_json j;
  j["id"] = r.id;
  j["image"] = r.image;
  j["height"] = r.geometry.height;
  j["width"] = r.geometry.width;
  ordered_json anns = ordered_json::array();
  for (const auto& d : r.annotations) {
    const auto c = quad_coords(d.box);
    anns.push_back({{"label", d.category}, {"poly", num_array(c)}});
  }
  j["annotations"] = anns;
  return j;
}

ordered_json to_json(const GroundingRecord& r) {
  ordered_json j;
  j["id"] = r.id;
  j["image"] = r.image;
  j["height"] = r.geometry.height;
  j["width"] = r.geometry.width;
  j["expression"] = r.expression;
  const std::array<double, 4> b{r.target.x1, r.target.y1, r.target.x2, r.target.y2};
  j["bbox"] = num_array(b);
  return j;
}

ConversationRecord conversation_from_json(const json& j) {
  ConversationRecord r;
  r.id = string_field(j, "id");
  if (j.contains("images")) {
    const json& imgs = j["images"];
    if (!imgs.is_array()) schema("'images' must be an array");
    for (const auto& im : imgs) r.image_geometries[string_field(im, "ref")] = geometry_of(im);
  }
  const json& msgs = field(j, "messages");
  if (!msgs.is_array()) schema("'messages' must be an array");
  for (const auto& mj : msgs) {
    Message m;
    m.role = parse_role(string_field(mj, "role"));
    const json& content = field(mj, "content");
    if (content.is_string()) {
      m.content.push_back(ContentPart::text(content.get<std::string>()));
    } else if (content.is_array()) {
      for (const auto& p : content) {
        const std::string type = string_field(p, "type");
        if (type == "text") {
          m.content.push_back(ContentPart::text(string_field(p, "text")));
        } else if (type == "image") {
          m.content.push_back(ContentPart::image(string_field(p, "image")));
        } else {
          schema("unknown content type '" + type + "'");
        }
      }
    } else {
      schema("'content' must be a string or an array");
    }
    if (mj.contains("trainable")) {
      if (!mj["trainable"].is_boolean()) schema("'trainable' must be a boolean");
      m.trainable = mj["trainable"].get<bool>();
    }
    r.messages.push_back(std::move(m));
  }
  try {
    r.validate();
  } catch (const Error& e) {
    schema(e.what());
  }
  return r;
}

DetectionRecord detection_from_json(const json& j, const IngestOptions& opt, Diagnostics* diag) {
  DetectionRecord r;
  r.id = string_field(j, "id");
  r.image = string_field(j, "image");
  r.geometry = geometry_of(j);
  const json& anns = field(j, "annotations");
  if (!anns.is_array()) schema("'annotations' must be an array");
  for (std::size_t i = 0; i < anns.size(); ++i) {
    const json& a = anns[i];
    const std::string where = r.id + " annotation " + std::to_string(i);
    const std::string label = string_field(a, "label");
    AnyBox box;
    if (a.contains("poly")) {
      box = make_quad(numbers(a["poly"], 8, "poly"));
    } else if (a.contains("obox")) {
      const auto o = numbers(a["obox"], 5, "obox");
      try {
        box = OBox::make(o[0], o[1], o[2], o[3], o[4]);
      } catch (const Error& e) {
        schema(where + ": " + e.what());
      }
    } else if (a.contains("bbox")) {
      const auto b = numbers(a["bbox"], 4, "bbox");
      box = HBox{b[0], b[1], b[2], b[3]};
    } else {
      schema(where + ": needs 'poly', 'obox' or 'bbox'");
    }
    if (auto d = finish_detection(label, box, r.geometry, opt, diag, where)) r.annotations.push_back(std::move(*d));
  }
  return r;
}

GroundingRecord grounding_from_json(const json& j, const IngestOptions& opt, Diagnostics* diag) {
  GroundingRecord r;
  r.id = string_field(j, "id");
  r.image = string_field(j, "image");
  r.geometry = geometry_of(j);
  r.expression = string_field(j, "expression");
  AnyBox box;
  if (j.contains("bbox")) {
    const auto b = numbers(j["bbox"], 4, "bbox");
    if (!(b[0] <= b[2] && b[1] <= b[3])) schema(r.id + ": bbox must satisfy x1 <= x2 and y1 <= y2");
    box = HBox{b[0], b[1], b[2], b[3]};
  } else if (j.contains("poly")) {
    box = make_quad(numbers(j["poly"], 8, "poly"));
  } else if (j.contains("obox")) {
    const auto o = numbers(j["obox"], 5, "obox");
    box = OBox::make(o[0], o[1], o[2], o[3], o[4]);
  } else {
    schema(r.id + ": needs 'bbox', 'poly' or 'obox'");
  }
  HBox t = unify_to_hbox(box);
  bool clamped = false;
  bool outside = false;
  const double W = static_cast<double>(r.geometry.width);
  const double H = static_cast<double>(r.geometry.height);
  t = {clamp_into(t.x1, W, clamped, outside), clamp_into(t.y1, H, clamped, outside),
       clamp_into(t.x2, W, clamped, outside), clamp_into(t.y2, H, clamped, outside)};
  if (outside) schema(r.id + ": target lies more than 1 px outside the image");
  if (clamped) report(opt, diag, r.id + ": target clamped to the image bounds");
  r.target = t;
  return r;
}

std::vector<DetectionRecord> read_coco(const json& doc, const IngestOptions& opt, Diagnostics* diag) {
  std::map<std::string, std::string> cat_names;
  for (const auto& c : field(doc, "categories")) cat_names[string_field(c, "id")] = string_field(c, "name");

  std::vector<DetectionRecord> records;
  std::map<std::string, std::size_t> index_of;
  for (const auto& im : field(doc, "images")) {
    DetectionRecord r;
    r.id = string_field(im, "id");
    r.image = string_field(im, "file_name");
    r.geometry = geometry_of(im);
    if (index_of.count(r.id)) schema("duplicate image id " + r.id);
    index_of[r.id] = records.size();
    records.push_back(std::move(r));
  }
  const json& anns = field(doc, "annotations");
  for (std::size_t i = 0; i < anns.size(); ++i) {
    const json& a = anns[i];
    const std::string where = "annotation " + std::to_string(i);
    const auto img = index_of.find(string_field(a, "image_id"));
    if (img == index_of.end()) schema(where + ": unknown image_id");
    const auto cat = cat_names.find(string_field(a, "category_id"));
    if (cat == cat_names.end()) schema(where + ": unknown category_id");
    auto& rec = records[img->second];

    AnyBox box;
    const auto seg = a.find("segmentation");
    const bool has_quad_seg = seg != a.end() && seg->is_array() && seg->size() == 1 && (*seg)[0].is_array() &&
                              (*seg)[0].size() == 8;
    if (a.contains("obox")) {
      const auto o = numbers(a["obox"], 5, "obox");
      try {
        box = OBox::make(o[0], o[1], o[2], o[3], o[4]);
      } catch (const Error& e) {
        schema(where + ": " + e.what());
      }
    } else if (has_quad_seg) {
      box = make_quad(numbers((*seg)[0], 8, "segmentation"));
    } else if (a.contains("bbox")) {
      const auto b = numbers(a["bbox"], 4, "bbox");
      box = HBox{b[0], b[1], b[0] + b[2], b[1] + b[3]};
    } else {
      schema(where + ": needs 'bbox', 'segmentation' or 'obox'");
    }
    if (auto d = finish_detection(cat->second, box, rec.geometry, opt, diag, where)) {
      rec.annotations.push_back(std::move(*d));
    }
  }
  return records;
}

ordered_json write_coco(const std::vector<DetectionRecord>& records) {
  std::vector<std::string> names;
  for (const auto& r : records) {
    for (const auto& d : r.annotations) names.push_back(d.category);
  }
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());

  ordered_json doc;
  ordered_json images = ordered_json::array();
  ordered_json anns = ordered_json::array();
  long long ann_id = 0;
  for (const auto& r : records) {
    const bool numeric = !r.id.empty() && r.id.size() < 16 &&
                         std::all_of(r.id.begin(), r.id.end(), [](char c) { return c >= '0' && c <= '9'; });
    const ordered_json id = numeric ? ordered_json(std::stoll(r.id)) : ordered_json(r.id);
    images.push_back({{"id", id}, {"file_name", r.image}, {"height", r.geometry.height}, {"width", r.geometry.width}});
    for (const auto& d : r.annotations) {
      const HBox e = hbox_envelope(d.box);
      const std::array<double, 4> bbox{e.x1, e.y1, e.width(), e.height()};
      const auto poly = quad_coords(d.box);
      const auto cat = std::lower_bound(names.begin(), names.end(), d.category) - names.begin() + 1;
      anns.push_back({{"id", ++ann_id},
                      {"image_id", id},
                      {"category_id", cat},
                      {"bbox", num_array(bbox)},
                      {"segmentation", ordered_json::array({num_array(poly)})},
                      {"area", num(quad_area(d.box))},
                      {"iscrowd", 0}});
    }
  }
  ordered_json cats = ordered_json::array();
  for (std::size_t i = 0; i < names.size(); ++i) cats.push_back({{"id", i + 1}, {"name", names[i]}});
  doc["images"] = images;
  doc["annotations"] = anns;
  doc["categories"] = cats;
  return doc;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

void for_each_jsonl(const std::string& text, const std::function<void(std::size_t, const json&)>& fn,
                    Diagnostics& diag) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() : nl + 1;
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      diag.add("line " + std::to_string(line_no) + ": invalid JSON");
      continue;
    }
    fn(line_no, j);
  }
}

LoadResult<DetectionRecord> load_detection_jsonl(const std::filesystem::path& path, const IngestOptions& opt) {
  return load_lines<DetectionRecord>(path, opt, [&](const json& j, Diagnostics& d) {
    return detection_from_json(j, opt, &d);
  });
}

LoadResult<GroundingRecord> load_grounding_jsonl(const std::filesystem::path& path, const IngestOptions& opt) {
  return load_lines<GroundingRecord>(path, opt, [&](const json& j, Diagnostics& d) {
    return grounding_from_json(j, opt, &d);
  });
}

LoadResult<ConversationRecord> load_conversation_jsonl(const std::filesystem::path& path, const IngestOptions& opt) {
  return load_lines<ConversationRecord>(path, opt, [](const json& j, Diagnostics&) {
    return conversation_from_json(j);
  });
}

LoadResult<DetectionRecord> load_coco(const std::filesystem::path& path, const IngestOptions& opt) {
  LoadResult<DetectionRecord> out;
  const json doc = json::parse(read_text_file(path), nullptr, false);
  if (doc.is_discarded()) schema(path.string() + ": invalid JSON");
  out.records = read_coco(doc, opt, &out.diagnostics);
  return out;
}

}  // namespace gvt

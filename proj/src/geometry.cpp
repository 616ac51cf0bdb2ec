#include "gvt/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_set>

namespace gvt {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroAreaQuad: return "ZeroAreaQuad";
    case ErrorCode::NonConvexQuad: return "NonConvexQuad";
    case ErrorCode::InvalidBox: return "InvalidBox";
    case ErrorCode::Unsatisfiable: return "Unsatisfiable";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::UncanonicalInput: return "UncanonicalInput";
    case ErrorCode::StrictParseError: return "StrictParseError";
    case ErrorCode::MalformedBox: return "MalformedBox";
    case ErrorCode::NoChoiceFound: return "NoChoiceFound";
    case ErrorCode::CategoryMismatch: return "CategoryMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::RoiOutOfBounds: return "RoiOutOfBounds";
    case ErrorCode::EmptySubset: return "EmptySubset";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

double cross(Point2D o, Point2D a, Point2D b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool lex_less(const QuadBox& a, const QuadBox& b) {
  const auto ca = quad_coords(a);
  const auto cb = quad_coords(b);
  return std::lexicographical_compare(ca.begin(), ca.end(), cb.begin(), cb.end());
}

ConvexPolygon hull_or_throw(const QuadBox& q, bool& used_hull) {
  if (!is_finite(q)) throw Error(ErrorCode::InvalidBox, "non-finite quad vertex");
  used_hull = !is_convex(q);
  ConvexPolygon poly;
  if (used_hull) {
    poly = convex_hull(q);
  } else {
    const QuadBox c = canonicalize_quad(q);
    for (const auto& p : c.vertices) poly.push(p);
  }
  if (poly.size < 3 || polygon_area(poly.view()) < kZeroAreaTolerance) {
    throw Error(ErrorCode::ZeroAreaQuad, "quad has zero area");
  }
  return poly;
}

}  // namespace

HBox make_hbox(double x1, double y1, double x2, double y2) {
  if (!std::isfinite(x1) || !std::isfinite(y1) || !std::isfinite(x2) || !std::isfinite(y2)) {
    throw Error(ErrorCode::InvalidBox, "non-finite horizontal box");
  }
  if (x1 > x2 || y1 > y2) throw Error(ErrorCode::InvalidBox, "horizontal box corners out of order");
  return HBox{x1, y1, x2, y2};
}

OBox OBox::make(double cx, double cy, double w, double h, double angle) {
  if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(w) || !std::isfinite(h) ||
      !std::isfinite(angle)) {
    throw Error(ErrorCode::InvalidBox, "non-finite oriented box");
  }
  if (!(w > 0.0) || !(h > 0.0)) throw Error(ErrorCode::InvalidBox, "oriented box needs w, h > 0");
  constexpr double half_pi = std::numbers::pi / 2.0;
  if (angle < -half_pi || angle >= half_pi) {
    throw Error(ErrorCode::InvalidBox, "oriented box angle outside [-pi/2, pi/2)");
  }
  return OBox{cx, cy, w, h, angle};
}

CategorySet::CategorySet(std::vector<std::string> names) : names_(std::move(names)) {
  std::unordered_set<std::string> seen;
  for (const auto& n : names_) {
    if (!seen.insert(n).second) throw Error(ErrorCode::ValidationError, "duplicate category '" + n + "'");
  }
  sorted_ = names_;
  std::sort(sorted_.begin(), sorted_.end());
}

std::vector<std::string> CategorySet::sorted() const { return sorted_; }

bool CategorySet::contains(const std::string& name) const {
  return std::binary_search(sorted_.begin(), sorted_.end(), name);
}

QuadBox make_quad(std::span<const double> coords) {
  if (coords.size() != 8) throw Error(ErrorCode::InvalidBox, "quad needs exactly 8 coordinates");
  QuadBox q;
  for (std::size_t i = 0; i < 4; ++i) {
    q.vertices[i] = {coords[2 * i], coords[2 * i + 1]};
  }
  if (!is_finite(q)) throw Error(ErrorCode::InvalidBox, "non-finite quad coordinate");
  return q;
}

std::array<double, 8> quad_coords(const QuadBox& q) {
  std::array<double, 8> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    out[2 * i] = q.vertices[i].x;
    out[2 * i + 1] = q.vertices[i].y;
  }
  return out;
}

double signed_area(const QuadBox& q) { return polygon_area(q.vertices); }

double polygon_area(std::span<const Point2D> pts) {
  // Signed: positive for clockwise order in y-down coordinates.
  double sum = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& a = pts[i];
    const auto& b = pts[(i + 1) % pts.size()];
    sum += a.x * b.y - b.x * a.y;
  }
  return sum / 2.0;
}

double quad_area(const QuadBox& q) { return std::abs(signed_area(q)); }

bool is_finite(const QuadBox& q) {
  return std::all_of(q.vertices.begin(), q.vertices.end(),
                     [](const Point2D& p) { return std::isfinite(p.x) && std::isfinite(p.y); });
}

bool is_convex(const QuadBox& q) {
  const auto& v = q.vertices;
  double scale = 0.0;
  for (const auto& p : v) scale = std::max({scale, std::abs(p.x), std::abs(p.y)});
  const double tol = 1e-12 * std::max(1.0, scale * scale);
  bool pos = false;
  bool neg = false;
  for (std::size_t i = 0; i < 4; ++i) {
    const double c = cross(v[i], v[(i + 1) % 4], v[(i + 2) % 4]);
    if (c > tol) pos = true;
    if (c < -tol) neg = true;
  }
  return !(pos && neg);
}

QuadBox canonicalize_quad(const QuadBox& q) {
  const double area = signed_area(q);
  if (!std::isfinite(area)) throw Error(ErrorCode::InvalidBox, "non-finite quad vertex");
  if (std::abs(area) < kZeroAreaTolerance) throw Error(ErrorCode::ZeroAreaQuad, "quad has zero area");

  std::array<Point2D, 4> v = q.vertices;
  if (area < 0.0) std::swap(v[1], v[3]);

  std::size_t start = 0;
  for (std::size_t i = 1; i < 4; ++i) {
    if (v[i].y < v[start].y || (v[i].y == v[start].y && v[i].x < v[start].x)) start = i;
  }
  QuadBox out;
  for (std::size_t i = 0; i < 4; ++i) out.vertices[i] = v[(start + i) % 4];
  return out;
}

bool is_canonical(const QuadBox& q) {
  try {
    return canonicalize_quad(q) == q;
  } catch (const Error&) {
    return false;
  }
}

HBox hbox_envelope(const QuadBox& q) {
  HBox b{q.vertices[0].x, q.vertices[0].y, q.vertices[0].x, q.vertices[0].y};
  for (const auto& p : q.vertices) {
    b.x1 = std::min(b.x1, p.x);
    b.y1 = std::min(b.y1, p.y);
    b.x2 = std::max(b.x2, p.x);
    b.y2 = std::max(b.y2, p.y);
  }
  return b;
}

QuadBox hbox_to_quad(const HBox& b) {
  return QuadBox{{{{b.x1, b.y1}, {b.x2, b.y1}, {b.x2, b.y2}, {b.x1, b.y2}}}};
}

QuadBox obox_to_quad(const OBox& o) {
  const double c = std::cos(o.angle);
  const double s = std::sin(o.angle);
  const double hw = o.w / 2.0;
  const double hh = o.h / 2.0;
  const std::array<Point2D, 4> offsets{{{-hw, -hh}, {hw, -hh}, {hw, hh}, {-hw, hh}}};
  QuadBox q;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& d = offsets[i];
    q.vertices[i] = {o.cx + d.x * c - d.y * s, o.cy + d.x * s + d.y * c};
  }
  return canonicalize_quad(q);
}

Point2D centroid(const QuadBox& q) {
  Point2D c;
  for (const auto& p : q.vertices) {
    c.x += p.x;
    c.y += p.y;
  }
  return {c.x / 4.0, c.y / 4.0};
}

ConvexPolygon convex_hull(const QuadBox& q) { return convex_hull(q.vertices); }

ConvexPolygon convex_hull(std::span<const Point2D> pts_in) {
  std::vector<Point2D> pts(pts_in.begin(), pts_in.end());
  std::sort(pts.begin(), pts.end(),
            [](const Point2D& a, const Point2D& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  ConvexPolygon out;
  if (pts.size() < 3) {
    for (const auto& p : pts) out.push(p);
    return out;
  }
  // Andrew's monotone chain; keeps strictly convex turns only.
  std::vector<Point2D> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  // Positive cross turns in this chain mean positive shoelace area already.
  for (const auto& p : hull) out.push(p);
  if (polygon_area(out.view()) < 0.0) std::reverse(out.points.begin(), out.points.begin() + out.size);
  return out;
}

ConvexPolygon clip_convex(std::span<const Point2D> subject, std::span<const Point2D> clip) {
  ConvexPolygon current;
  for (const auto& p : subject) current.push(p);

  for (std::size_t e = 0; e < clip.size() && current.size > 0; ++e) {
    const Point2D a = clip[e];
    const Point2D b = clip[(e + 1) % clip.size()];
    ConvexPolygon next;
    for (std::size_t i = 0; i < current.size; ++i) {
      const Point2D p = current.points[i];
      const Point2D q = current.points[(i + 1) % current.size];
      const double sp = cross(a, b, p);
      const double sq = cross(a, b, q);
      if (sp >= 0.0) next.push(p);
      if ((sp >= 0.0) != (sq >= 0.0)) {
        const double t = sp / (sp - sq);
        next.push({p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
      }
    }
    current = next;
  }
  return current;
}

IouResult quad_iou_checked(const QuadBox& a_in, const QuadBox& b_in) {
  // Fixed operand order makes the result bitwise symmetric.
  const bool swapped = lex_less(b_in, a_in);
  const QuadBox& a = swapped ? b_in : a_in;
  const QuadBox& b = swapped ? a_in : b_in;

  IouResult result;
  bool hull_a = false;
  bool hull_b = false;
  const ConvexPolygon pa = hull_or_throw(a, hull_a);
  const ConvexPolygon pb = hull_or_throw(b, hull_b);
  result.hull_used_a = swapped ? hull_b : hull_a;
  result.hull_used_b = swapped ? hull_a : hull_b;

  const double area_a = polygon_area(pa.view());
  const double area_b = polygon_area(pb.view());
  const ConvexPolygon inter = clip_convex(pa.view(), pb.view());
  const double inter_area = inter.size >= 3 ? std::max(0.0, polygon_area(inter.view())) : 0.0;
  const double uni = area_a + area_b - inter_area;
  result.iou = uni > 0.0 ? std::clamp(inter_area / uni, 0.0, 1.0) : 0.0;
  return result;
}

double quad_iou(const QuadBox& a, const QuadBox& b) { return quad_iou_checked(a, b).iou; }

double hbox_iou(const HBox& a, const HBox& b) {
  const double iw = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double ih = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = iw * ih;
  const double uni = (a.x2 - a.x1) * (a.y2 - a.y1) + (b.x2 - b.x1) * (b.y2 - b.y1) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

QuadBox min_area_rect(std::span<const Point2D> pts_in) {
  const ConvexPolygon hull = convex_hull(pts_in);
  if (hull.size < 3) throw Error(ErrorCode::ZeroAreaQuad, "cannot fit a rectangle to a degenerate polygon");
  const auto pts = hull.view();

  double best_area = std::numeric_limits<double>::infinity();
  QuadBox best;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Point2D a = pts[i];
    const Point2D b = pts[(i + 1) % pts.size()];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    if (len == 0.0) continue;
    const Point2D u{(b.x - a.x) / len, (b.y - a.y) / len};
    const Point2D v{-u.y, u.x};
    double umin = std::numeric_limits<double>::infinity();
    double umax = -umin;
    double vmin = umin;
    double vmax = -umin;
    for (const auto& p : pts) {
      const double pu = (p.x - a.x) * u.x + (p.y - a.y) * u.y;
      const double pv = (p.x - a.x) * v.x + (p.y - a.y) * v.y;
      umin = std::min(umin, pu);
      umax = std::max(umax, pu);
      vmin = std::min(vmin, pv);
      vmax = std::max(vmax, pv);
    }
    const double area = (umax - umin) * (vmax - vmin);
    if (area < best_area) {
      best_area = area;
      auto corner = [&](double pu, double pv) {
        return Point2D{a.x + pu * u.x + pv * v.x, a.y + pu * u.y + pv * v.y};
      };
      best = QuadBox{{{corner(umin, vmin), corner(umax, vmin), corner(umax, vmax), corner(umin, vmax)}}};
    }
  }
  return canonicalize_quad(best);
}

QuadBox scale_quad(const QuadBox& q, double sx, double sy) {
  QuadBox out = q;
  for (auto& p : out.vertices) {
    p.x *= sx;
    p.y *= sy;
  }
  return out;
}

QuadBox translate_quad(const QuadBox& q, double dx, double dy) {
  QuadBox out = q;
  for (auto& p : out.vertices) {
    p.x += dx;
    p.y += dy;
  }
  return out;
}

std::vector<LabeledDetection> scale_detections(std::span<const LabeledDetection> dets, double sx,
                                               double sy) {
  if (!(sx > 0.0) || !(sy > 0.0) || !std::isfinite(sx) || !std::isfinite(sy)) {
    throw Error(ErrorCode::ValidationError, "scale factors must be positive and finite");
  }
  std::vector<LabeledDetection> out;
  out.reserve(dets.size());
  for (const auto& d : dets) {
    QuadBox q = scale_quad(d.box, sx, sy);
    if (sx != sy) q = canonicalize_quad(q);
    out.push_back({d.category, q});
  }
  return out;
}

std::vector<LabeledDetection> canonicalize_detections(std::span<const LabeledDetection> dets,
                                                      DegeneratePolicy policy, Diagnostics* diag) {
  std::vector<LabeledDetection> out;
  out.reserve(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    try {
      out.push_back({dets[i].category, canonicalize_quad(dets[i].box)});
    } catch (const Error& e) {
      if (policy == DegeneratePolicy::HardError) throw;
      note(diag, "dropped detection " + std::to_string(i) + " (" + dets[i].category + "): " + e.what());
    }
  }
  return out;
}

}  // namespace gvt

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gvt/error.hpp"

// Quadrilateral, horizontal and oriented boxes in pixel space.
//
// Image convention throughout: x grows to the right, y grows downward.
// "Clockwise" is clockwise as seen on screen, which is a positive shoelace sum.
namespace gvt {

inline constexpr double kZeroAreaTolerance = 1e-9;

struct Point2D {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2D&, const Point2D&) = default;
};

struct QuadBox {
  std::array<Point2D, 4> vertices{};

  friend bool operator==(const QuadBox&, const QuadBox&) = default;
};

struct HBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }

  friend bool operator==(const HBox&, const HBox&) = default;
};

// Validates x1 <= x2, y1 <= y2 and finiteness.
HBox make_hbox(double x1, double y1, double x2, double y2);

// Rotated rectangle, long-edge angle convention: angle in [-pi/2, pi/2).
struct OBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
  double angle = 0.0;

  // Throws InvalidBox when w or h is not positive or the angle is out of range.
  static OBox make(double cx, double cy, double w, double h, double angle);
};

struct LabeledDetection {
  std::string category;
  QuadBox box;

  friend bool operator==(const LabeledDetection&, const LabeledDetection&) = default;
};

class CategorySet {
 public:
  CategorySet() = default;
  // Throws ValidationError on duplicate names.
  explicit CategorySet(std::vector<std::string> names);

  const std::vector<std::string>& names() const { return names_; }
  std::vector<std::string> sorted() const;
  bool contains(const std::string& name) const;
  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }

 private:
  std::vector<std::string> names_;
  std::vector<std::string> sorted_;
};

enum class DegeneratePolicy { DropWithWarning, HardError };

QuadBox make_quad(std::span<const double> coords);  // 8 values x1,y1,...,x4,y4
std::array<double, 8> quad_coords(const QuadBox& q);

double signed_area(const QuadBox& q);
double quad_area(const QuadBox& q);
bool is_finite(const QuadBox& q);
bool is_convex(const QuadBox& q);

// Clockwise order starting at the vertex with minimal y (ties: minimal x).
// Throws ZeroAreaQuad when |area| < kZeroAreaTolerance.
QuadBox canonicalize_quad(const QuadBox& q);
bool is_canonical(const QuadBox& q);

HBox hbox_envelope(const QuadBox& q);
QuadBox hbox_to_quad(const HBox& b);
QuadBox obox_to_quad(const OBox& o);

Point2D centroid(const QuadBox& q);

// Convex polygon with at most kMaxVertices vertices, stored clockwise.
struct ConvexPolygon {
  static constexpr std::size_t kMaxVertices = 16;
  std::array<Point2D, kMaxVertices> points{};
  std::size_t size = 0;

  std::span<const Point2D> view() const { return {points.data(), size}; }
  void push(Point2D p) {
    if (size < kMaxVertices) points[size++] = p;
  }
};

double polygon_area(std::span<const Point2D> pts);

// Convex hull of the quad's vertices in clockwise order.
ConvexPolygon convex_hull(const QuadBox& q);
ConvexPolygon convex_hull(std::span<const Point2D> pts);

// Clips a clockwise convex subject polygon against a clockwise convex clip polygon.
ConvexPolygon clip_convex(std::span<const Point2D> subject, std::span<const Point2D> clip);

struct IouResult {
  double iou = 0.0;
  bool hull_used_a = false;  // a was non-convex and replaced by its hull
  bool hull_used_b = false;
};

// IoU of two quads by convex clipping. Throws ZeroAreaQuad on degenerate input.
IouResult quad_iou_checked(const QuadBox& a, const QuadBox& b);
double quad_iou(const QuadBox& a, const QuadBox& b);

double hbox_iou(const HBox& a, const HBox& b);

// Minimal-area enclosing rectangle of a convex polygon, as a canonical quad.
QuadBox min_area_rect(std::span<const Point2D> convex_pts);

QuadBox scale_quad(const QuadBox& q, double sx, double sy);
QuadBox translate_quad(const QuadBox& q, double dx, double dy);

std::vector<LabeledDetection> scale_detections(std::span<const LabeledDetection> dets, double sx,
                                               double sy);

// Canonicalizes every box. Degenerate boxes are dropped (with a diagnostic) or
// rethrown according to the policy.
std::vector<LabeledDetection> canonicalize_detections(std::span<const LabeledDetection> dets,
                                                      DegeneratePolicy policy,
                                                      Diagnostics* diag = nullptr);

}  // namespace gvt

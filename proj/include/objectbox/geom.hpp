#pragma once

#include <compare>

namespace objectbox {

// Axis-aligned box given by its corners, in pixels (or grid units when used
// inside a cell frame). Only x1 <= x2 and y1 <= y2 are enforced here; area
// checks happen in the overlap oracles.
class CornerBox {
 public:
  CornerBox(double x1, double y1, double x2, double y2);

  double x1() const { return x1_; }
  double y1() const { return y1_; }
  double x2() const { return x2_; }
  double y2() const { return y2_; }
  double width() const { return x2_ - x1_; }
  double height() const { return y2_ - y1_; }
  double area() const { return width() * height(); }

  bool operator==(const CornerBox&) const = default;

 private:
  double x1_, y1_, x2_, y2_;
};

// Axis-aligned box given by its center and size, in pixels. Width and height
// are strictly positive; the constructor throws GeometryError otherwise.
class BoundingBox {
 public:
  BoundingBox(double cx, double cy, double w, double h);

  double cx() const { return cx_; }
  double cy() const { return cy_; }
  double w() const { return w_; }
  double h() const { return h_; }

  // Same center, width and height multiplied by k > 0.
  BoundingBox scaled(double k) const;

  bool operator==(const BoundingBox&) const = default;

 private:
  double cx_, cy_, w_, h_;
};

CornerBox to_corner(const BoundingBox& box);
// Throws GeometryError if the corner box has zero width or height.
BoundingBox to_center(const CornerBox& box);

double intersection_area(const CornerBox& a, const CornerBox& b);
// Smallest axis-aligned box containing both.
CornerBox hull(const CornerBox& a, const CornerBox& b);

// Reference overlap scores. These are deliberately plain and are used to
// validate every other module. All of them throw GeometryError when either
// box has zero area.
double iou_oracle(const CornerBox& a, const CornerBox& b);
double giou_oracle(const CornerBox& a, const CornerBox& b);
double diou_oracle(const CornerBox& a, const CornerBox& b);
double ciou_oracle(const CornerBox& a, const CornerBox& b);

}  // namespace objectbox

#include "objectbox/geom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "objectbox/errors.hpp"

namespace objectbox {

namespace {

bool finite(double a, double b, double c, double d) {
  return std::isfinite(a) && std::isfinite(b) && std::isfinite(c) &&
         std::isfinite(d);
}

void require_area(const CornerBox& a, const CornerBox& b) {
  if (!(a.area() > 0.0) || !(b.area() > 0.0)) {
    throw GeometryError("overlap score requested for a zero-area box");
  }
}

}  // namespace

CornerBox::CornerBox(double x1, double y1, double x2, double y2)
    : x1_(x1), y1_(y1), x2_(x2), y2_(y2) {
  if (!finite(x1, y1, x2, y2)) {
    throw GeometryError("corner box has non-finite coordinates");
  }
  if (x1 > x2 || y1 > y2) {
    throw GeometryError("corner box has x1 > x2 or y1 > y2");
  }
}

BoundingBox::BoundingBox(double cx, double cy, double w, double h)
    : cx_(cx), cy_(cy), w_(w), h_(h) {
  if (!finite(cx, cy, w, h)) {
    throw GeometryError("bounding box has non-finite values");
  }
  if (!(w > 0.0) || !(h > 0.0)) {
    throw GeometryError("bounding box needs w > 0 and h > 0, got w=" +
                        std::to_string(w) + " h=" + std::to_string(h));
  }
}

BoundingBox BoundingBox::scaled(double k) const {
  return BoundingBox(cx_, cy_, w_ * k, h_ * k);
}

CornerBox to_corner(const BoundingBox& box) {
  return CornerBox(box.cx() - box.w() / 2, box.cy() - box.h() / 2,
                   box.cx() + box.w() / 2, box.cy() + box.h() / 2);
}

BoundingBox to_center(const CornerBox& box) {
  return BoundingBox((box.x1() + box.x2()) / 2, (box.y1() + box.y2()) / 2,
                     box.width(), box.height());
}

double intersection_area(const CornerBox& a, const CornerBox& b) {
  const double iw = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
  const double ih = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

CornerBox hull(const CornerBox& a, const CornerBox& b) {
  return CornerBox(std::min(a.x1(), b.x1()), std::min(a.y1(), b.y1()),
                   std::max(a.x2(), b.x2()), std::max(a.y2(), b.y2()));
}

double iou_oracle(const CornerBox& a, const CornerBox& b) {
  require_area(a, b);
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return inter / uni;
}

double giou_oracle(const CornerBox& a, const CornerBox& b) {
  require_area(a, b);
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  const double enclosing = hull(a, b).area();
  return inter / uni - (enclosing - uni) / enclosing;
}

double diou_oracle(const CornerBox& a, const CornerBox& b) {
  require_area(a, b);
  const CornerBox c = hull(a, b);
  const double diag2 = c.width() * c.width() + c.height() * c.height();
  const double dx = (a.x1() + a.x2()) / 2 - (b.x1() + b.x2()) / 2;
  const double dy = (a.y1() + a.y2()) / 2 - (b.y1() + b.y2()) / 2;
  return iou_oracle(a, b) - (dx * dx + dy * dy) / diag2;
}

double ciou_oracle(const CornerBox& a, const CornerBox& b) {
  const double iou = iou_oracle(a, b);
  const double diou = diou_oracle(a, b);
  const double dtheta = std::atan(b.width() / b.height()) -
                        std::atan(a.width() / a.height());
  const double v = 4.0 / (std::numbers::pi * std::numbers::pi) * dtheta * dtheta;
  // alpha is 0/0 for identical aspect ratios with full overlap; the term
  // vanishes there anyway.
  const double alpha = v == 0.0 ? 0.0 : v / ((1.0 - iou) + v);
  return diou - alpha * v;
}

}  // namespace objectbox

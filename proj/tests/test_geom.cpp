#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "objectbox/errors.hpp"
#include "objectbox/geom.hpp"
#include "objectbox/random.hpp"

using namespace objectbox;

namespace {

// Integer boxes: count the unit squares each covers. Exact and independent of
// the closed-form overlap arithmetic.
double counted_iou(int ax1, int ay1, int ax2, int ay2, int bx1, int by1, int bx2, int by2) {
  long inter = 0, uni = 0;
  const int lo_x = std::min(ax1, bx1), hi_x = std::max(ax2, bx2);
  const int lo_y = std::min(ay1, by1), hi_y = std::max(ay2, by2);
  for (int y = lo_y; y < hi_y; ++y) {
    for (int x = lo_x; x < hi_x; ++x) {
      const bool in_a = x >= ax1 && x < ax2 && y >= ay1 && y < ay2;
      const bool in_b = x >= bx1 && x < bx2 && y >= by1 && y < by2;
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  }
  return static_cast<double>(inter) / static_cast<double>(uni);
}

CornerBox random_box(Rng& rng) {
  const double x1 = rng.uniform(-50, 50), y1 = rng.uniform(-50, 50);
  return CornerBox(x1, y1, x1 + rng.uniform(0.5, 60), y1 + rng.uniform(0.5, 60));
}

}  // namespace

TEST(Geom, ToCornerExamples) {
  EXPECT_EQ(to_corner(BoundingBox(100, 60, 40, 20)), CornerBox(80, 50, 120, 70));
  EXPECT_EQ(to_corner(BoundingBox(0, 0, 2, 2)), CornerBox(-1, -1, 1, 1));
  EXPECT_EQ(to_corner(BoundingBox(7.5, 3.25, 1, 0.5)), CornerBox(7, 3, 8, 3.5));
}

TEST(Geom, CenterCornerRoundTrip) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const BoundingBox b(rng.uniform(-500, 500), rng.uniform(-500, 500), rng.uniform(0.01, 300),
                        rng.uniform(0.01, 300));
    const BoundingBox r = to_center(to_corner(b));
    EXPECT_NEAR(r.cx(), b.cx(), 1e-12 * 1000);
    EXPECT_NEAR(r.cy(), b.cy(), 1e-12 * 1000);
    EXPECT_NEAR(r.w(), b.w(), 1e-12 * 1000);
    EXPECT_NEAR(r.h(), b.h(), 1e-12 * 1000);
  }
}

TEST(Geom, InvalidBoxesRejected) {
  EXPECT_THROW(BoundingBox(0, 0, 0, 1), GeometryError);
  EXPECT_THROW(BoundingBox(0, 0, 1, -1), GeometryError);
  EXPECT_THROW(BoundingBox(NAN, 0, 1, 1), GeometryError);
  EXPECT_THROW(CornerBox(2, 0, 1, 1), GeometryError);
  EXPECT_THROW(to_center(CornerBox(0, 0, 0, 1)), GeometryError);
}

TEST(Geom, IouExamples) {
  const CornerBox a(0, 0, 2, 2);
  EXPECT_DOUBLE_EQ(iou_oracle(a, a), 1.0);
  EXPECT_DOUBLE_EQ(iou_oracle(CornerBox(0, 0, 1, 1), CornerBox(2, 0, 3, 1)), 0.0);
  EXPECT_DOUBLE_EQ(iou_oracle(a, CornerBox(1, 0, 3, 2)), 1.0 / 3.0);
}

TEST(Geom, GiouExamples) {
  const CornerBox a(0, 0, 2, 2);
  EXPECT_DOUBLE_EQ(giou_oracle(a, a), 1.0);
  EXPECT_DOUBLE_EQ(giou_oracle(CornerBox(0, 0, 1, 1), CornerBox(2, 0, 3, 1)), -1.0 / 3.0);
  EXPECT_DOUBLE_EQ(giou_oracle(a, CornerBox(1, 0, 3, 2)), 1.0 / 3.0);
}

TEST(Geom, DegenerateOverlapThrows) {
  const CornerBox flat(0, 0, 2, 0);
  const CornerBox ok(0, 0, 1, 1);
  EXPECT_THROW(iou_oracle(flat, ok), GeometryError);
  EXPECT_THROW(giou_oracle(ok, flat), GeometryError);
  EXPECT_THROW(diou_oracle(flat, ok), GeometryError);
  EXPECT_THROW(ciou_oracle(ok, flat), GeometryError);
}

TEST(Geom, IouMatchesCountedCells) {
  Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    int c[8];
    for (int k = 0; k < 8; k += 2) c[k] = static_cast<int>(rng.below(30));
    for (int k = 1; k < 8; k += 2) c[k] = static_cast<int>(rng.below(30));
    const int ax2 = c[0] + 1 + static_cast<int>(rng.below(15));
    const int ay2 = c[1] + 1 + static_cast<int>(rng.below(15));
    const int bx2 = c[2] + 1 + static_cast<int>(rng.below(15));
    const int by2 = c[3] + 1 + static_cast<int>(rng.below(15));
    const double want = counted_iou(c[0], c[1], ax2, ay2, c[2], c[3], bx2, by2);
    EXPECT_NEAR(iou_oracle(CornerBox(c[0], c[1], ax2, ay2), CornerBox(c[2], c[3], bx2, by2)), want,
                1e-12);
  }
}

TEST(Geom, OracleProperties) {
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    const CornerBox a = random_box(rng), b = random_box(rng);
    const double iou = iou_oracle(a, b);
    const double giou = giou_oracle(a, b);
    EXPECT_EQ(iou, iou_oracle(b, a));
    EXPECT_EQ(giou, giou_oracle(b, a));
    EXPECT_GE(iou, 0.0);
    EXPECT_LE(iou, 1.0);
    EXPECT_LE(giou, iou + 1e-15);
    EXPECT_GT(giou, -1.0);

    const double dx = rng.uniform(-100, 100), dy = rng.uniform(-100, 100);
    const CornerBox at(a.x1() + dx, a.y1() + dy, a.x2() + dx, a.y2() + dy);
    const CornerBox bt(b.x1() + dx, b.y1() + dy, b.x2() + dx, b.y2() + dy);
    EXPECT_NEAR(iou_oracle(at, bt), iou, 1e-12);
    EXPECT_NEAR(giou_oracle(at, bt), giou, 1e-12);

    // Scaling about the origin by a power of two is exact in floating point.
    const double k = std::ldexp(1.0, static_cast<int>(rng.below(7)) - 3);
    const CornerBox as(a.x1() * k, a.y1() * k, a.x2() * k, a.y2() * k);
    const CornerBox bs(b.x1() * k, b.y1() * k, b.x2() * k, b.y2() * k);
    EXPECT_EQ(iou_oracle(as, bs), iou);
    // Any other factor: invariant up to rounding.
    const double f = rng.uniform(0.1, 10);
    EXPECT_NEAR(iou_oracle(CornerBox(a.x1() * f, a.y1() * f, a.x2() * f, a.y2() * f),
                           CornerBox(b.x1() * f, b.y1() * f, b.x2() * f, b.y2() * f)),
                iou, 1e-12);
  }
}

TEST(Geom, GiouEqualsIouWhenHullIsUnion) {
  // Side-by-side boxes of equal height fill their hull.
  const CornerBox a(0, 0, 3, 2), b(1, 0, 5, 2);
  EXPECT_DOUBLE_EQ(hull(a, b).area(), a.area() + b.area() - intersection_area(a, b));
  EXPECT_DOUBLE_EQ(giou_oracle(a, b), iou_oracle(a, b));
}

TEST(Geom, IouIsOneOnlyForEqualBoxes) {
  const CornerBox a(0, 0, 4, 4);
  EXPECT_DOUBLE_EQ(iou_oracle(a, CornerBox(0, 0, 4, 4)), 1.0);
  EXPECT_LT(iou_oracle(a, CornerBox(0, 0, 4, 4.001)), 1.0);
  EXPECT_LT(iou_oracle(a, CornerBox(0.001, 0, 4, 4)), 1.0);
}

TEST(Geom, DiouAndCiouReferenceValues) {
  // Same-size boxes offset by 1 along x: centers 1 apart, hull diagonal^2 = 9 + 4.
  const CornerBox a(0, 0, 2, 2), b(1, 0, 3, 2);
  EXPECT_NEAR(diou_oracle(a, b), 1.0 / 3.0 - 1.0 / 13.0, 1e-15);
  // Equal aspect ratios: the CIoU aspect penalty vanishes.
  EXPECT_NEAR(ciou_oracle(a, b), diou_oracle(a, b), 1e-15);
  // Different aspect: v = 4/pi^2 (atan(2) - atan(1))^2, alpha = v / (1 - iou + v).
  const CornerBox c(0, 0, 2, 1);
  const double iou = iou_oracle(a, c);
  const double v = 4.0 / (M_PI * M_PI) * std::pow(std::atan(2.0) - std::atan(1.0), 2);
  const double alpha = v / (1.0 - iou + v);
  EXPECT_NEAR(ciou_oracle(a, c), diou_oracle(a, c) - alpha * v, 1e-15);
}

#include <gtest/gtest.h>

#include <cmath>

#include "objectbox/codec.hpp"
#include "objectbox/errors.hpp"
#include "objectbox/random.hpp"

using namespace objectbox;

namespace {

const ScaleConfig kScale(640, 640);

void expect_target(const RegressionTarget& t, double l, double tp, double r, double b) {
  EXPECT_NEAR(t.left, l, 1e-12);
  EXPECT_NEAR(t.top, tp, 1e-12);
  EXPECT_NEAR(t.right, r, 1e-12);
  EXPECT_NEAR(t.bottom, b, 1e-12);
}

}  // namespace

TEST(Codec, EncodeWorkedBox) {
  const BoundingBox box(100, 60, 40, 20);
  EXPECT_EQ(center_cell(box, kScale, 0), (Cell{12, 7}));
  expect_target(encode(box, {12, 7}, kScale, 0), 3, 1.75, 3, 1.75);
}

TEST(Codec, EncodeCellSizedBoxAtCellCenter) {
  for (std::size_t si = 0; si < 3; ++si) {
    const double s = kScale.stride(si);
    const int c = 5;
    const BoundingBox box(s * (c + 0.5), s * (c + 0.5), s, s);
    expect_target(encode(box, {c, c}, kScale, si), 1, 1, 1, 1);
  }
}

TEST(Codec, EncodeSubCellObject) {
  const BoundingBox box(12, 12, 4, 4);
  const RegressionTarget t = encode(box, {0, 0}, kScale, 2);
  // x1 = 10, x2 = 14: L = 1 - 10/32, R = 14/32. L + R = 4/32 + 1 checks it.
  expect_target(t, 0.6875, 0.6875, 0.4375, 0.4375);
  EXPECT_DOUBLE_EQ(t.left + t.right, 4.0 / 32 + 1);
  EXPECT_TRUE(t.all_positive());
}

TEST(Codec, EncodeRejectsUnreachableCell) {
  const BoundingBox box(100, 60, 40, 20);
  EXPECT_THROW(encode(box, {20, 7}, kScale, 0), GeometryError);
  // The raw formula still evaluates.
  EXPECT_LT(cell_distances(box, {20, 7}, kScale, 0).right, 0.0);
}

TEST(Codec, NeighbourCellShiftsTheSumIdentityByOne) {
  const BoundingBox box(100, 60, 40, 20);
  const RegressionTarget t = encode(box, {11, 7}, kScale, 0);
  EXPECT_NEAR(t.left + t.right, 40.0 / 8 + 1, 1e-12);
  EXPECT_NEAR(t.left, 3 - 1, 1e-12);
  EXPECT_NEAR(t.right, 3 + 1, 1e-12);
}

TEST(Codec, SumIdentitiesAndPositivity) {
  Rng rng(21);
  for (int i = 0; i < 5000; ++i) {
    const BoundingBox box(rng.uniform(0.001, 639.999), rng.uniform(0.001, 639.999),
                          rng.uniform(0.01, 600), rng.uniform(0.01, 600));
    for (std::size_t si = 0; si < 3; ++si) {
      const double s = kScale.stride(si);
      const RegressionTarget t = encode(box, center_cell(box, kScale, si), kScale, si);
      EXPECT_NEAR(t.left + t.right, box.w() / s + 1, 1e-9);
      EXPECT_NEAR(t.top + t.bottom, box.h() / s + 1, 1e-9);
      EXPECT_TRUE(t.all_positive());
    }
  }
}

TEST(Codec, DecodeAtZeroGivesGain) {
  const RegressionTarget d = decode(RawPrediction{{0, 0, 0, 0}, 0}, kScale);
  expect_target(d, 2, 2, 2, 2);
  const RegressionTarget d2 = decode(RawPrediction{{0, 0, 0, 0}, 2}, kScale);
  expect_target(d2, 16, 16, 16, 16);
}

TEST(Codec, DecodeSaturates) {
  EXPECT_NEAR(decode_distance(-40, 2), 0.0, 1e-30);
  EXPECT_GT(decode_distance(-40, 2), 0.0);
  EXPECT_NEAR(decode_distance(40, 2), 8.0, 1e-12);
  EXPECT_LE(decode_distance(1e6, 2), 8.0);
  EXPECT_NEAR(decode_slope(30, 4), 0.0, 1e-10);
}

TEST(Codec, DecodeIsMonotoneWithMatchingSlope) {
  Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    const double p = rng.uniform(-8, 8);
    const double g = rng.uniform(0.5, 20);
    const double h = 1e-6;
    EXPECT_LT(decode_distance(p, g), decode_distance(p + 1e-3, g));
    const double fd = (decode_distance(p + h, g) - decode_distance(p - h, g)) / (2 * h);
    // 2 g (2 sigma) * 2 sigma (1 - sigma), written out independently.
    const double s = 1.0 / (1.0 + std::exp(-p));
    const double slope = 2 * g * (2 * s) * 2 * s * (1 - s);
    EXPECT_NEAR(decode_slope(p, g), slope, 1e-12 * std::max(1.0, slope));
    EXPECT_LT(std::abs(fd - slope) / slope, 1e-6);
  }
}

TEST(Codec, EncodeLogitInverse) {
  const RawPrediction z = encode_logit(RegressionTarget{2, 2, 2, 2, 0}, kScale);
  for (double v : z.logits) EXPECT_NEAR(v, 0.0, 1e-15);
  EXPECT_EQ(z.scale_index, 0u);
}

TEST(Codec, EncodeLogitRangeErrors) {
  EXPECT_THROW(encode_logit(RegressionTarget{8, 1, 1, 1, 0}, kScale), RangeError);
  EXPECT_THROW(encode_logit(RegressionTarget{1, 0, 1, 1, 0}, kScale), RangeError);
  EXPECT_THROW(encode_logit(RegressionTarget{1, 1, -1, 1, 1}, kScale), RangeError);
  try {
    encode_logit(RegressionTarget{1, 1, 1, 64, 2}, kScale);
    FAIL() << "expected RangeError";
  } catch (const RangeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("bottom"), std::string::npos) << msg;
    EXPECT_NE(msg.find("64"), std::string::npos) << msg;
  }
}

TEST(Codec, RoundTripBothWays) {
  Rng rng(2);
  for (std::size_t si = 0; si < 3; ++si) {
    const double g = kScale.gain(si);
    for (int i = 0; i < 1000; ++i) {
      RegressionTarget t;
      t.scale_index = si;
      t.left = rng.uniform(1e-3, 4 * g - 1e-3);
      t.top = rng.uniform(1e-3, 4 * g - 1e-3);
      t.right = rng.uniform(1e-3, 4 * g - 1e-3);
      t.bottom = rng.uniform(1e-3, 4 * g - 1e-3);
      const RegressionTarget back = decode(encode_logit(t, kScale), kScale);
      expect_target(back, t.left, t.top, t.right, t.bottom);
      EXPECT_NEAR(back.left, t.left, 1e-9);

      RawPrediction raw{{rng.uniform(-6, 6), rng.uniform(-6, 6), rng.uniform(-6, 6),
                         rng.uniform(-6, 6)},
                        si};
      const RawPrediction again = encode_logit(decode(raw, kScale), kScale);
      for (int k = 0; k < 4; ++k) EXPECT_NEAR(again.logits[k], raw.logits[k], 1e-7);
    }
  }
}

TEST(Codec, RepresentableRange) {
  EXPECT_EQ(representable_range(kScale, 0), (std::pair<double, double>{0.0, 64.0}));
  EXPECT_EQ(representable_range(kScale, 2), (std::pair<double, double>{0.0, 2048.0}));
  EXPECT_TRUE(is_representable(RegressionTarget{7.9, 1, 1, 1, 0}, kScale));
  EXPECT_FALSE(is_representable(RegressionTarget{8, 1, 1, 1, 0}, kScale));
}

TEST(Codec, ScaleConfigValidation) {
  EXPECT_THROW(ScaleConfig(640, 640, {8, 16, 32}, {2, 0, 16}), ConfigError);
  EXPECT_THROW(ScaleConfig(640, 640, {8, 16, 32}, {2, 4}), ConfigError);
  EXPECT_THROW(ScaleConfig(640, 640, {16, 8, 32}, {2, 4, 16}), ConfigError);
  EXPECT_THROW(ScaleConfig(650, 640), ConfigError);
  const ScaleConfig padded = ScaleConfig::padded_for_image(650, 427);
  EXPECT_EQ(padded.image_w(), 672);
  EXPECT_EQ(padded.image_h(), 448);
  EXPECT_EQ(padded.grid_w(0), 84);
  EXPECT_EQ(padded.grid_h(2), 14);
}

TEST(Codec, CellFrameBoxInvertsEncode) {
  const BoundingBox box(100, 60, 40, 20);
  for (Cell c : {Cell{12, 7}, Cell{11, 7}, Cell{12, 6}}) {
    const auto back = cell_frame_box(encode(box, c, kScale, 0), c, kScale);
    ASSERT_TRUE(back.has_value());
    EXPECT_NEAR(back->x1(), 80, 1e-12);
    EXPECT_NEAR(back->y1(), 50, 1e-12);
    EXPECT_NEAR(back->x2(), 120, 1e-12);
    EXPECT_NEAR(back->y2(), 70, 1e-12);
  }
  EXPECT_FALSE(cell_frame_box(RegressionTarget{0.2, 1, 0.3, 1, 0}, {3, 3}, kScale).has_value());
}

#include <gtest/gtest.h>

#include <random>

#include "cytoseg/raster.hpp"
#include "oracles.hpp"

using namespace cytoseg;

TEST(GrayImage, RejectsValuesAboveLMax) {
  EXPECT_THROW(GrayImage(2, 2, std::vector<std::uint16_t>{0, 1, 2, 256}), Error);
  EXPECT_NO_THROW(GrayImage(2, 2, std::vector<std::uint16_t>{0, 1, 2, 255}));
  EXPECT_NO_THROW(GrayImage(1, 1, std::vector<std::uint16_t>{1000}, 1000));
}

TEST(GrayImage, RejectsWrongDataLength) {
  try {
    GrayImage(3, 3, std::vector<std::uint16_t>(8, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::dimension_mismatch);
  }
}

TEST(Histogram, ConstantImage) {
  const GrayImage img(4, 4, 7);
  const auto h = compute_histogram(img);
  EXPECT_EQ(h.total, 16u);
  for (int v = 0; v <= 255; ++v) EXPECT_EQ(h.counts[v], v == 7 ? 16u : 0u);
}

TEST(Histogram, EveryLevelOnce) {
  GrayImage img(16, 16);
  for (int i = 0; i < 256; ++i) img[static_cast<std::size_t>(i)] = static_cast<std::uint16_t>(i);
  const auto h = compute_histogram(img);
  for (int v = 0; v <= 255; ++v) EXPECT_EQ(h.counts[v], 1u);
}

TEST(Histogram, MatchesNaiveTallyWithRoi) {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const auto img = oracle::random_image(rng, 32, 32);
    auto roi = oracle::random_mask(rng, 32, 32, 0.4);
    roi[0] = 1;
    const auto h = compute_histogram(img, roi);
    const auto want = oracle::histogram(img, &roi);
    EXPECT_EQ(h.counts, want);
    EXPECT_EQ(h.total, count(roi));
  }
}

TEST(Histogram, EmptyRoiAndMismatch) {
  const GrayImage img(4, 4, 1);
  try {
    compute_histogram(img, BinaryMask(4, 4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::empty_roi);
  }
  try {
    compute_histogram(img, BinaryMask(3, 4, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::dimension_mismatch);
  }
}

TEST(Normalize, TwoEnds) {
  Histogram h;
  h.counts.assign(256, 0);
  h.counts[0] = 1;
  h.counts[255] = 1;
  h.total = 2;
  const auto p = normalize(h);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[255], 0.5);
}

TEST(Normalize, UniformAndDivisionOracle) {
  Histogram h;
  h.counts.assign(256, 3);
  h.total = 768;
  const auto p = normalize(h);
  for (int v = 0; v <= 255; ++v) EXPECT_DOUBLE_EQ(p[v], 1.0 / 256.0);

  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> d(0, 1000);
  h.total = 0;
  for (auto& c : h.counts) h.total += (c = d(rng));
  const auto q = normalize(h);
  double s = 0.0;
  for (int v = 0; v <= 255; ++v) {
    EXPECT_EQ(q[v], static_cast<double>(h.counts[v]) / static_cast<double>(h.total));
    s += q[v];
  }
  EXPECT_NEAR(s, 1.0, 1e-9);
}

TEST(Normalize, ZeroTotalThrows) {
  Histogram h;
  h.counts.assign(256, 0);
  h.total = 0;
  EXPECT_THROW(normalize(h), Error);
}

TEST(LabelMap, MasksAndAreas) {
  LabelMap m(3, 1, {0, 1, 2}, 2);
  EXPECT_EQ(count(m.mask_of(2)), 1u);
  EXPECT_EQ(count(m.foreground()), 2u);
  EXPECT_EQ(m.areas(), (std::vector<std::size_t>{1, 1, 1}));
}

#include <gtest/gtest.h>

#include <cmath>

#include "semtrack/embedder.hpp"
#include "semtrack/rng.hpp"

namespace semtrack {
namespace {

ImageBuffer random_image(int h, int w, std::uint64_t seed) {
  RngStream rng(seed);
  ImageBuffer img(h, w);
  for (auto& s : img.samples()) s = static_cast<float>(rng.uniform());
  return img;
}

ImageBuffer flipped(const ImageBuffer& img) {
  ImageBuffer out(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) out.at(y, img.width() - 1 - x, c) = img.at(y, x, c);
  return out;
}

TEST(Embedder, FixedShapeForAnySize) {
  for (auto [h, w] : {std::pair{14, 14}, {15, 29}, {240, 320}, {100, 37}}) {
    EXPECT_EQ(default_embedder(random_image(h, w, 1)).shape(), (Shape{16, 14, 14})) << h << "x" << w;
  }
}

TEST(Embedder, TooSmallRejected) { EXPECT_THROW(default_embedder(ImageBuffer(13, 40)), ValidationError); }

TEST(Embedder, ConstantGrayHasNoVarianceOrGradient) {
  const auto f = default_embedder(ImageBuffer(37, 53, 0.4f));
  for (std::size_t c = 0; c < 16; ++c)
    for (std::size_t y = 0; y < 14; ++y)
      for (std::size_t x = 0; x < 14; ++x) {
        const double v = f.at(c, y, x);
        if (c < 3) {
          EXPECT_NEAR(v, 0.4, 1e-6);
        } else if (c == 14) {
          EXPECT_NEAR(v, 0.4, 1e-6);
        } else {
          EXPECT_EQ(v, 0.0) << c;
        }
      }
}

TEST(Embedder, HorizontalFlipMirrorsColourChannels) {
  for (auto [h, w, seed] : {std::tuple{28, 28, 2}, {31, 45, 3}, {50, 21, 4}}) {
    const auto img = random_image(h, w, static_cast<std::uint64_t>(seed));
    const auto a = default_embedder(img);
    const auto b = default_embedder(flipped(img));
    for (std::size_t c : {0u, 1u, 2u, 3u, 4u, 5u, 14u, 15u})
      for (std::size_t y = 0; y < 14; ++y)
        for (std::size_t x = 0; x < 14; ++x) EXPECT_NEAR(a.at(c, y, x), b.at(c, y, 13 - x), 1e-12);
  }
}

TEST(Embedder, GradientChannelsIgnoreBrightnessOffset) {
  auto img = random_image(42, 42, 5);
  auto shifted = img;
  for (auto& v : img.samples()) v *= 0.8f;
  for (auto& v : shifted.samples()) v = v * 0.8f + 0.125f;
  const auto a = default_embedder(img);
  const auto b = default_embedder(shifted);
  for (std::size_t c = 6; c < 14; ++c)
    for (std::size_t y = 0; y < 14; ++y)
      for (std::size_t x = 0; x < 14; ++x) {
        EXPECT_GE(a.at(c, y, x), 0.0);
        EXPECT_NEAR(a.at(c, y, x), b.at(c, y, x), 1e-5);
      }
}

TEST(Embedder, VerticalEdgeFillsOnlyTheFirstBin) {
  ImageBuffer img(28, 28, 0.0f);
  for (int y = 0; y < 28; ++y)
    for (int x = 14; x < 28; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = 1.0f;
  const auto f = default_embedder(img);
  for (std::size_t x : {6u, 7u}) {
    EXPECT_GT(f.at(6, 3, x), 0.0);
    for (std::size_t c = 7; c < 14; ++c) EXPECT_EQ(f.at(c, 3, x), 0.0) << c;
  }
  for (std::size_t c = 6; c < 14; ++c) {
    EXPECT_EQ(f.at(c, 3, 0), 0.0);
    EXPECT_EQ(f.at(c, 3, 13), 0.0);
  }
}


TEST(Embedder, DeterministicAndInterfaceConsistent) {
  const DefaultEmbedder e;
  const auto img = random_image(30, 40, 6);
  EXPECT_EQ(e.embed(img), default_embedder(img));
  EXPECT_EQ(e.channels(), 16u);
  EXPECT_EQ(e.grid_height(), 14u);
  EXPECT_EQ(e.grid_width(), 14u);
}

TEST(PoolBox, FullImageBoxIsCellMean) {
  const auto img = random_image(28, 42, 7);
  const auto f = default_embedder(img);
  const auto v = pool_box(f, {0, 0, 42, 28}, 28, 42);
  ASSERT_EQ(v.size(), 16u);
  for (std::size_t c = 0; c < 16; ++c) {
    double mean = 0.0;
    for (std::size_t y = 0; y < 14; ++y)
      for (std::size_t x = 0; x < 14; ++x) mean += f.at(c, y, x) / 196.0;
    EXPECT_NEAR(v[c], mean, 1e-12);
  }
}

TEST(PoolBox, SingleCellBoxReturnsThatCell) {
  const auto img = random_image(28, 28, 8);
  const auto f = default_embedder(img);
  const auto v = pool_box(f, {4, 6, 2, 2}, 28, 28);
  for (std::size_t c = 0; c < 16; ++c) EXPECT_NEAR(v[c], f.at(c, 3, 2), 1e-12);
}

TEST(PoolBox, OutsideBoxFallsBackToNearestCell) {
  const auto img = random_image(28, 28, 9);
  const auto f = default_embedder(img);
  const auto v = pool_box(f, {100, -50, 5, 5}, 28, 28);
  for (std::size_t c = 0; c < 16; ++c) EXPECT_NEAR(v[c], f.at(c, 0, 13), 1e-12);
}

}  // namespace
}  // namespace semtrack

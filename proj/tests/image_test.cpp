#include <gtest/gtest.h>

#include <fstream>
#include <iterator>

#include "facehal/image.hpp"
#include "facehal/image_io.hpp"
#include "support/test_util.hpp"

namespace facehal {
namespace {

using testing::TempDir;

std::vector<char> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TEST(Image, RejectsBadShapes) {
  EXPECT_THROW(Image(0, 3, 1), ShapeError);
  EXPECT_THROW(Image(2, 2, 2), ShapeError);
  EXPECT_THROW(Image(2, 2, 1, std::vector<double>(3)), ShapeError);
}

TEST(Image, VectorizeReshapeIsExact) {
  const Image img = testing::random_image(7, 5, 3, 11);
  EXPECT_EQ(reshape(vectorize(img)), img);
  const ImageVector v = vectorize(img);
  EXPECT_EQ(v.size(), 7u * 5u * 3u);
}

TEST(Luma, Bt601Weights) {
  Image rgb(3, 1, 3);
  rgb.at(0, 0, 0) = 1.0;
  rgb.at(1, 0, 1) = 1.0;
  rgb.at(2, 0, 0) = rgb.at(2, 0, 1) = rgb.at(2, 0, 2) = 0.4;
  const Image l = to_luma(rgb);
  ASSERT_EQ(l.channels(), 1);
  EXPECT_DOUBLE_EQ(l.at(0, 0), 0.299);
  EXPECT_DOUBLE_EQ(l.at(1, 0), 0.587);
  EXPECT_NEAR(l.at(2, 0), 0.4, 1e-15);
  const Image gray = testing::random_image(4, 4, 1, 3);
  EXPECT_EQ(to_luma(gray), gray);
}

TEST(ImageIo, LoadsPgmBytes) {
  TempDir dir("pgm");
  const auto path = dir / "a.pgm";
  {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n# comment\n2 2\n255\n";
    const unsigned char px[4] = {0, 255, 128, 64};
    out.write(reinterpret_cast<const char*>(px), 4);
  }
  const Image img = load_image(path);
  ASSERT_EQ(img.width(), 2);
  ASSERT_EQ(img.channels(), 1);
  EXPECT_DOUBLE_EQ(img.data()[0], 0.0);
  EXPECT_DOUBLE_EQ(img.data()[1], 1.0);
  EXPECT_DOUBLE_EQ(img.data()[2], 128.0 / 255.0);
  EXPECT_DOUBLE_EQ(img.data()[3], 64.0 / 255.0);
}

TEST(ImageIo, LoadsRgbPng) {
  TempDir dir("png");
  Image red(1, 1, 3);
  red.at(0, 0, 0) = 1.0;
  save_image(red, dir / "r.png");
  const Image back = load_image(dir / "r.png");
  ASSERT_EQ(back.channels(), 3);
  EXPECT_EQ(back.data(), (std::vector<double>{1.0, 0.0, 0.0}));
}

TEST(ImageIo, QuantizationClampsAndRoundsHalfUp) {
  TempDir dir("quant");
  Image img(3, 1, 1, std::vector<double>{1.2, 0.5, -0.1});
  save_image(img, dir / "q.pgm");
  const auto bytes = read_bytes(dir / "q.pgm");
  ASSERT_GE(bytes.size(), 3u);
  const auto* px = reinterpret_cast<const unsigned char*>(bytes.data() + bytes.size() - 3);
  EXPECT_EQ(px[0], 255);
  EXPECT_EQ(px[1], 128);
  EXPECT_EQ(px[2], 0);
}

TEST(ImageIo, SaveLoadSaveIsByteStable) {
  TempDir dir("stable");
  for (int c : {1, 3}) {
    const Image img = testing::random_image(9, 6, c, 100 + c, -0.2, 1.2);
    for (const char* ext : {".png", ".pnm"}) {
      const auto p1 = dir / ("a" + std::to_string(c) + ext);
      const auto p2 = dir / ("b" + std::to_string(c) + ext);
      save_image(img, p1);
      save_image(load_image(p1), p2);
      EXPECT_EQ(read_bytes(p1), read_bytes(p2)) << ext << " channels " << c;
    }
  }
}

TEST(ImageIo, ErrorPaths) {
  TempDir dir("ioerr");
  EXPECT_THROW(load_image(dir / "missing.png"), IoError);
  {
    std::ofstream out(dir / "deep.pgm", std::ios::binary);
    out << "P5\n1 1\n65535\n";
    out.put(0).put(0);
  }
  EXPECT_THROW(load_image(dir / "deep.pgm"), IoError);
  {
    std::ofstream out(dir / "zero.pgm", std::ios::binary);
    out << "P5\n0 4\n255\n";
  }
  EXPECT_THROW(load_image(dir / "zero.pgm"), IoError);
  {
    std::ofstream out(dir / "junk.png", std::ios::binary);
    out << "not a png";
  }
  EXPECT_THROW(load_image(dir / "junk.png"), IoError);
  EXPECT_THROW(save_image(Image(2, 2, 1), dir / "no_such_dir" / "x.png"), IoError);
}

TEST(Bicubic, ConstantStaysConstant) {
  const Image c(13, 9, 3, 0.37);
  for (auto [w, h] : {std::pair{13, 9}, {40, 31}, {3, 2}, {1, 1}, {26, 5}}) {
    const Image r = bicubic_resize(c, w, h);
    for (double v : r.data()) EXPECT_NEAR(v, 0.37, 1e-6);
  }
}

TEST(Bicubic, SameSizeIsIdentity) {
  const Image img = testing::random_image(11, 8, 1, 5);
  const Image r = bicubic_resize(img, 11, 8);
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(r.data()[i], img.data()[i], 1e-6);
}

// Upscaled bilinear ramp against the analytic ramp at each output pixel's
// source coordinate (away from the replicated border).
TEST(Bicubic, UpscaleReproducesRamp) {
  const double ax = 0.02, ay = 0.015, b = 0.1;
  const Image ramp = testing::ramp_image(16, 16, ax, ay, b);
  const int factor = 3;
  const Image up = bicubic_resize(ramp, 16 * factor, 16 * factor);
  for (int y = 0; y < up.height(); ++y) {
    for (int x = 0; x < up.width(); ++x) {
      const double sx = (x + 0.5) / factor - 0.5;
      const double sy = (y + 0.5) / factor - 0.5;
      if (sx < 2 || sy < 2 || sx > 13 || sy > 13) continue;
      EXPECT_NEAR(up.at(x, y), ax * sx + ay * sy + b, 0.02);
    }
  }
}

TEST(Bicubic, RejectsEmptyTarget) {
  EXPECT_THROW(bicubic_resize(Image(4, 4, 1), 0, 4), ShapeError);
}

}  // namespace
}  // namespace facehal

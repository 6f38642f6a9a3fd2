#include <gtest/gtest.h>
#include <png.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "cytoseg/image_io.hpp"
#include "oracles.hpp"

using namespace cytoseg;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("cytoseg_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream(path, std::ios::binary) << bytes;
}

void write_pgm(const std::string& path, int w, int h, int maxval, const std::vector<unsigned char>& px) {
  std::string s = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n" + std::to_string(maxval) + "\n";
  s.append(px.begin(), px.end());
  write_bytes(path, s);
}

// Minimal libpng writer for formats the library never writes itself.
void write_png_raw(const std::string& path, int w, int h, int depth, int color, const std::vector<unsigned char>& rows) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  ASSERT_NE(fp, nullptr);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, fp);
  png_set_IHDR(png, info, w, h, depth, color, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = rows.size() / static_cast<std::size_t>(h);
  for (int y = 0; y < h; ++y) png_write_row(png, rows.data() + stride * static_cast<std::size_t>(y));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::invalid_argument;
}

}  // namespace

TEST(LoadGrayscale, ZeroPgm) {
  TempDir d;
  write_pgm(d.file("z.pgm"), 3, 3, 255, std::vector<unsigned char>(9, 0));
  const auto img = load_grayscale(d.file("z.pgm"));
  EXPECT_EQ(img.width(), 3);
  EXPECT_EQ(img.height(), 3);
  for (auto v : img.data()) EXPECT_EQ(v, 0);
}

TEST(LoadGrayscale, PgmRowMajor) {
  TempDir d;
  write_pgm(d.file("r.pgm"), 3, 3, 255, {0, 1, 2, 3, 4, 5, 6, 7, 8});
  const auto img = load_grayscale(d.file("r.pgm"));
  for (int i = 0; i < 9; ++i) EXPECT_EQ(img[static_cast<std::size_t>(i)], i);
  EXPECT_EQ(img(2, 1), 5);
}

TEST(LoadGrayscale, PgmWithCommentInHeader) {
  TempDir d;
  write_bytes(d.file("c.pgm"), std::string("P5\n# made by hand\n2 1\n255\n") + '\x0a' + '\xff');
  const auto img = load_grayscale(d.file("c.pgm"));
  EXPECT_EQ(img[0], 10);
  EXPECT_EQ(img[1], 255);
}

TEST(LoadGrayscale, RedPixelLuma) {
  TempDir d;
  write_png_raw(d.file("red.png"), 1, 1, 8, PNG_COLOR_TYPE_RGB, {255, 0, 0});
  EXPECT_EQ(load_grayscale(d.file("red.png"))[0], 76);
}

TEST(LoadGrayscale, RgbaDropsAlpha) {
  TempDir d;
  write_png_raw(d.file("rgba.png"), 2, 1, 8, PNG_COLOR_TYPE_RGB_ALPHA, {0, 255, 0, 0, 0, 0, 255, 255});
  const auto img = load_grayscale(d.file("rgba.png"));
  EXPECT_EQ(img[0], 150);  // round(0.587 * 255)
  EXPECT_EQ(img[1], 29);   // round(0.114 * 255)
}

TEST(LoadGrayscale, Errors) {
  TempDir d;
  EXPECT_EQ(code_of([&] { load_grayscale(d.file("missing.png")); }), ErrorCode::unreadable_file);
  write_bytes(d.file("junk.bin"), "hello world");
  EXPECT_EQ(code_of([&] { load_grayscale(d.file("junk.bin")); }), ErrorCode::unsupported_format);
  write_png_raw(d.file("g16.png"), 1, 1, 16, PNG_COLOR_TYPE_GRAY, {1, 2});
  EXPECT_EQ(code_of([&] { load_grayscale(d.file("g16.png")); }), ErrorCode::unsupported_bit_depth);
  write_bytes(d.file("p16.pgm"), std::string("P5 1 1 65535\n") + '\x01' + '\x02');
  EXPECT_EQ(code_of([&] { load_grayscale(d.file("p16.pgm")); }), ErrorCode::unsupported_bit_depth);
  write_bytes(d.file("short.pgm"), "P5 4 4 255\nab");
  EXPECT_NE(code_of([&] { load_grayscale(d.file("short.pgm")); }), ErrorCode::unsupported_bit_depth);
}

TEST(SaveMask, RandomRoundTrip) {
  TempDir d;
  std::mt19937_64 rng(11);
  const auto m = oracle::random_mask(rng, 16, 16, 0.5);
  save_mask(m, d.file("m.png"));
  EXPECT_EQ(load_mask(d.file("m.png")), m);
  const auto raw = load_grayscale(d.file("m.png"));
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(raw[i], m[i] ? 255 : 0);
}

TEST(SaveMask, EmptyMaskIsAllZero) {
  TempDir d;
  save_mask(BinaryMask(5, 4), d.file("e.png"));
  const auto raw = load_grayscale(d.file("e.png"));
  for (auto v : raw.data()) EXPECT_EQ(v, 0);
}

TEST(SaveMask, LabelMapIsSixteenBit) {
  TempDir d;
  LabelMap labels(4, 1, {0, 1, 2, 3}, 3);
  save_mask(labels, d.file("l.png"));
  const auto back = load_label_map(d.file("l.png"));
  std::set<int> distinct(back.data().begin(), back.data().end());
  EXPECT_EQ(distinct, (std::set<int>{0, 1, 2, 3}));
  EXPECT_EQ(back.n_labels(), 3);

  FILE* fp = std::fopen(d.file("l.png").c_str(), "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, fp);
  png_read_info(png, info);
  EXPECT_EQ(png_get_bit_depth(png, info), 16);
  EXPECT_EQ(png_get_color_type(png, info), PNG_COLOR_TYPE_GRAY);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);

  LabelMap big(300, 300);
  big[0] = 70000;
  EXPECT_THROW(save_mask(big, d.file("big.png")), Error);
}

TEST(SaveImage, RoundTripAndDeterministicBytes) {
  TempDir d;
  std::mt19937_64 rng(5);
  const auto img = oracle::random_image(rng, 37, 23);
  save_image(img, d.file("a.png"));
  save_image(img, d.file("b.png"));
  EXPECT_EQ(load_grayscale(d.file("a.png")), img);
  std::ifstream a(d.file("a.png"), std::ios::binary), b(d.file("b.png"), std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(sa, sb);
}

TEST(SaveMask, UnwritablePathIsIoFailure) {
  EXPECT_EQ(code_of([] { save_mask(BinaryMask(2, 2), "/nonexistent_dir_xyz/m.png"); }), ErrorCode::io_failure);
}

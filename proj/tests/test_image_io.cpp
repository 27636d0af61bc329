#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <jpeglib.h>

#include "spraydot/image_io.hpp"

namespace fs = std::filesystem;
using namespace spraydot;

namespace {

fs::path temp_path(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "spraydot-image-io";
    fs::create_directories(dir);
    return dir / name;
}

std::vector<Rgb> gradient_pixels(int w, int h) {
    std::vector<Rgb> px;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            px.push_back({static_cast<std::uint8_t>(x * 25), static_cast<std::uint8_t>(y * 25),
                          static_cast<std::uint8_t>((x + y) % 256)});
    return px;
}

void write_test_jpeg(const std::string& path, int w, int h, Rgb color) {
    jpeg_compress_struct cinfo;
    jpeg_error_mgr jerr;
    cinfo.err = jpeg_std_error(&jerr);
    jpeg_create_compress(&cinfo);
    FILE* f = std::fopen(path.c_str(), "wb");
    ASSERT_NE(f, nullptr);
    jpeg_stdio_dest(&cinfo, f);
    cinfo.image_width = static_cast<JDIMENSION>(w);
    cinfo.image_height = static_cast<JDIMENSION>(h);
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, 100, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    std::vector<unsigned char> row(static_cast<std::size_t>(w) * 3);
    for (int x = 0; x < w; ++x) {
        row[3 * x] = color.r;
        row[3 * x + 1] = color.g;
        row[3 * x + 2] = color.b;
    }
    while (cinfo.next_scanline < cinfo.image_height) {
        JSAMPROW ptr = row.data();
        jpeg_write_scanlines(&cinfo, &ptr, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
    std::fclose(f);
}

}  // namespace

TEST(Hsv, ReferenceColors) {
    EXPECT_EQ(rgb_to_hsv({0, 0, 0}), (Hsv{0, 0, 0}));
    EXPECT_EQ(rgb_to_hsv({255, 255, 255}), (Hsv{0, 0, 255}));
    EXPECT_EQ(rgb_to_hsv({255, 0, 0}), (Hsv{0, 255, 255}));
    // 120 and 240 degrees, floored onto the 256 scale
    EXPECT_EQ(rgb_to_hsv({0, 255, 0}), (Hsv{85, 255, 255}));
    EXPECT_EQ(rgb_to_hsv({0, 0, 255}), (Hsv{170, 255, 255}));
}

TEST(Hsv, GraysHaveNoHueOrSaturation) {
    for (int v = 0; v < 256; ++v) {
        const auto c = static_cast<std::uint8_t>(v);
        EXPECT_EQ(rgb_to_hsv({c, c, c}), (Hsv{0, 0, c}));
    }
}

TEST(Hsv, MatchesFloatingPointHexcone) {
    for (int r = 0; r < 256; r += 7)
        for (int g = 0; g < 256; g += 11)
            for (int b = 0; b < 256; b += 13) {
                const int mx = std::max({r, g, b}), mn = std::min({r, g, b});
                const Hsv h = rgb_to_hsv({static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                                          static_cast<std::uint8_t>(b)});
                EXPECT_EQ(h.v, mx);
                if (mx == mn) continue;
                double deg;
                if (mx == r) deg = 60.0 * std::fmod((g - b) / double(mx - mn) + 6.0, 6.0);
                else if (mx == g) deg = 60.0 * ((b - r) / double(mx - mn) + 2.0);
                else deg = 60.0 * ((r - g) / double(mx - mn) + 4.0);
                EXPECT_NEAR(h.h, deg * 256.0 / 360.0, 1.0);
                EXPECT_NEAR(h.s, 255.0 * (mx - mn) / mx, 1.0);
            }
}

TEST(ImageIo, PngRoundTrip) {
    const auto path = temp_path("roundtrip.png").string();
    const auto px = gradient_pixels(10, 10);
    write_png(path, 10, 10, px);
    const RasterImage back = decode_image(path);
    EXPECT_EQ(back.width, 10);
    EXPECT_EQ(back.height, 10);
    EXPECT_EQ(back.pixels, px);
}

TEST(ImageIo, CropKeepsOriginAndDerivesHsv) {
    RasterImage image{10, 10, gradient_pixels(10, 10)};
    const PixelGrid grid = crop_raster(image, {0, 2, 10, 6});
    EXPECT_EQ(grid.width(), 10);
    EXPECT_EQ(grid.height(), 6);
    EXPECT_EQ(grid.crop_origin(), (std::pair{0, 2}));
    EXPECT_EQ(grid.rgb(3, 0), image.pixels[2 * 10 + 3]);
    for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_EQ(grid.hsv()[i], rgb_to_hsv(grid.rgb()[i]));
}

TEST(ImageIo, JpegDecodes) {
    const auto path = temp_path("solid.jpg").string();
    write_test_jpeg(path, 16, 8, {200, 40, 120});
    const RasterImage img = decode_image(path);
    ASSERT_EQ(img.width, 16);
    ASSERT_EQ(img.height, 8);
    for (const auto& p : img.pixels) {
        EXPECT_NEAR(p.r, 200, 3);
        EXPECT_NEAR(p.g, 40, 3);
        EXPECT_NEAR(p.b, 120, 3);
    }
}

TEST(ImageIo, Errors) {
    EXPECT_THROW(decode_image(temp_path("missing.png").string()), DecodeError);

    const auto text = temp_path("notes.png");
    std::ofstream(text) << "not an image";
    EXPECT_THROW(decode_image(text.string()), DecodeError);

    const auto good = temp_path("good.png").string();
    write_png(good, 10, 10, gradient_pixels(10, 10));
    const auto size = fs::file_size(good);
    const auto cut = temp_path("truncated.png");
    fs::copy_file(good, cut, fs::copy_options::overwrite_existing);
    fs::resize_file(cut, size / 2);
    EXPECT_THROW(decode_image(cut.string()), DecodeError);

    RasterImage image{10, 10, gradient_pixels(10, 10)};
    EXPECT_THROW(crop_raster(image, {5, 5, 10, 10}), GeometryError);
    EXPECT_THROW(crop_raster(image, {0, 0, 0, 5}), GeometryError);

    RegionSpec region;
    region.paper_rect = {0, 0, 10, 10};
    region.focal_rect = {5, 5, 10, 10};
    EXPECT_THROW(load_image(good, region), GeometryError);
}

#pragma once

#include <png.h>
// jpeglib.h needs FILE and size_t declared first
#include <cstdio>
#include <jpeglib.h>

#include <array>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "spraydot/color.hpp"
#include "spraydot/error.hpp"

namespace spraydot {

/// Raw decoded image, row-major RGB.
struct RasterImage {
    int width = 0;
    int height = 0;
    std::vector<Rgb> pixels;
};

namespace detail {

inline bool has_png_signature(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::array<unsigned char, 8> sig{};
    if (!in.read(reinterpret_cast<char*>(sig.data()), sig.size())) return false;
    return png_sig_cmp(sig.data(), 0, sig.size()) == 0;
}

inline bool has_jpeg_signature(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::array<unsigned char, 3> sig{};
    if (!in.read(reinterpret_cast<char*>(sig.data()), sig.size())) return false;
    return sig[0] == 0xFF && sig[1] == 0xD8 && sig[2] == 0xFF;
}

inline RasterImage decode_png(const std::string& path) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw DecodeError("cannot decode PNG '" + path + "': " + image.message);
    image.format = PNG_FORMAT_RGB;
    std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&image);
        throw DecodeError("cannot decode PNG '" + path + "': " + image.message);
    }
    RasterImage out{static_cast<int>(image.width), static_cast<int>(image.height), {}};
    out.pixels.resize(static_cast<std::size_t>(out.width) * static_cast<std::size_t>(out.height));
    for (std::size_t i = 0; i < out.pixels.size(); ++i)
        out.pixels[i] = Rgb{buffer[3 * i], buffer[3 * i + 1], buffer[3 * i + 2]};
    return out;
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

inline RasterImage decode_jpeg(const std::string& path) {
    std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "rb"), &std::fclose);
    if (!file) throw DecodeError("cannot open '" + path + "'");

    jpeg_decompress_struct cinfo;
    JpegErrorManager err;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    // Anything with a destructor must exist before setjmp.
    RasterImage out;
    std::vector<JSAMPLE> row;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw DecodeError("cannot decode JPEG '" + path + "': " + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, file.get());
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    out.width = static_cast<int>(cinfo.output_width);
    out.height = static_cast<int>(cinfo.output_height);
    out.pixels.resize(static_cast<std::size_t>(out.width) * static_cast<std::size_t>(out.height));
    row.resize(static_cast<std::size_t>(cinfo.output_width) * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        const auto y = cinfo.output_scanline;
        JSAMPROW rows[1] = {row.data()};
        jpeg_read_scanlines(&cinfo, rows, 1);
        for (JDIMENSION x = 0; x < cinfo.output_width; ++x)
            out.pixels[static_cast<std::size_t>(y) * cinfo.output_width + x] =
                Rgb{row[3 * x], row[3 * x + 1], row[3 * x + 2]};
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return out;
}

}  // namespace detail

/// Decodes a PNG or JPEG file (detected by signature, not extension).
inline RasterImage decode_image(const std::string& path) {
    if (detail::has_png_signature(path)) return detail::decode_png(path);
    if (detail::has_jpeg_signature(path)) return detail::decode_jpeg(path);
    throw DecodeError("'" + path + "' is not a readable PNG or JPEG file");
}

/// Crops a decoded raster to `rect` (source coordinates) and derives HSV.
inline PixelGrid crop_raster(const RasterImage& image, const Rect& rect) {
    if (rect.empty() || !Rect{0, 0, image.width, image.height}.contains(rect))
        throw GeometryError("paper_rect lies outside the " + std::to_string(image.width) + "x" +
                            std::to_string(image.height) + " image");
    std::vector<Rgb> pixels;
    pixels.reserve(static_cast<std::size_t>(rect.width) * static_cast<std::size_t>(rect.height));
    for (int y = rect.y; y < rect.bottom(); ++y) {
        const auto* row = image.pixels.data() + static_cast<std::size_t>(y) * image.width;
        pixels.insert(pixels.end(), row + rect.x, row + rect.right());
    }
    return PixelGrid(rect.width, rect.height, std::move(pixels), {rect.x, rect.y});
}

/// Loads an image and crops it to the test-paper rectangle.
inline PixelGrid load_image(const std::string& path, const RegionSpec& region) {
    region.validate();
    return crop_raster(decode_image(path), region.paper_rect);
}

/// Writes an 8-bit RGB PNG. Output bytes depend only on the pixels.
inline void write_png(const std::string& path, int width, int height, const std::vector<Rgb>& pixels) {
    if (pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
        throw GeometryError("pixel buffer size does not match dimensions");
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = PNG_FORMAT_RGB;
    std::vector<unsigned char> buffer(pixels.size() * 3);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        buffer[3 * i] = pixels[i].r;
        buffer[3 * i + 1] = pixels[i].g;
        buffer[3 * i + 2] = pixels[i].b;
    }
    if (!png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr))
        throw Error("cannot write PNG '" + path + "': " + image.message);
}

inline void write_png(const std::string& path, const PixelGrid& grid) {
    write_png(path, grid.width(), grid.height(), grid.rgb());
}

}  // namespace spraydot

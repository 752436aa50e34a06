#include "gsmpc/io/image_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include <png.h>

namespace gsmpc::io {

using splat::Image;

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f)
            std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

void save_png(const Image& image, const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp)
        throw IoError("cannot open " + path + " for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png writer allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png write failed for " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_byte> row(static_cast<std::size_t>(image.width) * 3);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const Vec3& c = image.at(x, y);
            for (int ch = 0; ch < 3; ++ch) {
                const double v = std::clamp(c[ch], 0.0, 1.0);
                row[static_cast<std::size_t>(x) * 3 + ch] =
                    static_cast<png_byte>(std::lround(v * 255.0));
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image load_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp)
        throw IoError("cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png reader allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ParseError("png read failed for " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    const int width = static_cast<int>(png_get_image_width(png, info));
    const int height = static_cast<int>(png_get_image_height(png, info));

    Image image(width, height);
    std::vector<png_byte> row(png_get_rowbytes(png, info));
    for (int y = 0; y < height; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < width; ++x) {
            image.at(x, y) = Vec3(row[static_cast<std::size_t>(x) * 3 + 0] / 255.0,
                                  row[static_cast<std::size_t>(x) * 3 + 1] / 255.0,
                                  row[static_cast<std::size_t>(x) * 3 + 2] / 255.0);
        }
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

void save_depth(const std::vector<double>& depth, int width, int height,
                const std::string& path) {
    if (depth.size() != static_cast<std::size_t>(width) * height)
        throw DimensionMismatch("depth buffer does not match declared shape");
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    for (double d : depth) {
        const float f = static_cast<float>(d);
        out.write(reinterpret_cast<const char*>(&f), sizeof(f));
    }
}

std::vector<double> load_depth(const std::string& path, int width, int height) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    const std::size_t n = static_cast<std::size_t>(width) * height;
    std::vector<double> depth(n);
    for (std::size_t i = 0; i < n; ++i) {
        float f = 0.0f;
        in.read(reinterpret_cast<char*>(&f), sizeof(f));
        if (!in)
            throw ParseError(path + ": truncated depth file");
        depth[i] = f;
    }
    return depth;
}

} // namespace gsmpc::io

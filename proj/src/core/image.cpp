#include "core/image.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

#include "core/bytes.hpp"
#include "core/store_io.hpp"

namespace urbanfield {

RgbImage::RgbImage(int w, int h, std::array<std::uint8_t, 3> fill) : width(w), height(h) {
    if (w <= 0 || h <= 0) invalid_argument("image dimensions must be positive");
    pixels.resize(pixel_count() * 3);
    for (std::size_t i = 0; i < pixel_count(); ++i) {
        pixels[3 * i] = fill[0];
        pixels[3 * i + 1] = fill[1];
        pixels[3 * i + 2] = fill[2];
    }
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

bool is_png(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return ext == ".png";
}

void write_png(const RgbImage& image, const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorCode::Internal, "libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorCode::Io, "PNG encoding failed for " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
                 static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < image.height; ++y) {
        png_write_row(png, const_cast<png_bytep>(image.at(0, y)));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

RgbImage read_png(const std::filesystem::path& path) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str())) {
        fail(ErrorCode::Format, path.string() + ": " + img.message);
    }
    img.format = PNG_FORMAT_RGB;
    RgbImage out(static_cast<int>(img.width), static_cast<int>(img.height));
    if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
        std::string msg = img.message;
        png_image_free(&img);
        fail(ErrorCode::Format, path.string() + ": " + msg);
    }
    return out;
}

}  // namespace

void write_image(const RgbImage& image, const std::filesystem::path& path) {
    if (is_png(path)) {
        write_png(image, path);
        return;
    }
    ByteWriter w;
    w.magic("OC3C");
    w.put(kContainerVersion);
    w.put(static_cast<std::uint32_t>(image.width));
    w.put(static_cast<std::uint32_t>(image.height));
    w.zeros(8);
    w.put_span(std::span<const std::uint8_t>(image.pixels));
    w.save(path);
}

RgbImage read_image(const std::filesystem::path& path) {
    if (is_png(path)) return read_png(path);
    auto r = ByteReader::load(path);
    r.expect_magic("OC3C");
    r.expect_version(kContainerVersion);
    const auto w = r.get<std::uint32_t>();
    const auto h = r.get<std::uint32_t>();
    r.skip(8);
    if (w == 0 || h == 0) r.error("empty image");
    if (static_cast<std::uint64_t>(w) * h * 3 != r.remaining()) r.error("pixel payload size mismatch");
    RgbImage img(static_cast<int>(w), static_cast<int>(h));
    r.get_span(std::span<std::uint8_t>(img.pixels), "pixels");
    return img;
}

}  // namespace urbanfield

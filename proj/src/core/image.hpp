#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace urbanfield {

// 8-bit interleaved RGB, row-major.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    RgbImage() = default;
    RgbImage(int w, int h, std::array<std::uint8_t, 3> fill = {0, 0, 0});

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    std::uint8_t* at(int x, int y) { return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
    const std::uint8_t* at(int x, int y) const {
        return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

// PNG when the extension is .png, otherwise the raw "OC3C" container
// (magic, version u32, width u32, height u32, 8 reserved, width*height*3 bytes).
void write_image(const RgbImage& image, const std::filesystem::path& path);
RgbImage read_image(const std::filesystem::path& path);

}  // namespace urbanfield
